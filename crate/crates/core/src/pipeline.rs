//! File-based stages: generate, order, prompt, run, score, report.
//!
//! Every stage reads its inputs from and writes its outputs to one output
//! directory, so any stage can be rerun on its own. All randomness derives
//! from the global seed through [`sub_seed`].

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluation::{self, EvalRecord, ParsedAnswer, Report};
use crate::gateway::{Gateway, ModelEndpoint};
use crate::gen::{self, GenConfig};
use crate::graph::{Graph, NodeId, OrderKind};
use crate::ordering;
use crate::prompting::{self, ExemplarBank, PromptStyle};
use crate::store::{self, CaseRecord, DatasetManifest, InstanceRecord, ManifestInfo};
use crate::task::{InstanceMeta, TaskKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Ego,
    ForestFire,
}

impl SamplerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SamplerKind::Ego => "ego",
            SamplerKind::ForestFire => "forest_fire",
        }
    }
}

/// Labeled source graph for node classification: loaded from an edge list
/// and a label file, or synthesized when no files are given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(default)]
    pub nodes: u32,
    #[serde(default)]
    pub mean_degree: f64,
    #[serde(default)]
    pub classes: u32,
}

impl SourceSpec {
    pub fn synthetic(name: &str, nodes: u32, mean_degree: f64, classes: u32) -> Self {
        SourceSpec { name: name.into(), edges: None, labels: None, nodes, mean_degree, classes }
    }

    pub fn load(&self, seed: u64) -> Result<Graph> {
        match (&self.edges, &self.labels) {
            (Some(e), Some(l)) => gen::load_labeled_graph(e, l),
            (None, None) => gen::synthetic_labeled_graph(self.nodes, self.mean_degree, self.classes, seed),
            _ => Err(Error::InvalidConfig(format!("source {} needs both an edge file and a label file", self.name))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub global_seed: u64,
    pub gen: GenConfig,
    /// Generated (non node-classification) tasks.
    pub tasks: Vec<TaskKind>,
    pub per_task: usize,
    pub sources: Vec<SourceSpec>,
    pub samplers: Vec<SamplerKind>,
    /// Node-classification samples per (source, sampler).
    pub per_sample: usize,
    pub ego_hops: usize,
    pub fire_p: f64,
    pub max_nodes: usize,
    pub orders: Vec<OrderKind>,
    pub styles: Vec<PromptStyle>,
    /// Custom exemplar bank (TOML); the built-in bank otherwise.
    pub exemplars: Option<PathBuf>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            global_seed: 0,
            gen: GenConfig::default(),
            tasks: TaskKind::GENERATED.to_vec(),
            per_task: 280,
            sources: vec![
                SourceSpec::synthetic("cora-like", 2708, 3.9, 7),
                SourceSpec::synthetic("citeseer-like", 3327, 2.7, 6),
                SourceSpec::synthetic("pubmed-like", 2000, 4.5, 3),
            ],
            samplers: vec![SamplerKind::Ego, SamplerKind::ForestFire],
            per_sample: 50,
            ego_hops: 3,
            fire_p: 0.3,
            max_nodes: 50,
            orders: OrderKind::MAIN.to_vec(),
            styles: vec![PromptStyle::ZeroShot],
            exemplars: None,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        self.gen.validate()?;
        if self.tasks.contains(&TaskKind::NodeClassification) {
            return Err(Error::InvalidConfig("node classification is configured through sources".into()));
        }
        if !(0.0..=1.0).contains(&self.fire_p) {
            return Err(Error::InvalidConfig(format!("fire probability {} outside [0, 1]", self.fire_p)));
        }
        if self.max_nodes < 2 {
            return Err(Error::InvalidConfig("max_nodes must be at least 2".into()));
        }
        if self.orders.is_empty() || self.styles.is_empty() {
            return Err(Error::InvalidConfig("need at least one order and one style".into()));
        }
        Ok(())
    }

    fn manifest_info(&self) -> ManifestInfo {
        ManifestInfo { global_seed: Some(self.global_seed), generation: serde_json::to_value(self).ok() }
    }
}

/// Everything the command-line stages need. Written to `config.json` in the
/// output directory by `generate` and reused by later stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub dataset: DatasetConfig,
    pub endpoint: ModelEndpoint,
    pub cache_dir: Option<PathBuf>,
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { dataset: DatasetConfig::default(), endpoint: ModelEndpoint::default(), cache_dir: None, workers: 4 }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}

/// Seed for the item at `path`: first 8 bytes (little endian) of
/// SHA-256 over the global seed and the path.
pub fn sub_seed(global: u64, path: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(global.to_le_bytes());
    h.update(path.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

/// Stage file locations inside an output directory.
#[derive(Debug, Clone)]
pub struct StagePaths {
    pub instances: PathBuf,
    pub cases: PathBuf,
    pub prompts: PathBuf,
    pub responses: PathBuf,
    pub records: PathBuf,
    pub report_txt: PathBuf,
    pub report_json: PathBuf,
}

impl StagePaths {
    pub fn new(dir: &Path) -> Self {
        StagePaths {
            instances: dir.join("instances.jsonl"),
            cases: dir.join("cases.jsonl"),
            prompts: dir.join("prompts.jsonl"),
            responses: dir.join("responses.jsonl"),
            records: dir.join("records.jsonl"),
            report_txt: dir.join("report.txt"),
            report_json: dir.join("report.json"),
        }
    }
}

fn require(stage: &str, path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::StageDependency { stage: stage.into(), missing: path.to_path_buf() })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub id: String,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Draw every instance of the configured composition. Graphs are distinct
/// across the whole set; a duplicate draw is retried under the next attempt
/// seed.
pub fn generate_instances(cfg: &DatasetConfig) -> Result<Vec<InstanceRecord>> {
    cfg.validate()?;
    let mut seen: HashSet<String> = HashSet::new();
    let mut out = Vec::new();
    let budget = cfg.gen.max_tries;

    for &task in &cfg.tasks {
        for i in 0..cfg.per_task {
            let id = format!("{task}/{i:04}");
            let mut attempt = 0;
            loop {
                if attempt >= budget {
                    return Err(Error::GenerationExhausted { task: task.to_string(), tries: attempt });
                }
                let seed = sub_seed(cfg.global_seed, &format!("{id}/{attempt}"));
                let instance = gen::gen_task_instance(task, &cfg.gen.with_seed(seed))?;
                attempt += 1;
                if seen.insert(instance.graph.fingerprint()) {
                    out.push(InstanceRecord { id: id.clone(), seed, instance });
                    break;
                }
            }
        }
        log::info!("generated {} {task} instances", cfg.per_task);
    }

    for source in &cfg.sources {
        if cfg.samplers.is_empty() || cfg.per_sample == 0 {
            break;
        }
        let base = source.load(sub_seed(cfg.global_seed, &format!("source/{}", source.name)))?;
        if base.node_count() == 0 {
            return Err(Error::InvalidGraph(format!("source {} has no nodes", source.name)));
        }
        for &sampler in &cfg.samplers {
            for j in 0..cfg.per_sample {
                let id = format!("{}/{}/{}/{j:04}", TaskKind::NodeClassification, source.name, sampler.as_str());
                let mut attempt = 0;
                loop {
                    if attempt >= budget {
                        return Err(Error::GenerationExhausted {
                            task: TaskKind::NodeClassification.to_string(),
                            tries: attempt,
                        });
                    }
                    let seed = sub_seed(cfg.global_seed, &format!("{id}/{attempt}"));
                    attempt += 1;
                    let Some(instance) = sample_instance(cfg, &base, source, sampler, seed)? else {
                        continue;
                    };
                    if seen.insert(instance.graph.fingerprint()) {
                        out.push(InstanceRecord { id: id.clone(), seed, instance });
                        break;
                    }
                }
            }
            log::info!("sampled {} {} subgraphs from {}", cfg.per_sample, sampler.as_str(), source.name);
        }
    }
    Ok(out)
}

/// One node-classification draw; `None` when the sample is unusable
/// (no edges or no node with a labeled neighbor).
fn sample_instance(
    cfg: &DatasetConfig,
    base: &Graph,
    source: &SourceSpec,
    sampler: SamplerKind,
    seed: u64,
) -> Result<Option<crate::task::TaskInstance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center: NodeId = base.nodes()[rng.gen_range(0..base.node_count())];
    let sub_seed = rng.gen::<u64>();
    let sample = match sampler {
        SamplerKind::Ego => gen::sample_ego(base, center, cfg.ego_hops, cfg.max_nodes, sub_seed)?,
        SamplerKind::ForestFire => gen::sample_forest_fire(base, center, cfg.fire_p, cfg.max_nodes, sub_seed)?,
    };
    if sample.edge_count() == 0 {
        return Ok(None);
    }
    let meta = InstanceMeta { cycle: None, sampler: Some(sampler.as_str().into()), source: Some(source.name.clone()) };
    match gen::node_classification_instance(&sample, rng.gen(), meta) {
        Ok(inst) => Ok(Some(inst)),
        Err(Error::NoEligibleQueryNode) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Expand instances into ordered, rendered cases. Orders that do not apply
/// to a task, and exemplar-based styles for tasks without exemplars, are
/// skipped.
pub fn build_cases(cfg: &DatasetConfig, instances: &[InstanceRecord], bank: &ExemplarBank) -> Result<Vec<CaseRecord>> {
    let per_instance: Vec<Vec<CaseRecord>> = instances
        .par_iter()
        .map(|rec| {
            let inst = &rec.instance;
            let mut cases = Vec::new();
            for &order in &cfg.orders {
                let seed = sub_seed(cfg.global_seed, &format!("{}/{order}", rec.id));
                let seq = match ordering::describe_order(inst, order, seed) {
                    Ok(seq) => seq,
                    Err(Error::OrderNotApplicable { .. }) => continue,
                    Err(e) => return Err(e),
                };
                let description = prompting::encode_graph(&inst.graph, &seq, inst.task)?;
                let question = prompting::make_question(inst);
                for &style in &cfg.styles {
                    if style.needs_exemplars() && bank.get(inst.task).is_empty() {
                        continue;
                    }
                    cases.push(CaseRecord {
                        id: format!("{}/{order}/{style}", rec.id),
                        task: inst.task,
                        order,
                        style,
                        seed,
                        graph: inst.graph.clone(),
                        query: inst.query.clone(),
                        edge_sequence: seq.edges.clone(),
                        description: description.clone(),
                        question: question.clone(),
                        gold: inst.gold.clone(),
                        meta: inst.meta.clone(),
                    });
                }
            }
            Ok(cases)
        })
        .collect::<Result<_>>()?;
    Ok(per_instance.into_iter().flatten().collect())
}

pub fn build_prompts(cases: &[CaseRecord], bank: &ExemplarBank) -> Result<Vec<PromptRecord>> {
    cases
        .par_iter()
        .map(|c| {
            let prompt = prompting::build_prompt(c.style, &c.description, &c.question, bank.get(c.task))?;
            Ok(PromptRecord { id: c.id.clone(), prompt })
        })
        .collect()
}

/// Query the model for every prompt. Failures are recorded per case and do
/// not stop the run.
pub fn run_prompts(prompts: &[PromptRecord], gateway: &Gateway, cache_dir: Option<&Path>, workers: usize) -> Result<Vec<ResponseRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(pool.install(|| {
        prompts
            .par_iter()
            .map(|p| {
                let result = match cache_dir {
                    Some(dir) => gateway.cached_complete(&p.prompt, dir),
                    None => gateway.complete(&p.prompt),
                };
                match result {
                    Ok(r) => {
                        log::debug!("{}: {} ms, {} attempts, cached={}", p.id, r.latency_ms, r.attempts, r.cached);
                        ResponseRecord { id: p.id.clone(), response: Some(r.text), error: None }
                    }
                    Err(e) => {
                        log::error!("{}: {e}", p.id);
                        ResponseRecord { id: p.id.clone(), response: None, error: Some(e.to_string()) }
                    }
                }
            })
            .collect()
    }))
}

/// Parse and judge every response. Cases without a response score as
/// unparsed.
pub fn score(cases: &[CaseRecord], responses: &[ResponseRecord]) -> Result<Vec<EvalRecord>> {
    let by_id: std::collections::HashMap<&str, &ResponseRecord> =
        responses.iter().map(|r| (r.id.as_str(), r)).collect();
    Ok(cases
        .par_iter()
        .map(|c| {
            let reply = by_id.get(c.id.as_str());
            let (response, parsed) = match reply.and_then(|r| r.response.as_deref()) {
                Some(text) => (text.to_string(), evaluation::parse_response(c.task, text)),
                None => {
                    let reason = reply.and_then(|r| r.error.clone()).unwrap_or_else(|| "no response".into());
                    (String::new(), ParsedAnswer::Unparsed { reason })
                }
            };
            let correct = evaluation::score_case(&c.instance(), &parsed);
            EvalRecord { case_id: c.id.clone(), task: c.task, order: c.order, style: c.style, response, parsed, correct }
        })
        .collect())
}

pub fn load_bank(cfg: &DatasetConfig) -> Result<ExemplarBank> {
    match &cfg.exemplars {
        Some(p) => ExemplarBank::load(p),
        None => Ok(ExemplarBank::builtin()),
    }
}

/// `generate` stage: instances file plus manifest.
pub fn stage_generate(cfg: &DatasetConfig, dir: &Path) -> Result<DatasetManifest> {
    let paths = StagePaths::new(dir);
    let instances = generate_instances(cfg)?;
    store::write_instances(&paths.instances, &instances, &cfg.manifest_info())
}

/// `order` stage: cases file plus manifest.
pub fn stage_order(cfg: &DatasetConfig, dir: &Path) -> Result<DatasetManifest> {
    let paths = StagePaths::new(dir);
    require("order", &paths.instances)?;
    let instances: Vec<InstanceRecord> = store::read_jsonl(&paths.instances)?;
    let cases = build_cases(cfg, &instances, &load_bank(cfg)?)?;
    store::write_cases(&paths.cases, &cases, &cfg.manifest_info())
}

pub fn stage_prompt(cfg: &DatasetConfig, dir: &Path) -> Result<usize> {
    let paths = StagePaths::new(dir);
    require("prompt", &paths.cases)?;
    let cases = store::read_cases(&paths.cases, true)?;
    let prompts = build_prompts(&cases, &load_bank(cfg)?)?;
    store::write_jsonl(&paths.prompts, &prompts)?;
    Ok(prompts.len())
}

/// `run` stage. Returns the number of failed cases.
pub fn stage_run(dir: &Path, gateway: &Gateway, cache_dir: Option<&Path>, workers: usize) -> Result<usize> {
    let paths = StagePaths::new(dir);
    require("run", &paths.prompts)?;
    let prompts: Vec<PromptRecord> = store::read_jsonl(&paths.prompts)?;
    let responses = run_prompts(&prompts, gateway, cache_dir, workers)?;
    store::write_jsonl(&paths.responses, &responses)?;
    Ok(responses.iter().filter(|r| r.error.is_some()).count())
}

pub fn stage_score(dir: &Path) -> Result<Vec<EvalRecord>> {
    let paths = StagePaths::new(dir);
    require("score", &paths.cases)?;
    require("score", &paths.responses)?;
    let cases = store::read_cases(&paths.cases, false)?;
    let responses: Vec<ResponseRecord> = store::read_jsonl(&paths.responses)?;
    let records = score(&cases, &responses)?;
    store::write_jsonl(&paths.records, &records)?;
    Ok(records)
}

pub fn stage_report(dir: &Path) -> Result<Report> {
    let paths = StagePaths::new(dir);
    require("report", &paths.records)?;
    let records: Vec<EvalRecord> = store::read_jsonl(&paths.records)?;
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let report = evaluation::build_report(&records);
    std::fs::write(&paths.report_txt, evaluation::render_report(&report))
        .map_err(|source| Error::WriteError { path: paths.report_txt.clone(), source })?;
    store::write_json(&paths.report_json, &report)?;
    Ok(report)
}
