//! Command-line front end for the benchmark pipeline.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use graphdo::gateway::Gateway;
use graphdo::pipeline::{self, PipelineConfig, SamplerKind, SourceSpec};
use graphdo::prompting::PromptStyle;
use graphdo::{OrderKind, TaskKind};

const CONFIG_FILE: &str = "config.json";
const ERROR_FILE: &str = "error.json";

#[derive(Parser, Debug)]
#[command(name = "graphdo", version, about = "Edge-order benchmark for graph reasoning prompts")]
struct Cli {
    /// Output directory shared by all stages.
    #[arg(long, short, global = true, default_value = "graphdo-out")]
    out: PathBuf,
    /// TOML pipeline config. Defaults to the config saved by `generate`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    stage: Stage,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    /// Draw task instances.
    Generate,
    /// Order edges and render graph descriptions.
    Order,
    /// Assemble prompts in each configured style.
    Prompt,
    /// Query the model endpoint.
    Run,
    /// Parse and judge stored responses.
    Score,
    /// Aggregate accuracy per task, order and style.
    Report,
}

#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_delimiter = ',')]
    tasks: Option<Vec<String>>,
    #[arg(long, global = true)]
    per_task: Option<usize>,
    #[arg(long, global = true)]
    n_min: Option<u32>,
    #[arg(long, global = true)]
    n_max: Option<u32>,
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Node-classification source as NAME=EDGES:LABELS (repeatable).
    #[arg(long = "source", global = true)]
    sources: Vec<String>,
    #[arg(long, global = true, value_delimiter = ',')]
    samplers: Option<Vec<String>>,
    #[arg(long, global = true)]
    per_sample: Option<usize>,
    #[arg(long, global = true)]
    ego_hops: Option<usize>,
    #[arg(long, global = true)]
    fire_p: Option<f64>,
    #[arg(long, global = true)]
    max_nodes: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',')]
    orders: Option<Vec<String>>,
    #[arg(long, global = true, value_delimiter = ',')]
    styles: Option<Vec<String>>,
    #[arg(long, global = true)]
    exemplars: Option<PathBuf>,
    #[arg(long, global = true)]
    base_url: Option<String>,
    #[arg(long, global = true)]
    model: Option<String>,
    #[arg(long, global = true)]
    temperature: Option<f64>,
    #[arg(long, global = true)]
    max_retries: Option<u32>,
    #[arg(long, global = true)]
    timeout_secs: Option<u64>,
    #[arg(long, global = true)]
    max_in_flight: Option<usize>,
    #[arg(long, global = true)]
    min_interval_ms: Option<u64>,
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
}

fn parse_list<T: std::str::FromStr>(items: &[String]) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    items.iter().map(|s| s.trim().parse::<T>().map_err(|e| anyhow::anyhow!("{e}"))).collect()
}

fn parse_sampler(s: &str) -> Result<SamplerKind> {
    match s.trim() {
        "ego" => Ok(SamplerKind::Ego),
        "forest_fire" | "forest-fire" => Ok(SamplerKind::ForestFire),
        other => anyhow::bail!("unknown sampler {other:?}"),
    }
}

fn parse_source(s: &str) -> Result<SourceSpec> {
    let (name, files) = s.split_once('=').context("source must look like NAME=EDGES:LABELS")?;
    let (edges, labels) = files.split_once(':').context("source must look like NAME=EDGES:LABELS")?;
    Ok(SourceSpec {
        name: name.into(),
        edges: Some(edges.into()),
        labels: Some(labels.into()),
        nodes: 0,
        mean_degree: 0.0,
        classes: 0,
    })
}

impl Overrides {
    fn apply(&self, cfg: &mut PipelineConfig) -> Result<()> {
        let d = &mut cfg.dataset;
        if let Some(v) = self.seed {
            d.global_seed = v;
        }
        if let Some(v) = &self.tasks {
            d.tasks = parse_list::<TaskKind>(v)?;
        }
        if let Some(v) = self.per_task {
            d.per_task = v;
        }
        if let Some(v) = self.n_min {
            d.gen.n_min = v;
        }
        if let Some(v) = self.n_max {
            d.gen.n_max = v;
        }
        if let Some(v) = self.p {
            d.gen.p = v;
        }
        if !self.sources.is_empty() {
            d.sources = self.sources.iter().map(|s| parse_source(s)).collect::<Result<_>>()?;
        }
        if let Some(v) = &self.samplers {
            d.samplers = v.iter().map(|s| parse_sampler(s)).collect::<Result<_>>()?;
        }
        if let Some(v) = self.per_sample {
            d.per_sample = v;
        }
        if let Some(v) = self.ego_hops {
            d.ego_hops = v;
        }
        if let Some(v) = self.fire_p {
            d.fire_p = v;
        }
        if let Some(v) = self.max_nodes {
            d.max_nodes = v;
        }
        if let Some(v) = &self.orders {
            d.orders = parse_list::<OrderKind>(v)?;
        }
        if let Some(v) = &self.styles {
            d.styles = v.iter().map(|s| parse_style(s)).collect::<Result<_>>()?;
        }
        if let Some(v) = &self.exemplars {
            d.exemplars = Some(v.clone());
        }
        let ep = &mut cfg.endpoint;
        if let Some(v) = &self.base_url {
            ep.base_url = v.clone();
        }
        if let Some(v) = &self.model {
            ep.model = v.clone();
        }
        if let Some(v) = self.temperature {
            ep.temperature = v;
        }
        if let Some(v) = self.max_retries {
            ep.max_retries = v;
        }
        if let Some(v) = self.timeout_secs {
            ep.timeout_secs = v;
        }
        if let Some(v) = self.max_in_flight {
            ep.max_in_flight = v;
        }
        if let Some(v) = self.min_interval_ms {
            ep.min_interval_ms = v;
        }
        if let Some(v) = &self.cache_dir {
            cfg.cache_dir = Some(v.clone());
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        Ok(())
    }
}

fn parse_style(s: &str) -> Result<PromptStyle> {
    serde_json::from_value(serde_json::Value::String(s.trim().to_string()))
        .map_err(|_| anyhow::anyhow!("unknown prompt style {s:?}"))
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            PipelineConfig::from_toml(&text)?
        }
        None => {
            let saved = cli.out.join(CONFIG_FILE);
            if cli.stage != Stage::Generate && saved.exists() {
                graphdo::store::read_json(&saved)?
            } else {
                PipelineConfig::default()
            }
        }
    };
    cli.overrides.apply(&mut cfg)?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let out = &cli.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    match cli.stage {
        Stage::Generate => {
            let m = pipeline::stage_generate(&cfg.dataset, out)?;
            graphdo::store::write_json(&out.join(CONFIG_FILE), &cfg)?;
            println!("{} instances, {} distinct graphs", m.total, m.distinct_graphs);
        }
        Stage::Order => {
            let m = pipeline::stage_order(&cfg.dataset, out)?;
            println!("{} cases, {} distinct graphs", m.total, m.distinct_graphs);
        }
        Stage::Prompt => {
            let n = pipeline::stage_prompt(&cfg.dataset, out)?;
            println!("{n} prompts");
        }
        Stage::Run => {
            let gateway = Gateway::new(cfg.endpoint.clone());
            let failed = pipeline::stage_run(out, &gateway, cfg.cache_dir.as_deref(), cfg.workers)?;
            if failed > 0 {
                log::warn!("{failed} cases failed; see responses.jsonl");
            }
            println!("run finished, {failed} failed");
        }
        Stage::Score => {
            let records = pipeline::stage_score(out)?;
            let correct = records.iter().filter(|r| r.correct).count();
            println!("{correct}/{} correct", records.len());
        }
        Stage::Report => {
            let report = pipeline::stage_report(out)?;
            print!("{}", graphdo::evaluation::render_report(&report));
        }
    }
    Ok(())
}

fn error_kind(e: &anyhow::Error) -> String {
    match e.downcast_ref::<graphdo::Error>() {
        Some(inner) => {
            let dbg = format!("{inner:?}");
            dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string()
        }
        None => "Error".into(),
    }
}

fn write_error(out: &Path, stage: Stage, e: &anyhow::Error) {
    let summary = serde_json::json!({
        "stage": format!("{stage:?}").to_lowercase(),
        "kind": error_kind(e),
        "message": format!("{e:#}"),
    });
    let _ = fs::create_dir_all(out);
    let _ = fs::write(out.join(ERROR_FILE), serde_json::to_string_pretty(&summary).unwrap_or_default());
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => {
            let _ = fs::remove_file(cli.out.join(ERROR_FILE));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            write_error(&cli.out, cli.stage, &e);
            ExitCode::FAILURE
        }
    }
}
