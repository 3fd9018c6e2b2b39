//! Response parsing, scoring and aggregate metrics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, OrderKind};
use crate::prompting::PromptStyle;
use crate::solvers;
use crate::task::{GoldAnswer, TaskInstance, TaskKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParsedAnswer {
    YesNo { value: bool },
    Path {
        nodes: Vec<NodeId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weight: Option<u64>,
    },
    Order { nodes: Vec<NodeId> },
    Label { label: String },
    Unparsed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub case_id: String,
    pub task: TaskKind,
    pub order: OrderKind,
    pub style: PromptStyle,
    pub response: String,
    pub parsed: ParsedAnswer,
    pub correct: bool,
}

macro_rules! re {
    ($s:expr) => {
        LazyLock::new(|| Regex::new($s).expect("static regex"))
    };
}

static CONNECTED_YES: LazyLock<Regex> = re!(r"(?i)\byes\b|\bthere (?:is|exists) a path\b");
static CONNECTED_NO: LazyLock<Regex> =
    re!(r"(?i)\bno\b|\bthere (?:is|exists) no path\b|\bnot connected\b|\bno path\b");
static CYCLE_YES: LazyLock<Regex> =
    re!(r"(?i)\byes\b|\bthere (?:is|exists) a cycle\b|\bcontains a cycle\b|\bforms? a cycle\b");
static CYCLE_NO: LazyLock<Regex> =
    re!(r"(?i)\bno\b|\bthere (?:is|exists) no cycle\b|\bno cycles?\b|\bdoes not contain (?:a|any) cycle\b|\bacyclic\b");
static NODE_RUN: LazyLock<Regex> = re!(r"\d+(?:\s*(?:,|->|→)\s*\d+)+");
static INT: LazyLock<Regex> = re!(r"\d+");
static PATH_ANCHOR: LazyLock<Regex> = re!(r"(?i)\bpath\b");
static ORDER_ANCHOR: LazyLock<Regex> = re!(r"(?i)topolog\w*|\border\b|\bsequence\b|\bsorting\b");
static WEIGHT: LazyLock<Regex> = re!(r"(?i)total weight (?:of|is|=)\s*([^.\n]*)");
static LABEL: LazyLock<Regex> = re!(
    r#"(?i)\blabel\b(?:\s+of\s+(?:the\s+)?node(?:\s+labeled\s+'\?')?)?\s*(?:is|:|=|should be|would be|will be)?\s*['"]?([A-Za-z0-9_\-]+)"#
);

/// Which of two keyword sets matches last; `None` when neither matches.
fn last_keyword(text: &str, yes: &Regex, no: &Regex) -> Option<bool> {
    let last = |re: &Regex| re.find_iter(text).map(|m| (m.end(), m.end() - m.start())).max();
    match (last(yes), last(no)) {
        (None, None) => None,
        (Some(_), None) => Some(true),
        (None, Some(_)) => Some(false),
        (Some(y), Some(n)) => Some(y > n),
    }
}

/// End of the sentence containing byte offset `from`.
fn sentence_end(text: &str, from: usize) -> usize {
    let bytes = text.as_bytes();
    let mut i = from;
    while i < bytes.len() {
        match bytes[i] {
            b'\n' => return i,
            b'.' if i + 1 == bytes.len() || bytes[i + 1].is_ascii_whitespace() => return i,
            _ => i += 1,
        }
    }
    bytes.len()
}

fn node_list(run: &str) -> Vec<NodeId> {
    INT.find_iter(run).filter_map(|m| m.as_str().parse().ok()).map(NodeId).collect()
}

/// Scan anchors from the last one backwards; return the first node run of
/// length >= 2 that follows an anchor inside the same sentence.
fn anchored_run<'t>(text: &'t str, anchor: &Regex) -> Option<(Vec<NodeId>, usize)> {
    let anchors: Vec<_> = anchor.find_iter(text).collect();
    for m in anchors.into_iter().rev() {
        let end = sentence_end(text, m.end());
        if let Some(run) = NODE_RUN.find(&text[m.end()..end]) {
            return Some((node_list(run.as_str()), m.end() + run.end()));
        }
    }
    None
}

fn claimed_weight(text: &str) -> Option<u64> {
    let caps = WEIGHT.captures(text)?;
    INT.find_iter(caps.get(1)?.as_str()).last()?.as_str().parse().ok()
}

fn unparsed(reason: &str) -> ParsedAnswer {
    ParsedAnswer::Unparsed { reason: reason.to_string() }
}

/// Extract the answer to `task` from a free-text model response.
///
/// Yes/no tasks take the last keyword hit, since reasoning chains restate
/// premises before concluding. Path and order tasks find the last anchor
/// phrase followed by a separator-joined number run (`,`, `->` or `→`).
pub fn parse_response(task: TaskKind, text: &str) -> ParsedAnswer {
    match task {
        TaskKind::Connectivity => last_keyword(text, &CONNECTED_YES, &CONNECTED_NO)
            .map_or_else(|| unparsed("no yes/no keyword"), |value| ParsedAnswer::YesNo { value }),
        TaskKind::Cycle => last_keyword(text, &CYCLE_YES, &CYCLE_NO)
            .map_or_else(|| unparsed("no yes/no keyword"), |value| ParsedAnswer::YesNo { value }),
        TaskKind::HamiltonPath => match anchored_run(text, &PATH_ANCHOR) {
            Some((nodes, _)) => ParsedAnswer::Path { nodes, weight: None },
            None => unparsed("no node sequence after a path phrase"),
        },
        TaskKind::ShortestPath => match anchored_run(text, &PATH_ANCHOR) {
            Some((nodes, at)) => ParsedAnswer::Path { nodes, weight: claimed_weight(&text[at..]) },
            None => unparsed("no node sequence after a path phrase"),
        },
        TaskKind::TopoSort => match anchored_run(text, &ORDER_ANCHOR) {
            Some((nodes, _)) => ParsedAnswer::Order { nodes },
            None => unparsed("no node sequence after an ordering phrase"),
        },
        TaskKind::NodeClassification => LABEL
            .captures_iter(text)
            .filter_map(|c| c.get(1).map(|m| m.as_str()))
            .filter(|l| !matches!(l.to_ascii_lowercase().as_str(), "of" | "is" | "the" | "for" | "a"))
            .last()
            .map_or_else(|| unparsed("no label token"), |l| ParsedAnswer::Label { label: l.to_string() }),
    }
}

/// Verdict for one case; unparsed or mis-shaped answers are wrong.
pub fn score_case(inst: &TaskInstance, parsed: &ParsedAnswer) -> bool {
    solvers::validate_answer(inst, parsed).unwrap_or(false)
}

/// A response that states the gold answer in the phrasing the parser expects.
pub fn gold_response_text(inst: &TaskInstance) -> String {
    let join = |nodes: &[NodeId]| nodes.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", ");
    match (&inst.gold, inst.task) {
        (GoldAnswer::YesNo { value }, TaskKind::Cycle) => {
            if *value {
                "Yes, there is a cycle in this graph.".into()
            } else {
                "No, there is no cycle in this graph.".into()
            }
        }
        (GoldAnswer::YesNo { value }, _) => format!("So the answer is {}.", if *value { "yes" } else { "no" }),
        (GoldAnswer::Path { nodes, weight }, TaskKind::ShortestPath) => {
            let (u, v) = inst.pair().unwrap_or((nodes[0], nodes[nodes.len() - 1]));
            let mut s = format!("The shortest path from node {u} to node {v} is {}", join(nodes));
            if let Some(w) = weight {
                let _ = write!(s, " with a total weight of {w}");
            }
            s.push('.');
            s
        }
        (GoldAnswer::Path { nodes, .. }, _) => format!("Yes. The path can be: {}.", join(nodes)),
        (GoldAnswer::Order { nodes }, _) => format!("The topological sequence of the graph is {}.", join(nodes)),
        (GoldAnswer::Label { label }, _) => format!("The label of the node is {label}."),
    }
}

/// Percentage of correct records.
pub fn accuracy(records: &[EvalRecord]) -> Result<f64> {
    accuracy_from_counts(records.iter().filter(|r| r.correct).count(), records.len())
}

pub fn accuracy_from_counts(correct: usize, total: usize) -> Result<f64> {
    if total == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(100.0 * correct as f64 / total as f64)
}

/// Population variance of per-order scores.
pub fn order_variance(by_order: &BTreeMap<OrderKind, f64>) -> Result<f64> {
    variance(by_order.values().copied())
}

pub fn variance(values: impl IntoIterator<Item = f64>) -> Result<f64> {
    let v: Vec<f64> = values.into_iter().collect();
    if v.len() < 2 {
        return Err(Error::InsufficientOrders(v.len()));
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    Ok(v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64)
}

/// Relative change over a baseline, in percent.
pub fn improvement(baseline_pct: f64, value_pct: f64) -> Result<f64> {
    if !(baseline_pct > 0.0) {
        return Err(Error::InvalidBaseline(baseline_pct));
    }
    Ok(100.0 * (value_pct - baseline_pct) / baseline_pct)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub task: TaskKind,
    pub order: OrderKind,
    pub style: PromptStyle,
    pub correct: usize,
    pub total: usize,
    pub accuracy_pct: f64,
    /// Relative change against the random order of the same task and style.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_pct: Option<f64>,
}

/// Per task and style: the best order and the spread across orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSummary {
    pub task: TaskKind,
    pub style: PromptStyle,
    pub best_order: OrderKind,
    pub best_accuracy_pct: f64,
    /// Population variance of accuracies as fractions in [0, 1]; absent
    /// with fewer than two orders.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub cells: Vec<ReportCell>,
    pub summaries: Vec<OrderSummary>,
}

/// Group records by (task, order, style). The result does not depend on
/// record order.
pub fn build_report(records: &[EvalRecord]) -> Report {
    let mut counts: BTreeMap<(TaskKind, PromptStyle, OrderKind), (usize, usize)> = BTreeMap::new();
    for r in records {
        let c = counts.entry((r.task, r.style, r.order)).or_default();
        c.0 += usize::from(r.correct);
        c.1 += 1;
    }
    let acc = |&(c, t): &(usize, usize)| 100.0 * c as f64 / t as f64;

    let mut cells = Vec::with_capacity(counts.len());
    for (&(task, style, order), n) in &counts {
        let baseline = counts.get(&(task, style, OrderKind::Random)).map(acc);
        let accuracy_pct = acc(n);
        cells.push(ReportCell {
            task,
            order,
            style,
            correct: n.0,
            total: n.1,
            accuracy_pct,
            delta_pct: match (order, baseline) {
                (OrderKind::Random, _) | (_, None) => None,
                (_, Some(b)) => improvement(b, accuracy_pct).ok(),
            },
        });
    }

    let mut groups: BTreeMap<(TaskKind, PromptStyle), Vec<&ReportCell>> = BTreeMap::new();
    for c in &cells {
        groups.entry((c.task, c.style)).or_default().push(c);
    }
    let summaries = groups
        .into_iter()
        .map(|((task, style), cs)| {
            // first maximum in order-kind order
            let best = cs.iter().fold(cs[0], |b, c| if c.accuracy_pct > b.accuracy_pct { c } else { b });
            OrderSummary {
                task,
                style,
                best_order: best.order,
                best_accuracy_pct: best.accuracy_pct,
                variance: variance(cs.iter().map(|c| c.accuracy_pct / 100.0)).ok(),
            }
        })
        .collect();
    Report { cells, summaries }
}

/// Aligned plain-text rendering; `*` marks the best order per task and style.
pub fn render_report(report: &Report) -> String {
    let best: std::collections::HashSet<(TaskKind, PromptStyle, OrderKind)> =
        report.summaries.iter().map(|s| (s.task, s.style, s.best_order)).collect();
    let mut out = String::new();
    let _ = writeln!(out, "{:<20} {:<14} {:<14} {:>9} {:>9} {:>9}", "task", "style", "order", "n", "acc%", "delta%");
    for c in &report.cells {
        let mark = if best.contains(&(c.task, c.style, c.order)) { "*" } else { " " };
        let delta = c.delta_pct.map_or_else(|| "-".to_string(), |d| format!("{d:+.2}"));
        let _ = writeln!(
            out,
            "{:<20} {:<14} {:<14} {:>9} {:>8.2}{} {:>9}",
            c.task.as_str(),
            c.style.as_str(),
            c.order.as_str(),
            c.total,
            c.accuracy_pct,
            mark,
            delta
        );
    }
    out.push('\n');
    let _ = writeln!(out, "{:<20} {:<14} {:<14} {:>9} {:>12}", "task", "style", "best order", "acc%", "variance");
    for s in &report.summaries {
        let var = s.variance.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
        let _ = writeln!(
            out,
            "{:<20} {:<14} {:<14} {:>9.2} {:>12}",
            s.task.as_str(),
            s.style.as_str(),
            s.best_order.as_str(),
            s.best_accuracy_pct,
            var
        );
    }
    out
}
