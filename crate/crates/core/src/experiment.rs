//! Experiment harness: flat `key = value` configs, the repeat-and-average
//! evaluation protocol, machine-readable report files, and embedding export.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::datasets::{build_link_split, build_node_split, load_features, load_labels, LinkSample};
use crate::error::{Error, Result};
use crate::graph::{load_edge_list, Graph};
use crate::metrics::{accuracy, auc, aupr};
use crate::nn::{
    full_forward, predict_link_scores, predict_node_classes, train_link, train_node, ModelParams,
    TrainConfig,
};
use crate::weights::{precompute_weights, TorsionWeightTable};

/// Which objective an experiment trains and evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Link,
    Node,
}

impl Task {
    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            Task::Link => "link",
            Task::Node => "node",
        }
    }

    fn default_lr(self) -> f64 {
        match self {
            Task::Link => 5e-4,
            Task::Node => 2e-2,
        }
    }

    fn default_epochs(self) -> usize {
        match self {
            Task::Link => 20,
            Task::Node => 200,
        }
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Task> {
        match s {
            "link" => Ok(Task::Link),
            "node" => Ok(Task::Node),
            other => Err(Error::Config(format!(
                "unknown task {other:?} (expected \"link\" or \"node\")"
            ))),
        }
    }
}

/// A full experiment description, usually parsed from a flat config file.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    pub edge_list: PathBuf,
    pub features: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub l_sub: u32,
    pub n: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub hidden: usize,
    pub repeats: usize,
    pub seed: u64,
    /// Run the repeats concurrently; results are merged in seed order either
    /// way, so this changes memory and wall-clock behaviour only.
    pub parallel: bool,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// A config for `task` on `edge_list` with every optional knob at its
    /// default (`l_sub = 1`, `n = 1`, task-specific lr and epochs, batch 128,
    /// hidden 64, 10 repeats, seed 0, sequential, no report file).
    #[must_use]
    pub fn new(task: Task, edge_list: impl Into<PathBuf>) -> ExperimentConfig {
        ExperimentConfig {
            task,
            edge_list: edge_list.into(),
            features: None,
            labels: None,
            l_sub: 1,
            n: 1,
            lr: task.default_lr(),
            epochs: task.default_epochs(),
            batch: 128,
            hidden: 64,
            repeats: 10,
            seed: 0,
            parallel: false,
            out: None,
        }
    }

    /// Reads and parses a config file.
    pub fn load(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_config(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l_sub == 0 {
            return Err(Error::Config("l_sub must be at least 1".into()));
        }
        if !(1..=3).contains(&self.n) {
            return Err(Error::Config(format!(
                "complex order n must be in 1..=3, got {}",
                self.n
            )));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive and finite, got {}",
                self.lr
            )));
        }
        if self.batch == 0 || self.hidden == 0 {
            return Err(Error::Config(
                "batch size and hidden width must be at least 1".into(),
            ));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.task == Task::Node && self.labels.is_none() {
            return Err(Error::Config("node task requires a labels file".into()));
        }
        Ok(())
    }

    fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            epochs: self.epochs,
            batch: self.batch,
            hidden: self.hidden,
            seed,
        }
    }

    /// The per-repeat seeds: `seed, seed+1, …`.
    #[must_use]
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.repeats as u64).map(|i| self.seed + i).collect()
    }
}

/// Parses a flat `key = value` config. Lines starting with `#` and blank
/// lines are ignored; unknown and duplicate keys are errors.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut seen: Vec<&str> = Vec::new();
    let mut task = None;
    let mut edge_list = None;
    let mut features = None;
    let mut labels = None;
    let mut l_sub = None;
    let mut n = None;
    let mut lr = None;
    let mut epochs = None;
    let mut batch = None;
    let mut hidden = None;
    let mut repeats = None;
    let mut seed = None;
    let mut parallel = None;
    let mut out = None;

    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("config line {} is not `key = value`", idx + 1))
        })?;
        let (key, value) = (key.trim(), value.trim());
        if seen.contains(&key) {
            return Err(Error::Config(format!("duplicate config key {key:?}")));
        }
        seen.push(key);
        match key {
            "task" => task = Some(value.parse::<Task>()?),
            "edge_list" => edge_list = Some(PathBuf::from(value)),
            "features" => features = Some(PathBuf::from(value)),
            "labels" => labels = Some(PathBuf::from(value)),
            "l_sub" => l_sub = Some(parse_number(key, value)?),
            "n" => n = Some(parse_number(key, value)?),
            "lr" => lr = Some(parse_number(key, value)?),
            "epochs" => epochs = Some(parse_number(key, value)?),
            "batch" => batch = Some(parse_number(key, value)?),
            "hidden" => hidden = Some(parse_number(key, value)?),
            "repeats" => repeats = Some(parse_number(key, value)?),
            "seed" => seed = Some(parse_number(key, value)?),
            "parallel" => parallel = Some(parse_number(key, value)?),
            "out" => out = Some(PathBuf::from(value)),
            other => {
                return Err(Error::Config(format!("unknown config key {other:?}")));
            }
        }
    }

    let task = task.ok_or_else(|| Error::Config("config is missing `task`".into()))?;
    let edge_list =
        edge_list.ok_or_else(|| Error::Config("config is missing `edge_list`".into()))?;
    let mut cfg = ExperimentConfig::new(task, edge_list);
    cfg.features = features;
    cfg.labels = labels;
    if let Some(v) = l_sub {
        cfg.l_sub = v;
    }
    if let Some(v) = n {
        cfg.n = v;
    }
    if let Some(v) = lr {
        cfg.lr = v;
    }
    if let Some(v) = epochs {
        cfg.epochs = v;
    }
    if let Some(v) = batch {
        cfg.batch = v;
    }
    if let Some(v) = hidden {
        cfg.hidden = v;
    }
    if let Some(v) = repeats {
        cfg.repeats = v;
    }
    if let Some(v) = seed {
        cfg.seed = v;
    }
    if let Some(v) = parallel {
        cfg.parallel = v;
    }
    cfg.out = out;
    cfg.validate()?;
    Ok(cfg)
}

fn parse_number<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for config key {key:?}")))
}

/// One metric across all repeats, with its population mean and standard
/// deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSeries {
    pub name: String,
    pub values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl MetricSeries {
    /// Computes mean and (population) standard deviation from the values.
    #[must_use]
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> MetricSeries {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
        MetricSeries {
            name: name.into(),
            values,
            mean,
            std: var.sqrt(),
        }
    }
}

/// Results of one experiment: the per-repeat metric values, their summary
/// statistics, the config echo, and the wall-clock runtime.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub task: Task,
    pub repeats: usize,
    pub seeds: Vec<u64>,
    pub l_sub: u32,
    pub n: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub hidden: usize,
    pub metrics: Vec<MetricSeries>,
    pub runtime_s: f64,
}

impl MetricsReport {
    /// Machine-readable report text. Floats are printed in Rust's shortest
    /// round-trip form, so a parsed report compares equal bit for bit.
    #[must_use]
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "report_version = 1");
        let _ = writeln!(s, "task = {}", self.task.name());
        let _ = writeln!(s, "repeats = {}", self.repeats);
        let _ = writeln!(s, "seeds = {}", join(&self.seeds));
        let _ = writeln!(s, "l_sub = {}", self.l_sub);
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "lr = {}", self.lr);
        let _ = writeln!(s, "epochs = {}", self.epochs);
        let _ = writeln!(s, "batch = {}", self.batch);
        let _ = writeln!(s, "hidden = {}", self.hidden);
        let _ = writeln!(s, "runtime_s = {}", self.runtime_s);
        let names: Vec<&str> = self.metrics.iter().map(|m| m.name.as_str()).collect();
        let _ = writeln!(s, "metrics = {}", names.join(","));
        for m in &self.metrics {
            let _ = writeln!(s, "values.{} = {}", m.name, join(&m.values));
            let _ = writeln!(s, "mean.{} = {}", m.name, m.mean);
            let _ = writeln!(s, "std.{} = {}", m.name, m.std);
        }
        s
    }

    /// Writes the report file.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// Human-readable console summary.
    #[must_use]
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "task {} | l_sub {} | n {} | lr {} | epochs {} | batch {} | hidden {} | {} repeat(s)",
            self.task.name(),
            self.l_sub,
            self.n,
            self.lr,
            self.epochs,
            self.batch,
            self.hidden,
            self.repeats,
        );
        for m in &self.metrics {
            let values: Vec<String> = m.values.iter().map(|v| format!("{v:.4}")).collect();
            let _ = writeln!(
                s,
                "{:>9}: mean {:.4} ± {:.4}  [{}]",
                m.name,
                m.mean,
                m.std,
                values.join(", ")
            );
        }
        let _ = write!(s, "runtime: {:.1} s", self.runtime_s);
        s
    }
}

fn join<T: std::fmt::Display>(values: &[T]) -> String {
    values
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// Parses a report produced by [`MetricsReport::to_text`], re-checking its
/// internal consistency (counts, means, standard deviations).
pub fn parse_report(text: &str) -> Result<MetricsReport> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Metric(format!("report line {} is not `key = value`", idx + 1)))?;
        let key = key.trim().to_string();
        if pairs.iter().any(|(k, _)| *k == key) {
            return Err(Error::Metric(format!("duplicate report key {key:?}")));
        }
        pairs.push((key, value.trim().to_string()));
    }
    let get = |key: &str| -> Result<&str> {
        pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Metric(format!("report is missing key {key:?}")))
    };
    let version: u32 = parse_report_number("report_version", get("report_version")?)?;
    if version != 1 {
        return Err(Error::Metric(format!(
            "unsupported report version {version}"
        )));
    }
    let task: Task = get("task")?
        .parse()
        .map_err(|_| Error::Metric("report has an unknown task".into()))?;
    let repeats: usize = parse_report_number("repeats", get("repeats")?)?;
    let seeds: Vec<u64> = parse_list("seeds", get("seeds")?)?;
    let metric_names: Vec<String> = get("metrics")?
        .split(',')
        .map(str::trim)
        .map(String::from)
        .collect();
    let mut metrics = Vec::new();
    for name in &metric_names {
        let values: Vec<f64> = parse_list(name, get(&format!("values.{name}"))?)?;
        let mean: f64 = parse_report_number(name, get(&format!("mean.{name}"))?)?;
        let std: f64 = parse_report_number(name, get(&format!("std.{name}"))?)?;
        let recomputed = MetricSeries::new(name.clone(), values);
        if recomputed.mean.to_bits() != mean.to_bits()
            || recomputed.std.to_bits() != std.to_bits()
        {
            return Err(Error::Metric(format!(
                "report statistics for {name:?} do not match its values"
            )));
        }
        metrics.push(recomputed);
    }
    let report = MetricsReport {
        task,
        repeats,
        seeds,
        l_sub: parse_report_number("l_sub", get("l_sub")?)?,
        n: parse_report_number("n", get("n")?)?,
        lr: parse_report_number("lr", get("lr")?)?,
        epochs: parse_report_number("epochs", get("epochs")?)?,
        batch: parse_report_number("batch", get("batch")?)?,
        hidden: parse_report_number("hidden", get("hidden")?)?,
        metrics,
        runtime_s: parse_report_number("runtime_s", get("runtime_s")?)?,
    };
    if report.seeds.len() != report.repeats
        || report.metrics.iter().any(|m| m.values.len() != report.repeats)
    {
        return Err(Error::Metric(
            "report repeat count does not match its value lists".into(),
        ));
    }
    Ok(report)
}

fn parse_report_number<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Metric(format!("invalid report value {value:?} for {key:?}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .map(|tok| parse_report_number(key, tok))
        .collect()
}

/// Loads the graph (and any feature/label files) an experiment runs on.
fn load_graph(cfg: &ExperimentConfig) -> Result<Graph> {
    let loaded = load_edge_list(&cfg.edge_list).map_err(|e| e.in_stage("datasets"))?;
    let mut g = loaded.graph;
    if let Some(p) = &cfg.features {
        let f = load_features(p, g.num_vertices()).map_err(|e| e.in_stage("datasets"))?;
        g = g.with_features(f).map_err(|e| e.in_stage("datasets"))?;
    }
    if cfg.task == Task::Node {
        let p = cfg
            .labels
            .as_ref()
            .expect("validated: node task has labels");
        let labels = load_labels(p, g.num_vertices(), None).map_err(|e| e.in_stage("datasets"))?;
        g = g.with_labels(labels).map_err(|e| e.in_stage("datasets"))?;
    }
    Ok(g)
}

fn link_pairs(samples: &[LinkSample]) -> (Vec<(u32, u32)>, Vec<bool>) {
    (
        samples.iter().map(|s| (s.x, s.y)).collect(),
        samples.iter().map(|s| s.label).collect(),
    )
}

/// One link repeat: split → weight table on the observed graph → train →
/// test AUC and AUPR.
fn link_repeat(g: &Graph, cfg: &ExperimentConfig, seed: u64) -> Result<Vec<f64>> {
    let split = build_link_split(g, seed).map_err(|e| e.in_stage("datasets"))?;
    let table = precompute_weights(&split.observed_graph, cfg.l_sub, cfg.n)
        .map_err(|e| e.in_stage("weights"))?;
    let (params, _) =
        train_link(&split, &table, &cfg.train_config(seed)).map_err(|e| e.in_stage("nn"))?;
    let (pairs, labels) = link_pairs(&split.test);
    let scores = predict_link_scores(&params, &split.observed_graph, &table, &pairs)
        .map_err(|e| e.in_stage("nn"))?;
    let auc_value = auc(&scores, &labels).map_err(|e| e.in_stage("metrics"))?;
    let aupr_value = aupr(&scores, &labels).map_err(|e| e.in_stage("metrics"))?;
    Ok(vec![auc_value, aupr_value])
}

/// One node repeat: split → train on the shared table → test accuracy.
fn node_repeat(
    g: &Graph,
    table: &TorsionWeightTable,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    let split = build_node_split(g, seed).map_err(|e| e.in_stage("datasets"))?;
    let (params, _) =
        train_node(g, table, &split, &cfg.train_config(seed)).map_err(|e| e.in_stage("nn"))?;
    let predicted = predict_node_classes(&params, g, table).map_err(|e| e.in_stage("nn"))?;
    let on_test: Vec<usize> = split.test.iter().map(|&v| predicted[v as usize]).collect();
    let expected: Vec<usize> = split.test.iter().map(|&v| split.labels[v as usize]).collect();
    let acc = accuracy(&on_test, &expected).map_err(|e| e.in_stage("metrics"))?;
    Ok(vec![acc])
}

/// Runs the full protocol: for each seed, precompute → split → train →
/// evaluate; then average. Any repeat failure aborts the experiment (partial
/// results are never averaged). Writes the report file when the config names
/// one.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let start = Instant::now();
    let g = load_graph(cfg)?;
    let seeds = cfg.seeds();

    // The node task trains on the full input graph, which is identical for
    // every repeat — compute its weight table once. Link repeats each train
    // on their own observed graph, so the table lives inside the repeat.
    let node_table = match cfg.task {
        Task::Node => Some(
            precompute_weights(&g, cfg.l_sub, cfg.n).map_err(|e| e.in_stage("weights"))?,
        ),
        Task::Link => None,
    };
    let run_one = |seed: u64| match cfg.task {
        Task::Link => link_repeat(&g, cfg, seed),
        Task::Node => node_repeat(&g, node_table.as_ref().expect("set above"), cfg, seed),
    };
    let per_repeat: Vec<Vec<f64>> = if cfg.parallel {
        seeds.par_iter().map(|&s| run_one(s)).collect::<Result<_>>()?
    } else {
        seeds.iter().map(|&s| run_one(s)).collect::<Result<_>>()?
    };

    let metric_names: &[&str] = match cfg.task {
        Task::Link => &["auc", "aupr"],
        Task::Node => &["accuracy"],
    };
    let metrics = metric_names
        .iter()
        .enumerate()
        .map(|(k, name)| MetricSeries::new(*name, per_repeat.iter().map(|r| r[k]).collect()))
        .collect();

    let report = MetricsReport {
        task: cfg.task,
        repeats: cfg.repeats,
        seeds,
        l_sub: cfg.l_sub,
        n: cfg.n,
        lr: cfg.lr,
        epochs: cfg.epochs,
        batch: cfg.batch,
        hidden: cfg.hidden,
        metrics,
        runtime_s: start.elapsed().as_secs_f64(),
    };
    if let Some(out) = &cfg.out {
        report.save(out)?;
    }
    Ok(report)
}

/// Final node representations as text: one `id v_1 … v_h` line per vertex.
/// `original_ids` (from edge-list loading) restores external vertex IDs.
pub fn export_embeddings(
    params: &ModelParams,
    g: &Graph,
    table: &TorsionWeightTable,
    original_ids: Option<&[u64]>,
) -> Result<String> {
    if let Some(ids) = original_ids {
        if ids.len() != g.num_vertices() {
            return Err(Error::Shape(format!(
                "{} original IDs for {} vertices",
                ids.len(),
                g.num_vertices()
            )));
        }
    }
    let cache = full_forward(params, g, table)?;
    let h = cache.output();
    let mut out = String::new();
    for v in 0..g.num_vertices() {
        let id = original_ids.map_or(v as u64, |ids| ids[v]);
        let _ = write!(out, "{id}");
        for value in h.row(v) {
            let _ = write!(out, " {value}");
        }
        out.push('\n');
    }
    Ok(out)
}
