//! Stepwise experiment: a shared PureSVD start, then per step either a full
//! retrain on the accumulated history or one projector-splitting update,
//! with relevance, coverage and stability recorded after every step.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SvdOptions;
use crate::data::StepSplit;
use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::metrics::{self, Holdout, ListSet, StepReport};
use crate::model::{psi_step, train_puresvd, FactorModel};
use crate::recommend::{recommend, RecommendationList};

pub const REPORTS_CSV: &str = "reports.csv";
pub const REPORTS_JSONL: &str = "reports.jsonl";
pub const RUN_MANIFEST: &str = "run.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    PureSvd,
    Psi,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::PureSvd => "puresvd",
            ModelKind::Psi => "psi",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "puresvd" | "svd" => Ok(ModelKind::PureSvd),
            "psi" => Ok(ModelKind::Psi),
            other => Err(Error::Config(format!("unknown model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub ranks: Vec<usize>,
    pub top_n: usize,
    pub models: Vec<ModelKind>,
    pub seed: u64,
    /// Reports are streamed here when set.
    pub out_dir: Option<PathBuf>,
    /// Also store the final factor model of every (model, rank).
    pub save_checkpoints: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            ranks: vec![10, 20, 40, 80, 160],
            top_n: 10,
            models: vec![ModelKind::PureSvd, ModelKind::Psi],
            seed: SvdOptions::DEFAULT.seed,
            out_dir: None,
            save_checkpoints: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self, n_users: usize, n_items: usize) -> Result<()> {
        if self.ranks.is_empty() {
            return Err(Error::Config("at least one rank is required".into()));
        }
        let max = n_users.min(n_items);
        if let Some(&r) = self.ranks.iter().find(|&&r| r == 0 || r > max) {
            return Err(Error::RankOutOfRange { rank: r, max });
        }
        if self.top_n == 0 {
            return Err(Error::Config("top-n cutoff must be at least 1".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("at least one model is required".into()));
        }
        Ok(())
    }

    fn svd_options(&self) -> SvdOptions {
        SvdOptions::with_seed(self.seed)
    }
}

/// Histories and effective increments derived from a split.
///
/// `histories[k]` is the binary union of the initial matrix and the first
/// `k` increments; `increments[k - 1]` holds only the cells of step `k`'s
/// delta that were not already in `histories[k - 1]`.
pub struct Timeline {
    pub histories: Vec<SparseMatrix>,
    pub increments: Vec<SparseMatrix>,
}

impl Timeline {
    pub fn build(split: &StepSplit) -> Result<Self> {
        let mut histories = vec![split.initial.matrix().clone()];
        let mut increments = Vec::with_capacity(split.steps.len());
        for (k, step) in split.steps.iter().enumerate().map(|(i, s)| (i + 1, s)) {
            let wrap = |e: Error| Error::Step {
                step: k,
                source: Box::new(e),
            };
            let acc = histories.last().expect("non-empty");
            let fresh = step.delta.matrix().difference(acc).map_err(wrap)?;
            let repeats = step.delta.nnz() - fresh.nnz();
            if repeats > 0 {
                log::info!("{repeats} repeated interactions contribute nothing to the increment");
            }
            histories.push(acc.union_binary(step.delta.matrix()).map_err(wrap)?);
            increments.push(fresh);
        }
        Ok(Timeline { histories, increments })
    }
}

/// Top-n lists for `users`, scored with `model` against `history` rows.
/// Users without any history are skipped.
pub fn lists_for(model: &FactorModel, history: &SparseMatrix, users: &[usize], n: usize) -> Result<ListSet> {
    let lists = users
        .par_iter()
        .filter(|&&u| !history.row_indices(u).is_empty())
        .map(|&u| recommend(model, u, history.row_indices(u), n))
        .collect::<Result<Vec<RecommendationList>>>()?;
    Ok(lists.into_iter().map(|l| (l.user, l)).collect())
}

struct ReportSink {
    csv: BufWriter<File>,
    jsonl: BufWriter<File>,
}

impl ReportSink {
    fn create(dir: &Path, config: &ExperimentConfig, split: &StepSplit) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let open = |name: &str| -> Result<BufWriter<File>> {
            let path = dir.join(name);
            OpenOptions::new()
                .write(true)
                .create_new(true)
                .open(&path)
                .map(BufWriter::new)
                .map_err(|e| match e.kind() {
                    std::io::ErrorKind::AlreadyExists => Error::OutputExists(dir.to_path_buf()),
                    _ => Error::io(path, e),
                })
        };
        let mut csv = open(REPORTS_CSV)?;
        let jsonl = open(REPORTS_JSONL)?;
        let manifest = serde_json::json!({
            "ranks": config.ranks,
            "top_n": config.top_n,
            "models": config.models,
            "seed": config.seed,
            "n_users": split.n_users(),
            "n_items": split.n_items(),
            "n_steps": split.steps.len(),
        });
        let path = dir.join(RUN_MANIFEST);
        fs::write(&path, serde_json::to_string_pretty(&manifest).expect("json") + "\n")
            .map_err(|e| Error::io(path, e))?;
        writeln!(csv, "{}", StepReport::CSV_HEADER)
            .and_then(|_| csv.flush())
            .map_err(|e| Error::io(dir.join(REPORTS_CSV), e))?;
        Ok(ReportSink { csv, jsonl })
    }

    fn push(&mut self, dir: &Path, report: &StepReport) -> Result<()> {
        writeln!(self.csv, "{}", report.to_csv_row())
            .and_then(|_| self.csv.flush())
            .map_err(|e| Error::io(dir.join(REPORTS_CSV), e))?;
        writeln!(self.jsonl, "{}", report.to_json())
            .and_then(|_| self.jsonl.flush())
            .map_err(|e| Error::io(dir.join(REPORTS_JSONL), e))
    }
}

/// Runs every configured (rank, model) pipeline over the split.
///
/// Step 0 fits PureSVD on the initial matrix and shares it between models.
/// At step `k` PureSVD is refit on the accumulated history while PSI takes
/// one update with the step's increment. Test users are the step's holdout
/// users, scored against their history through step `k`. Stability is the
/// mean weighted Jaccard index between the lists of the step `k − 1` and
/// step `k` models for those same users and histories.
///
/// Rows are emitted in (rank, step, model) order and, when `out_dir` is
/// set, appended to disk as they are produced.
pub fn run_experiment(split: &StepSplit, config: &ExperimentConfig) -> Result<Vec<StepReport>> {
    config.validate(split.n_users(), split.n_items())?;
    let timeline = Timeline::build(split)?;
    let opts = config.svd_options();
    let mut sink = match &config.out_dir {
        Some(dir) => Some(ReportSink::create(dir, config, split)?),
        None => None,
    };

    let mut reports = Vec::new();
    for &rank in &config.ranks {
        log::info!("rank {rank}: fitting initial PureSVD model");
        let initial = train_puresvd(&timeline.histories[0], rank, &opts).map_err(|e| Error::Step {
            step: 0,
            source: Box::new(e),
        })?;
        let mut state: BTreeMap<ModelKind, FactorModel> = config.models.iter().map(|&m| (m, initial.clone())).collect();

        for (k, step) in split.steps.iter().enumerate().map(|(i, s)| (i + 1, s)) {
            let wrap = |e: Error| Error::Step {
                step: k,
                source: Box::new(e),
            };
            let history = &timeline.histories[k];
            let holdout: Holdout = step
                .holdout
                .iter()
                .filter(|(&u, _)| !history.row_indices(u).is_empty())
                .map(|(&u, &i)| (u, i))
                .collect();
            let users: Vec<usize> = holdout.keys().copied().collect();

            for (&kind, model) in state.iter_mut() {
                let next = match kind {
                    ModelKind::Psi => psi_step(model, &timeline.increments[k - 1]),
                    ModelKind::PureSvd => train_puresvd(history, rank, &opts)
                        .and_then(|m| FactorModel::new(m.u().clone(), m.s().clone(), m.v().clone(), k)),
                }
                .map_err(wrap)?;

                if users.is_empty() {
                    log::warn!("step {k}: no test users, metrics skipped");
                    *model = next;
                    continue;
                }
                let curr = lists_for(&next, history, &users, config.top_n).map_err(wrap)?;
                let prev = lists_for(model, history, &users, config.top_n).map_err(wrap)?;
                let report = StepReport {
                    step_index: k,
                    model_name: kind.name().to_owned(),
                    rank,
                    n: config.top_n,
                    hr: metrics::hit_rate(&curr, &holdout).map_err(wrap)?,
                    mrr: metrics::mrr(&curr, &holdout).map_err(wrap)?,
                    coverage: metrics::coverage(&curr, split.n_items()),
                    stability: metrics::stability(&prev, &curr, config.top_n).ok(),
                    n_eval_users: users.len(),
                };
                if let (Some(sink), Some(dir)) = (sink.as_mut(), config.out_dir.as_deref()) {
                    sink.push(dir, &report)?;
                }
                reports.push(report);
                *model = next;
            }
        }

        if config.save_checkpoints {
            if let Some(dir) = &config.out_dir {
                let models_dir = dir.join("models");
                fs::create_dir_all(&models_dir).map_err(|e| Error::io(&models_dir, e))?;
                for (kind, model) in &state {
                    model.save(&models_dir.join(format!("{kind}_r{rank}.psif")))?;
                }
            }
        }
    }
    Ok(reports)
}

/// Reads `reports.csv` written by [`run_experiment`].
pub fn read_reports(path: &Path) -> Result<Vec<StepReport>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    reader
        .deserialize()
        .map(|row| row.map_err(|e| Error::Data(format!("{}: {e}", path.display()))))
        .collect()
}

/// Per-(model, rank) averages over steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub model_name: String,
    pub rank: usize,
    pub n: usize,
    pub n_steps: usize,
    pub hr: f64,
    pub mrr: f64,
    pub coverage: f64,
    /// Mean over the steps that report stability.
    pub stability: Option<f64>,
}

/// Unweighted mean of each metric over steps, per (model, rank). Output is
/// sorted by rank then model name; input order does not matter.
pub fn aggregate(reports: &[StepReport]) -> Vec<Summary> {
    let mut groups: BTreeMap<(usize, &str), Vec<&StepReport>> = BTreeMap::new();
    for r in reports {
        groups.entry((r.rank, r.model_name.as_str())).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((rank, name), mut rows)| {
            rows.sort_by_key(|r| r.step_index);
            let mean = |f: &dyn Fn(&StepReport) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / rows.len() as f64;
            let stab: Vec<f64> = rows.iter().filter_map(|r| r.stability).collect();
            Summary {
                model_name: name.to_owned(),
                rank,
                n: rows[0].n,
                n_steps: rows.len(),
                hr: mean(&|r| r.hr),
                mrr: mean(&|r| r.mrr),
                coverage: mean(&|r| r.coverage),
                stability: (!stab.is_empty()).then(|| stab.iter().sum::<f64>() / stab.len() as f64),
            }
        })
        .collect()
}

pub fn summary_to_csv(rows: &[Summary]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

pub fn summary_to_json(rows: &[Summary]) -> String {
    serde_json::to_string_pretty(rows).expect("summary serializes")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    Stability,
    Mrr,
    Coverage,
    Hr,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Stability, Metric::Mrr, Metric::Coverage, Metric::Hr];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Stability => "stability",
            Metric::Mrr => "mrr",
            Metric::Coverage => "coverage",
            Metric::Hr => "hr",
        }
    }

    fn value(self, r: &StepReport) -> Option<f64> {
        match self {
            Metric::Stability => r.stability,
            Metric::Mrr => Some(r.mrr),
            Metric::Coverage => Some(r.coverage),
            Metric::Hr => Some(r.hr),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotRow {
    pub rank: usize,
    pub model: String,
    pub step: usize,
    pub value: Option<f64>,
}

/// Long-format table of one metric, ready for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotTable {
    pub metric: Metric,
    pub rows: Vec<PlotRow>,
}

impl PlotTable {
    pub fn file_name(&self) -> String {
        format!("plot_{}.csv", self.metric.name())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.rows.is_empty() {
            w.write_record(["rank", "model", "step", "value"])
                .expect("in-memory csv");
        }
        for r in &self.rows {
            w.serialize(r).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

/// One table per metric with rows `(rank, model, step, value)`, sorted.
/// Absent stability stays absent (empty field), never zero.
pub fn emit_plot_data(reports: &[StepReport]) -> Vec<PlotTable> {
    let mut sorted: Vec<&StepReport> = reports.iter().collect();
    sorted.sort_by(|a, b| (a.rank, &a.model_name, a.step_index).cmp(&(b.rank, &b.model_name, b.step_index)));
    Metric::ALL
        .iter()
        .map(|&metric| PlotTable {
            metric,
            rows: sorted
                .iter()
                .map(|r| PlotRow {
                    rank: r.rank,
                    model: r.model_name.clone(),
                    step: r.step_index,
                    value: metric.value(r),
                })
                .collect(),
        })
        .collect()
}

pub fn write_plot_data(dir: &Path, reports: &[StepReport]) -> Result<Vec<PathBuf>> {
    emit_plot_data(reports)
        .into_iter()
        .map(|table| {
            let path = dir.join(table.file_name());
            fs::write(&path, table.to_csv()).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}
