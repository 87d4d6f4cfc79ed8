//! End-to-end pipeline, benchmark records and reports.
//!
//! The pipeline featurizes an instance, classifies every job with the model,
//! refines the least confident predictions exactly and schedules the result.
//! Experiments compare it with the baselines against optimal objectives from
//! the exact solver.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::baselines::{ga_traced, honey_badger_traced, rule_based, GaParams, HoneyBadgerParams};
use crate::error::{Error, Result};
use crate::exact::{solve_exact, SolveStatus};
use crate::features::{featurize, FeatureMode};
use crate::generator::{generate, DatasetSpec};
use crate::oracle::{predict_scores, threshold, Dataset, MlpModel};
use crate::problem::{objective, Instance, LabelVector, Schedule, ScoreVector};
use crate::refine::{default_gamma, refine_detailed, DEFAULT_BETA};
use crate::scheduler::{edf_feasible, schedule_from_labels};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(300);
pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_COUNT: usize = 100;
pub const DEFAULT_BIN_WIDTH: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub alpha: f64,
    /// Jobs to refine; `None` means `min(n, 25)`. Larger values are capped
    /// at `n`.
    pub gamma: Option<usize>,
    /// Time limit of the refinement solve.
    pub beta: Duration,
    /// Wall-clock limit per instance, also applied to exact reference solves.
    pub timeout: Duration,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            gamma: None,
            beta: DEFAULT_BETA,
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Parameter(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if self.beta.is_zero() || self.timeout.is_zero() {
            return Err(Error::Parameter("beta and timeout must be positive".into()));
        }
        Ok(())
    }

    pub fn gamma_for(&self, n: usize) -> usize {
        self.gamma.map_or(default_gamma(n), |g| g.min(n))
    }
}

/// Seconds spent in each pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageTimings {
    pub featurize: f64,
    pub predict: f64,
    pub refine: f64,
    pub schedule: f64,
}

impl StageTimings {
    pub fn total(&self) -> f64 {
        self.featurize + self.predict + self.refine + self.schedule
    }
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub schedule: Schedule,
    pub scores: ScoreVector,
    pub predicted: LabelVector,
    pub refined: LabelVector,
    /// Status of the refinement solve, `None` when nothing was refined.
    pub refine_status: Option<SolveStatus>,
    pub timings: StageTimings,
    /// Record without a reference objective.
    pub record: BenchRecord,
}

/// Runs featurize, classify, refine and schedule on one instance. Fails with
/// [`Error::Infeasible`] when no schedule meets every deadline.
pub fn run_pipeline(instance: &Instance, model: &MlpModel, config: &PipelineConfig) -> Result<PipelineRun> {
    config.validate()?;
    if !edf_feasible(instance, &[], 0.0) {
        return Err(Error::Infeasible);
    }
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let features = featurize(instance, model.feature_mode());
    timings.featurize = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let scores = predict_scores(model, &features)?;
    let predicted = threshold(&scores, config.alpha);
    timings.predict = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let gamma = config.gamma_for(instance.len());
    let beta = config.beta.min(config.timeout);
    let outcome = refine_detailed(instance, &predicted, &scores, gamma, beta)?;
    timings.refine = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let schedule = schedule_from_labels(instance, &outcome.labels)?;
    timings.schedule = t.elapsed().as_secs_f64();

    let meta = instance.meta();
    let record = BenchRecord {
        family: meta.family,
        n: instance.len(),
        seed: meta.seed,
        method: Method::Proposed,
        reference: Reference::Unknown,
        objective: schedule.weighted_early(),
        f_star: None,
        gap: None,
        optimal: false,
        runtime_seconds: timings.total(),
        epoch_seconds: None,
    };
    Ok(PipelineRun {
        schedule,
        scores,
        predicted,
        refine_status: outcome.solve.as_ref().map(|s| s.status),
        refined: outcome.labels,
        timings,
        record,
    })
}

/// Optimality gap in percent.
pub fn gap(f_star: f64, f: f64) -> Result<f64> {
    if !(f_star.is_finite() && f.is_finite()) || f_star < 0.0 || f < 0.0 {
        return Err(Error::Parameter(format!("invalid objectives f*={f_star}, f={f}")));
    }
    if f > f_star {
        return Err(Error::Internal(format!(
            "heuristic objective {f} exceeds optimum {f_star}"
        )));
    }
    if f_star == 0.0 {
        return Ok(0.0);
    }
    Ok((f_star - f) / f_star * 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Proposed,
    RuleBased,
    Ga,
    HoneyBadger,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Proposed, Method::RuleBased, Method::Ga, Method::HoneyBadger];

    pub fn name(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::RuleBased => "rule_based",
            Method::Ga => "ga",
            Method::HoneyBadger => "honey_badger",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown method {s:?}")))
    }
}

/// What is known about the optimum of a record's instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// Proven optimum available.
    Optimal,
    /// The exact solve timed out; the record is left out of gap averages.
    Timeout,
    /// No feasible schedule exists.
    Infeasible,
    /// No reference solve was attempted.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub family: u8,
    pub n: usize,
    pub seed: u64,
    pub method: Method,
    pub reference: Reference,
    pub objective: f64,
    pub f_star: Option<f64>,
    pub gap: Option<f64>,
    pub optimal: bool,
    pub runtime_seconds: f64,
    /// Seconds per generation or iteration, metaheuristics only.
    pub epoch_seconds: Option<f64>,
}

impl BenchRecord {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Validation(format!("record {}/{}/{}: {msg}", self.family, self.seed, self.method)));
        if !self.objective.is_finite() || self.objective < 0.0 {
            return bad("objective must be finite and non-negative");
        }
        if !(self.runtime_seconds >= 0.0 && self.runtime_seconds.is_finite()) {
            return bad("runtime must be finite and non-negative");
        }
        match (self.reference, self.f_star, self.gap) {
            (Reference::Optimal, Some(f), Some(g)) => {
                if !(g >= 0.0 && g.is_finite() && f.is_finite()) {
                    return bad("gap must be finite and non-negative");
                }
                if self.optimal != (g == 0.0) {
                    return bad("optimal flag must equal gap == 0");
                }
            }
            (Reference::Optimal, _, _) => return bad("optimal reference needs f* and gap"),
            (_, None, None) if !self.optimal => {}
            _ => return bad("gap present without a proven optimum"),
        }
        Ok(())
    }
}

pub fn records_to_csv(records: &[BenchRecord]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for r in records {
        writer
            .serialize(r)
            .map_err(|e| Error::Internal(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

pub fn parse_records(text: &str) -> Result<Vec<BenchRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in reader.deserialize() {
        let record: BenchRecord = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse {
                line,
                msg: e.to_string(),
            }
        })?;
        record.validate()?;
        out.push(record);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub families: Vec<u8>,
    pub sizes: Vec<usize>,
    pub methods: Vec<Method>,
    /// Instances per (family, size); instance `k` uses seed `seed + k`.
    pub count: usize,
    pub seed: u64,
    pub pipeline: PipelineConfig,
    pub ga: GaParams,
    pub honey_badger: HoneyBadgerParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            families: vec![1],
            sizes: vec![50],
            methods: Method::ALL.to_vec(),
            count: DEFAULT_COUNT,
            seed: 0,
            pipeline: PipelineConfig::default(),
            ga: GaParams::default(),
            honey_badger: HoneyBadgerParams::default(),
        }
    }
}

fn checked(instance: &Instance, schedule: &Schedule) -> Result<f64> {
    objective(instance, schedule).map_err(|_| {
        Error::Internal(format!(
            "method produced an infeasible schedule on family {} seed {}",
            instance.meta().family,
            instance.meta().seed
        ))
    })
}

/// Runs every method on one instance against a reference solve.
pub fn bench_instance(
    instance: &Instance,
    config: &ExperimentConfig,
    model: Option<&MlpModel>,
) -> Result<Vec<BenchRecord>> {
    let meta = instance.meta();
    let timeout = config.pipeline.timeout;
    let reference = solve_exact(instance, timeout)?;
    let (status, f_star) = match reference.status {
        SolveStatus::Optimal => (Reference::Optimal, Some(reference.objective)),
        SolveStatus::Timeout => (Reference::Timeout, None),
        SolveStatus::Infeasible => (Reference::Infeasible, None),
    };
    let mut records = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let mut record = BenchRecord {
            family: meta.family,
            n: instance.len(),
            seed: meta.seed,
            method,
            reference: status,
            objective: 0.0,
            f_star,
            gap: None,
            optimal: false,
            runtime_seconds: 0.0,
            epoch_seconds: None,
        };
        if status == Reference::Infeasible {
            records.push(record);
            continue;
        }
        let start = Instant::now();
        let (schedule, epoch_seconds) = match method {
            Method::Proposed => {
                let model = model.ok_or_else(|| Error::Parameter("method proposed needs a model".into()))?;
                (run_pipeline(instance, model, &config.pipeline)?.schedule, None)
            }
            Method::RuleBased => (rule_based(instance, meta.seed)?, None),
            Method::Ga => {
                let (s, trace) = ga_traced(instance, &config.ga, timeout, meta.seed)?;
                (s, trace.seconds_per_epoch())
            }
            Method::HoneyBadger => {
                let (s, trace) = honey_badger_traced(instance, &config.honey_badger, timeout, meta.seed)?;
                (s, trace.seconds_per_epoch())
            }
        };
        record.runtime_seconds = start.elapsed().as_secs_f64();
        record.epoch_seconds = epoch_seconds;
        record.objective = checked(instance, &schedule)?;
        if let Some(f) = f_star {
            let g = gap(f, record.objective)?;
            record.gap = Some(g);
            record.optimal = g == 0.0;
        }
        records.push(record);
    }
    Ok(records)
}

/// Generates the instances and benchmarks every method on each. Records are
/// ordered by family, size, seed and method.
pub fn run_experiment(config: &ExperimentConfig, model: Option<&MlpModel>) -> Result<Vec<BenchRecord>> {
    run_experiment_with_progress(config, model, |_| {})
}

pub fn run_experiment_with_progress(
    config: &ExperimentConfig,
    model: Option<&MlpModel>,
    mut progress: impl FnMut(&[BenchRecord]),
) -> Result<Vec<BenchRecord>> {
    config.pipeline.validate()?;
    config.ga.validate()?;
    config.honey_badger.validate()?;
    if config.methods.contains(&Method::Proposed) && model.is_none() {
        return Err(Error::Parameter("method proposed needs a model".into()));
    }
    let mut records = Vec::new();
    for &family in &config.families {
        for &n in &config.sizes {
            for k in 0..config.count {
                let spec = DatasetSpec::new(family, n, config.seed.wrapping_add(k as u64))?;
                let instance = generate(&spec)?;
                let batch = bench_instance(&instance, config, model)?;
                progress(&batch);
                records.extend(batch);
            }
        }
    }
    records.sort_by(|a, b| (a.family, a.n, a.seed, a.method).cmp(&(b.family, b.n, b.seed, b.method)));
    Ok(records)
}

/// Grouping key of an aggregate row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Size,
    Family,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub method: Method,
    /// Size or family, depending on the grouping.
    pub group: u64,
    pub instances: usize,
    /// Records with a proven optimum.
    pub proven: usize,
    /// Mean gap over proven records.
    pub mean_gap: Option<f64>,
    /// Percentage of proven records solved to optimality.
    pub n_opt: Option<f64>,
    pub timeouts: usize,
    pub mean_runtime: f64,
}

pub fn aggregate(records: &[BenchRecord], by: GroupBy) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(Method, u64), Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        let key = match by {
            GroupBy::Size => r.n as u64,
            GroupBy::Family => r.family as u64,
        };
        groups.entry((r.method, key)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((method, group), rs)| {
            let gaps: Vec<f64> = rs.iter().filter_map(|r| r.gap).collect();
            let optimal = rs.iter().filter(|r| r.optimal).count();
            let proven = gaps.len();
            AggregateRow {
                method,
                group,
                instances: rs.len(),
                proven,
                mean_gap: (proven > 0).then(|| gaps.iter().sum::<f64>() / proven as f64),
                n_opt: (proven > 0).then(|| optimal as f64 / proven as f64 * 100.0),
                timeouts: rs.iter().filter(|r| r.reference == Reference::Timeout).count(),
                mean_runtime: rs.iter().map(|r| r.runtime_seconds).sum::<f64>() / rs.len() as f64,
            }
        })
        .collect()
}

fn render_rows(out: &mut String, title: &str, label: &str, rows: &[AggregateRow]) {
    let opt = |v: Option<f64>, digits: usize| v.map_or("-".to_string(), |x| format!("{x:.digits$}"));
    let _ = writeln!(out, "### {title}\n");
    let _ = writeln!(out, "| method | {label} | instances | Δ_avg (%) | n_opt (%) | timeouts | runtime (s) |");
    let _ = writeln!(out, "|---|---|---|---|---|---|---|");
    for r in rows {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {:.4} |",
            r.method,
            r.group,
            r.instances,
            opt(r.mean_gap, 3),
            opt(r.n_opt, 1),
            r.timeouts,
            r.mean_runtime
        );
    }
    out.push('\n');
}

/// Markdown tables of gap and optimality rate by method and size, then by
/// method and family.
pub fn aggregate_markdown(records: &[BenchRecord]) -> String {
    let mut out = String::new();
    render_rows(&mut out, "By size", "n", &aggregate(records, GroupBy::Size));
    render_rows(&mut out, "By family", "family", &aggregate(records, GroupBy::Family));
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub errors: usize,
}

impl CalibrationBin {
    pub fn error_rate(&self) -> Option<f64> {
        (self.count > 0).then(|| self.errors as f64 / self.count as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub bins: Vec<CalibrationBin>,
}

impl CalibrationReport {
    /// Error rate pooled over the bins lying inside any of `ranges`.
    pub fn pooled_error_rate(&self, ranges: &[(f64, f64)]) -> Option<f64> {
        let eps = 1e-9;
        let inside = |b: &&CalibrationBin| ranges.iter().any(|&(lo, hi)| b.lo >= lo - eps && b.hi <= hi + eps);
        let (count, errors) = self
            .bins
            .iter()
            .filter(inside)
            .fold((0, 0), |(c, e), b| (c + b.count, e + b.errors));
        (count > 0).then(|| errors as f64 / count as f64)
    }

    /// Error rate around 0.5 and at the extremes.
    pub fn centre_and_tails(&self) -> (Option<f64>, Option<f64>) {
        (
            self.pooled_error_rate(&[(0.45, 0.55)]),
            self.pooled_error_rate(&[(0.0, 0.05), (0.95, 1.0)]),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lo,hi,count,errors,error_rate\n");
        for b in &self.bins {
            let rate = b.error_rate().map_or(String::new(), |r| r.to_string());
            let _ = writeln!(out, "{},{},{},{},{}", b.lo, b.hi, b.count, b.errors, rate);
        }
        out
    }
}

/// Error frequency and occupancy per score bin. Bins are left-closed except
/// the last, which also holds score 1.
pub fn calibration_report(model: &MlpModel, data: &Dataset, bin_width: f64) -> Result<CalibrationReport> {
    if data.is_empty() {
        return Err(Error::Validation("no rows to calibrate on".into()));
    }
    if !(bin_width > 0.0 && bin_width <= 1.0) {
        return Err(Error::Parameter(format!("bin width {bin_width} outside (0, 1]")));
    }
    if data.width() != model.input_width() {
        return Err(Error::Validation("data width does not match the model".into()));
    }
    let count = (1.0 / bin_width - 1e-9).ceil() as usize;
    let mut bins: Vec<CalibrationBin> = (0..count)
        .map(|k| CalibrationBin {
            lo: k as f64 * bin_width,
            hi: ((k + 1) as f64 * bin_width).min(1.0),
            count: 0,
            errors: 0,
        })
        .collect();
    let scores = model.early_probabilities(data.features());
    for (score, &label) in scores.iter().zip(data.labels()) {
        let k = ((score / bin_width).floor() as usize).min(count - 1);
        bins[k].count += 1;
        if (*score >= 0.5) != (label == 1) {
            bins[k].errors += 1;
        }
    }
    Ok(CalibrationReport { bins })
}

/// Labelled rows from exactly solved instances.
#[derive(Debug, Clone, Default)]
pub struct LabelingSummary {
    pub data: Dataset,
    pub labeled: usize,
    pub timeouts: usize,
    pub infeasible: usize,
}

/// Solves each instance and collects its feature rows with the optimal
/// labels. Instances without a proven optimum are skipped.
pub fn build_training_data(
    instances: &[Instance],
    mode: FeatureMode,
    time_limit: Duration,
) -> Result<LabelingSummary> {
    let mut summary = LabelingSummary::default();
    for instance in instances {
        let result = solve_exact(instance, time_limit)?;
        match result.status {
            SolveStatus::Optimal => {
                let labels = result.labels.as_ref().expect("optimal result carries labels");
                let rows = Dataset::from_instance(&featurize(instance, mode), labels)?;
                summary.data.append(&rows)?;
                summary.labeled += 1;
            }
            SolveStatus::Timeout => summary.timeouts += 1,
            SolveStatus::Infeasible => summary.infeasible += 1,
        }
    }
    Ok(summary)
}
