//! Per-job feature vectors.
//!
//! Each job is described by eight parameters: `w`, `p`, `d`, `dd`, `w/p`,
//! `d/dd`, `w - p` and `dd - d`. The full representation relates every
//! parameter to the rest of the instance through two normalisations: the
//! z-score of the raw value and the z-score of its natural logarithm. The
//! minimal and aggregated representations exist for ablation.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::problem::{Instance, Job};

pub const PARAMETER_COUNT: usize = 8;

/// Floor applied before taking logarithms; `w - p` and `dd - d` can be zero
/// or negative.
pub const LOG_FLOOR: f64 = 1e-9;

pub const PARAMETER_NAMES: [&str; PARAMETER_COUNT] =
    ["w", "p", "d", "dd", "w_over_p", "d_over_dd", "w_minus_p", "dd_minus_d"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FeatureMode {
    /// The eight raw parameters.
    Minimal,
    /// Raw parameters followed by instance mean, std, min and max of each.
    Aggregated,
    /// z-scores and log z-scores of each parameter.
    #[default]
    Full,
}

impl FeatureMode {
    pub fn width(self) -> usize {
        match self {
            FeatureMode::Minimal => PARAMETER_COUNT,
            FeatureMode::Aggregated => PARAMETER_COUNT * 5,
            FeatureMode::Full => PARAMETER_COUNT * 2,
        }
    }

    pub fn column_names(self) -> Vec<String> {
        let raw = PARAMETER_NAMES.iter().map(|s| s.to_string());
        match self {
            FeatureMode::Minimal => raw.collect(),
            FeatureMode::Aggregated => {
                let mut names: Vec<String> = raw.collect();
                for stat in ["avg", "std", "min", "max"] {
                    names.extend(PARAMETER_NAMES.iter().map(|p| format!("{p}_{stat}")));
                }
                names
            }
            FeatureMode::Full => PARAMETER_NAMES
                .iter()
                .map(|p| format!("{p}_dev"))
                .chain(PARAMETER_NAMES.iter().map(|p| format!("{p}_rel")))
                .collect(),
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureMode::Minimal => "minimal",
            FeatureMode::Aggregated => "aggregated",
            FeatureMode::Full => "full",
        })
    }
}

impl FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minimal" => Ok(FeatureMode::Minimal),
            "aggregated" => Ok(FeatureMode::Aggregated),
            "full" => Ok(FeatureMode::Full),
            other => Err(Error::Parameter(format!("unknown feature mode {other:?}"))),
        }
    }
}

/// Row-major `n x width` matrix of features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    mode: FeatureMode,
    rows: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    /// Wraps row-major `data` whose length is a multiple of the mode width.
    pub fn from_vec(mode: FeatureMode, data: Vec<f64>) -> Result<Self> {
        if data.len() % mode.width() != 0 {
            return Err(Error::Validation(format!(
                "{} values do not form rows of width {}",
                data.len(),
                mode.width()
            )));
        }
        Ok(Self {
            mode,
            rows: data.len() / mode.width(),
            data,
        })
    }

    pub fn mode(&self) -> FeatureMode {
        self.mode
    }

    pub fn width(&self) -> usize {
        self.mode.width()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.width())
    }
}

pub fn job_parameters(job: &Job) -> [f64; PARAMETER_COUNT] {
    [
        job.weight,
        job.duration,
        job.due_date,
        job.deadline,
        job.weight / job.duration,
        job.due_date / job.deadline,
        job.weight - job.duration,
        job.deadline - job.due_date,
    ]
}

#[derive(Debug, Clone, Copy)]
struct ColumnStats {
    mean: f64,
    std: f64,
    min: f64,
    max: f64,
}

impl ColumnStats {
    /// Population statistics.
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // Identical values: rounding in `mean` must not leak a tiny spread.
        let std = if min == max { 0.0 } else { var.sqrt() };
        Self { mean, std, min, max }
    }

    fn z(&self, x: f64) -> f64 {
        if self.std > 0.0 {
            (x - self.mean) / self.std
        } else {
            0.0
        }
    }
}

/// Builds the feature matrix for `instance` in the given mode.
pub fn featurize(instance: &Instance, mode: FeatureMode) -> FeatureMatrix {
    let n = instance.len();
    let params: Vec<[f64; PARAMETER_COUNT]> = instance.jobs().iter().map(job_parameters).collect();
    let column = |k: usize, f: &dyn Fn(f64) -> f64| -> Vec<f64> { params.iter().map(|p| f(p[k])).collect() };
    let raw_stats: Vec<ColumnStats> = (0..PARAMETER_COUNT)
        .map(|k| ColumnStats::of(&column(k, &|x| x)))
        .collect();

    let width = mode.width();
    let mut data = Vec::with_capacity(n * width);
    match mode {
        FeatureMode::Minimal => {
            for p in &params {
                data.extend_from_slice(p);
            }
        }
        FeatureMode::Aggregated => {
            for p in &params {
                data.extend_from_slice(p);
                data.extend(raw_stats.iter().map(|s| s.mean));
                data.extend(raw_stats.iter().map(|s| s.std));
                data.extend(raw_stats.iter().map(|s| s.min));
                data.extend(raw_stats.iter().map(|s| s.max));
            }
        }
        FeatureMode::Full => {
            let log = |x: f64| x.max(LOG_FLOOR).ln();
            let log_stats: Vec<ColumnStats> = (0..PARAMETER_COUNT)
                .map(|k| ColumnStats::of(&column(k, &log)))
                .collect();
            for p in &params {
                data.extend((0..PARAMETER_COUNT).map(|k| raw_stats[k].z(p[k])));
                data.extend((0..PARAMETER_COUNT).map(|k| log_stats[k].z(log(p[k]))));
            }
        }
    }
    debug_assert!(data.iter().all(|v| v.is_finite()));
    FeatureMatrix { mode, rows: n, data }
}
