//! Instance reduction and refinement of low-confidence predictions.
//!
//! Fixing a job's label fixes its sorting key `D_j`. Removing the job and
//! mapping every other due date and deadline `x` to
//!
//! ```text
//! x' = min(x, D_j - p_j)   if x <= D_j
//! x' = x - p_j             otherwise
//! ```
//!
//! gives an instance whose feasible early sets are exactly the feasible early
//! sets of the original that contain `j` (if early) or not (if tardy), minus
//! `j`. Refinement keeps the `gamma` jobs whose scores are closest to 0.5,
//! removes every other job under its predicted label and solves the rest
//! exactly.

use std::time::Duration;

use crate::error::{Error, Result};
use crate::exact::{solve_exact, SolveResult, SolveStatus};
use crate::problem::{Instance, Job, Label, LabelVector, ScoreVector};

/// Number of refined jobs when none is given.
pub const DEFAULT_GAMMA: usize = 25;
pub const DEFAULT_BETA: Duration = Duration::from_secs(60);

pub fn default_gamma(n: usize) -> usize {
    n.min(DEFAULT_GAMMA)
}

fn shift(x: f64, key: f64, duration: f64) -> f64 {
    if x <= key {
        x.min(key - duration)
    } else {
        x - duration
    }
}

/// Removes `job_id` with sorting key `key` and shifts the remaining due dates
/// and deadlines. Remaining jobs are renumbered in their original order; the
/// result may have due dates below durations or unreachable deadlines.
pub fn reduce_instance(instance: &Instance, job_id: usize, key: f64) -> Result<Instance> {
    if job_id >= instance.len() {
        return Err(Error::Validation(format!(
            "job {job_id} not in instance of {} jobs",
            instance.len()
        )));
    }
    let removed = instance.job(job_id);
    if !key.is_finite() {
        return Err(Error::Parameter(format!("sorting key {key} is not finite")));
    }
    let jobs = instance
        .jobs()
        .iter()
        .filter(|j| j.id != job_id)
        .enumerate()
        .map(|(id, j)| Job {
            id,
            weight: j.weight,
            duration: j.duration,
            due_date: shift(j.due_date, key, removed.duration),
            deadline: shift(j.deadline, key, removed.duration),
        })
        .collect();
    Instance::relaxed(jobs, instance.meta())
}

/// Result of [`refine_detailed`].
#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub labels: LabelVector,
    /// Original ids of the re-solved jobs, ascending.
    pub kept: Vec<usize>,
    /// `None` when nothing was re-solved.
    pub solve: Option<SolveResult>,
}

impl RefineOutcome {
    pub fn updated(&self) -> bool {
        self.solve.as_ref().is_some_and(|s| s.status == SolveStatus::Optimal)
    }
}

/// Re-solves the `gamma` least confident predictions exactly within `beta`.
pub fn refine(
    instance: &Instance,
    labels: &LabelVector,
    scores: &ScoreVector,
    gamma: usize,
    beta: Duration,
) -> Result<LabelVector> {
    refine_detailed(instance, labels, scores, gamma, beta).map(|o| o.labels)
}

pub fn refine_detailed(
    instance: &Instance,
    labels: &LabelVector,
    scores: &ScoreVector,
    gamma: usize,
    beta: Duration,
) -> Result<RefineOutcome> {
    let n = instance.len();
    labels.check_len(instance)?;
    if scores.len() != n {
        return Err(Error::Validation(format!(
            "{} scores for {n} jobs",
            scores.len()
        )));
    }
    if gamma > n {
        return Err(Error::Parameter(format!("gamma {gamma} exceeds job count {n}")));
    }
    if beta.is_zero() {
        return Err(Error::Parameter("beta must be positive".into()));
    }
    if gamma == 0 {
        return Ok(RefineOutcome {
            labels: labels.clone(),
            kept: Vec::new(),
            solve: None,
        });
    }

    let mut by_confidence: Vec<usize> = (0..n).collect();
    let margin = |id: usize| (scores.get(id) - 0.5).abs();
    by_confidence.sort_by(|&a, &b| margin(a).total_cmp(&margin(b)).then(a.cmp(&b)));
    let mut kept = by_confidence[..gamma].to_vec();
    kept.sort_unstable();
    let mut removed = by_confidence[gamma..].to_vec();
    let original_key = |id: usize| instance.job(id).key(labels.get(id));
    removed.sort_by(|&a, &b| original_key(b).total_cmp(&original_key(a)).then(b.cmp(&a)));

    // (original id, w, p, d, dd) of the jobs still present
    let mut current: Vec<(usize, f64, f64, f64, f64)> = instance
        .jobs()
        .iter()
        .map(|j| (j.id, j.weight, j.duration, j.due_date, j.deadline))
        .collect();
    for &id in &removed {
        let pos = current
            .iter()
            .position(|c| c.0 == id)
            .expect("removed jobs are distinct");
        let (_, _, p, d, dd) = current.remove(pos);
        let key = match labels.get(id) {
            Label::Early => d,
            Label::Tardy => dd,
        };
        for c in &mut current {
            c.3 = shift(c.3, key, p);
            c.4 = shift(c.4, key, p);
        }
    }
    let jobs = current
        .iter()
        .enumerate()
        .map(|(pos, &(_, w, p, d, dd))| Job {
            id: pos,
            weight: w,
            duration: p,
            due_date: d,
            deadline: dd,
        })
        .collect();
    let reduced = Instance::relaxed(jobs, instance.meta())?;
    let result = solve_exact(&reduced, beta)?;

    let mut out = labels.clone();
    if result.status == SolveStatus::Optimal {
        let solved = result.labels.as_ref().expect("optimal result carries labels");
        for (pos, &(id, ..)) in current.iter().enumerate() {
            out.set(id, solved.get(pos));
        }
    }
    Ok(RefineOutcome {
        labels: out,
        kept,
        solve: Some(result),
    })
}
