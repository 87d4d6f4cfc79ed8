//! Instances, label vectors, schedules and their evaluation.
//!
//! A job is early when it completes at or before its due date and tardy when
//! it completes after the due date but no later than its deadline. A schedule
//! is a permutation processed back to back from time zero; it is feasible when
//! every job meets its deadline. The objective is the total weight of early
//! jobs.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::fsum::exact_sum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub id: usize,
    pub weight: f64,
    pub duration: f64,
    pub due_date: f64,
    pub deadline: f64,
}

impl Job {
    /// Sorting key used when the job is treated with the given label.
    #[inline]
    pub fn key(&self, label: Label) -> f64 {
        match label {
            Label::Early => self.due_date,
            Label::Tardy => self.deadline,
        }
    }
}

/// Where an instance came from. Family 0 marks hand-built or derived instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct InstanceMeta {
    pub family: u8,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    jobs: Vec<Job>,
    meta: InstanceMeta,
}

impl Instance {
    /// Builds an instance and checks every job invariant:
    /// ids match positions, values are finite, `w > 0`, `p > 0` and
    /// `p <= d <= dd`.
    pub fn new(jobs: Vec<Job>, meta: InstanceMeta) -> Result<Self> {
        let instance = Self::relaxed(jobs, meta)?;
        for job in &instance.jobs {
            if job.duration > job.due_date {
                return Err(Error::Validation(format!(
                    "job {}: duration {} exceeds due date {}",
                    job.id, job.duration, job.due_date
                )));
            }
        }
        Ok(instance)
    }

    /// Like [`Instance::new`] but allows `d < p`.
    ///
    /// Instances obtained by removing label-fixed jobs can have due dates (and
    /// even deadlines) shifted below the job's duration. Such a job simply
    /// cannot be early, and a deadline below the duration makes the instance
    /// infeasible; neither is a structural error.
    pub fn relaxed(jobs: Vec<Job>, meta: InstanceMeta) -> Result<Self> {
        if jobs.is_empty() {
            return Err(Error::Validation("instance has no jobs".into()));
        }
        for (pos, job) in jobs.iter().enumerate() {
            if job.id != pos {
                return Err(Error::Validation(format!(
                    "job at position {pos} has id {}",
                    job.id
                )));
            }
            let values = [job.weight, job.duration, job.due_date, job.deadline];
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("job {pos}: non-finite value")));
            }
            if job.weight <= 0.0 || job.duration <= 0.0 {
                return Err(Error::Validation(format!(
                    "job {pos}: weight and duration must be positive"
                )));
            }
            if job.due_date > job.deadline {
                return Err(Error::Validation(format!(
                    "job {pos}: due date {} exceeds deadline {}",
                    job.due_date, job.deadline
                )));
            }
        }
        Ok(Self { jobs, meta })
    }

    /// Convenience constructor from `(w, p, d, dd)` tuples.
    pub fn from_tuples(rows: &[(f64, f64, f64, f64)]) -> Result<Self> {
        let jobs = rows
            .iter()
            .enumerate()
            .map(|(id, &(weight, duration, due_date, deadline))| Job {
                id,
                weight,
                duration,
                due_date,
                deadline,
            })
            .collect();
        Self::new(jobs, InstanceMeta::default())
    }

    #[inline]
    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    #[inline]
    pub fn job(&self, id: usize) -> &Job {
        &self.jobs[id]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn meta(&self) -> InstanceMeta {
        self.meta
    }

    pub fn total_weight(&self) -> f64 {
        exact_sum(self.jobs.iter().map(|j| j.weight))
    }

    pub fn total_duration(&self) -> f64 {
        self.jobs.iter().map(|j| j.duration).sum()
    }

    /// Exact weighted sum over the jobs selected by `is_early`.
    pub fn weight_of<F: Fn(usize) -> bool>(&self, is_early: F) -> f64 {
        exact_sum(
            self.jobs
                .iter()
                .filter(|j| is_early(j.id))
                .map(|j| j.weight),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Early,
    Tardy,
}

impl Label {
    pub fn flipped(self) -> Self {
        match self {
            Label::Early => Label::Tardy,
            Label::Tardy => Label::Early,
        }
    }

    /// 1 for early, 0 for tardy; the class index used by the oracle.
    pub fn as_class(self) -> usize {
        match self {
            Label::Early => 1,
            Label::Tardy => 0,
        }
    }

    pub fn from_class(class: usize) -> Self {
        if class == 1 {
            Label::Early
        } else {
            Label::Tardy
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Early => f.write_str("early"),
            Label::Tardy => f.write_str("tardy"),
        }
    }
}

/// Per-job early/tardy classes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelVector(Vec<Label>);

impl LabelVector {
    pub fn new(labels: Vec<Label>) -> Self {
        Self(labels)
    }

    pub fn all(n: usize, label: Label) -> Self {
        Self(vec![label; n])
    }

    pub fn from_early_mask(mask: &[bool]) -> Self {
        Self(
            mask.iter()
                .map(|&e| if e { Label::Early } else { Label::Tardy })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Label] {
        &self.0
    }

    pub fn get(&self, id: usize) -> Label {
        self.0[id]
    }

    pub fn set(&mut self, id: usize, label: Label) {
        self.0[id] = label;
    }

    pub fn is_early(&self, id: usize) -> bool {
        self.0[id] == Label::Early
    }

    pub fn early_count(&self) -> usize {
        self.0.iter().filter(|&&l| l == Label::Early).count()
    }

    /// `D_j` for every job: due date if early, deadline if tardy.
    pub fn keys(&self, instance: &Instance) -> Vec<f64> {
        instance
            .jobs()
            .iter()
            .zip(&self.0)
            .map(|(job, &label)| job.key(label))
            .collect()
    }

    /// Total weight of the jobs labeled early.
    pub fn early_weight(&self, instance: &Instance) -> f64 {
        instance.weight_of(|id| self.0[id] == Label::Early)
    }

    pub(crate) fn check_len(&self, instance: &Instance) -> Result<()> {
        if self.len() != instance.len() {
            return Err(Error::Validation(format!(
                "label vector has {} entries for {} jobs",
                self.len(),
                instance.len()
            )));
        }
        Ok(())
    }
}

impl FromIterator<Label> for LabelVector {
    fn from_iter<T: IntoIterator<Item = Label>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Per-job confidence that the job is early, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if let Some((id, s)) = scores
            .iter()
            .enumerate()
            .find(|(_, s)| !(0.0..=1.0).contains(*s))
        {
            return Err(Error::Validation(format!(
                "score {s} of job {id} outside [0, 1]"
            )));
        }
        Ok(Self(scores))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, id: usize) -> f64 {
        self.0[id]
    }
}

/// A processing order with the resulting completion times.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    order: Vec<usize>,
    /// Indexed by job id, not by position.
    completion_times: Vec<f64>,
    objective: f64,
    feasible: bool,
}

impl Schedule {
    /// Evaluates `order` on `instance`. Fails only on a malformed permutation;
    /// deadline violations are reported by [`Schedule::is_feasible`].
    pub fn new(instance: &Instance, order: Vec<usize>) -> Result<Self> {
        let completion_times = completion_times(instance, &order)?;
        let feasible = instance
            .jobs()
            .iter()
            .all(|j| completion_times[j.id] <= j.deadline);
        let objective = instance.weight_of(|id| completion_times[id] <= instance.job(id).due_date);
        Ok(Self {
            order,
            completion_times,
            objective,
            feasible,
        })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn completion_times(&self) -> &[f64] {
        &self.completion_times
    }

    pub fn completion_time(&self, id: usize) -> f64 {
        self.completion_times[id]
    }

    /// Weighted number of early jobs, computed regardless of feasibility.
    pub fn weighted_early(&self) -> f64 {
        self.objective
    }

    pub fn is_feasible(&self) -> bool {
        self.feasible
    }

    pub fn early_set(&self, instance: &Instance) -> Vec<usize> {
        self.order
            .iter()
            .copied()
            .filter(|&id| self.completion_times[id] <= instance.job(id).due_date)
            .collect()
    }

    pub fn tardy_set(&self, instance: &Instance) -> Vec<usize> {
        self.order
            .iter()
            .copied()
            .filter(|&id| {
                let job = instance.job(id);
                let c = self.completion_times[id];
                job.due_date < c && c <= job.deadline
            })
            .collect()
    }
}

fn check_permutation(n: usize, order: &[usize]) -> Result<()> {
    if order.len() != n {
        return Err(Error::Validation(format!(
            "order has {} entries for {n} jobs",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &id in order {
        if id >= n {
            return Err(Error::Validation(format!("job id {id} out of range")));
        }
        if std::mem::replace(&mut seen[id], true) {
            return Err(Error::Validation(format!("job id {id} appears twice")));
        }
    }
    Ok(())
}

/// Completion time of every job (indexed by id) when processed in `order`.
pub fn completion_times(instance: &Instance, order: &[usize]) -> Result<Vec<f64>> {
    check_permutation(instance.len(), order)?;
    let mut times = vec![0.0; instance.len()];
    let mut clock = 0.0;
    for &id in order {
        clock += instance.job(id).duration;
        times[id] = clock;
    }
    Ok(times)
}

/// Weighted number of early jobs `f(s)`; errors when a deadline is missed or
/// the schedule does not belong to `instance`.
pub fn objective(instance: &Instance, schedule: &Schedule) -> Result<f64> {
    let expected = completion_times(instance, schedule.order())?;
    if expected != schedule.completion_times {
        return Err(Error::Validation(
            "completion times inconsistent with order".into(),
        ));
    }
    if let Some(job) = instance
        .jobs()
        .iter()
        .find(|j| schedule.completion_times[j.id] > j.deadline)
    {
        return Err(Error::Validation(format!(
            "infeasible schedule: job {} completes at {} after deadline {}",
            job.id, schedule.completion_times[job.id], job.deadline
        )));
    }
    Ok(schedule.objective)
}

/// Total order on `(key, id)` pairs used for every key-based sort.
#[inline]
pub(crate) fn cmp_key(a: (f64, usize), b: (f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Job ids sorted by `D_j` ascending, ties by id.
pub fn key_order(instance: &Instance, labels: &LabelVector) -> Vec<usize> {
    let keys = labels.keys(instance);
    let mut order: Vec<usize> = (0..instance.len()).collect();
    order.sort_by(|&a, &b| cmp_key((keys[a], a), (keys[b], b)));
    order
}

/// Whether the label assignment is realisable: in non-descending `D_j` order
/// every job completes by its `D_j`.
pub fn labels_feasible(instance: &Instance, labels: &LabelVector) -> Result<bool> {
    labels.check_len(instance)?;
    let mut clock = 0.0;
    for id in key_order(instance, labels) {
        let job = instance.job(id);
        clock += job.duration;
        if clock > job.key(labels.get(id)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Labels read off a feasible schedule: early iff `C_i <= d_i`.
pub fn derive_labels_from_schedule(instance: &Instance, schedule: &Schedule) -> Result<LabelVector> {
    objective(instance, schedule)?;
    Ok(instance
        .jobs()
        .iter()
        .map(|j| {
            if schedule.completion_time(j.id) <= j.due_date {
                Label::Early
            } else {
                Label::Tardy
            }
        })
        .collect())
}
