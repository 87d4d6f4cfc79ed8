//! Deadline feasibility checks and the conversion of early/tardy predictions
//! into a schedule that always meets every deadline.

use crate::error::{Error, Result};
use crate::problem::{cmp_key, key_order, Instance, Label, LabelVector, Schedule};

/// Job ids presorted by deadline (ties by id), reused across many EDF checks.
#[derive(Debug, Clone)]
pub struct EdfChecker {
    by_deadline: Vec<usize>,
}

impl EdfChecker {
    pub fn new(instance: &Instance) -> Self {
        let mut by_deadline: Vec<usize> = (0..instance.len()).collect();
        by_deadline.sort_by(|&a, &b| {
            cmp_key(
                (instance.job(a).deadline, a),
                (instance.job(b).deadline, b),
            )
        });
        Self { by_deadline }
    }

    /// Runs EDF over the jobs not marked in `skip`, starting at `start_time`.
    pub fn check(&self, instance: &Instance, skip: &[bool], start_time: f64) -> bool {
        let mut clock = start_time;
        for &id in &self.by_deadline {
            if skip[id] {
                continue;
            }
            let job = instance.job(id);
            clock += job.duration;
            if clock > job.deadline {
                return false;
            }
        }
        true
    }

    pub fn order(&self) -> &[usize] {
        &self.by_deadline
    }
}

/// Whether the jobs outside `excluded` can all meet their deadlines when
/// processed in deadline order from `start_time`.
pub fn edf_feasible(instance: &Instance, excluded: &[usize], start_time: f64) -> bool {
    let mut skip = vec![false; instance.len()];
    for &id in excluded {
        if id < skip.len() {
            skip[id] = true;
        }
    }
    EdfChecker::new(instance).check(instance, &skip, start_time)
}

/// Bookkeeping from one run of [`schedule_from_labels`].
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulingTrace {
    /// Cursor iterations, at most `2n`.
    pub steps: usize,
    /// Jobs predicted early that failed the EDF check and were pushed back.
    pub demoted: Vec<usize>,
    /// Labels after demotions.
    pub final_labels: LabelVector,
}

/// Turns predicted labels into a feasible schedule.
///
/// Jobs are taken in non-descending `D_j` order. A job predicted tardy is
/// scheduled immediately. A job predicted early is scheduled only if the jobs
/// still waiting remain EDF-feasible from the new makespan; otherwise it is
/// relabeled tardy and reinserted at its deadline position. Returns
/// [`Error::Infeasible`] when no feasible schedule exists.
pub fn schedule_from_labels(instance: &Instance, labels: &LabelVector) -> Result<Schedule> {
    schedule_from_labels_traced(instance, labels).map(|(s, _)| s)
}

pub fn schedule_from_labels_traced(
    instance: &Instance,
    labels: &LabelVector,
) -> Result<(Schedule, SchedulingTrace)> {
    labels.check_len(instance)?;
    let n = instance.len();
    let checker = EdfChecker::new(instance);
    let mut scheduled = vec![false; n];
    if !checker.check(instance, &scheduled, 0.0) {
        return Err(Error::Infeasible);
    }

    let mut labels = labels.clone();
    let mut keys = labels.keys(instance);
    let mut seq = key_order(instance, &labels);
    let mut demoted = Vec::new();
    let mut makespan = 0.0;
    let mut cursor = 0;
    let mut steps = 0;

    while cursor < n {
        steps += 1;
        let j = seq[cursor];
        let job = instance.job(j);
        let schedule_now = match labels.get(j) {
            Label::Tardy => true,
            Label::Early => {
                scheduled[j] = true;
                let ok = checker.check(instance, &scheduled, makespan + job.duration);
                scheduled[j] = ok;
                ok
            }
        };
        if schedule_now {
            scheduled[j] = true;
            makespan += job.duration;
            cursor += 1;
        } else {
            labels.set(j, Label::Tardy);
            keys[j] = job.deadline;
            seq.remove(cursor);
            let tail = &seq[cursor..];
            let offset = tail.partition_point(|&k| cmp_key((keys[k], k), (keys[j], j)).is_lt());
            seq.insert(cursor + offset, j);
            demoted.push(j);
        }
    }

    let schedule = Schedule::new(instance, seq)?;
    if !schedule.is_feasible() {
        return Err(Error::Internal(
            "label scheduling produced a deadline violation".into(),
        ));
    }
    Ok((
        schedule,
        SchedulingTrace {
            steps,
            demoted,
            final_labels: labels,
        },
    ))
}

/// Earliest-deadline-first order; the instance is feasible iff this is.
pub fn edf_schedule(instance: &Instance) -> Result<Schedule> {
    let order = EdfChecker::new(instance).by_deadline;
    let schedule = Schedule::new(instance, order)?;
    if schedule.is_feasible() {
        Ok(schedule)
    } else {
        Err(Error::Infeasible)
    }
}

/// Earliest-due-date order. May miss deadlines; check
/// [`Schedule::is_feasible`].
pub fn edd_schedule(instance: &Instance) -> Schedule {
    let order = key_order(instance, &LabelVector::all(instance.len(), Label::Early));
    Schedule::new(instance, order).expect("key order is a permutation")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::objective;

    #[test]
    fn edf_check_examples() {
        let one = Instance::from_tuples(&[(1.0, 3.0, 3.0, 5.0)]).unwrap();
        assert!(edf_feasible(&one, &[0], 0.0));
        assert!(!edf_feasible(&one, &[], 4.0));
        let two = Instance::from_tuples(&[(1.0, 2.0, 2.0, 2.0), (1.0, 3.0, 3.0, 5.0)]).unwrap();
        assert!(edf_feasible(&two, &[], 0.0));
    }

    #[test]
    fn tardy_job_after_early_one_keeps_order() {
        let inst = Instance::from_tuples(&[(10.0, 2.0, 2.0, 6.0), (5.0, 3.0, 3.0, 6.0)]).unwrap();
        let s = schedule_from_labels(&inst, &LabelVector::all(2, Label::Early)).unwrap();
        assert_eq!(s.order(), &[0, 1]);
        assert_eq!(objective(&inst, &s).unwrap(), 10.0);
    }

    #[test]
    fn failing_early_job_is_demoted_and_reinserted() {
        // A(w=1,p=4,d=4,dd=9) early, B(w=7,p=3,d=3,dd=5) tardy.
        let inst = Instance::from_tuples(&[(1.0, 4.0, 4.0, 9.0), (7.0, 3.0, 3.0, 5.0)]).unwrap();
        let labels = LabelVector::new(vec![Label::Early, Label::Tardy]);
        let (s, trace) = schedule_from_labels_traced(&inst, &labels).unwrap();
        assert_eq!(trace.demoted, vec![0]);
        assert_eq!(s.order(), &[1, 0]);
        assert_eq!(s.completion_times(), &[7.0, 3.0]);
        assert_eq!(objective(&inst, &s).unwrap(), 7.0);
        assert_eq!(trace.steps, 3);
    }

    #[test]
    fn all_tardy_reproduces_edf() {
        let inst = Instance::from_tuples(&[
            (1.0, 2.0, 3.0, 9.0),
            (1.0, 1.0, 2.0, 4.0),
            (1.0, 3.0, 4.0, 7.0),
        ])
        .unwrap();
        let s = schedule_from_labels(&inst, &LabelVector::all(3, Label::Tardy)).unwrap();
        assert_eq!(s.order(), edf_schedule(&inst).unwrap().order());
    }

    #[test]
    fn infeasible_instance_is_signalled() {
        let inst = Instance::from_tuples(&[(1.0, 3.0, 3.0, 4.0), (1.0, 3.0, 3.0, 4.0)]).unwrap();
        assert!(matches!(
            schedule_from_labels(&inst, &LabelVector::all(2, Label::Tardy)),
            Err(Error::Infeasible)
        ));
        assert!(matches!(edf_schedule(&inst), Err(Error::Infeasible)));
        assert!(!edd_schedule(&inst).is_feasible());
    }

    #[test]
    fn edf_and_edd_sort() {
        let inst = Instance::from_tuples(&[(1.0, 1.0, 1.0, 5.0), (1.0, 1.0, 2.0, 2.0)]).unwrap();
        assert_eq!(edf_schedule(&inst).unwrap().order(), &[1, 0]);
        assert_eq!(edd_schedule(&inst).order(), &[0, 1]);
        let single = Instance::from_tuples(&[(1.0, 1.0, 1.0, 5.0)]).unwrap();
        assert_eq!(edf_schedule(&single).unwrap().order(), &[0]);
    }

    #[test]
    fn label_length_checked() {
        let inst = Instance::from_tuples(&[(1.0, 1.0, 1.0, 5.0)]).unwrap();
        assert!(schedule_from_labels(&inst, &LabelVector::all(2, Label::Tardy)).is_err());
    }
}
