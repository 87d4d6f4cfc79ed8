use std::time::Instant;

use super::{SolveResult, SolveStatus};
use crate::error::{Error, Result};
use crate::problem::{labels_feasible, Instance, LabelVector};
use crate::scheduler::edf_feasible;

pub const BRUTE_FORCE_MAX_JOBS: usize = 20;

/// Enumerates all `2^n` label vectors and keeps the heaviest feasible one.
/// Ties go to the first vector in enumeration order (bit `i` set = job `i`
/// early).
pub fn brute_force(instance: &Instance) -> Result<SolveResult> {
    let n = instance.len();
    if n > BRUTE_FORCE_MAX_JOBS {
        return Err(Error::Parameter(format!(
            "brute force refuses {n} jobs (limit {BRUTE_FORCE_MAX_JOBS})"
        )));
    }
    let start = Instant::now();
    if !edf_feasible(instance, &[], 0.0) {
        return Ok(SolveResult::infeasible(start.elapsed()));
    }
    let mut best: Option<(f64, LabelVector)> = None;
    let mut mask_bits = vec![false; n];
    for mask in 0u32..(1u32 << n) {
        for (i, bit) in mask_bits.iter_mut().enumerate() {
            *bit = mask & (1 << i) != 0;
        }
        let labels = LabelVector::from_early_mask(&mask_bits);
        if !labels_feasible(instance, &labels)? {
            continue;
        }
        let value = labels.early_weight(instance);
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, labels));
        }
    }
    let (objective, labels) = best.expect("all-tardy labels are feasible");
    Ok(SolveResult {
        status: SolveStatus::Optimal,
        labels: Some(labels),
        objective,
        nodes_explored: 1 << n,
        elapsed: start.elapsed(),
        dominance_violations: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Label;

    #[test]
    fn singleton_is_early() {
        let inst = Instance::from_tuples(&[(4.0, 2.0, 3.0, 5.0)]).unwrap();
        let r = brute_force(&inst).unwrap();
        assert_eq!(r.objective, 4.0);
        assert_eq!(r.labels.unwrap().as_slice(), &[Label::Early]);
    }

    #[test]
    fn two_job_conflict() {
        // A(w=10,p=4,d=4,dd=6), B(w=6,p=3,d=3,dd=7)
        let inst = Instance::from_tuples(&[(10.0, 4.0, 4.0, 6.0), (6.0, 3.0, 3.0, 7.0)]).unwrap();
        let r = brute_force(&inst).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.objective, 10.0);
        assert_eq!(r.labels.unwrap().as_slice(), &[Label::Early, Label::Tardy]);
    }

    #[test]
    fn infeasible_and_oversized() {
        let inst = Instance::from_tuples(&[(1.0, 3.0, 3.0, 4.0), (1.0, 3.0, 3.0, 4.0)]).unwrap();
        assert_eq!(brute_force(&inst).unwrap().status, SolveStatus::Infeasible);
        let big = Instance::from_tuples(&vec![(1.0, 1.0, 100.0, 100.0); 21]).unwrap();
        assert!(brute_force(&big).is_err());
    }
}
