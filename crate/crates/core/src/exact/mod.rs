//! Exact solvers: exhaustive enumeration for tiny instances and a
//! branch-and-bound for the sizes used in labelling and benchmarking.

mod bnb;
mod brute;

use std::time::Duration;

pub use bnb::{dominance_pairs, solve_exact, solve_with, BranchOrder, SolveOptions};
pub use brute::{brute_force, BRUTE_FORCE_MAX_JOBS};

use crate::problem::LabelVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// Budget exhausted; the result carries the best labels found.
    Timeout,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Optimal labels, or the incumbent on timeout. `None` when infeasible.
    pub labels: Option<LabelVector>,
    /// Weighted number of early jobs of `labels`.
    pub objective: f64,
    pub nodes_explored: u64,
    pub elapsed: Duration,
    /// Nodes whose partial assignment contradicted a dominance implication.
    /// Only counted when auditing is enabled.
    pub dominance_violations: u64,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub(crate) fn infeasible(elapsed: Duration) -> Self {
        Self {
            status: SolveStatus::Infeasible,
            labels: None,
            objective: 0.0,
            nodes_explored: 0,
            elapsed,
            dominance_violations: 0,
        }
    }
}
