//! Scheduling jobs on one machine to maximise the weighted number of early
//! jobs under hard deadlines, driven by a learned early/tardy oracle.
//!
//! The pipeline: [`features`] turns an instance into per-job vectors, the
//! [`oracle`] scores each job, [`refine`] re-solves the least confident jobs
//! exactly on a reduced instance, and [`scheduler`] turns the labels into a
//! schedule that always meets every deadline. [`exact`] provides ground truth
//! and [`baselines`] the comparison heuristics; [`bench`] ties it together.

pub mod baselines;
pub mod bench;
pub mod error;
pub mod exact;
pub mod features;
pub mod formats;
pub mod fsum;
pub mod generator;
pub mod oracle;
pub mod problem;
pub mod refine;
pub mod scheduler;

pub use error::{Error, Result};
pub use problem::{
    completion_times, derive_labels_from_schedule, labels_feasible, objective, Instance,
    InstanceMeta, Job, Label, LabelVector, Schedule, ScoreVector,
};
