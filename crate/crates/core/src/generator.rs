//! Seeded instance generation for the fifteen benchmark families.
//!
//! Notation: `U(a, b)` uniform, `N(mu, sigma)` normal with standard deviation
//! `sigma`, `LN(mu, sigma)` log-normal with parameters of the underlying
//! normal, `Exp(m)` exponential with mean `m`. `P` is the total duration of
//! the instance.
//!
//! | family | w | p | d | dd |
//! |---|---|---|---|---|
//! | 1 | N(50, 20) | U(1, 100) | U(0.3P, 0.7P) | U(d, 1.1P) |
//! | 2 | U(30, 80) | N(50, 10) | N(0.5P, 0.1P) | U(d, 1.2P) |
//! | 3 | 2p + 20 | N(40, 15) | U(0.3P, 0.7P) | U(d, 1.1P) |
//! | 4 | p^2 + 10 | N(35, 10) | U(0.3P, 0.7P) | U(d, 1.1P) |
//! | 5 | U(20, 80) | N(45, 15) | U(0.5P, 0.8P) | d + (n/5) w |
//! | 6 | 100 / (p + 1) | N(40, 10) | U(0.3P, 0.7P) | U(d, 1.1P) |
//! | 7 | U(10, 60) | Exp(30) | U(0.3P, 0.7P) | U(d, 1.1P) |
//! | 8 | LN(3, 1) | LN(4, 1) | U(0.3P, 0.7P) | U(d, 1.1P) |
//! | 9 | 1.5p + 0.2d | N(40, 10) | U(0.3P, 0.7P) | U(d, 1.1P) |
//! | 10 | LN(4, 2) | Exp(40) | N(0.5P, 100) | N(2d, 200) |
//! | 11-15 | U(1, 100) | U(1, 100) | U(aP, bP) | U(d, 1.1P) |
//!
//! with `(a, b)` = (0.1, 0.3), (0.1, 0.7), (0.3, 0.5), (0.3, 0.7), (0.5, 0.7)
//! for families 11 to 15.
//!
//! Draws happen in two passes because due dates depend on `P`: first
//! `(w, p)` for every job in index order, then `(d, dd)` for every job in
//! index order. Every value is rounded to six decimals when emitted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal};

use crate::error::{Error, Result};
use crate::problem::{Instance, InstanceMeta, Job};
use crate::scheduler::edf_feasible;

/// Identifies the pseudo-random generator and stream layout. Stored in
/// instance files so that a change in the draw procedure is detectable.
pub const GENERATOR_PRNG: &str = "chacha8-seed_from_u64-stream_per_attempt";

pub const FAMILIES: std::ops::RangeInclusive<u8> = 1..=15;

const JOB_RETRIES: usize = 100;
const INSTANCE_RETRIES: u64 = 50;
const MIN_POSITIVE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetSpec {
    pub family: u8,
    pub n: usize,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn new(family: u8, n: usize, seed: u64) -> Result<Self> {
        let spec = Self { family, n, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !FAMILIES.contains(&self.family) {
            return Err(Error::Parameter(format!(
                "family {} outside 1..=15",
                self.family
            )));
        }
        if self.n == 0 {
            return Err(Error::Parameter("job count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Due-date window `(a, b)` for families 11 to 15.
pub fn due_window(family: u8) -> Option<(f64, f64)> {
    match family {
        11 => Some((0.1, 0.3)),
        12 => Some((0.1, 0.7)),
        13 => Some((0.3, 0.5)),
        14 => Some((0.3, 0.7)),
        15 => Some((0.5, 0.7)),
        _ => None,
    }
}

pub fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn normal(rng: &mut ChaCha8Rng, mean: f64, std: f64) -> f64 {
    Normal::new(mean, std).expect("valid normal").sample(rng)
}

fn lognormal(rng: &mut ChaCha8Rng, mu: f64, sigma: f64) -> f64 {
    LogNormal::new(mu, sigma).expect("valid log-normal").sample(rng)
}

fn exponential(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    Exp::new(1.0 / mean).expect("valid exponential").sample(rng)
}

/// Draws until the rounded value is positive, giving up after the retry
/// budget.
fn positive(rng: &mut ChaCha8Rng, mut draw: impl FnMut(&mut ChaCha8Rng) -> f64) -> f64 {
    let mut x = round6(draw(rng));
    for _ in 0..JOB_RETRIES {
        if x >= MIN_POSITIVE {
            return x;
        }
        x = round6(draw(rng));
    }
    x.max(MIN_POSITIVE)
}

fn draw_duration(family: u8, rng: &mut ChaCha8Rng) -> f64 {
    match family {
        1 | 11..=15 => positive(rng, |r| uniform(r, 1.0, 100.0)),
        2 => positive(rng, |r| normal(r, 50.0, 10.0)),
        3 => positive(rng, |r| normal(r, 40.0, 15.0)),
        4 => positive(rng, |r| normal(r, 35.0, 10.0)),
        5 => positive(rng, |r| normal(r, 45.0, 15.0)),
        6 | 9 => positive(rng, |r| normal(r, 40.0, 10.0)),
        7 => positive(rng, |r| exponential(r, 30.0)),
        8 => positive(rng, |r| lognormal(r, 4.0, 1.0)),
        10 => positive(rng, |r| exponential(r, 40.0)),
        _ => unreachable!("family validated"),
    }
}

/// Weight drawn independently, or derived from `p` for families 3, 4 and 6.
/// Family 9 depends on `d` and is filled in the second pass.
fn draw_weight(family: u8, p: f64, rng: &mut ChaCha8Rng) -> f64 {
    match family {
        1 => positive(rng, |r| normal(r, 50.0, 20.0)),
        2 => positive(rng, |r| uniform(r, 30.0, 80.0)),
        3 => round6(2.0 * p + 20.0),
        4 => round6(p * p + 10.0),
        5 => positive(rng, |r| uniform(r, 20.0, 80.0)),
        6 => round6(100.0 / (p + 1.0)).max(MIN_POSITIVE),
        7 => positive(rng, |r| uniform(r, 10.0, 60.0)),
        8 => positive(rng, |r| lognormal(r, 3.0, 1.0)),
        9 => 0.0,
        10 => positive(rng, |r| lognormal(r, 4.0, 2.0)),
        11..=15 => positive(rng, |r| uniform(r, 1.0, 100.0)),
        _ => unreachable!("family validated"),
    }
}

/// One draw of `(d, dd)` for a job.
fn draw_dates(family: u8, n: usize, total: f64, w: f64, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let d = match family {
        2 => normal(rng, 0.5 * total, 0.1 * total),
        5 => uniform(rng, 0.5 * total, 0.8 * total),
        10 => normal(rng, 0.5 * total, 100.0),
        11..=15 => {
            let (a, b) = due_window(family).expect("windowed family");
            uniform(rng, a * total, b * total)
        }
        _ => uniform(rng, 0.3 * total, 0.7 * total),
    };
    let d = round6(d);
    let dd = match family {
        2 => uniform(rng, d, 1.2 * total),
        5 => d + (n as f64 / 5.0) * w,
        10 => normal(rng, 2.0 * d, 200.0),
        _ => uniform(rng, d, 1.1 * total),
    };
    (d, round6(dd))
}

fn draw_instance(spec: &DatasetSpec, rng: &mut ChaCha8Rng) -> Vec<Job> {
    let family = spec.family;
    let mut jobs: Vec<Job> = (0..spec.n)
        .map(|id| {
            let (w, p) = match family {
                3 | 4 | 6 | 9 => {
                    let p = draw_duration(family, rng);
                    (draw_weight(family, p, rng), p)
                }
                _ => {
                    let w = draw_weight(family, 0.0, rng);
                    (w, draw_duration(family, rng))
                }
            };
            Job {
                id,
                weight: w,
                duration: p,
                due_date: 0.0,
                deadline: 0.0,
            }
        })
        .collect();

    let total: f64 = jobs.iter().map(|j| j.duration).sum();
    for job in &mut jobs {
        let mut attempt = 0;
        loop {
            let (d, dd) = draw_dates(family, spec.n, total, job.weight, rng);
            if family == 9 {
                job.weight = round6(1.5 * job.duration + 0.2 * d);
            }
            job.due_date = d;
            job.deadline = dd;
            let ok = job.duration <= d && d <= dd && job.weight > 0.0;
            attempt += 1;
            if ok || attempt >= JOB_RETRIES {
                break;
            }
        }
        job.due_date = job.due_date.max(job.duration);
        job.deadline = job.deadline.max(job.due_date);
        if job.weight <= 0.0 {
            job.weight = MIN_POSITIVE;
        }
    }
    jobs
}

/// Generates the instance described by `spec`. Deterministic in `spec`.
///
/// Instances that fail the EDF check are redrawn on a fresh stream of the
/// same seed, at most 50 times.
pub fn generate(spec: &DatasetSpec) -> Result<Instance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for attempt in 0..INSTANCE_RETRIES {
        rng.set_stream(attempt);
        rng.set_word_pos(0);
        let jobs = draw_instance(spec, &mut rng);
        let meta = InstanceMeta {
            family: spec.family,
            seed: spec.seed,
        };
        let instance = Instance::new(jobs, meta)?;
        if edf_feasible(&instance, &[], 0.0) {
            return Ok(instance);
        }
    }
    Err(Error::Generation {
        family: spec.family,
        seed: spec.seed,
        msg: format!("no deadline-feasible instance after {INSTANCE_RETRIES} attempts"),
    })
}

/// `count` instances with seeds `base_seed, base_seed + 1, ...`.
pub fn generate_batch(family: u8, n: usize, base_seed: u64, count: usize) -> Result<Vec<Instance>> {
    (0..count as u64)
        .map(|k| generate(&DatasetSpec::new(family, n, base_seed.wrapping_add(k))?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_family_satisfies_invariants() {
        for family in FAMILIES {
            for n in [1, 2, 5, 37, 200] {
                for seed in 0..4 {
                    let inst = generate(&DatasetSpec::new(family, n, seed).unwrap()).unwrap();
                    assert_eq!(inst.len(), n);
                    for j in inst.jobs() {
                        assert!(j.weight > 0.0 && j.duration > 0.0, "family {family}");
                        assert!(j.duration <= j.due_date && j.due_date <= j.deadline);
                        for v in [j.weight, j.duration, j.due_date, j.deadline] {
                            assert_eq!(v, round6(v));
                        }
                    }
                    assert!(edf_feasible(&inst, &[], 0.0));
                }
            }
        }
    }

    #[test]
    fn derived_formulas() {
        let inst = generate(&DatasetSpec::new(3, 30, 9).unwrap()).unwrap();
        for j in inst.jobs() {
            assert_eq!(j.weight, round6(2.0 * j.duration + 20.0));
        }
        let n = 50;
        let inst = generate(&DatasetSpec::new(5, n, 9).unwrap()).unwrap();
        for j in inst.jobs() {
            let expected = round6(j.due_date + (n as f64 / 5.0) * j.weight);
            // the due date may have been clamped up to p, which leaves dd >= d
            assert!(j.deadline == expected || j.deadline == j.due_date);
        }
        let inst = generate(&DatasetSpec::new(4, 20, 1).unwrap()).unwrap();
        for j in inst.jobs() {
            assert_eq!(j.weight, round6(j.duration * j.duration + 10.0));
        }
        let inst = generate(&DatasetSpec::new(9, 20, 1).unwrap()).unwrap();
        for j in inst.jobs() {
            assert_eq!(j.weight, round6(1.5 * j.duration + 0.2 * j.due_date));
        }
        // family 5 formula at d=100, w=20, n=50
        assert_eq!(100.0 + (50.0 / 5.0) * 20.0, 300.0);
        // family 3 formula at p=40
        assert_eq!(2.0 * 40.0 + 20.0, 100.0);
    }

    #[test]
    fn windowed_families() {
        assert_eq!(due_window(11), Some((0.1, 0.3)));
        assert_eq!(due_window(15), Some((0.5, 0.7)));
        assert_eq!(due_window(1), None);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let spec = DatasetSpec::new(8, 40, 77).unwrap();
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = DatasetSpec::new(8, 40, 78).unwrap();
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn family_one_moments() {
        let inst = generate(&DatasetSpec::new(1, 1000, 2024).unwrap()).unwrap();
        let n = inst.len() as f64;
        let mean_w = inst.jobs().iter().map(|j| j.weight).sum::<f64>() / n;
        let mean_p = inst.jobs().iter().map(|j| j.duration).sum::<f64>() / n;
        assert!((mean_w - 50.0).abs() <= 3.0, "mean w {mean_w}");
        assert!((mean_p - 50.5).abs() <= 5.0, "mean p {mean_p}");
    }

    #[test]
    fn invalid_specs() {
        assert!(DatasetSpec::new(0, 5, 1).is_err());
        assert!(DatasetSpec::new(16, 5, 1).is_err());
        assert!(DatasetSpec::new(1, 0, 1).is_err());
    }
}
