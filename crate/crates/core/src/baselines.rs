//! Comparison heuristics. Every candidate is turned into labels and sent
//! through [`schedule_from_labels`], so all returned schedules are feasible.
//!
//! The metaheuristics run for a fixed number of epochs so that results depend
//! only on the seed; the time budget is an additional cap.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::{completion_times, Instance, Label, LabelVector, Schedule};
use crate::scheduler::{edf_feasible, schedule_from_labels};

/// Progress of a metaheuristic run.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchTrace {
    /// Completed epochs (generations or iterations).
    pub epochs: usize,
    /// Incumbent objective after initialisation and after each epoch.
    pub best_by_epoch: Vec<f64>,
    pub elapsed: Duration,
    /// Whether the time budget stopped the run before the epoch limit.
    pub hit_time_budget: bool,
}

impl SearchTrace {
    pub fn seconds_per_epoch(&self) -> Option<f64> {
        (self.epochs > 0).then(|| self.elapsed.as_secs_f64() / self.epochs as f64)
    }
}

fn ensure_feasible(instance: &Instance) -> Result<()> {
    if edf_feasible(instance, &[], 0.0) {
        Ok(())
    } else {
        Err(Error::Infeasible)
    }
}

fn check_budget(budget: Duration) -> Result<()> {
    if budget.is_zero() {
        Err(Error::Parameter("time budget must be positive".into()))
    } else {
        Ok(())
    }
}

/// Best of a seeded coin-flip labelling, all-early and all-tardy. Ties go to
/// the earlier candidate in that order.
pub fn rule_based(instance: &Instance, seed: u64) -> Result<Schedule> {
    ensure_feasible(instance)?;
    let n = instance.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random: LabelVector = (0..n)
        .map(|_| if rng.random_bool(0.5) { Label::Early } else { Label::Tardy })
        .collect();
    let mut best: Option<Schedule> = None;
    for labels in [random, LabelVector::all(n, Label::Early), LabelVector::all(n, Label::Tardy)] {
        let s = schedule_from_labels(instance, &labels)?;
        if best.as_ref().is_none_or(|b| s.weighted_early() > b.weighted_early()) {
            best = Some(s);
        }
    }
    Ok(best.expect("three candidates"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaParams {
    pub population: usize,
    pub crossover_rate: f64,
    /// Per-position probability of a swap with a random position.
    pub mutation_rate: f64,
    pub elitism: usize,
    pub generations: usize,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population: 50,
            crossover_rate: 0.9,
            mutation_rate: 0.02,
            elitism: 2,
            generations: 200,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::Parameter("population must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) || !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::Parameter("rates must lie in [0, 1]".into()));
        }
        if self.elitism > self.population {
            return Err(Error::Parameter("elitism exceeds population".into()));
        }
        Ok(())
    }
}

/// Labels a permutation by its own completion times, then repairs it.
fn decode_permutation(instance: &Instance, order: &[usize]) -> Result<Schedule> {
    let c = completion_times(instance, order)?;
    let labels: LabelVector = instance
        .jobs()
        .iter()
        .map(|j| {
            // a deadline miss implies a due-date miss, so such jobs are tardy too
            if c[j.id] <= j.due_date {
                Label::Early
            } else {
                Label::Tardy
            }
        })
        .collect();
    schedule_from_labels(instance, &labels)
}

/// Index of the best objective; ties by lowest index.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn order_crossover(a: &[usize], b: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = a.len();
    let mut lo = rng.random_range(0..n);
    let mut hi = rng.random_range(0..n);
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut child = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for k in lo..=hi {
        child[k] = a[k];
        taken[a[k]] = true;
    }
    let mut fill = (hi + 1) % n;
    for k in 0..n {
        let gene = b[(hi + 1 + k) % n];
        if !taken[gene] {
            child[fill] = gene;
            taken[gene] = true;
            fill = (fill + 1) % n;
        }
    }
    child
}

fn tournament(fitness: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let a = rng.random_range(0..fitness.len());
    let b = rng.random_range(0..fitness.len());
    if fitness[b] > fitness[a] || (fitness[b] == fitness[a] && b < a) {
        b
    } else {
        a
    }
}

/// Permutation-encoded genetic algorithm with order crossover, swap mutation,
/// binary tournament selection and elitism.
pub fn ga(instance: &Instance, params: &GaParams, budget: Duration, seed: u64) -> Result<Schedule> {
    ga_traced(instance, params, budget, seed).map(|(s, _)| s)
}

pub fn ga_traced(
    instance: &Instance,
    params: &GaParams,
    budget: Duration,
    seed: u64,
) -> Result<(Schedule, SearchTrace)> {
    params.validate()?;
    check_budget(budget)?;
    ensure_feasible(instance)?;
    let start = Instant::now();
    let n = instance.len();
    if n == 1 {
        let s = schedule_from_labels(instance, &LabelVector::all(1, Label::Early))?;
        let trace = SearchTrace {
            epochs: 0,
            best_by_epoch: vec![s.weighted_early()],
            elapsed: start.elapsed(),
            hit_time_budget: false,
        };
        return Ok((s, trace));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut population: Vec<Vec<usize>> = (0..params.population)
        .map(|_| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect();
    let mut schedules = population
        .iter()
        .map(|p| decode_permutation(instance, p))
        .collect::<Result<Vec<_>>>()?;
    let mut fitness: Vec<f64> = schedules.iter().map(|s| s.weighted_early()).collect();
    let mut best = schedules[argmax(&fitness)].clone();
    let mut trace = SearchTrace {
        epochs: 0,
        best_by_epoch: vec![best.weighted_early()],
        elapsed: Duration::ZERO,
        hit_time_budget: false,
    };

    for _ in 0..params.generations {
        if start.elapsed() >= budget {
            trace.hit_time_budget = true;
            break;
        }
        let mut ranked: Vec<usize> = (0..population.len()).collect();
        ranked.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));
        let mut next: Vec<Vec<usize>> = ranked[..params.elitism]
            .iter()
            .map(|&i| population[i].clone())
            .collect();
        while next.len() < params.population {
            let a = tournament(&fitness, &mut rng);
            let b = tournament(&fitness, &mut rng);
            let mut child = if rng.random_bool(params.crossover_rate) {
                order_crossover(&population[a], &population[b], &mut rng)
            } else {
                population[a].clone()
            };
            for k in 0..n {
                if rng.random_bool(params.mutation_rate) {
                    let other = rng.random_range(0..n);
                    child.swap(k, other);
                }
            }
            next.push(child);
        }
        population = next;
        schedules = population
            .iter()
            .map(|p| decode_permutation(instance, p))
            .collect::<Result<Vec<_>>>()?;
        fitness = schedules.iter().map(|s| s.weighted_early()).collect();
        let i = argmax(&fitness);
        if fitness[i] > best.weighted_early() {
            best = schedules[i].clone();
        }
        trace.epochs += 1;
        trace.best_by_epoch.push(best.weighted_early());
    }
    trace.elapsed = start.elapsed();
    Ok((best, trace))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoneyBadgerParams {
    pub population: usize,
    pub iterations: usize,
    /// Ability of a badger to get food.
    pub beta: f64,
    /// Scale of the decreasing density factor.
    pub c: f64,
}

impl Default for HoneyBadgerParams {
    fn default() -> Self {
        Self {
            population: 30,
            iterations: 200,
            beta: 6.0,
            c: 2.0,
        }
    }
}

impl HoneyBadgerParams {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::Parameter("population must be at least 2".into()));
        }
        if !(self.beta.is_finite() && self.c.is_finite()) {
            return Err(Error::Parameter("beta and C must be finite".into()));
        }
        Ok(())
    }
}

/// Rounds each coordinate at 0.5: values at or above it mean early.
pub fn round_position(x: &[f64]) -> LabelVector {
    x.iter()
        .map(|&v| if v >= 0.5 { Label::Early } else { Label::Tardy })
        .collect()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y + f64::EPSILON;
            d * d
        })
        .sum()
}

/// Honey Badger search over `[0, 1]^n`, maximising the scheduled objective
/// of the rounded position.
pub fn honey_badger(
    instance: &Instance,
    params: &HoneyBadgerParams,
    budget: Duration,
    seed: u64,
) -> Result<Schedule> {
    honey_badger_traced(instance, params, budget, seed).map(|(s, _)| s)
}

pub fn honey_badger_traced(
    instance: &Instance,
    params: &HoneyBadgerParams,
    budget: Duration,
    seed: u64,
) -> Result<(Schedule, SearchTrace)> {
    params.validate()?;
    check_budget(budget)?;
    ensure_feasible(instance)?;
    let start = Instant::now();
    let n = instance.len();
    let size = params.population;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let evaluate = |x: &[f64]| schedule_from_labels(instance, &round_position(x));

    let mut x: Vec<Vec<f64>> = (0..size)
        .map(|_| (0..n).map(|_| rng.random::<f64>()).collect())
        .collect();
    let mut schedules = x.iter().map(|xi| evaluate(xi)).collect::<Result<Vec<_>>>()?;
    let mut fitness: Vec<f64> = schedules.iter().map(|s| s.weighted_early()).collect();
    let first = argmax(&fitness);
    let mut prey = x[first].clone();
    let mut best = schedules[first].clone();
    let mut trace = SearchTrace {
        epochs: 0,
        best_by_epoch: vec![best.weighted_early()],
        elapsed: Duration::ZERO,
        hit_time_budget: false,
    };

    let total = params.iterations as f64;
    let mut candidate = vec![0.0; n];
    for t in 1..=params.iterations {
        if start.elapsed() >= budget {
            trace.hit_time_budget = true;
            break;
        }
        let alpha = params.c * (-(t as f64) / total).exp();
        // smell intensity of the prey as perceived by each badger
        let intensity: Vec<f64> = (0..size)
            .map(|i| {
                let source = squared_distance(&x[i], &x[(i + 1) % size]);
                let dist = squared_distance(&x[i], &prey);
                let r2: f64 = rng.random();
                r2 * source / (4.0 * PI * dist)
            })
            .collect();
        for i in 0..size {
            let r: f64 = rng.random();
            let flag = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            for j in 0..n {
                let di = prey[j] - x[i][j];
                let v = if r < 0.5 {
                    // digging phase
                    let (r3, r4, r5): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
                    prey[j]
                        + flag * params.beta * intensity[i] * prey[j]
                        + flag * r3 * alpha * di * ((2.0 * PI * r4).cos() * (1.0 - (2.0 * PI * r5).cos())).abs()
                } else {
                    // honey phase
                    let r7: f64 = rng.random();
                    prey[j] + flag * r7 * alpha * di
                };
                candidate[j] = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
            }
            let s = evaluate(&candidate)?;
            if s.weighted_early() > fitness[i] {
                fitness[i] = s.weighted_early();
                x[i].copy_from_slice(&candidate);
                schedules[i] = s;
            }
        }
        let i = argmax(&fitness);
        if fitness[i] > best.weighted_early() {
            prey = x[i].clone();
            best = schedules[i].clone();
        }
        trace.epochs += 1;
        trace.best_by_epoch.push(best.weighted_early());
    }
    trace.elapsed = start.elapsed();
    Ok((best, trace))
}
