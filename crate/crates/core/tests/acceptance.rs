//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tardy_core::baselines::{ga, honey_badger, rule_based, GaParams, HoneyBadgerParams};
use tardy_core::bench::{
    bench_instance, calibration_report, run_pipeline, ExperimentConfig, Method, PipelineConfig, Reference,
    DEFAULT_BIN_WIDTH,
};
use tardy_core::exact::{brute_force, dominance_pairs, solve_exact, solve_with, SolveOptions, SolveStatus};
use tardy_core::features::{featurize, FeatureMode};
use tardy_core::formats::write_instance;
use tardy_core::fsum::exact_sum;
use tardy_core::generator::{generate, DatasetSpec};
use tardy_core::oracle::{predict_scores, train, Dataset, MlpModel, TrainConfig};
use tardy_core::refine::reduce_instance;
use tardy_core::scheduler::schedule_from_labels_traced;
use tardy_core::{Instance, Label, LabelVector};

// Pinned thresholds.
const C1_PAIRS: usize = 10_000;
const C1_MAX_SECS: f64 = 120.0;
const C2_INSTANCES: usize = 500;
const C2_MAX_N: usize = 14;
const C2_MAX_SECS: f64 = 300.0;
const C3_INSTANCES: usize = 300;
const C3_MAX_N: usize = 12;
const C3_MAX_SECS: f64 = 300.0;
const TRAINED_FAMILIES: [u8; 6] = [1, 11, 12, 13, 14, 15];
const C5_SIZES: [usize; 2] = [50, 100];
const C5_PER_CELL: usize = 700;
const C5_MIN_ROWS: usize = 200_000;
const C5_MIN_ACCURACY: f64 = 0.93;
const C5_MAX_SECS: f64 = 1800.0;
const LABEL_TIME_LIMIT: Duration = Duration::from_secs(60);
const C6_PER_FAMILY: usize = 100;
const C6_N: usize = 100;
const C6_GAMMA: usize = 25;
const C6_SEED_BASE: u64 = 1_000_000;
const C6_MAX_MEAN_GAP: f64 = 1.0;
const C6_MIN_OPTIMAL: f64 = 0.60;
const C6_MAX_SECS: f64 = 900.0;
const C9_INSTANCES: usize = 400;
const C9_MARGIN: f64 = 0.05;
const C10_N: usize = 5000;
const C10_MAX_SECS: f64 = 60.0;
const C10_MAX_MS_PER_JOB: f64 = 0.1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn instance(family: u8, n: usize, seed: u64) -> Instance {
    generate(&DatasetSpec::new(family, n, seed).expect("valid spec")).expect("generation succeeds")
}

/// Independent feasibility check by prefix sums.
fn meets_deadlines(inst: &Instance, order: &[usize]) -> bool {
    let mut seen = vec![false; inst.len()];
    let mut clock = 0.0;
    for &id in order {
        if id >= inst.len() || seen[id] {
            return false;
        }
        seen[id] = true;
        clock += inst.job(id).duration;
        if clock > inst.job(id).deadline {
            return false;
        }
    }
    seen.iter().all(|&s| s)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = 0;
    let mut step_violations = 0;
    for i in 0..C1_PAIRS {
        let family = 1 + (i % 15) as u8;
        let n = rng.random_range(5..=200);
        let inst = instance(family, n, i as u64);
        let p_early: f64 = rng.random();
        let labels: LabelVector = (0..n)
            .map(|_| if rng.random_bool(p_early) { Label::Early } else { Label::Tardy })
            .collect();
        match schedule_from_labels_traced(&inst, &labels) {
            Ok((s, trace)) => {
                if !meets_deadlines(&inst, s.order()) {
                    failures += 1;
                }
                if trace.steps > 2 * n {
                    step_violations += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && step_violations == 0 && secs < C1_MAX_SECS,
        format!("{C1_PAIRS} pairs, {failures} infeasible, {step_violations} over 2n steps, {secs:.1}s"),
    )
}

fn small_instances() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    (0..C2_INSTANCES)
        .map(|i| instance(1 + (i % 15) as u8, rng.random_range(2..=C2_MAX_N), 20_000 + i as u64))
        .collect()
}

fn criterion_2(instances: &[Instance]) -> Outcome {
    let start = Instant::now();
    let mut mismatches = 0;
    for inst in instances {
        let exact = solve_exact(inst, Duration::from_secs(60)).expect("solve");
        let brute = brute_force(inst).expect("brute force");
        let labels_ok = exact
            .labels
            .as_ref()
            .is_some_and(|l| tardy_core::labels_feasible(inst, l).unwrap() && l.early_weight(inst) == exact.objective);
        if exact.status != SolveStatus::Optimal || exact.objective != brute.objective || !labels_ok {
            mismatches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && secs < C2_MAX_SECS,
        format!("{} instances (n <= {C2_MAX_N}), {mismatches} mismatches, {secs:.1}s", instances.len()),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut checks, mut failures) = (0, 0);
    for i in 0..C3_INSTANCES {
        let inst = instance(1 + (i % 15) as u8, rng.random_range(3..=C3_MAX_N), 30_000 + i as u64);
        let best = brute_force(&inst).expect("brute force");
        let labels = best.labels.expect("generated instances are feasible");
        let early = (0..inst.len()).find(|&j| labels.is_early(j));
        let tardy = (0..inst.len()).find(|&j| !labels.is_early(j));
        for j in [early, tardy].into_iter().flatten() {
            checks += 1;
            let key = inst.job(j).key(labels.get(j));
            let reduced = reduce_instance(&inst, j, key).expect("reduce");
            let sub = brute_force(&reduced).expect("brute force");
            let ok = sub.labels.is_some_and(|sl| {
                // map reduced ids back and add the removed job's contribution
                let mut weights: Vec<f64> = (0..reduced.len())
                    .filter(|&k| sl.is_early(k))
                    .map(|k| reduced.job(k).weight)
                    .collect();
                if labels.is_early(j) {
                    weights.push(inst.job(j).weight);
                }
                exact_sum(weights) == best.objective
            });
            if !ok {
                failures += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && secs < C3_MAX_SECS,
        format!("{checks} removals on {C3_INSTANCES} instances, {failures} mismatches, {secs:.1}s"),
    )
}

fn criterion_4(instances: &[Instance]) -> Outcome {
    let mut differences = 0;
    let mut violations = 0;
    for inst in instances {
        let on = solve_with(
            inst,
            &SolveOptions {
                audit_dominance: true,
                ..SolveOptions::default()
            },
        )
        .expect("solve");
        let off = solve_with(
            inst,
            &SolveOptions {
                dominance: false,
                ..SolveOptions::default()
            },
        )
        .expect("solve");
        if on.objective != off.objective || on.status != SolveStatus::Optimal {
            differences += 1;
        }
        violations += on.dominance_violations;
        let labels = on.labels.expect("optimal");
        for (i, j) in dominance_pairs(inst) {
            if labels.is_early(i) && !labels.is_early(j) {
                violations += 1;
            }
        }
    }
    outcome(
        differences == 0 && violations == 0,
        format!(
            "{} instances, {differences} objective differences, {violations} dominance violations",
            instances.len()
        ),
    )
}

/// Exact labels of the given instances, plus their feature rows per mode.
fn labeled(instances: &[Instance], modes: &[FeatureMode]) -> (Vec<Dataset>, usize) {
    let mut sets = vec![Dataset::default(); modes.len()];
    let mut skipped = 0;
    for inst in instances {
        let r = solve_exact(inst, LABEL_TIME_LIMIT).expect("solve");
        let Some(labels) = r.labels.filter(|_| r.status == SolveStatus::Optimal) else {
            skipped += 1;
            continue;
        };
        for (set, &mode) in sets.iter_mut().zip(modes) {
            let rows = Dataset::from_instance(&featurize(inst, mode), &labels).expect("rows");
            set.append(&rows).expect("same width");
        }
    }
    (sets, skipped)
}

fn criterion_5() -> (Outcome, MlpModel, Dataset) {
    let start = Instant::now();
    let mut instances = Vec::new();
    for &family in &TRAINED_FAMILIES {
        for &n in &C5_SIZES {
            for k in 0..C5_PER_CELL {
                instances.push(instance(family, n, k as u64));
            }
        }
    }
    let (mut sets, skipped) = labeled(&instances, &[FeatureMode::Full]);
    let data = sets.remove(0);
    let label_secs = start.elapsed().as_secs_f64();
    let config = TrainConfig::default();
    let (model, report) = train(&data, FeatureMode::Full, &config).expect("training");
    let secs = start.elapsed().as_secs_f64();
    let (_, validation) = data.split(config.validation_fraction, config.seed);
    let pass = data.len() >= C5_MIN_ROWS && report.validation_accuracy >= C5_MIN_ACCURACY && secs <= C5_MAX_SECS;
    (
        outcome(
            pass,
            format!(
                "{} rows ({skipped} instances unlabeled), validation accuracy {:.4}, labels {label_secs:.0}s, total {secs:.0}s",
                data.len(),
                report.validation_accuracy
            ),
        ),
        model,
        validation,
    )
}

struct FamilyStats {
    family: u8,
    mean_gap: [f64; 4],
    optimal_share: f64,
    proven: usize,
}

fn criteria_6_and_7(model: &MlpModel) -> (Outcome, Outcome) {
    let start = Instant::now();
    let config = ExperimentConfig {
        methods: Method::ALL.to_vec(),
        pipeline: PipelineConfig {
            gamma: Some(C6_GAMMA),
            ..PipelineConfig::default()
        },
        ..ExperimentConfig::default()
    };
    let mut stats = Vec::new();
    for &family in &TRAINED_FAMILIES {
        let mut gaps = [0.0; 4];
        let mut optimal = 0;
        let mut proven = 0;
        for k in 0..C6_PER_FAMILY {
            let inst = instance(family, C6_N, C6_SEED_BASE + k as u64);
            let records = bench_instance(&inst, &config, Some(model)).expect("bench");
            for r in records {
                if r.reference != Reference::Optimal {
                    continue;
                }
                let m = Method::ALL.iter().position(|&m| m == r.method).unwrap();
                gaps[m] += r.gap.unwrap();
                if m == 0 {
                    proven += 1;
                    optimal += r.optimal as usize;
                }
            }
        }
        stats.push(FamilyStats {
            family,
            mean_gap: gaps.map(|g| g / proven.max(1) as f64),
            optimal_share: optimal as f64 / proven.max(1) as f64,
            proven,
        });
    }
    let secs = start.elapsed().as_secs_f64();

    // judged over the whole instance set; the per-family split is reported
    let proven: usize = stats.iter().map(|s| s.proven).sum();
    let pooled = |f: &dyn Fn(&FamilyStats) -> f64| {
        stats.iter().map(|s| f(s) * s.proven as f64).sum::<f64>() / proven.max(1) as f64
    };
    let mean_gap = pooled(&|s| s.mean_gap[0]);
    let optimal_share = pooled(&|s| s.optimal_share);
    let quality = proven > 0 && mean_gap <= C6_MAX_MEAN_GAP && optimal_share >= C6_MIN_OPTIMAL;
    let detail6 = stats
        .iter()
        .map(|s| format!("f{}: gap {:.3}% opt {:.0}%", s.family, s.mean_gap[0], s.optimal_share * 100.0))
        .collect::<Vec<_>>()
        .join(", ");
    let detail6 = format!(
        "{proven} proven instances, mean gap {mean_gap:.3}%, optimal {:.1}% ({detail6})",
        optimal_share * 100.0
    );
    let ordering = stats.iter().all(|s| (1..4).all(|m| s.mean_gap[0] < s.mean_gap[m]));
    let detail7 = stats
        .iter()
        .map(|s| {
            format!(
                "f{}: {:.3} / {:.2} / {:.2} / {:.2}",
                s.family, s.mean_gap[0], s.mean_gap[1], s.mean_gap[2], s.mean_gap[3]
            )
        })
        .collect::<Vec<_>>()
        .join(", ");
    (
        outcome(quality && secs <= C6_MAX_SECS, format!("{detail6}; {secs:.0}s")),
        outcome(ordering, format!("mean gap proposed / rule_based / ga / honey_badger: {detail7}")),
    )
}

fn criterion_8(model: &MlpModel, validation: &Dataset) -> Outcome {
    let report = calibration_report(model, validation, DEFAULT_BIN_WIDTH).expect("calibration");
    let (centre, tails) = report.centre_and_tails();
    let pass = matches!((centre, tails), (Some(c), Some(t)) if c > t);
    outcome(
        pass,
        format!("error rate in [0.45, 0.55] {centre:?} vs extremes {tails:?}"),
    )
}

fn criterion_9() -> Outcome {
    let modes = [FeatureMode::Full, FeatureMode::Aggregated, FeatureMode::Minimal];
    let instances: Vec<Instance> = (0..C9_INSTANCES).map(|k| instance(1, 100, 50_000 + k as u64)).collect();
    let (sets, _) = labeled(&instances, &modes);
    let acc: Vec<f64> = sets
        .iter()
        .zip(modes)
        .map(|(data, mode)| train(data, mode, &TrainConfig::default()).expect("training").1.validation_accuracy)
        .collect();
    let pass = acc[0] >= acc[1] && acc[1] >= acc[2] && acc[0] >= acc[2] + C9_MARGIN;
    outcome(
        pass,
        format!("full {:.4}, aggregated {:.4}, minimal {:.4}", acc[0], acc[1], acc[2]),
    )
}

fn criterion_10(model: &MlpModel) -> Outcome {
    let inst = instance(1, C10_N, 7);
    let start = Instant::now();
    let run = run_pipeline(&inst, model, &PipelineConfig::default());
    let secs = start.elapsed().as_secs_f64();
    let feasible = run.as_ref().is_ok_and(|r| meets_deadlines(&inst, r.schedule.order()));

    let features = featurize(&inst, FeatureMode::Full);
    let reps = 10;
    let t = Instant::now();
    for _ in 0..reps {
        predict_scores(model, &features).expect("scores");
    }
    let ms_per_job = t.elapsed().as_secs_f64() * 1000.0 / (reps * C10_N) as f64;
    outcome(
        feasible && secs <= C10_MAX_SECS && ms_per_job <= C10_MAX_MS_PER_JOB,
        format!("n={C10_N}: pipeline {secs:.2}s, inference {ms_per_job:.5} ms/job"),
    )
}

fn criterion_11() -> Outcome {
    let mut same = true;
    for family in 1..=15u8 {
        let a = write_instance(&instance(family, 60, 11));
        let b = write_instance(&instance(family, 60, 11));
        same &= a == b;
    }
    let instances: Vec<Instance> = (0..20).map(|k| instance(11, 50, 70_000 + k)).collect();
    let (sets, _) = labeled(&instances, &[FeatureMode::Full]);
    let config = TrainConfig {
        epochs: 3,
        seed: 9,
        ..TrainConfig::default()
    };
    let m1 = train(&sets[0], FeatureMode::Full, &config).unwrap().0.to_json().unwrap();
    let m2 = train(&sets[0], FeatureMode::Full, &config).unwrap().0.to_json().unwrap();
    same &= m1 == m2;
    let budget = Duration::from_secs(600);
    for inst in instances.iter().take(5) {
        same &= rule_based(inst, 3).unwrap() == rule_based(inst, 3).unwrap();
        let g = GaParams::default();
        same &= ga(inst, &g, budget, 3).unwrap() == ga(inst, &g, budget, 3).unwrap();
        let h = HoneyBadgerParams::default();
        same &= honey_badger(inst, &h, budget, 3).unwrap() == honey_badger(inst, &h, budget, 3).unwrap();
    }
    outcome(same, "generate, train, rule_based, ga, honey_badger repeated with fixed seeds".into())
}

fn report(number: usize, name: &str, result: &Outcome, failed: &mut usize) {
    let verdict = if result.pass { "PASS" } else { "FAIL" };
    if !result.pass {
        *failed += 1;
    }
    println!("criterion {number:>2} {verdict} {name}: {}", result.detail);
}

fn main() -> ExitCode {
    let mut failed = 0;
    report(1, "feasibility", &criterion_1(), &mut failed);
    let small = small_instances();
    report(2, "exact vs brute force", &criterion_2(&small), &mut failed);
    report(3, "reduction", &criterion_3(), &mut failed);
    report(4, "dominance", &criterion_4(&small), &mut failed);
    let (c5, model, validation) = criterion_5();
    report(5, "validation accuracy", &c5, &mut failed);
    let (c6, c7) = criteria_6_and_7(&model);
    report(6, "pipeline quality", &c6, &mut failed);
    report(7, "method ordering", &c7, &mut failed);
    report(8, "calibration shape", &criterion_8(&model, &validation), &mut failed);
    report(9, "feature ablation", &criterion_9(), &mut failed);
    report(10, "performance", &criterion_10(&model), &mut failed);
    report(11, "determinism", &criterion_11(), &mut failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
