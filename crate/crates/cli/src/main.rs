//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 infeasible or invalid input,
//! 3 internal invariant violation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use tardy_core::bench::{
    aggregate_markdown, build_training_data, calibration_report, records_to_csv, run_experiment_with_progress,
    run_pipeline, ExperimentConfig, Method, PipelineConfig, DEFAULT_BIN_WIDTH,
};
use tardy_core::features::FeatureMode;
use tardy_core::formats::{
    read_instance, read_model, read_training_data, save_instance, save_model, write_training_data,
};
use tardy_core::generator::{generate, DatasetSpec};
use tardy_core::oracle::{train, TrainConfig};
use tardy_core::{Error, Result};

#[derive(Parser)]
#[command(name = "tardy", version, about = "Weighted early-job scheduling with hard deadlines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate seeded instances into a directory.
    Generate {
        #[arg(long)]
        family: u8,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve every instance in a directory exactly and write training rows.
    Label {
        #[arg(long = "in")]
        input: PathBuf,
        /// Seconds per instance; unsolved instances are skipped.
        #[arg(long, default_value_t = 300.0)]
        time_limit: f64,
        #[arg(long, default_value = "full")]
        features: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the classifier on a training-data file.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 256)]
        batch_size: usize,
        #[arg(long, default_value_t = 0.2)]
        validation: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Schedule one instance with the trained model.
    Schedule {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Jobs to refine exactly [default: min(n, 25)].
        #[arg(long)]
        gamma: Option<usize>,
        /// Seconds for the refinement solve.
        #[arg(long, default_value_t = 60.0)]
        beta: f64,
    },
    /// Compare methods on generated instances against exact optima.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "1")]
        families: Vec<u8>,
        #[arg(long, value_delimiter = ',', default_value = "50")]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "proposed,rule_based,ga,honey_badger")]
        methods: Vec<String>,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Seconds per instance for exact solves and metaheuristics.
        #[arg(long, default_value_t = 300.0)]
        timeout: f64,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long)]
        gamma: Option<usize>,
        #[arg(long, default_value_t = 60.0)]
        beta: f64,
        #[arg(long, default_value_t = 200)]
        ga_generations: usize,
        #[arg(long, default_value_t = 200)]
        hb_iterations: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Error rate of the model per score bin.
    Calibrate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
        bin_width: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn seconds(value: f64, name: &str) -> Result<Duration> {
    if value.is_finite() && value > 0.0 {
        Ok(Duration::from_secs_f64(value))
    } else {
        Err(Error::Parameter(format!("{name} must be a positive number of seconds")))
    }
}

fn instance_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Parameter(format!("no .txt instance files in {}", dir.display())));
    }
    Ok(files)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate {
            family,
            n,
            seed,
            count,
            out,
        } => {
            fs::create_dir_all(&out)?;
            for k in 0..count {
                let spec = DatasetSpec::new(family, n, seed.wrapping_add(k))?;
                let inst = generate(&spec)?;
                let path = out.join(format!("f{family:02}_n{n}_s{}.txt", spec.seed));
                save_instance(&path, &inst)?;
            }
            eprintln!("wrote {count} instances to {}", out.display());
        }
        Command::Label {
            input,
            time_limit,
            features,
            out,
        } => {
            let mode: FeatureMode = features.parse()?;
            let limit = seconds(time_limit, "time limit")?;
            let instances = instance_files(&input)?
                .iter()
                .map(|p| read_instance(p))
                .collect::<Result<Vec<_>>>()?;
            let summary = build_training_data(&instances, mode, limit)?;
            fs::write(&out, write_training_data(mode, &summary.data)?)?;
            eprintln!(
                "labeled {} instances ({} rows); skipped {} timeouts, {} infeasible",
                summary.labeled,
                summary.data.len(),
                summary.timeouts,
                summary.infeasible
            );
        }
        Command::Train {
            data,
            seed,
            epochs,
            lr,
            batch_size,
            validation,
            out,
        } => {
            let (mode, dataset) = read_training_data(&data)?;
            let config = TrainConfig {
                learning_rate: lr,
                batch_size,
                epochs,
                seed,
                validation_fraction: validation,
            };
            let (model, report) = train(&dataset, mode, &config)?;
            println!("epoch,train_loss,train_accuracy,validation_loss,validation_accuracy");
            for e in &report.epochs {
                println!(
                    "{},{:.6},{:.6},{:.6},{:.6}",
                    e.epoch + 1,
                    e.train_loss,
                    e.train_accuracy,
                    e.validation_loss,
                    e.validation_accuracy
                );
            }
            save_model(&out, &model)?;
            eprintln!(
                "validation accuracy {:.4} on {} rows; model written to {}",
                report.validation_accuracy,
                report.validation_rows,
                out.display()
            );
        }
        Command::Schedule {
            instance,
            model,
            alpha,
            gamma,
            beta,
        } => {
            let inst = read_instance(&instance)?;
            let model = read_model(&model)?;
            let config = PipelineConfig {
                alpha,
                gamma,
                beta: seconds(beta, "beta")?,
                ..PipelineConfig::default()
            };
            let result = run_pipeline(&inst, &model, &config)?;
            let s = &result.schedule;
            let join = |ids: &[usize]| ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
            println!("objective {}", s.weighted_early());
            println!("order {}", join(s.order()));
            println!("early {}", join(&s.early_set(&inst)));
            println!("tardy {}", join(&s.tardy_set(&inst)));
            println!(
                "refine {}",
                result.refine_status.map_or("skipped".to_string(), |st| format!("{st:?}").to_lowercase())
            );
            println!("seconds {:.6}", result.timings.total());
        }
        Command::Bench {
            families,
            sizes,
            methods,
            count,
            seed,
            timeout,
            model,
            alpha,
            gamma,
            beta,
            ga_generations,
            hb_iterations,
            out,
        } => {
            let methods = methods.iter().map(|m| m.parse()).collect::<Result<Vec<Method>>>()?;
            let model = model.map(|p| read_model(&p)).transpose()?;
            let mut config = ExperimentConfig {
                families,
                sizes,
                methods,
                count,
                seed,
                pipeline: PipelineConfig {
                    alpha,
                    gamma,
                    beta: seconds(beta, "beta")?,
                    timeout: seconds(timeout, "timeout")?,
                },
                ..ExperimentConfig::default()
            };
            config.ga.generations = ga_generations;
            config.honey_badger.iterations = hb_iterations;
            fs::create_dir_all(&out)?;
            let total = config.families.len() * config.sizes.len() * config.count;
            let mut done = 0;
            let records = run_experiment_with_progress(&config, model.as_ref(), |_| {
                done += 1;
                if done % 10 == 0 || done == total {
                    eprintln!("{done}/{total} instances");
                }
            })?;
            fs::write(out.join("records.csv"), records_to_csv(&records)?)?;
            let summary = aggregate_markdown(&records);
            fs::write(out.join("summary.md"), &summary)?;
            print!("{summary}");
        }
        Command::Calibrate {
            model,
            data,
            bin_width,
            out,
        } => {
            let model = read_model(&model)?;
            let (mode, dataset) = read_training_data(&data)?;
            if mode != model.feature_mode() {
                return Err(Error::Validation(format!(
                    "data has {mode} features, model expects {}",
                    model.feature_mode()
                )));
            }
            let report = calibration_report(&model, &dataset, bin_width)?;
            fs::write(&out, report.to_csv())?;
            let (centre, tails) = report.centre_and_tails();
            let show = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
            eprintln!("error rate near 0.5: {}, at the extremes: {}", show(centre), show(tails));
        }
    }
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parameter(_) | Error::Io(_) => 1,
        Error::Infeasible
        | Error::Validation(_)
        | Error::Parse { .. }
        | Error::Generation { .. }
        | Error::Training(_) => 2,
        Error::Internal(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
