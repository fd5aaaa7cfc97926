use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use relulab::bound::{bound_curve, BoundSettings};
use relulab::config::ExperimentConfig;
use relulab::error::CliError;
use relulab::fit::fit_lambda;
use relulab::oracle::validate_oracle;
use relulab::suite::{run_lemma_suite, SuiteCounts, SuiteHooks};
use relulab::sweep::run_sweep;
use relulab_core::bayes::{McmcSettings, TemperatureLadder};
use relulab_core::embedding::{build_optimal_params, lambda_relu, max_b_block_output, verify_realization, SupportMode};
use relulab_core::{seeded_rng, Activation, Architecture};

#[derive(Parser)]
#[command(name = "relulab", about = "Free-energy experiments for deep ReLU networks", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_support)]
    support_mode: Option<SupportMode>,
    #[arg(long, global = true, value_parser = parse_activation)]
    output_activation: Option<Activation>,
}

#[derive(Subcommand)]
enum Command {
    /// Print lambda_ReLU for an architecture pair.
    Lambda {
        /// True widths, e.g. 1,2,1 (ignored with --config).
        #[arg(long, value_delimiter = ',')]
        true_widths: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        model_widths: Vec<usize>,
    },
    /// Build optimal parameters and check that they reproduce the truth.
    EmbedCheck {
        #[arg(long, default_value_t = 1000)]
        inputs: usize,
    },
    /// Run the sample-size sweep and fit the slope.
    Sweep,
    /// Run the property suite.
    Lemmas {
        /// Scale every trial count to this value instead of the defaults.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Validate thermodynamic integration against exact references.
    Oracle {
        #[arg(long, default_value_t = 50)]
        n: usize,
        /// Ladder intervals.
        #[arg(long, default_value_t = 32)]
        rungs: usize,
    },
    /// Evaluate the prior-mass bound curve.
    Bound {
        #[arg(long, value_delimiter = ',', default_values_t = vec![100u64, 1_000, 10_000])]
        ns: Vec<u64>,
        #[arg(long, default_value_t = 200)]
        region_samples: usize,
        #[arg(long, default_value_t = 2_000)]
        inputs: usize,
    },
}

fn parse_support(s: &str) -> Result<SupportMode, String> {
    s.parse().map_err(|e: relulab_core::LabError| e.to_string())
}

fn parse_activation(s: &str) -> Result<Activation, String> {
    s.parse().map_err(|e: relulab_core::LabError| e.to_string())
}

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| CliError::Validation("--config is required for this command".into()))?;
    ExperimentConfig::load(path)?.with_overrides(
        common.seed,
        common.support_mode,
        common.output_activation,
        common.out.clone(),
    )
}

fn out_dir(cfg_dir: Option<&Path>) -> Result<Option<PathBuf>, CliError> {
    match cfg_dir {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            Ok(Some(d.to_path_buf()))
        }
        None => Ok(None),
    }
}

fn write_json<T: serde::Serialize>(dir: Option<&Path>, name: &str, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)?;
    match dir {
        Some(d) => std::fs::write(d.join(name), text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = &cli.common;
    match cli.command {
        Command::Lambda {
            true_widths,
            model_widths,
        } => {
            let act = common.output_activation.unwrap_or_default();
            let (at, am, support) = if common.config.is_some() {
                let c = load(common)?;
                (c.true_model.arch().clone(), c.model_arch.clone(), c.support_mode())
            } else {
                (
                    Architecture::new(true_widths, act)?,
                    Architecture::new(model_widths, act)?,
                    common.support_mode.unwrap_or(SupportMode::General),
                )
            };
            println!("{}", lambda_relu(&at, &am, support)?);
        }
        Command::EmbedCheck { inputs } => {
            let c = load(common)?;
            let mut rng = seeded_rng(c.seed);
            let p = build_optimal_params(&c.true_model, &c.model_arch, &mut rng)?;
            let dev = verify_realization(&c.true_model, &c.model_arch, &p, inputs, &mut rng)?;
            let b = max_b_block_output(&c.true_model, &c.model_arch, &p, 2, inputs, &mut rng)?;
            println!("max output deviation {dev:e}, max B-unit output {b:e}");
            if dev > relulab::suite::REALIZATION_TOL || b != 0.0 {
                return Err(CliError::Property(format!("optimal parameters deviate by {dev:e}")));
            }
        }
        Command::Sweep => {
            let c = load(common)?;
            let dir = out_dir(c.output_dir.as_deref())?;
            let rows = match &dir {
                Some(d) => run_sweep(&c, BufWriter::new(File::create(d.join("sweep.csv"))?))?,
                None => run_sweep(&c, std::io::stdout())?,
            };
            let fit = fit_lambda(&rows, c.lambda_bound()?)?;
            write_json(
                dir.as_deref(),
                "sweep_report.json",
                &serde_json::json!({ "rows": rows, "fit": fit }),
            )?;
            eprintln!(
                "lambda_hat {:.4} vs bound {} + margin {:.4}: {}",
                fit.lambda_hat,
                fit.lambda_bound,
                fit.margin,
                if fit.satisfied { "satisfied" } else { "violated" }
            );
            if !fit.satisfied {
                return Err(CliError::Property("fitted slope exceeds lambda_ReLU + margin".into()));
            }
        }
        Command::Lemmas { trials } => {
            let counts = trials.map(SuiteCounts::uniform).unwrap_or_default();
            let report = run_lemma_suite(common.seed.unwrap_or(0), &counts, &SuiteHooks::default());
            for r in &report.results {
                println!("{}", r.line());
            }
            let dir = out_dir(common.out.as_deref())?;
            if dir.is_some() {
                write_json(dir.as_deref(), "lemmas.json", &report)?;
            }
            if !report.passed() {
                return Err(CliError::Property(format!("{} properties failed", report.failures().len())));
            }
        }
        Command::Oracle { n, rungs } => {
            let ladder = TemperatureLadder::power(rungs, 5.0, McmcSettings::default())?;
            let r = validate_oracle(n, common.seed.unwrap_or(0), &ladder)?;
            write_json(out_dir(common.out.as_deref())?.as_deref(), "oracle.json", &r)?;
            if !r.passed() {
                return Err(CliError::Property(format!(
                    "conjugate gap {:.4}, quadrature gap {:.4}",
                    r.conjugate_gap, r.quadrature_gap
                )));
            }
        }
        Command::Bound {
            ns,
            region_samples,
            inputs,
        } => {
            let c = load(common)?;
            let settings = BoundSettings {
                region_samples,
                num_inputs: inputs,
                seed: c.seed,
            };
            let curve = bound_curve(&c.true_model, &c.model_arch, &c.prior(), c.support_mode(), &ns, &settings)?;
            let dir = out_dir(c.output_dir.as_deref())?;
            if let Some(d) = &dir {
                let mut w = csv::Writer::from_path(d.join("bound.csv"))?;
                w.write_record(["n", "bound", "excess", "log_volume", "log_mean"])?;
                for p in &curve.points {
                    w.write_record([
                        p.n.to_string(),
                        p.bound.to_string(),
                        p.excess.to_string(),
                        p.log_volume.to_string(),
                        p.log_mean.to_string(),
                    ])?;
                }
                w.flush()?;
            }
            write_json(dir.as_deref(), "bound.json", &curve)?;
            eprintln!("slope {:.4} vs lambda {}", curve.slope, curve.lambda_bound);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
