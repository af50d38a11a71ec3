use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cograd::harness::config::lambda_grid;
use cograd::harness::{run_experiment, write_outputs, Config, ExperimentKind};
use cograd::sensing::{check_emission_mask, read_spectrum_file, EmissionMask, MaskCheck};
use cograd::{Error, Result};

#[derive(Parser)]
#[command(name = "cograd", version, about = "Cognitive radar simulation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or all experiments of a config.
    Run {
        config: PathBuf,
        /// spectrum, tracking, passive_selection or symbiotic
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Parse and check a config without running it.
    Validate { config: PathBuf },
    /// Run the spectrum experiment over an evenly spaced threshold grid.
    LambdaSweep {
        config: PathBuf,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Check a two-column spectrum CSV against an emission mask.
    MaskCheck {
        spectrum: PathBuf,
        #[arg(long)]
        f_lo: f64,
        #[arg(long)]
        f_hi: f64,
        #[arg(long, default_value_t = -40.0, allow_negative_numbers = true)]
        edge_db: f64,
        #[arg(long, default_value_t = -20.0, allow_negative_numbers = true)]
        rolloff_db_per_decade: f64,
    },
}

fn load(path: &PathBuf, seed: Option<u64>, trials: Option<usize>) -> Result<Config> {
    let mut cfg = Config::from_file(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if trials.is_some() {
        cfg.trials = trials;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_and_write(cfg: &Config, kinds: &[ExperimentKind], out: &Path) -> Result<()> {
    let outputs = kinds
        .iter()
        .map(|&k| run_experiment(cfg, k))
        .collect::<Result<Vec<_>>>()?;
    for r in write_outputs(out, cfg, &outputs)? {
        println!(
            "{}: {} trial(s) in {:.2} s -> {}",
            r.experiment,
            r.trials,
            r.elapsed_s,
            r.outputs.join(", ")
        );
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            experiment,
            seed,
            trials,
            out,
        } => {
            let mut cfg = load(&config, seed, trials)?;
            if let Some(name) = experiment {
                cfg.experiment = Some(ExperimentKind::parse(&name)?);
                cfg.validate()?;
            }
            let kinds = cfg.experiments();
            run_and_write(&cfg, &kinds, &out)
        }
        Command::Validate { config } => {
            let cfg = load(&config, None, None)?;
            let names: Vec<_> = cfg.experiments().iter().map(|k| k.as_str()).collect();
            println!("ok: {}", names.join(", "));
            Ok(())
        }
        Command::LambdaSweep {
            config,
            from,
            to,
            steps,
            seed,
            trials,
            out,
        } => {
            let mut cfg = load(&config, seed, trials)?;
            if steps == 0 {
                return Err(Error::Config("--steps must be at least 1".into()));
            }
            cfg.spectrum
                .as_mut()
                .ok_or_else(|| Error::Config("config has no 'spectrum' section".into()))?
                .lambdas = lambda_grid(from, to, steps);
            cfg.experiment = Some(ExperimentKind::Spectrum);
            cfg.validate()?;
            run_and_write(&cfg, &[ExperimentKind::Spectrum], &out)
        }
        Command::MaskCheck {
            spectrum,
            f_lo,
            f_hi,
            edge_db,
            rolloff_db_per_decade,
        } => {
            let mask = EmissionMask::with_rolloff(f_lo, f_hi, edge_db, rolloff_db_per_decade)?;
            match check_emission_mask(&read_spectrum_file(&spectrum)?, &mask)? {
                MaskCheck::Pass => println!("pass"),
                MaskCheck::Violations(f) => {
                    println!("{} violation(s)", f.len());
                    for hz in f {
                        println!("{hz}");
                    }
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cograd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
