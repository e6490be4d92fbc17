use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use topotrack::sim::{generate_with_rng, trial_rng};
use topotrack::Trajectory;
use topotrack_harness::bench::run_jacobian_bench;
use topotrack_harness::output::{write_rows, write_rows_to, CsvRow};
use topotrack_harness::runner::replay;
use topotrack_harness::study::{parse_range, run_observability_study};
use topotrack_harness::{presets, run_experiment, ExperimentConfig, HarnessError, Result, RunOptions};

#[derive(Parser)]
#[command(name = "track", version, about = "Sparse dynamic graph topology tracking experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo tracking experiment.
    Run {
        /// JSON experiment file, or `preset:<name>`.
        #[arg(long)]
        config: String,
        /// Output directory; overrides the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Time the reference and dynamic-programming Jacobians.
    BenchJacobian {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fraction of random input sequences giving a full-rank observability matrix.
    Observability {
        #[arg(long)]
        n: usize,
        /// Horizons, e.g. `1..8`, `3-6` or `2,4,8`.
        #[arg(long)]
        t: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in presets, or print one as JSON.
    Presets { name: Option<String> },
    /// Export one generated trajectory as CSV.
    Simulate {
        #[arg(long)]
        config: String,
        #[arg(long, default_value_t = 0)]
        trial: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the configured trackers on a trajectory CSV.
    Replay {
        #[arg(long)]
        config: String,
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(spec: &str) -> Result<ExperimentConfig> {
    match spec.strip_prefix("preset:") {
        Some(name) => presets::preset(name),
        None => ExperimentConfig::load(Path::new(spec)),
    }
}

fn emit<R: CsvRow>(out: Option<&Path>, rows: &[R]) -> Result<()> {
    match out {
        Some(path) => write_rows_to(path, rows),
        None => write_rows(io::stdout().lock(), rows),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out, seed, trials, parallel } => {
            let mut cfg = load_config(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(trials) = trials {
                cfg.mc_trials = trials;
                for point in &mut cfg.sweep {
                    if let Some(obj) = point.patch.as_object_mut() {
                        obj.remove("mc_trials");
                    }
                }
            }
            let dir = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
            let results = run_experiment(&cfg, &RunOptions { parallel })?;
            results.write(&dir)?;
            std::fs::write(dir.join("config.json"), cfg.to_json() + "\n")
                .map_err(|e| HarnessError::io(dir.join("config.json"), e))?;
            eprintln!("wrote {} rows to {}", results.rows.len(), dir.display());
        }
        Command::BenchJacobian { n, p, repeats, seed, out } => {
            emit(out.as_deref(), &run_jacobian_bench(&n, &p, repeats, seed)?)?;
        }
        Command::Observability { n, t, trials, seed, out } => {
            let horizons = parse_range(&t)?;
            emit(out.as_deref(), &run_observability_study(n, &horizons, trials, seed)?)?;
        }
        Command::Presets { name: None } => {
            let mut stdout = io::stdout().lock();
            for name in presets::names() {
                let cfg = presets::preset(name)?;
                writeln!(stdout, "{name:<18} {}", cfg.description).map_err(|e| HarnessError::io("<stdout>", e))?;
            }
        }
        Command::Presets { name: Some(name) } => {
            let text = presets::source(&name)
                .ok_or_else(|| HarnessError::config(format!("unknown preset {name:?}")))?;
            print!("{text}");
        }
        Command::Simulate { config, trial, seed, out } => {
            let cfg = load_config(&config)?;
            let mut rng = trial_rng(seed.unwrap_or(cfg.seed), trial as u64);
            let traj = generate_with_rng(&cfg.scenario, &mut rng)?;
            match out {
                Some(path) => {
                    let file = File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
                    traj.write_csv(BufWriter::new(file))?;
                }
                None => traj.write_csv(io::stdout().lock())?,
            }
        }
        Command::Replay { config, trajectory, out } => {
            let cfg = load_config(&config)?;
            let file = File::open(&trajectory).map_err(|e| HarnessError::io(&trajectory, e))?;
            let traj = Trajectory::read_csv(BufReader::new(file))?;
            replay(&cfg, traj)?.write(&out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("track: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
