use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nfbsm::experiment::{emit_csv, parse_config, run_sweep, ExperimentConfig, FilterKind};
use nfbsm::hrtf::{analytic_sphere_hrtf, save_hrtf, Ear, SourceModel};
use nfbsm::bsm::fibonacci_directions;
use nfbsm::{Error, Result};

/// Near-field vs far-field binaural signal matching sweeps.
///
/// Exit status: 0 success, 1 invalid input, 2 numerical failure, 3 I/O failure.
#[derive(Parser)]
#[command(name = "bsm-sweep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the distance × frequency sweep and write the error surface as CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse and check a configuration, then print it with defaults filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write an analytic rigid-sphere HRTF set in the tabular format.
    GenHrtf {
        #[arg(long)]
        out: PathBuf,
        /// Sphere, ears, order and frequencies are taken from this configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of Fibonacci-lattice directions (default: the configuration's grid size).
        #[arg(long)]
        grid_size: Option<usize>,
        /// Comma-separated frequencies, overriding the configuration.
        #[arg(long, value_delimiter = ',')]
        frequencies_hz: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = Model::Point)]
        model: Model,
        /// Source distance for the point model (default: the configuration's reference distance).
        #[arg(long)]
        reference_distance: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Point,
    Plane,
}

fn load(config: Option<&PathBuf>) -> Result<ExperimentConfig> {
    match config {
        Some(p) => parse_config(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Run { config, out } => {
            let cfg = parse_config(&config)?;
            let surface = run_sweep(&cfg)?;
            emit_csv(&surface, &out)?;
            println!(
                "{} records, lambda = {}, written to {}",
                surface.len(),
                cfg.noise.regularization(),
                out.display()
            );
            println!("{:>10} {:>14} {:>14}", "distance_m", "ff_left_db", "nf_left_db");
            for &d in &cfg.distances_m {
                let mean_db = |kind| {
                    let curve = surface.curve(kind, Ear::Left, d);
                    let m = curve.iter().map(|(_, e)| e).sum::<f64>() / curve.len() as f64;
                    10.0 * m.log10()
                };
                println!("{d:>10} {:>14.2} {:>14.2}", mean_db(FilterKind::Ff), mean_db(FilterKind::Nf));
            }
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = parse_config(&config)?;
            print!("{}", cfg.to_config_string());
            Ok(())
        }
        Command::GenHrtf {
            out,
            config,
            grid_size,
            frequencies_hz,
            model,
            reference_distance,
        } => {
            let cfg = load(config.as_ref())?;
            let directions = match grid_size {
                Some(0) => return Err(Error::Validation { key: "grid-size".into(), message: "must be at least 1".into() }),
                Some(q) => fibonacci_directions(q),
                None => cfg.design_directions(),
            };
            let freqs = frequencies_hz.unwrap_or_else(|| cfg.frequencies.frequencies());
            let model = match model {
                Model::Plane => SourceModel::FarFieldPlaneWave,
                Model::Point => SourceModel::NearFieldPoint {
                    distance_m: reference_distance.unwrap_or(cfg.reference_distance_m),
                },
            };
            let set = analytic_sphere_hrtf(&cfg.sphere, &cfg.ears()?, &directions, &freqs, model, cfg.truncation()?)?;
            save_hrtf(&set, &out)?;
            println!(
                "{} directions × {} frequencies written to {}",
                set.num_directions(),
                set.num_frequencies(),
                out.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
