use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gapsim_cli::config::{resolve, Experiment, Overrides};
use gapsim_cli::{error_record, exit_code, experiments, report};

const EXIT_HELP: &str = "Exit codes:\n  \
0  success\n  \
2  configuration error (bad flags, kernel spec, config file)\n  \
4  circulant embedding failure\n  \
5  estimation error (insufficient data, range, horizon, singular covariance)\n  \
1  any other failure\n\n\
A machine-readable error record is printed to stderr on failure.\n\
GAPSIM_SEED serves as the seed when neither --seed nor the config file sets one.";

#[derive(Parser)]
#[command(
    name = "gapsim",
    about = "Monte Carlo laboratory for gap statistics of zeros of smooth stationary Gaussian processes",
    after_help = EXIT_HELP,
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Common {
    /// Kernel spec: gaussian | cauchy:alpha=A, modifiers scale=, len=
    #[arg(long)]
    kernel: Option<String>,
    /// Master seed; fixed seed => byte-identical CSVs for any worker count
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key=value config file; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grid points per typical zero spacing (default 0.05)
    #[arg(long)]
    grid_factor: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Zero intensity per unit length against the closed form
    Rice {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_paths: Option<u64>,
        /// Length of each simulated path
        #[arg(long)]
        path_units: Option<f64>,
    },
    /// Survival and intensity curves, theta table, asymptotic fit
    Scaling {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_paths: Option<u64>,
        #[arg(long)]
        r_max: Option<f64>,
    },
    /// Window runs: rescaled gap process, factorial moments, extreme-value tests
    Poisson {
        #[command(flatten)]
        common: Common,
        /// Window length R (repeatable)
        #[arg(long = "R")]
        windows: Option<Vec<f64>>,
        #[arg(long)]
        n_runs: Option<u64>,
        /// Monte Carlo size of the theta table estimation
        #[arg(long)]
        table_paths: Option<u64>,
        /// Theta table depth (auto-extended from a pilot fit when omitted)
        #[arg(long)]
        r_max: Option<f64>,
        /// Also dump per-run zero/gap records
        #[arg(long)]
        dump_zeros: bool,
    },
    /// Joint/product ratio of gap events across separated intervals
    Splitting {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_paths: Option<u64>,
        /// Interval length
        #[arg(long)]
        r: Option<f64>,
        /// Separation (repeatable, increasing)
        #[arg(long)]
        s: Option<Vec<f64>>,
        /// Number of intervals
        #[arg(long)]
        k: Option<usize>,
    },
    /// Joint gap probability probes for touching/separated interval pairs
    Clustering {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_paths: Option<u64>,
        /// Interval length (repeatable)
        #[arg(long)]
        r: Option<Vec<f64>>,
    },
    /// Summarize the artifacts of a finished run directory
    Report {
        /// Run directory containing manifest.json
        #[arg(long)]
        out: PathBuf,
    },
}

fn overrides(common: Common) -> Overrides {
    Overrides {
        kernel: common.kernel,
        seed: common.seed,
        workers: common.workers,
        out: common.out,
        grid_factor: common.grid_factor,
        ..Overrides::default()
    }
}

fn dispatch(cli: Cli) -> gapsim::Result<()> {
    let (experiment, config_file, o) = match cli.command {
        Command::Rice { common, n_paths, path_units } => {
            let file = common.config.clone();
            let mut o = overrides(common);
            o.n_paths = n_paths;
            o.path_units = path_units;
            (Experiment::Rice, file, o)
        }
        Command::Scaling { common, n_paths, r_max } => {
            let file = common.config.clone();
            let mut o = overrides(common);
            o.n_paths = n_paths;
            o.r_max = r_max;
            (Experiment::Scaling, file, o)
        }
        Command::Poisson { common, windows, n_runs, table_paths, r_max, dump_zeros } => {
            let file = common.config.clone();
            let mut o = overrides(common);
            o.windows = windows;
            o.n_runs = n_runs;
            o.table_paths = table_paths;
            o.r_max = r_max;
            if dump_zeros {
                o.dump_zeros = Some(true);
            }
            (Experiment::Poisson, file, o)
        }
        Command::Splitting { common, n_paths, r, s, k } => {
            let file = common.config.clone();
            let mut o = overrides(common);
            o.n_paths = n_paths;
            o.split_r = r;
            o.split_s = s;
            o.split_k = k;
            (Experiment::Splitting, file, o)
        }
        Command::Clustering { common, n_paths, r } => {
            let file = common.config.clone();
            let mut o = overrides(common);
            o.n_paths = n_paths;
            o.cluster_r = r;
            (Experiment::Clustering, file, o)
        }
        Command::Report { out } => {
            print!("{}", report::report(&out)?);
            return Ok(());
        }
    };
    let config = resolve(experiment, config_file.as_deref(), o)?;
    let artifacts = experiments::run(&config)?;
    for f in &artifacts.files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = error_record(&e);
            eprintln!("{record}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
