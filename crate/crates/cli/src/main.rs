//! Command-line front end: sweep orchestration with resumable persistence
//! and CSV export of tables and plot data.

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use spinline_cli::config::SweepConfig;
use spinline_cli::modes::{self, RunContext};
use spinline_cli::store::ResultStore;
use spinline_cli::exports;

#[derive(Parser)]
#[command(name = "spinline", about = "Remote state creation through homogeneous spin chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// flat key = value config file; command-line flags override it
    #[arg(long)]
    config: Option<PathBuf>,

    /// sender sizes (comma list or a..b range)
    #[arg(long)]
    ns: Option<String>,

    /// extended-receiver sizes (comma list or a..b range)
    #[arg(long)]
    nr: Option<String>,

    /// target on |f_N|^2 for the table modes
    #[arg(long)]
    threshold: Option<f64>,

    /// base RNG seed for the restarted optimizer
    #[arg(long)]
    seed: Option<u64>,

    /// output directory (store + exports)
    #[arg(long)]
    out: Option<PathBuf>,

    /// first chain length of a scan
    #[arg(long)]
    n_start: Option<usize>,

    /// chain-length cap of a scan
    #[arg(long)]
    n_max: Option<usize>,

    /// raise the length caps for the long (hours) reproduction runs
    #[arg(long)]
    extended: bool,

    /// reuse records already in the store instead of failing on them
    #[arg(long)]
    resume: bool,

    /// additional key=value overrides
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Critical-length table over a grid of sender/receiver sizes
    Table {
        #[command(flatten)]
        common: CommonArgs,

        /// hpst (|f|^2 > 0.9) or mixed (|f|^2 >= 1/2)
        #[arg(long, default_value = "hpst")]
        kind: String,
    },
    /// Spectral amplitudes and phases of one optimized cell
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,

        /// chain length
        #[arg(long)]
        n: usize,
    },
    /// Projection profile |f_n(t0)| of one optimized cell
    Profile {
        #[command(flatten)]
        common: CommonArgs,

        /// chain length
        #[arg(long)]
        n: usize,
    },
    /// Two-qubit eigenvalue creation
    TwoQubit {
        #[command(subcommand)]
        which: TwoQubitCommand,
    },
    /// List the registered sweep modes
    Modes,
    /// Dump a coupling matrix or excitation block as CSV (debug)
    Matrix {
        /// chain length
        #[arg(long)]
        n: usize,

        /// couplings | one | two
        #[arg(long, default_value = "couplings")]
        which: String,

        /// output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,

        /// truncate couplings to nearest neighbors
        #[arg(long)]
        nearest: bool,
    },
}

#[derive(Subcommand)]
enum TwoQubitCommand {
    /// Critical length of one target spectrum
    Vertex {
        #[command(flatten)]
        common: CommonArgs,

        /// pure | mixed2 | mixed3 | mixed4 | "l1,l2,l3"
        #[arg(long)]
        target: String,
    },
    /// Critical lengths over the eigenvalue lattice
    Lattice {
        #[command(flatten)]
        common: CommonArgs,

        /// lattice denominator
        #[arg(long, default_value_t = 12)]
        resolution: usize,
    },
    /// Fit discrepancy of the rank-3/4 mixtures versus chain length
    Accuracy {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn build_config(mode: &str, common: &CommonArgs) -> Result<SweepConfig> {
    let mut cfg = SweepConfig { mode: mode.to_string(), ..Default::default() };
    if mode.starts_with("two_qubit") || mode == "accuracy_curve" {
        cfg.ns = vec![4];
        cfg.nr = vec![2];
    }
    if let Some(path) = &common.config {
        cfg.load_file(path)?;
        cfg.mode = mode.to_string();
    }
    if let Some(ns) = &common.ns {
        cfg.set("ns", ns)?;
    }
    if let Some(nr) = &common.nr {
        cfg.set("nr", nr)?;
    }
    if let Some(t) = common.threshold {
        cfg.set("threshold", &t.to_string())?;
    }
    if let Some(seed) = common.seed {
        cfg.set("seed", &seed.to_string())?;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(n) = common.n_start {
        cfg.set("n_start", &n.to_string())?;
    }
    if let Some(n) = common.n_max {
        cfg.set("n_max", &n.to_string())?;
    }
    if common.extended {
        cfg.extended = true;
    }
    if common.resume {
        cfg.resume = true;
    }
    for assignment in &common.set {
        let Some((key, value)) = assignment.split_once('=') else {
            bail!("--set expects KEY=VALUE, got `{assignment}`");
        };
        cfg.set(key.trim(), value)?;
    }
    Ok(cfg)
}

fn run_mode(cfg: SweepConfig) -> Result<()> {
    let mode = modes::lookup(&cfg.mode)?;
    let hash = cfg.hash();
    println!("mode {} (config {})", cfg.mode, hash);
    let mut store = ResultStore::open(&cfg.out.join("store.csv"), cfg.resume)?;
    let mut ctx = RunContext { config: &cfg, store: &mut store, hash };
    mode.run(&mut ctx)?;
    println!("store: {} records in {}", ctx.store.len(), ctx.store.path().display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Table { common, kind } => {
            let mode = match kind.as_str() {
                "hpst" => "hpst_table",
                "mixed" => "mixed_table",
                other => bail!("unknown table kind `{other}` (use hpst or mixed)"),
            };
            let mut cfg = build_config(mode, &common)?;
            if common.threshold.is_none() && common.config.is_none() {
                cfg.threshold = if kind == "mixed" { 0.5 } else { 0.9 };
            }
            run_mode(cfg)
        }
        Command::Spectrum { common, n } => {
            let mut cfg = build_config("spectrum", &common)?;
            cfg.n_total = Some(n);
            run_mode(cfg)
        }
        Command::Profile { common, n } => {
            let mut cfg = build_config("profile", &common)?;
            cfg.n_total = Some(n);
            run_mode(cfg)
        }
        Command::TwoQubit { which } => match which {
            TwoQubitCommand::Vertex { common, target } => {
                let mut cfg = build_config("two_qubit_vertex", &common)?;
                cfg.target = Some(target);
                run_mode(cfg)
            }
            TwoQubitCommand::Lattice { common, resolution } => {
                let mut cfg = build_config("two_qubit_lattice", &common)?;
                cfg.resolution = resolution;
                run_mode(cfg)
            }
            TwoQubitCommand::Accuracy { common } => {
                let mut cfg = build_config("accuracy_curve", &common)?;
                if cfg.n_max.is_none() && !cfg.extended {
                    cfg.n_max = Some(20);
                }
                run_mode(cfg)
            }
        },
        Command::Modes => {
            for mode in modes::registry() {
                println!("{:<18} {}", mode.name(), mode.describe());
            }
            Ok(())
        }
        Command::Matrix { n, which, out, nearest } => {
            use spinline::hamiltonian::{
                dipolar_couplings_with, one_excitation_block, two_excitation_block, ChainSpec,
                CouplingRange,
            };
            let spec = ChainSpec::new(n, 1, 1)?;
            let range =
                if nearest { CouplingRange::NearestNeighbor } else { CouplingRange::AllNode };
            let couplings = dipolar_couplings_with(&spec, range)?;
            let matrix = match which.as_str() {
                "couplings" => couplings.as_matrix().clone(),
                "one" => one_excitation_block(&couplings).matrix,
                "two" => two_excitation_block(&couplings).matrix,
                other => bail!("unknown matrix kind `{other}` (couplings | one | two)"),
            };
            let text = exports::matrix_csv(&matrix);
            match out {
                Some(path) => exports::write(&path, &text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}

fn main() {
    if let Err(err) = run(Cli::parse()) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
