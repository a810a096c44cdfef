//! `twinstripe` command-line driver.
//!
//! Exit status: 0 on success, 1 for invalid input or a violated inequality,
//! 2 when a numerical routine reports non-convergence.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use twinstripe::chessboard::run_trials;
use twinstripe::energy::{total_energy, total_energy_exact, DEFAULT_CUTOFF};
use twinstripe::localization::{certificate_check, DEFAULT_ETA, DEFAULT_KAPPA};
use twinstripe::one_dim::optimal_even_m;
use twinstripe::optimize::{
    branched_best, branched_candidate, phase_sweep, relax, striped_candidate, sweep_csv, RelaxOptions, SweepGrid,
    DEFAULT_MAX_LEVELS,
};
use twinstripe::{Configuration, Error, ModelParams};

#[derive(Parser, Debug)]
#[command(name = "twinstripe", version, about = "Twin-microstructure energies, striped optima and verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Configuration JSON (params, stations, profiles).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Parameter JSON {beta, epsilon, length, height}; flags override it.
    #[arg(long, global = true)]
    params: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    length: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    height: Option<f64>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "TWINSTRIPE_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Energy breakdown of a configuration.
    Energy {
        /// Fourier modes for the austenite term.
        #[arg(long, default_value_t = DEFAULT_CUTOFF)]
        cutoff: usize,
        /// Use the exact corner-pair sum instead of the truncated mode sum.
        #[arg(long)]
        exact: bool,
    },
    /// Optimal even number of stripes and its energy.
    OptimalStripes,
    /// Relax a configuration (default: the striped candidate).
    Relax {
        #[arg(long, default_value_t = RelaxOptions::default().max_iters)]
        max_iters: usize,
        #[arg(long, default_value_t = RelaxOptions::default().tol_energy)]
        tol_energy: f64,
        /// Forbid corner-pair creation and annihilation.
        #[arg(long)]
        no_topology: bool,
        /// Include the accepted-move energy trace.
        #[arg(long)]
        trace: bool,
    },
    /// Striped versus branched phase sweep over a (beta, epsilon) grid.
    Sweep {
        /// Comma-separated beta values.
        #[arg(long, value_delimiter = ',', required = true)]
        betas: Vec<f64>,
        /// Comma-separated epsilon values.
        #[arg(long, value_delimiter = ',', required = true)]
        epsilons: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_MAX_LEVELS)]
        max_levels: usize,
        /// Also relax the better candidate at each point.
        #[arg(long)]
        relaxed: bool,
    },
    /// Period-doubling branched candidate.
    Branched {
        /// Refinement levels (default: best of 1..=max-levels).
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_MAX_LEVELS)]
        max_levels: usize,
        /// Include the full configuration.
        #[arg(long)]
        with_config: bool,
    },
    /// Randomized reflection-positivity, chessboard and master-inequality suite.
    VerifyChessboard {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 20)]
        master_trials: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 1.0, 10.0])]
        alphas: Vec<f64>,
    },
    /// Localized lower-bound certificate for a candidate minimizer.
    Certify {
        #[arg(long, default_value_t = DEFAULT_ETA)]
        eta: f64,
        #[arg(long, default_value_t = DEFAULT_KAPPA)]
        kappa: f64,
    },
}

enum Failure {
    Input(String),
    NonConvergence(String),
    Violation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_non_convergence() {
            Failure::NonConvergence(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> std::result::Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn params(c: &Common) -> std::result::Result<ModelParams, Failure> {
    let base: Option<ModelParams> = match &c.params {
        Some(p) => Some(read_json(p)?),
        None => None,
    };
    let pick = |flag: Option<f64>, file: Option<f64>, name: &str, default: Option<f64>| {
        flag.or(file)
            .or(default)
            .ok_or_else(|| Failure::Input(format!("missing `{name}` (flag --{name} or --params file)")))
    };
    let beta = pick(c.beta, base.map(|p| p.beta()), "beta", None)?;
    let epsilon = pick(c.epsilon, base.map(|p| p.epsilon()), "epsilon", None)?;
    let length = pick(c.length, base.map(|p| p.length()), "length", Some(1.0))?;
    let height = pick(c.height, base.map(|p| p.height()), "height", Some(1.0))?;
    Ok(ModelParams::new(beta, epsilon, length, height)?)
}

fn config(c: &Common) -> std::result::Result<Configuration, Failure> {
    match &c.config {
        Some(p) => read_json(p),
        None => Err(Failure::Input("missing `--config` file".into())),
    }
}

fn emit(c: &Common, text: String) -> Outcome {
    match &c.output {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(c: &Common, value: &T) -> Outcome {
    if c.format == Format::Csv {
        return Err(Failure::Input("`format`: csv is not available for this command".into()));
    }
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    emit(c, s)
}

fn emit_table(c: &Common, header: &[&str], row: &[String], json: &impl Serialize) -> Outcome {
    match c.format {
        Format::Json => emit_json(c, json),
        Format::Csv => emit(c, format!("{}\n{}\n", header.join(","), row.join(","))),
    }
}

fn run(cli: &Cli) -> Outcome {
    let c = &cli.common;
    match &cli.command {
        Command::Energy { cutoff, exact } => {
            let cfg = config(c)?;
            let e = if *exact { total_energy_exact(&cfg) } else { total_energy(&cfg, *cutoff)? };
            let row = [e.austenite, e.strain, e.surface, e.total].map(|v| format!("{v:e}"));
            emit_table(c, &["austenite", "strain", "surface", "total"], &row, &e)
        }
        Command::OptimalStripes => {
            let r = optimal_even_m(&params(c)?)?;
            let ms: Vec<String> = r.m_star.iter().map(|m| m.to_string()).collect();
            let row = [ms.join(" "), format!("{:e}", r.e_star), format!("{:e}", r.c0), format!("{:e}", r.cs)];
            emit_table(c, &["m_star", "e_star", "c0", "cs"], &row, &r)
        }
        Command::Relax {
            max_iters,
            tol_energy,
            no_topology,
            trace,
        } => {
            let start = match &c.config {
                Some(_) => config(c)?,
                None => striped_candidate(&params(c)?)?,
            };
            let opts = RelaxOptions {
                max_iters: *max_iters,
                tol_energy: *tol_energy,
                topology_moves: !no_topology,
                seed: c.seed,
            };
            let mut r = relax(&start, &opts)?;
            if !trace {
                r.trace.clear();
            }
            emit_json(c, &r)
        }
        Command::Sweep {
            betas,
            epsilons,
            max_levels,
            relaxed,
        } => {
            let template = ModelParams::new(1.0, 1.0, c.length.unwrap_or(1.0), c.height.unwrap_or(1.0))?;
            let mut grid = SweepGrid::new(betas.clone(), epsilons.clone());
            grid.max_levels = *max_levels;
            grid.relaxed = *relaxed;
            grid.relax.seed = c.seed;
            let rows = phase_sweep(&grid, &template)?;
            match c.format {
                Format::Csv => emit(c, sweep_csv(&rows)),
                Format::Json => emit_json(c, &rows),
            }
        }
        Command::Branched {
            levels,
            max_levels,
            with_config,
        } => {
            let p = params(c)?;
            let b = match levels {
                Some(l) => branched_candidate(&p, *l)?,
                None => branched_best(&p, *max_levels)?,
            };
            if *with_config {
                emit_json(c, &b)
            } else {
                #[derive(Serialize)]
                struct Summary {
                    levels: usize,
                    n0: usize,
                    band0: f64,
                    theta: f64,
                    finest_corners: usize,
                    energy: twinstripe::EnergyBreakdown,
                }
                emit_json(
                    c,
                    &Summary {
                        levels: b.levels,
                        n0: b.n0,
                        band0: b.band0,
                        theta: b.theta,
                        finest_corners: b.config.u0().interface_count(),
                        energy: b.energy,
                    },
                )
            }
        }
        Command::VerifyChessboard {
            trials,
            master_trials,
            alphas,
        } => {
            let r = run_trials(*trials, *master_trials, alphas, c.seed)?;
            emit_json(c, &r)?;
            if r.all_hold() {
                Ok(())
            } else {
                Err(Failure::Violation("an inequality was violated beyond tolerance".into()))
            }
        }
        Command::Certify { eta, kappa } => {
            let r = certificate_check(&config(c)?, *eta, *kappa)?;
            emit_json(c, &r)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // usage errors are input errors; 2 is reserved for non-convergence
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: threads: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Violation(m)) => {
            eprintln!("violation: {m}");
            ExitCode::from(1)
        }
        Err(Failure::NonConvergence(m)) => {
            eprintln!("non-convergence: {m}");
            ExitCode::from(2)
        }
    }
}
