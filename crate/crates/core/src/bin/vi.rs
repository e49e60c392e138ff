use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use forced_vi::harness::{self, Experiment, RunConfig, DEFAULT_SEED, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Converge,
    AlphaSweep,
    Quintic,
    Rlc,
}

/// Reproduce the forced variational integrator experiments as CSV.
#[derive(Debug, Parser)]
#[command(name = "vi", version, allow_negative_numbers = true)]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    command: Command,
    /// System name: damped-ho, alpha-ho, quintic or rlc.
    #[arg(long)]
    system: Option<String>,
    /// Quadrature rule for both L_d and the discrete forces.
    #[arg(long, conflicts_with_all = ["quad_l", "quad_f"])]
    quad: Option<String>,
    /// Quadrature rule for L_d in a mixed build.
    #[arg(long, requires = "quad_f")]
    quad_l: Option<String>,
    /// Quadrature rule for the discrete forces in a mixed build.
    #[arg(long, requires = "quad_l")]
    quad_f: Option<String>,
    /// One-step method used by the shooting solve: euler, rk2, rk4 or linear.
    #[arg(long)]
    bvp: Option<String>,
    /// Time step.
    #[arg(long)]
    h: Option<f64>,
    /// Number of steps (first steps-per-period count for converge).
    #[arg(long)]
    steps: Option<usize>,
    /// Fraction of the potential moved into the external force (alpha-ho).
    #[arg(long)]
    alpha: Option<f64>,
    /// Seed for sampled equivalence checks.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Newton residual tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

impl Cli {
    fn config(self) -> RunConfig {
        let experiment = match self.command {
            Command::Converge => Experiment::Converge,
            Command::AlphaSweep => Experiment::AlphaSweep,
            Command::Quintic => Experiment::Quintic,
            Command::Rlc => Experiment::Rlc,
        };
        let mut cfg = RunConfig::new(experiment);
        cfg.system = self.system;
        cfg.quad = self.quad;
        cfg.quad_l = self.quad_l;
        cfg.quad_f = self.quad_f;
        cfg.bvp = self.bvp;
        cfg.h = self.h;
        cfg.steps = self.steps;
        cfg.alpha = self.alpha;
        cfg.seed = self.seed;
        cfg.tol = self.tol;
        cfg.out = self.out;
        cfg
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let cfg = cli.config();
    let result = harness::run(&cfg).and_then(|csv| harness::emit(&csv, cfg.out.as_ref()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vi: {e}");
            if harness::is_config_error(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
