use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hydrolim_cli::commands;
use hydrolim_cli::config::{Overrides, RecipeKind, RunConfig};
use hydrolim_core::Error;

/// Pseudo-spectral solvers for the primitive equations and the scaled
/// anisotropic Navier-Stokes system on a periodic box, with an
/// aspect-ratio convergence harness and a verification property suite.
#[derive(Parser)]
#[command(name = "hydrolim", version, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the primitive equations and emit diagnostics.
    RunPe(RunArgs),
    /// Integrate the scaled system at a single eps and emit diagnostics.
    RunSns(RunArgs),
    /// Sweep eps, compute difference norms against the primitive
    /// equations and fit the convergence order.
    Converge(RunArgs),
    /// Run the verification property suite (exits nonzero on failure).
    Verify(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat key = value configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Collocation points per axis (even).
    #[arg(long)]
    n: Option<usize>,
    /// Horizontal period L1.
    #[arg(long)]
    l1: Option<f64>,
    /// Horizontal period L2.
    #[arg(long)]
    l2: Option<f64>,
    /// Time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Final time.
    #[arg(long = "t-final")]
    t_final: Option<f64>,
    /// Aspect ratio(s); comma separated and strictly decreasing for
    /// converge mode.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Initial-data recipe: single-mode or random.
    #[arg(long)]
    recipe: Option<String>,
    /// Seed for the random recipe.
    #[arg(long)]
    seed: Option<u64>,
    /// Initial-data amplitude (L2 norm for the random recipe).
    #[arg(long)]
    amplitude: Option<f64>,
    /// Steps between recorded samples.
    #[arg(long = "output-every")]
    output_every: Option<usize>,
    /// CFL safety factor in (0, 1].
    #[arg(long = "cfl-safety")]
    cfl_safety: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a final-state checkpoint.
    #[arg(long = "save-state")]
    save_state: bool,
}

impl RunArgs {
    fn build_config(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let recipe = match &self.recipe {
            Some(s) => Some(RecipeKind::parse(s)?),
            None => None,
        };
        cfg.apply(&Overrides {
            n: self.n,
            l1: self.l1,
            l2: self.l2,
            dt: self.dt,
            t_final: self.t_final,
            output_every: self.output_every,
            eps: self.eps.clone(),
            recipe,
            amplitude: self.amplitude,
            seed: self.seed,
            cfl_safety: self.cfl_safety,
            out_dir: self.out.clone(),
            save_state: if self.save_state { Some(true) } else { None },
        });
        Ok(cfg)
    }
}

const EXIT_CONFIG: u8 = 1;
const EXIT_BLOWUP: u8 = 2;
const EXIT_PROPERTY: u8 = 3;

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::BlowUp { .. } => EXIT_BLOWUP,
        Error::Inconsistent(_) => EXIT_PROPERTY,
        _ => EXIT_CONFIG,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    type Runner = fn(&RunConfig) -> Result<(), Error>;
    let (args, runner): (&RunArgs, Runner) = match &cli.cmd {
        Cmd::RunPe(a) => (a, commands::cmd_run_pe),
        Cmd::RunSns(a) => (a, commands::cmd_run_sns),
        Cmd::Converge(a) => (a, commands::cmd_converge),
        Cmd::Verify(a) => {
            let cfg = match a.build_config() {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            return match commands::cmd_verify(&cfg) {
                Ok(true) => ExitCode::SUCCESS,
                Ok(false) => {
                    eprintln!("verification suite failed");
                    ExitCode::from(EXIT_PROPERTY)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(exit_for(&e))
                }
            };
        }
    };

    let cfg = match args.build_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match runner(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
