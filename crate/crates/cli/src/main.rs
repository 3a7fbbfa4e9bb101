use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sigma_he::EvalMethod;
use sigma_he_cli::{execute, write_atomic, CliError, Command, Range, RunConfig};

/// Holomorphic-embedding power flow with the sigma voltage-stability index.
#[derive(Parser)]
#[command(name = "sigma-he", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Case file (MATPOWER `.m` or native `.json`).
    case: PathBuf,
    /// Series order.
    #[arg(long, default_value_t = 30)]
    order: usize,
    /// Series evaluation: `pade` or `direct`.
    #[arg(long, default_value = "pade")]
    method: EvalMethod,
    /// Enforce generator reactive limits by PV-to-PQ switching.
    #[arg(long)]
    q_limits: bool,
    /// Convergence threshold on the last series correction.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RangeArgs {
    #[arg(long, default_value_t = 0.0)]
    from: f64,
    #[arg(long, default_value_t = 1.0)]
    to: f64,
    #[arg(long, default_value_t = 0.01)]
    step: f64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Bus voltages, sigma, delta and reactive power at one load scale (JSON).
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
    },
    /// Sigma trajectories over a load range (CSV).
    Trace {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        range: RangeArgs,
    },
    /// Critical load scale, limiting bus and weak-bus ranking (JSON).
    Margin {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 10.0)]
        to: f64,
        /// Width of the final bisection bracket.
        #[arg(long, default_value_t = 1e-6)]
        bisect_tol: f64,
    },
    /// Sigma-plane plot of the trajectories (SVG).
    Plot {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        range: RangeArgs,
    },
    /// Compare the embedded solution with a Newton-Raphson solve (JSON).
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long, default_value_t = 1e-10)]
        newton_tol: f64,
        #[arg(long, default_value_t = 30)]
        max_iter: usize,
    },
}

fn range(r: RangeArgs) -> Range {
    Range {
        from: r.from,
        to: r.to,
        step: r.step,
    }
}

fn config(cmd: Cmd) -> (RunConfig, Option<PathBuf>) {
    let (common, command) = match cmd {
        Cmd::Solve { common, s } => (common, Command::Solve { s }),
        Cmd::Trace { common, range: r } => (common, Command::Trace(range(r))),
        Cmd::Margin {
            common,
            from,
            to,
            bisect_tol,
        } => (
            common,
            Command::Margin {
                from,
                to,
                bisect_tol,
            },
        ),
        Cmd::Plot { common, range: r } => (common, Command::Plot(range(r))),
        Cmd::Oracle {
            common,
            s,
            newton_tol,
            max_iter,
        } => (
            common,
            Command::Oracle {
                s,
                newton_tol,
                max_iter,
            },
        ),
    };
    let cfg = RunConfig {
        case: common.case,
        command,
        order: common.order,
        method: common.method,
        q_limits: common.q_limits,
        tol: common.tol,
    };
    (cfg, common.output)
}

fn init_threads() {
    let Ok(v) = std::env::var("SIGMA_HE_THREADS") else {
        return;
    };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size the thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring SIGMA_HE_THREADS={v:?}; expected a positive integer"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    init_threads();
    let (cfg, output) = config(cli.command);
    let out = match execute(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("sigma-he {}: {e}", cfg.command.name());
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let written = match &output {
        Some(path) => write_atomic(path, &out.body),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(out.body.as_bytes())
        }
    };
    if let Err(e) = written {
        let e = CliError::Input(format!("cannot write output: {e}"));
        eprintln!("sigma-he {}: {e}", cfg.command.name());
        return ExitCode::from(e.exit_code() as u8);
    }
    if let Some(reason) = &out.infeasible {
        eprintln!("sigma-he {}: {reason}", cfg.command.name());
    }
    ExitCode::from(out.exit_code() as u8)
}
