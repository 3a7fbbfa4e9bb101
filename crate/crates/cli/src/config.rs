use std::fmt;
use std::path::PathBuf;

use sigma_he::he::{HeOptions, DEFAULT_ORDER};
use sigma_he::EvalMethod;

/// Sampling range for traces and plots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Range {
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Solve { s: f64 },
    Trace(Range),
    Margin { from: f64, to: f64, bisect_tol: f64 },
    Plot(Range),
    Oracle { s: f64, newton_tol: f64, max_iter: usize },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve { .. } => "solve",
            Command::Trace(_) => "trace",
            Command::Margin { .. } => "margin",
            Command::Plot(_) => "plot",
            Command::Oracle { .. } => "oracle",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub case: PathBuf,
    pub command: Command,
    pub order: usize,
    pub method: EvalMethod,
    pub q_limits: bool,
    /// Series convergence threshold.
    pub tol: f64,
}

impl RunConfig {
    pub fn new(case: impl Into<PathBuf>, command: Command) -> Self {
        Self {
            case: case.into(),
            command,
            order: DEFAULT_ORDER,
            method: EvalMethod::Pade,
            q_limits: false,
            tol: 1e-10,
        }
    }

    pub fn he_options(&self) -> HeOptions {
        HeOptions {
            order: self.order,
            method: self.method,
            tol: self.tol,
            ..HeOptions::default()
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Input(m));
        if self.order < 1 {
            return bad("--order must be at least 1".into());
        }
        if !(self.tol > 0.0) {
            return bad(format!("--tol must be positive, got {}", self.tol));
        }
        let check_s = |s: f64| s.is_finite() && s >= 0.0;
        match &self.command {
            Command::Solve { s } | Command::Oracle { s, .. } if !check_s(*s) => {
                bad(format!("--s must be finite and non-negative, got {s}"))
            }
            Command::Oracle { newton_tol, .. } if !(*newton_tol > 0.0) => {
                bad(format!("--newton-tol must be positive, got {newton_tol}"))
            }
            Command::Trace(r) | Command::Plot(r) => {
                if !check_s(r.from) || !r.to.is_finite() || r.from > r.to {
                    bad(format!("invalid range --from {} --to {}", r.from, r.to))
                } else if !(r.step > 0.0) {
                    bad(format!("--step must be positive, got {}", r.step))
                } else {
                    Ok(())
                }
            }
            Command::Margin {
                from,
                to,
                bisect_tol,
            } => {
                if !check_s(*from) || !to.is_finite() || from >= to {
                    bad(format!("invalid range --from {from} --to {to}"))
                } else if !(*bisect_tol > 0.0) {
                    bad(format!("--bisect-tol must be positive, got {bisect_tol}"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Failure of a command, carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid case, bad flags (exit 1).
    Input(String),
    /// The requested operating point or range cannot be computed (exit 2).
    Infeasible(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Infeasible(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<sigma_he::Error> for CliError {
    fn from(e: sigma_he::Error) -> Self {
        use sigma_he::Error as E;
        match e {
            E::Syntax { .. }
            | E::MissingSwing
            | E::MultipleSwing(_)
            | E::DanglingReference { .. }
            | E::DuplicateBus(_)
            | E::NonPositiveVoltage(_)
            | E::InvalidCase(_)
            | E::InvalidArgument(_) => CliError::Input(e.to_string()),
            _ => CliError::Infeasible(e.to_string()),
        }
    }
}
