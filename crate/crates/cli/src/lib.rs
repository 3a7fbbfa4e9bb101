//! Command implementations behind the `sigma-he` binary.
//!
//! Every command renders its document in memory; `write_atomic` puts it on
//! disk. Exit codes: 0 success, 1 input error, 2 infeasible operating point
//! or collapse inside the requested range.

mod commands;
mod config;
pub mod numfmt;
mod plot;
mod trace;

use std::io::Write;
use std::path::Path;

pub use commands::{cmd_margin, cmd_oracle, cmd_solve, Output};
pub use config::{CliError, Command, Range, RunConfig};
pub use plot::cmd_plot;
pub use trace::{cmd_trace, HEADER as TRACE_HEADER};

pub fn execute(cfg: &RunConfig) -> Result<Output, CliError> {
    cfg.validate()?;
    match cfg.command {
        Command::Solve { s } => cmd_solve(cfg, s),
        Command::Trace(r) => cmd_trace(cfg, r),
        Command::Margin {
            from,
            to,
            bisect_tol,
        } => cmd_margin(cfg, from, to, bisect_tol),
        Command::Plot(r) => cmd_plot(cfg, r),
        Command::Oracle {
            s,
            newton_tol,
            max_iter,
        } => cmd_oracle(cfg, s, newton_tol, max_iter),
    }
}

/// Writes `body` through a temporary file in the target directory, renamed
/// into place once complete.
pub fn write_atomic(path: &Path, body: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(body.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
