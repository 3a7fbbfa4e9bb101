//! Trace CSV.
//!
//! Columns: `s,bus,sigma_re,sigma_im,delta,vm,va_deg,q_gen,stage`, one row
//! per sample and non-swing bus, ordered by `s` and then bus id. `q_gen` is
//! empty at PQ buses. Reactive-limit switches inside the range appear as
//! `# switch bus=<id> s=<val> limit=<qmax|qmin>` lines ahead of the first
//! row at or after the switch.

use std::io::Write;

use sigma_he::he::{StagedSolution, SwitchEvent};
use sigma_he::sigma::{sample_grid, trace_trajectories, ChannelTrajectory};

use crate::commands::{read_case, staged, Output};
use crate::config::{CliError, Range, RunConfig};
use crate::numfmt::fmt12;

pub const HEADER: [&str; 9] = [
    "s", "bus", "sigma_re", "sigma_im", "delta", "vm", "va_deg", "q_gen", "stage",
];

/// Trajectories sorted by bus id, with the staged solution behind them.
pub fn compute(cfg: &RunConfig, r: Range) -> Result<(StagedSolution, Vec<ChannelTrajectory>), CliError> {
    let case = read_case(&cfg.case)?;
    let st = staged(&case, r.to, cfg)?;
    let mut traj = trace_trajectories(&st, r.from, r.to, r.step, &cfg.he_options())?;
    traj.sort_by_key(|t| t.bus);
    Ok((st, traj))
}

/// Reason for exit code 2 when a trajectory ends inside the range.
pub fn collapse_in_range(traj: &[ChannelTrajectory], grid_len: usize) -> Option<String> {
    traj.iter()
        .find(|t| t.samples.len() < grid_len || t.s_critical.is_some())
        .map(|t| match (t.s_critical, t.converged_to) {
            (Some(s), _) => format!("bus {} reaches the boundary at s = {}", t.bus, fmt12(s)),
            (None, Some(s)) => format!("series stop converging after s = {}", fmt12(s)),
            (None, None) => "series do not converge in range".to_string(),
        })
}

fn switch_line(out: &mut Vec<u8>, e: &SwitchEvent) {
    writeln!(out, "# switch bus={} s={} limit={}", e.bus, fmt12(e.s), e.limit.as_str())
        .expect("in-memory write");
}

fn write_rows(out: &mut Vec<u8>, rows: &mut Vec<Vec<String>>) {
    let mut w = csv::Writer::from_writer(out);
    for r in rows.drain(..) {
        w.write_record(&r).expect("in-memory write");
    }
    w.flush().expect("in-memory write");
}

pub fn render(st: &StagedSolution, traj: &[ChannelTrajectory], grid: &[f64], r: Range) -> String {
    let mut out = Vec::new();
    let mut rows: Vec<Vec<String>> = vec![HEADER.iter().map(|h| h.to_string()).collect()];
    let mut pending = st
        .plan
        .switches
        .iter()
        .filter(|e| e.s >= r.from && e.s <= r.to)
        .peekable();
    for (k, &s) in grid.iter().enumerate() {
        while let Some(e) = pending.next_if(|e| e.s <= s) {
            write_rows(&mut out, &mut rows);
            switch_line(&mut out, e);
        }
        for t in traj {
            let Some(p) = t.samples.get(k) else { continue };
            rows.push(vec![
                fmt12(p.s),
                t.bus.to_string(),
                fmt12(p.sigma.re),
                fmt12(p.sigma.im),
                fmt12(p.delta),
                fmt12(p.v.norm()),
                fmt12(p.v.arg().to_degrees()),
                p.q_gen.map(fmt12).unwrap_or_default(),
                p.stage.to_string(),
            ]);
        }
    }
    write_rows(&mut out, &mut rows);
    for e in pending {
        switch_line(&mut out, e);
    }
    String::from_utf8(out).expect("ascii output")
}

pub fn cmd_trace(cfg: &RunConfig, r: Range) -> Result<Output, CliError> {
    let grid = sample_grid(r.from, r.to, r.step)?;
    let (st, traj) = compute(cfg, r)?;
    Ok(Output {
        body: render(&st, &traj, &grid, r),
        infeasible: collapse_in_range(&traj, grid.len()),
    })
}
