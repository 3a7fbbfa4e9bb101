use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::channel::{boundary_delta, virtual_impedance};
use crate::error::{Error, Result};
use crate::he::{HeOptions, HeSolution, StagePlan, StagedSolution, SwitchEvent};
use crate::network::BusId;

/// Grid used to look for sign changes of delta before bisecting.
pub const CRITICAL_SCAN_STEP: f64 = 0.01;

/// One sample of a bus channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaPoint {
    pub s: f64,
    pub sigma: Complex64,
    pub delta: f64,
    /// Bus voltage normalized by the swing voltage.
    pub u: Complex64,
    /// `None` when the bus carries no injection at this `s`.
    pub z_equiv: Option<Complex64>,
    pub v: Complex64,
    /// Generator reactive output at PV buses (free or clamped).
    pub q_gen: Option<f64>,
    pub stage: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelTrajectory {
    pub bus: BusId,
    pub samples: Vec<SigmaPoint>,
    /// Reactive-limit switches at this bus.
    pub switches: Vec<SwitchEvent>,
    /// First crossing of the boundary, refined between grid samples.
    pub s_critical: Option<f64>,
    /// Largest `s` with a converged sample.
    pub converged_to: Option<f64>,
}

/// Grid `s_from, s_from + step, ..., s_to`, with the end point always
/// included.
pub fn sample_grid(s_from: f64, s_to: f64, step: f64) -> Result<Vec<f64>> {
    if !(s_from <= s_to) || !(step > 0.0) || !s_from.is_finite() || !s_to.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "invalid range {s_from}..{s_to} with step {step}"
        )));
    }
    let span = (s_to - s_from) / step;
    let n = (span - 1e-9).ceil().max(0.0) as usize;
    let mut grid: Vec<f64> = (0..n).map(|k| s_from + k as f64 * step).collect();
    grid.push(s_to);
    Ok(grid)
}

/// Evaluates one bus channel at `s`, or `None` past the converged region.
pub fn sample_bus(
    sol: &HeSolution,
    stage: usize,
    bus: BusId,
    s: f64,
    opts: &HeOptions,
) -> Option<SigmaPoint> {
    let sig = sol.sigma_at(bus, s, opts.method)?;
    let v = sol.voltage(bus, s, opts.method);
    if !sig.converged(opts.tol) || !v.converged(opts.tol) {
        return None;
    }
    let q_gen = sol.q_gen(bus, s, opts.method);
    if q_gen.is_some_and(|q| !q.converged(opts.tol)) {
        return None;
    }
    let z_equiv = sol
        .injection(bus, s, opts.method)
        .and_then(|inj| virtual_impedance(sig.value, inj, sol.v_swing()).ok());
    Some(SigmaPoint {
        s,
        sigma: sig.value,
        delta: boundary_delta(sig.value),
        u: v.value / sol.v_swing(),
        z_equiv,
        v: v.value,
        q_gen: q_gen.map(|q| q.value.re),
        stage,
    })
}

/// Bisects the delta sign change of one bus on `[lo, hi]`, assuming
/// `delta(lo) > 0 >= delta(hi)` on the given stage.
pub(crate) fn refine_crossing(
    sol: &HeSolution,
    bus: BusId,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    opts: &HeOptions,
) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let sigma = sol.sigma_at(bus, mid, opts.method).expect("non-swing bus").value;
        if boundary_delta(sigma) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Stage segments `(stage, lo, hi)` covering `[s_lo, s_hi]`.
pub(crate) fn segments(plan: &StagePlan, s_lo: f64, s_hi: f64) -> Vec<(usize, f64, f64)> {
    let last = plan.stages.len() - 1;
    plan.stages
        .iter()
        .enumerate()
        .filter_map(|(k, st)| {
            let end = if k == last { f64::INFINITY } else { st.s_end };
            let lo = st.s_start.max(s_lo);
            let hi = end.min(s_hi);
            (lo <= hi).then_some((k, lo, hi))
        })
        .collect()
}

/// First boundary crossing of one bus on `[s_lo, s_hi]`, located from its
/// sigma series alone so that it is not limited by the convergence of the
/// voltage series.
pub fn bus_crossing(
    staged: &StagedSolution,
    bus: BusId,
    s_lo: f64,
    s_hi: f64,
    tol: f64,
    opts: &HeOptions,
) -> Option<f64> {
    let mut prev: Option<f64> = None;
    for (k, lo, hi) in segments(&staged.plan, s_lo, s_hi) {
        let sol = &staged.stages[k];
        let mut s = lo;
        loop {
            let e = sol.sigma_at(bus, s, opts.method)?;
            if !e.converged(opts.tol) {
                return None;
            }
            if boundary_delta(e.value) <= 0.0 {
                return Some(match prev {
                    Some(p) if p >= lo => refine_crossing(sol, bus, p, s, tol, opts),
                    _ => s,
                });
            }
            prev = Some(s);
            if s >= hi {
                break;
            }
            s = (s + CRITICAL_SCAN_STEP).min(hi);
        }
    }
    None
}

/// Samples every non-swing bus over the grid, switching stage at the plan's
/// boundaries. A bus's trace ends at its first non-converged sample or at
/// its boundary crossing.
pub fn trace_trajectories(
    staged: &StagedSolution,
    s_from: f64,
    s_to: f64,
    step: f64,
    opts: &HeOptions,
) -> Result<Vec<ChannelTrajectory>> {
    let grid = sample_grid(s_from, s_to, step)?;
    let buses: Vec<BusId> = staged.stages[0].channel_ids().to_vec();
    Ok(buses
        .par_iter()
        .map(|&bus| {
            let mut samples: Vec<SigmaPoint> = Vec::new();
            for &s in &grid {
                let k = staged.stage_index(s);
                let Some(p) = sample_bus(&staged.stages[k], k, bus, s, opts) else {
                    break;
                };
                let crossed = p.delta <= 0.0;
                samples.push(p);
                if crossed {
                    break;
                }
            }
            let s_critical = bus_crossing(staged, bus, s_from, s_to, 1e-9, opts);
            let switches = staged
                .plan
                .switches
                .iter()
                .filter(|e| e.bus == bus)
                .cloned()
                .collect();
            ChannelTrajectory {
                bus,
                converged_to: samples.last().map(|p| p.s),
                samples,
                switches,
                s_critical,
            }
        })
        .collect())
}
