use serde::{Deserialize, Serialize};

use super::channel::boundary_delta;
use super::trace::{
    refine_crossing, segments, trace_trajectories, ChannelTrajectory, CRITICAL_SCAN_STEP,
};
use crate::error::{Error, Result};
use crate::he::{HeOptions, HeSolution, StagePlan, StagedSolution};
use crate::network::BusId;
use crate::series::Radius;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalStatus {
    /// A channel reaches the boundary inside the converged region.
    BoundaryCrossing,
    /// The series stops converging before any channel reaches the boundary;
    /// `s_critical` is the estimated radius of convergence.
    ConvergenceLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub s_critical: f64,
    pub limiting_bus: BusId,
    pub status: CriticalStatus,
    pub stage: usize,
}

/// Smallest sigma radius over the channels of one stage.
pub fn sigma_radius(sol: &HeSolution) -> f64 {
    sol.channel_ids()
        .iter()
        .filter_map(|&id| sol.sigma(id))
        .map(|f| match f.radius_estimate() {
            Radius::Finite(r) => r,
            Radius::Unbounded => f64::INFINITY,
        })
        .fold(f64::INFINITY, f64::min)
}

/// `(bus, delta)` with the smallest delta at `s`, ties to the lower bus id.
fn min_delta(sol: &HeSolution, s: f64, opts: &HeOptions) -> (BusId, f64) {
    let mut best = (BusId::MAX, f64::INFINITY);
    for &id in sol.channel_ids() {
        let d = boundary_delta(sol.sigma_at(id, s, opts.method).expect("channel").value);
        if d < best.1 || (d == best.1 && id < best.0) {
            best = (id, d);
        }
    }
    best
}

fn sigma_converged(sol: &HeSolution, s: f64, opts: &HeOptions) -> bool {
    sol.channel_ids().iter().all(|&id| {
        sol.sigma_at(id, s, opts.method)
            .is_some_and(|e| e.converged(opts.tol))
    })
}

/// Locates the first loading at which any channel reaches the boundary.
///
/// Delta is scanned on a grid inside the region where every sigma series
/// converges and bisected to `tol` on a sign change. When the smallest sigma
/// radius of convergence comes first, that radius is returned with status
/// `ConvergenceLimit`, the limiting bus being the one with the smallest
/// delta just inside it.
pub fn find_critical_s(
    staged: &StagedSolution,
    s_lo: f64,
    s_hi: f64,
    tol: f64,
    opts: &HeOptions,
) -> Result<CriticalPoint> {
    if !(tol > 0.0) || !(s_lo <= s_hi) {
        return Err(Error::InvalidArgument(format!(
            "invalid search range [{s_lo}, {s_hi}] with tolerance {tol}"
        )));
    }
    for (k, lo, hi) in segments(&staged.plan, s_lo, s_hi) {
        let sol = &staged.stages[k];
        let radius = sigma_radius(sol);
        let top = hi.min(radius);
        let mut prev: Option<f64> = None;
        let mut s = lo;
        let mut gate_failed = None;
        loop {
            if !sigma_converged(sol, s, opts) {
                gate_failed = Some(s);
                break;
            }
            let (bus, d) = min_delta(sol, s, opts);
            if d <= 0.0 {
                let s_critical = match prev {
                    None => s,
                    Some(p) => bisect_min_delta(sol, p, s, tol, opts),
                };
                let bus = match prev {
                    None => bus,
                    Some(p) => crossing_bus(sol, p, s_critical, tol, opts),
                };
                return Ok(CriticalPoint {
                    s_critical,
                    limiting_bus: bus,
                    status: CriticalStatus::BoundaryCrossing,
                    stage: k,
                });
            }
            if s >= top {
                break;
            }
            prev = Some(s);
            s = (s + CRITICAL_SCAN_STEP).min(top);
        }
        let limit = if radius <= hi {
            Some(radius.max(lo))
        } else {
            gate_failed
        };
        if let Some(s_limit) = limit {
            let probe = (0.99 * s_limit).max(lo);
            let (bus, _) = min_delta(sol, probe, opts);
            return Ok(CriticalPoint {
                s_critical: s_limit,
                limiting_bus: bus,
                status: CriticalStatus::ConvergenceLimit,
                stage: k,
            });
        }
    }
    Err(Error::NoCollapseInRange { s_lo, s_hi })
}

fn bisect_min_delta(sol: &HeSolution, mut lo: f64, mut hi: f64, tol: f64, opts: &HeOptions) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if min_delta(sol, mid, opts).1 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Among buses past the boundary at `hi`, the one that crossed first after
/// `lo`; ties go to the lower bus id.
fn crossing_bus(sol: &HeSolution, lo: f64, hi: f64, tol: f64, opts: &HeOptions) -> BusId {
    let mut crossed: Vec<(f64, BusId)> = sol
        .channel_ids()
        .iter()
        .filter_map(|&id| {
            let d = boundary_delta(sol.sigma_at(id, hi, opts.method)?.value);
            (d <= 0.0).then(|| (refine_crossing(sol, id, lo, hi, tol * 1e-3, opts), id))
        })
        .collect();
    crossed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    crossed.first().map_or_else(|| min_delta(sol, hi, opts).0, |c| c.1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedBus {
    pub bus: BusId,
    /// This bus's own boundary crossing, if found in range.
    pub s_crossing: Option<f64>,
    /// Delta at the ranking probe point just inside the convergence limit.
    pub delta_at_limit: Option<f64>,
    /// Euclidean distance from sigma(1) to the boundary; reported for
    /// reference only, it does not order the ranking.
    pub distance_at_unit_load: Option<f64>,
}

/// Orders buses by their own crossing loading; buses that do not cross
/// follow, ordered by delta at the probe `s_probe` (smallest first), then by
/// bus id.
pub fn rank_weak_buses(
    staged: &StagedSolution,
    trajectories: &[ChannelTrajectory],
    s_probe: Option<f64>,
    opts: &HeOptions,
) -> Vec<RankedBus> {
    let unit = staged.solution_at(1.0);
    let probe_sol = s_probe.map(|s| (s, staged.solution_at(s)));
    let mut ranked: Vec<RankedBus> = trajectories
        .iter()
        .map(|t| {
            let distance_at_unit_load = unit
                .sigma_at(t.bus, 1.0, opts.method)
                .filter(|e| e.converged(opts.tol))
                .map(|e| distance_to_boundary(e.value.re, e.value.im));
            let delta_at_limit = probe_sol.and_then(|(s, sol)| {
                sol.sigma_at(t.bus, s, opts.method)
                    .map(|e| boundary_delta(e.value))
            });
            RankedBus {
                bus: t.bus,
                s_crossing: t.s_critical,
                delta_at_limit,
                distance_at_unit_load,
            }
        })
        .collect();
    ranked.sort_by(|a, b| {
        let key = |r: &RankedBus| match r.s_crossing {
            Some(s) => (0, s),
            None => (1, r.delta_at_limit.unwrap_or(f64::INFINITY)),
        };
        let (ka, kb) = (key(a), key(b));
        ka.0.cmp(&kb.0)
            .then(ka.1.total_cmp(&kb.1))
            .then(a.bus.cmp(&b.bus))
    });
    ranked
}

/// Distance from `(x, y) = (sigma_R, sigma_I)` to the curve
/// `x = y^2 - 1/4`.
pub fn distance_to_boundary(x: f64, y: f64) -> f64 {
    // foot points t (curve point (t^2 - 1/4, t)) solve t^3 + p t + q = 0
    let p = 0.25 - x;
    let q = -0.5 * y;
    let roots: Vec<f64> = {
        let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
        if disc >= 0.0 {
            let r = disc.sqrt();
            vec![(-q / 2.0 + r).cbrt() + (-q / 2.0 - r).cbrt()]
        } else {
            let m = 2.0 * (-p / 3.0).sqrt();
            let theta = ((3.0 * q / (p * m)).clamp(-1.0, 1.0)).acos() / 3.0;
            (0..3)
                .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos())
                .collect()
        }
    };
    roots
        .into_iter()
        .map(|t| ((t * t - 0.25 - x).powi(2) + (t - y).powi(2)).sqrt())
        .fold(f64::INFINITY, f64::min)
}

/// Full assessment over `[s_lo, s_hi]`: trajectories, critical point and
/// weak-bus ranking.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub trajectories: Vec<ChannelTrajectory>,
    pub critical: Option<CriticalPoint>,
    pub ranking: Vec<RankedBus>,
    pub plan: StagePlan,
}

impl StabilityReport {
    pub fn s_critical(&self) -> Option<f64> {
        self.critical.as_ref().map(|c| c.s_critical)
    }
}

pub fn assess(
    staged: &StagedSolution,
    s_lo: f64,
    s_hi: f64,
    tol: f64,
    opts: &HeOptions,
) -> Result<StabilityReport> {
    let critical = match find_critical_s(staged, s_lo, s_hi, tol, opts) {
        Ok(c) => Some(c),
        Err(Error::NoCollapseInRange { .. }) => None,
        Err(e) => return Err(e),
    };
    let trajectories = trace_trajectories(staged, s_lo, s_hi, CRITICAL_SCAN_STEP, opts)?;
    let probe = critical.as_ref().and_then(|c| match c.status {
        CriticalStatus::ConvergenceLimit => Some(0.99 * c.s_critical),
        CriticalStatus::BoundaryCrossing => None,
    });
    let ranking = rank_weak_buses(staged, &trajectories, probe, opts);
    Ok(StabilityReport {
        trajectories,
        critical,
        ranking,
        plan: staged.plan.clone(),
    })
}
