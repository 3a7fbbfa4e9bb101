use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::newton::{solve_from, PfSolution, PowerFlowProblem};
use crate::error::{Error, Result};
use crate::network::{BusId, BusType, Clamp, NetworkCase, QLimit};

#[derive(Clone, Debug, PartialEq)]
pub struct NoseOptions {
    /// Enforce generator reactive limits by PV-to-PQ switching.
    pub q_limits: bool,
    /// Stop and report an exhausted range beyond this load scale.
    pub s_max: f64,
    pub newton_tol: f64,
    pub max_iter: usize,
}

impl Default for NoseOptions {
    fn default() -> Self {
        Self {
            q_limits: false,
            s_max: 100.0,
            newton_tol: 1e-10,
            max_iter: 30,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoseStatus {
    Nose,
    RangeExhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSwitch {
    pub bus: BusId,
    pub limit: QLimit,
    pub s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoseResult {
    pub s_nose: f64,
    /// Non-swing bus with the lowest voltage magnitude at `s_nose`.
    pub weakest_bus: BusId,
    pub status: NoseStatus,
    pub switches: Vec<OracleSwitch>,
    pub solution: PfSolution,
}

struct Limit {
    bus: BusId,
    q_min: f64,
    q_max: f64,
}

fn outside(l: &Limit, q: f64) -> Option<QLimit> {
    if q > l.q_max {
        Some(QLimit::Qmax)
    } else if q < l.q_min {
        Some(QLimit::Qmin)
    } else {
        None
    }
}

/// Natural-parameter continuation in the load scale.
///
/// Steps of `ds` are taken from `s_start`, warm-starting each Newton solve
/// from the previous point; a failed step halves `ds`, and the search ends
/// once `ds < tol`. The last convergent point is the nose estimate. With
/// reactive limits on, a generator whose output has been inside its band is
/// switched to PQ at the limit when it leaves the band, the crossing being
/// located by the same step halving.
pub fn continuation_nose(
    case: &NetworkCase,
    s_start: f64,
    ds: f64,
    tol: f64,
    opts: &NoseOptions,
) -> Result<NoseResult> {
    if !(ds > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step {ds} and tolerance {tol} must be positive"
        )));
    }
    let limits: Vec<Limit> = if opts.q_limits {
        case.buses
            .iter()
            .filter(|b| b.btype == BusType::PV)
            .filter_map(|b| {
                let g = case.gen_totals(b.id)?;
                Some(Limit {
                    bus: b.id,
                    q_min: g.q_min,
                    q_max: g.q_max,
                })
            })
            .collect()
    } else {
        Vec::new()
    };

    let swing = case.swing().id;
    let mut clamps: Vec<Clamp> = Vec::new();
    let mut switches = Vec::new();
    let solve = |clamps: &[Clamp], s: f64, start: &[Complex64]| {
        let p = PowerFlowProblem::new(case, clamps, s);
        solve_from(&p, s, start, opts.newton_tol, opts.max_iter)
    };
    let start = PowerFlowProblem::new(case, &[], s_start).flat_start();
    let mut current = solve(&clamps, s_start, &start)?;
    let q_of = |sol: &PfSolution, bus: BusId| {
        sol.q_gen
            .iter()
            .find(|(b, _)| *b == bus)
            .map(|&(_, q)| q)
    };
    let mut armed: BTreeSet<BusId> = limits
        .iter()
        .filter(|l| q_of(&current, l.bus).is_some_and(|q| outside(l, q).is_none()))
        .map(|l| l.bus)
        .collect();

    let mut step = ds;
    loop {
        if current.s >= opts.s_max {
            return Ok(finish(swing, current, NoseStatus::RangeExhausted, switches));
        }
        let s = (current.s + step).min(opts.s_max);
        let trial = match solve(&clamps, s, &current.voltages) {
            Ok(t) => t,
            Err(Error::OracleDivergence { .. }) => {
                step *= 0.5;
                if step < tol {
                    return Ok(finish(swing, current, NoseStatus::Nose, switches));
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        let violated = limits
            .iter()
            .filter(|l| armed.contains(&l.bus) && !clamps.iter().any(|c| c.bus == l.bus))
            .filter_map(|l| Some((l, outside(l, q_of(&trial, l.bus)?)?)))
            .next();
        if let Some((l, limit)) = violated {
            if step >= tol {
                step *= 0.5;
                continue;
            }
            let q = match limit {
                QLimit::Qmax => l.q_max,
                QLimit::Qmin => l.q_min,
            };
            clamps.push(Clamp {
                bus: l.bus,
                limit,
                q_gen: q,
            });
            switches.push(OracleSwitch {
                bus: l.bus,
                limit,
                s: trial.s,
            });
            // re-solve the switched network at the same loading
            match solve(&clamps, trial.s, &trial.voltages) {
                Ok(t) => current = t,
                Err(Error::OracleDivergence { .. }) => {
                    return Ok(finish(swing, current, NoseStatus::Nose, switches))
                }
                Err(e) => return Err(e),
            }
            step = ds;
            continue;
        }
        for l in &limits {
            if q_of(&trial, l.bus).is_some_and(|q| outside(l, q).is_none()) {
                armed.insert(l.bus);
            }
        }
        current = trial;
    }
}

fn finish(
    swing: BusId,
    solution: PfSolution,
    status: NoseStatus,
    switches: Vec<OracleSwitch>,
) -> NoseResult {
    let weakest_bus = solution
        .bus_ids
        .iter()
        .zip(&solution.voltages)
        .filter(|(&id, _)| id != swing)
        .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()).then(a.0.cmp(b.0)))
        .map_or(swing, |(&id, _)| id);
    NoseResult {
        s_nose: solution.s,
        weakest_bus,
        status,
        switches,
        solution,
    }
}
