use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::solution::{HeSolution, DEFAULT_ORDER};
use crate::error::{Error, Result};
use crate::network::{build_ybus, BusId, BusType, Clamp, NetworkCase, QLimit};
use crate::series::EvalMethod;

#[derive(Clone, Debug, PartialEq)]
pub struct HeOptions {
    pub order: usize,
    pub method: EvalMethod,
    /// Convergence threshold on the last series correction.
    pub tol: f64,
    /// Grid spacing used to detect reactive-limit crossings.
    pub scan_step: f64,
    /// Width of the bracket left by switch-point bisection.
    pub switch_tol: f64,
    /// Upper bound on the number of stages; defaults to one more than the
    /// number of PV buses, since a bus can switch at most once.
    pub max_stages: Option<usize>,
}

impl Default for HeOptions {
    fn default() -> Self {
        Self {
            order: DEFAULT_ORDER,
            method: EvalMethod::Pade,
            tol: 1e-10,
            scan_step: 0.01,
            switch_tol: 1e-6,
            max_stages: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub bus: BusId,
    pub limit: QLimit,
    pub s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    /// Stage `k` is valid on `[s_start, s_end)`; the last stage is closed.
    pub s_start: f64,
    pub s_end: f64,
    pub clamps: Vec<Clamp>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StagePlan {
    pub stages: Vec<Stage>,
    pub switches: Vec<SwitchEvent>,
}

impl StagePlan {
    pub fn stage_index(&self, s: f64) -> usize {
        self.stages
            .iter()
            .rposition(|st| s >= st.s_start)
            .unwrap_or(0)
    }
}

/// Per-stage embedded solutions with the plan that stitches them together.
#[derive(Clone, Debug)]
pub struct StagedSolution {
    pub stages: Vec<HeSolution>,
    pub plan: StagePlan,
}

impl StagedSolution {
    pub fn single(sol: HeSolution, s_max: f64) -> Self {
        Self {
            stages: vec![sol],
            plan: StagePlan {
                stages: vec![Stage {
                    s_start: 0.0,
                    s_end: s_max,
                    clamps: Vec::new(),
                }],
                switches: Vec::new(),
            },
        }
    }

    pub fn stage_index(&self, s: f64) -> usize {
        self.plan.stage_index(s)
    }

    pub fn solution_at(&self, s: f64) -> &HeSolution {
        &self.stages[self.stage_index(s)]
    }

    pub fn last(&self) -> &HeSolution {
        self.stages.last().expect("at least one stage")
    }

    pub fn s_max(&self) -> f64 {
        self.plan.stages.last().map_or(0.0, |s| s.s_end)
    }
}

#[derive(Clone, Copy)]
struct Limits {
    bus: BusId,
    q_min: f64,
    q_max: f64,
}

fn violation(q: f64, l: &Limits) -> Option<QLimit> {
    if q > l.q_max {
        Some(QLimit::Qmax)
    } else if q < l.q_min {
        Some(QLimit::Qmin)
    } else {
        None
    }
}

/// Staged solve with PV-to-PQ switching at generator reactive limits.
///
/// A limit only binds once the generator output has been inside its band: a
/// unit sitting below `q_min` at light load is not switched before it has
/// entered the band. Switching is one-way. Each stage re-embeds from s = 0
/// and is used from its switch point on.
pub fn solve_with_qlimits(
    case: &NetworkCase,
    s_max: f64,
    opts: &HeOptions,
) -> Result<StagedSolution> {
    if !(s_max > 0.0) {
        return Err(Error::InvalidArgument(format!("s_max must be positive, got {s_max}")));
    }
    let ybus = build_ybus(case);
    let limited: Vec<Limits> = ybus
        .bus_ids()
        .iter()
        .filter(|&&id| case.bus(id).is_some_and(|b| b.btype == BusType::PV))
        .filter_map(|&id| {
            let g = case.gen_totals(id)?;
            (g.q_min.is_finite() || g.q_max.is_finite()).then_some(Limits {
                bus: id,
                q_min: g.q_min,
                q_max: g.q_max,
            })
        })
        .collect();
    let max_stages = opts.max_stages.unwrap_or(case.pv_count() + 1);

    let mut clamps: Vec<Clamp> = Vec::new();
    let mut armed: BTreeSet<BusId> = BTreeSet::new();
    let mut solutions = Vec::new();
    let mut stages = Vec::new();
    let mut switches = Vec::new();
    let mut s_start = 0.0;

    loop {
        let sol = HeSolution::new(case, &ybus, &clamps, opts.order)?;
        let k = solutions.len();
        if k > 0 && !sol.converged_at(s_start, opts.method, opts.tol) {
            return Err(Error::NonConvergentStage {
                stage: k,
                s_start,
                last_valid_s: s_start,
            });
        }
        let q_at = |id: BusId, s: f64| {
            sol.q_gen(id, s, opts.method)
                .expect("limited bus is PV")
                .value
                .re
        };
        let free: Vec<Limits> = limited
            .iter()
            .copied()
            .filter(|l| !clamps.iter().any(|c| c.bus == l.bus))
            .collect();
        for l in &free {
            if violation(q_at(l.bus, s_start), l).is_none() {
                armed.insert(l.bus);
            }
        }

        let mut next: Option<(f64, Limits, QLimit)> = None;
        let mut prev = s_start;
        let steps = ((s_max - s_start) / opts.scan_step).ceil().max(0.0) as usize;
        for j in 1..=steps {
            let s = (s_start + j as f64 * opts.scan_step).min(s_max);
            if !sol.converged_at(s, opts.method, opts.tol) {
                break;
            }
            for l in free.iter().filter(|l| armed.contains(&l.bus)) {
                let Some(limit) = violation(q_at(l.bus, s), l) else {
                    continue;
                };
                let bound = match limit {
                    QLimit::Qmax => l.q_max,
                    QLimit::Qmin => l.q_min,
                };
                let outside = |x: f64| match limit {
                    QLimit::Qmax => q_at(l.bus, x) > bound,
                    QLimit::Qmin => q_at(l.bus, x) < bound,
                };
                let (mut lo, mut hi) = (prev, s);
                while hi - lo > opts.switch_tol {
                    let mid = 0.5 * (lo + hi);
                    if outside(mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let s_cross = 0.5 * (lo + hi);
                let better = match next {
                    None => true,
                    Some((s0, l0, _)) => s_cross < s0 || (s_cross == s0 && l.bus < l0.bus),
                };
                if better {
                    next = Some((s_cross, *l, limit));
                }
            }
            if next.is_some() {
                break;
            }
            for l in &free {
                if violation(q_at(l.bus, s), l).is_none() {
                    armed.insert(l.bus);
                }
            }
            prev = s;
        }

        match next {
            Some((s_cross, l, limit)) => {
                stages.push(Stage {
                    s_start,
                    s_end: s_cross,
                    clamps: clamps.clone(),
                });
                solutions.push(sol);
                if stages.len() >= max_stages {
                    return Err(Error::OscillatingSwitch {
                        bus: l.bus,
                        count: stages.len(),
                    });
                }
                log::info!(
                    "bus {} reaches {} at s = {s_cross}; retyped PQ",
                    l.bus,
                    limit.as_str()
                );
                switches.push(SwitchEvent {
                    bus: l.bus,
                    limit,
                    s: s_cross,
                });
                clamps.push(Clamp {
                    bus: l.bus,
                    limit,
                    q_gen: match limit {
                        QLimit::Qmax => l.q_max,
                        QLimit::Qmin => l.q_min,
                    },
                });
                s_start = s_cross;
            }
            None => {
                stages.push(Stage {
                    s_start,
                    s_end: s_max,
                    clamps: clamps.clone(),
                });
                solutions.push(sol);
                return Ok(StagedSolution {
                    stages: solutions,
                    plan: StagePlan { stages, switches },
                });
            }
        }
    }
}
