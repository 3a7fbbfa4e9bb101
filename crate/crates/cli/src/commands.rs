use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;
use sigma_he::he::{solve, solve_with_qlimits, HeSolution, StagedSolution, SwitchEvent};
use sigma_he::oracle::{power_mismatch, solve_from, PowerFlowProblem};
use sigma_he::sigma::{assess, boundary_delta, CriticalStatus};
use sigma_he::{build_ybus, load_case, BusId, NetworkCase};

use crate::config::{CliError, RunConfig};
use crate::numfmt::ser;

/// Rendered document plus the reason for a non-zero exit, if any. The
/// document is written even when the run reports an infeasibility.
#[derive(Clone, Debug)]
pub struct Output {
    pub body: String,
    pub infeasible: Option<String>,
}

impl Output {
    pub fn exit_code(&self) -> i32 {
        if self.infeasible.is_some() {
            2
        } else {
            0
        }
    }
}

pub fn read_case(path: &Path) -> Result<NetworkCase, CliError> {
    load_case(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Embedded solution on `[0, s_max]`, staged when reactive limits are on.
pub fn staged(case: &NetworkCase, s_max: f64, cfg: &RunConfig) -> Result<StagedSolution, CliError> {
    if cfg.q_limits && s_max > 0.0 {
        let st = solve_with_qlimits(case, s_max, &cfg.he_options())?;
        log::info!(
            "{} stage(s), {} switch(es) up to s = {s_max}",
            st.stages.len(),
            st.plan.switches.len()
        );
        Ok(st)
    } else {
        Ok(StagedSolution::single(solve(case, cfg.order)?, s_max))
    }
}

#[derive(Serialize)]
pub struct SwitchDoc {
    pub bus: BusId,
    #[serde(serialize_with = "ser::f64")]
    pub s: f64,
    pub limit: &'static str,
}

pub fn switch_docs(events: &[SwitchEvent], lo: f64, hi: f64) -> Vec<SwitchDoc> {
    events
        .iter()
        .filter(|e| e.s >= lo && e.s <= hi)
        .map(|e| SwitchDoc {
            bus: e.bus,
            s: e.s,
            limit: e.limit.as_str(),
        })
        .collect()
}

fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("report serializes");
    s.push('\n');
    s
}

fn kind(sol: &HeSolution, id: BusId) -> &'static str {
    if id == sol.swing_id() {
        "swing"
    } else if sol.is_pv(id) {
        "pv"
    } else {
        "pq"
    }
}

/// HE voltages at `s` in case order.
fn case_voltages(case: &NetworkCase, sol: &HeSolution, v: &[Complex64]) -> Vec<Complex64> {
    case.buses
        .iter()
        .map(|b| v[sol.index_of(b.id).expect("bus in solution")])
        .collect()
}

#[derive(Serialize)]
struct BusDoc {
    bus: BusId,
    kind: &'static str,
    #[serde(serialize_with = "ser::f64")]
    vm: f64,
    #[serde(serialize_with = "ser::f64")]
    va_deg: f64,
    #[serde(serialize_with = "ser::f64")]
    p_inj: f64,
    #[serde(serialize_with = "ser::f64")]
    q_inj: f64,
    #[serde(serialize_with = "ser::opt")]
    q_gen: Option<f64>,
    #[serde(serialize_with = "ser::opt")]
    sigma_re: Option<f64>,
    #[serde(serialize_with = "ser::opt")]
    sigma_im: Option<f64>,
    #[serde(serialize_with = "ser::opt")]
    delta: Option<f64>,
}

#[derive(Serialize)]
struct SolveDoc {
    #[serde(serialize_with = "ser::f64")]
    s: f64,
    order: usize,
    method: String,
    q_limits: bool,
    status: &'static str,
    stage: usize,
    #[serde(serialize_with = "ser::f64")]
    max_mismatch: f64,
    #[serde(serialize_with = "ser::f64")]
    max_increment: f64,
    switches: Vec<SwitchDoc>,
    buses: Vec<BusDoc>,
}

pub fn cmd_solve(cfg: &RunConfig, s: f64) -> Result<Output, CliError> {
    let case = read_case(&cfg.case)?;
    let st = staged(&case, s, cfg)?;
    let k = st.stage_index(s);
    let sol = &st.stages[k];
    let m = cfg.method;
    let v = sol.voltages(s, m);
    let ybus = build_ybus(&case);
    let currents: Vec<Complex64> = (0..ybus.dim())
        .map(|i| {
            (0..ybus.dim())
                .map(|j| ybus.get(i, j) * v[sol.index_of(ybus.id_of(j)).unwrap()])
                .sum()
        })
        .collect();

    let mut increment = sol.voltage_increment(s, m);
    let mut feasible = true;
    let mut buses = Vec::with_capacity(case.buses.len());
    for b in &case.buses {
        let vi = v[sol.index_of(b.id).unwrap()];
        let si = vi * currents[ybus.index_of(b.id).unwrap()].conj();
        let sigma = sol.sigma_at(b.id, s, m);
        if let Some(e) = &sigma {
            increment = increment.max(e.increment);
            feasible &= boundary_delta(e.value) >= 0.0;
        }
        let q_gen = if b.id == sol.swing_id() {
            Some(si.im + s * b.q_load)
        } else {
            sol.q_gen(b.id, s, m).map(|e| e.value.re)
        };
        buses.push(BusDoc {
            bus: b.id,
            kind: kind(sol, b.id),
            vm: vi.norm(),
            va_deg: vi.arg().to_degrees(),
            p_inj: si.re,
            q_inj: si.im,
            q_gen,
            sigma_re: sigma.map(|e| e.value.re),
            sigma_im: sigma.map(|e| e.value.im),
            delta: sigma.map(|e| boundary_delta(e.value)),
        });
    }
    let mismatch = power_mismatch(&case, sol.clamps(), s, &case_voltages(&case, sol, &v));
    let status = if !(increment < cfg.tol) {
        "not converged"
    } else if !feasible {
        "infeasible"
    } else {
        "converged"
    };
    let doc = SolveDoc {
        s,
        order: cfg.order,
        method: m.to_string(),
        q_limits: cfg.q_limits,
        status,
        stage: k,
        max_mismatch: mismatch,
        max_increment: increment,
        switches: switch_docs(&st.plan.switches, 0.0, s),
        buses,
    };
    Ok(Output {
        body: to_json(&doc),
        infeasible: (status != "converged").then(|| format!("series {status} at s = {s}")),
    })
}

#[derive(Serialize)]
struct RankDoc {
    bus: BusId,
    #[serde(serialize_with = "ser::opt")]
    s_crossing: Option<f64>,
    #[serde(serialize_with = "ser::opt")]
    delta_at_limit: Option<f64>,
    /// Secondary diagnostic; the ranking is by crossing loading.
    #[serde(serialize_with = "ser::opt")]
    distance_at_unit_load: Option<f64>,
}

#[derive(Serialize)]
struct MarginDoc {
    #[serde(serialize_with = "ser::opt")]
    s_critical: Option<f64>,
    limiting_bus: Option<BusId>,
    status: &'static str,
    stage: Option<usize>,
    #[serde(serialize_with = "ser::f64")]
    s_from: f64,
    #[serde(serialize_with = "ser::f64")]
    s_to: f64,
    q_limits: bool,
    switches: Vec<SwitchDoc>,
    ranking: Vec<RankDoc>,
}

pub fn status_text(status: Option<CriticalStatus>) -> &'static str {
    match status {
        Some(CriticalStatus::BoundaryCrossing) => "boundary crossing",
        Some(CriticalStatus::ConvergenceLimit) => "convergence limit",
        None => "no collapse in range",
    }
}

pub fn cmd_margin(cfg: &RunConfig, from: f64, to: f64, bisect_tol: f64) -> Result<Output, CliError> {
    let case = read_case(&cfg.case)?;
    let st = staged(&case, to, cfg)?;
    let report = assess(&st, from, to, bisect_tol, &cfg.he_options())?;
    let c = report.critical.as_ref();
    let doc = MarginDoc {
        s_critical: c.map(|c| c.s_critical),
        limiting_bus: c.map(|c| c.limiting_bus),
        status: status_text(c.map(|c| c.status)),
        stage: c.map(|c| c.stage),
        s_from: from,
        s_to: to,
        q_limits: cfg.q_limits,
        switches: switch_docs(&report.plan.switches, from, c.map_or(to, |c| c.s_critical)),
        ranking: report
            .ranking
            .iter()
            .map(|r| RankDoc {
                bus: r.bus,
                s_crossing: r.s_crossing,
                delta_at_limit: r.delta_at_limit,
                distance_at_unit_load: r.distance_at_unit_load,
            })
            .collect(),
    };
    Ok(Output {
        body: to_json(&doc),
        infeasible: None,
    })
}

#[derive(Serialize)]
struct OracleBus {
    bus: BusId,
    #[serde(serialize_with = "ser::f64")]
    vm_he: f64,
    #[serde(serialize_with = "ser::f64")]
    va_deg_he: f64,
    #[serde(serialize_with = "ser::opt")]
    vm_nr: Option<f64>,
    #[serde(serialize_with = "ser::opt")]
    va_deg_nr: Option<f64>,
    #[serde(serialize_with = "ser::opt")]
    deviation: Option<f64>,
}

#[derive(Serialize)]
struct OracleDoc {
    #[serde(serialize_with = "ser::f64")]
    s: f64,
    q_limits: bool,
    status: &'static str,
    he_status: &'static str,
    #[serde(serialize_with = "ser::opt")]
    max_deviation: Option<f64>,
    newton_iterations: Option<usize>,
    #[serde(serialize_with = "ser::opt")]
    newton_mismatch: Option<f64>,
    message: Option<String>,
    buses: Vec<OracleBus>,
}

pub fn cmd_oracle(
    cfg: &RunConfig,
    s: f64,
    newton_tol: f64,
    max_iter: usize,
) -> Result<Output, CliError> {
    let case = read_case(&cfg.case)?;
    let st = staged(&case, s, cfg)?;
    let sol = st.solution_at(s);
    let he_ok = sol.converged_at(s, cfg.method, cfg.tol);
    let v_he = case_voltages(&case, sol, &sol.voltages(s, cfg.method));

    let problem = PowerFlowProblem::new(&case, sol.clamps(), s);
    let nr = solve_from(&problem, s, &problem.flat_start(), newton_tol, max_iter);
    let (status, message) = match &nr {
        Ok(_) => ("ok", None),
        Err(e) => ("oracle diverged", Some(e.to_string())),
    };
    let nr = nr.ok();
    let buses: Vec<OracleBus> = case
        .buses
        .iter()
        .zip(&v_he)
        .enumerate()
        .map(|(i, (b, vh))| {
            let vn = nr.as_ref().map(|n| n.voltages[i]);
            OracleBus {
                bus: b.id,
                vm_he: vh.norm(),
                va_deg_he: vh.arg().to_degrees(),
                vm_nr: vn.map(|v| v.norm()),
                va_deg_nr: vn.map(|v| v.arg().to_degrees()),
                deviation: vn.map(|v| (vh - v).norm()),
            }
        })
        .collect();
    let max_deviation = nr.as_ref().map(|_| {
        buses
            .iter()
            .filter_map(|b| b.deviation)
            .fold(0.0, f64::max)
    });
    let doc = OracleDoc {
        s,
        q_limits: cfg.q_limits,
        status,
        he_status: if he_ok { "converged" } else { "not converged" },
        max_deviation,
        newton_iterations: nr.as_ref().map(|n| n.iterations),
        newton_mismatch: nr.as_ref().map(|n| n.max_mismatch),
        message,
        buses,
    };
    if !he_ok {
        log::warn!("series not converged at s = {s}");
    }
    // both outcomes are reported in the document
    Ok(Output {
        body: to_json(&doc),
        infeasible: None,
    })
}
