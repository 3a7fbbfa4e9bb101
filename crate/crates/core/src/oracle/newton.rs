use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{build_ybus, BusId, BusType, Clamp, NetworkCase};

const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Slack,
    Pv,
    Pq,
}

/// Polar power-flow equations of a case at load scale `s`.
///
/// The state vector is `[theta at PV and PQ buses, |V| at PQ buses]` in case
/// order; mismatches are `[dP at PV and PQ, dQ at PQ]`.
#[derive(Clone, Debug)]
pub struct PowerFlowProblem {
    ids: Vec<BusId>,
    kinds: Vec<Kind>,
    y: DMatrix<Complex64>,
    v_set: Vec<Complex64>,
    p_spec: Vec<f64>,
    q_spec: Vec<f64>,
    angle_buses: Vec<usize>,
    mag_buses: Vec<usize>,
}

impl PowerFlowProblem {
    /// `clamps` retype PV buses to PQ with fixed generator reactive output.
    pub fn new(case: &NetworkCase, clamps: &[Clamp], s: f64) -> Self {
        let ybus = build_ybus(case);
        let n = case.buses.len();
        let y = DMatrix::from_fn(n, n, |i, k| {
            ybus.get(
                ybus.index_of(case.buses[i].id).unwrap(),
                ybus.index_of(case.buses[k].id).unwrap(),
            )
        });
        let mut kinds = Vec::with_capacity(n);
        let mut p_spec = Vec::with_capacity(n);
        let mut q_spec = Vec::with_capacity(n);
        let mut v_set = Vec::with_capacity(n);
        for b in &case.buses {
            let gen = case.gen_totals(b.id);
            let p_gen = gen.map_or(0.0, |g| g.p_gen);
            let clamp = clamps.iter().find(|c| c.bus == b.id);
            let kind = match (b.btype, clamp) {
                (BusType::Swing, _) => Kind::Slack,
                (BusType::PV, None) => Kind::Pv,
                _ => Kind::Pq,
            };
            kinds.push(kind);
            p_spec.push(s * (p_gen - b.p_load));
            q_spec.push(clamp.map_or(0.0, |c| c.q_gen) - s * b.q_load);
            v_set.push(Complex64::from_polar(
                if kind == Kind::Pq { 1.0 } else { b.v_sp },
                b.v_angle_sp,
            ));
        }
        let angle_buses = (0..n).filter(|&i| kinds[i] != Kind::Slack).collect();
        let mag_buses = (0..n).filter(|&i| kinds[i] == Kind::Pq).collect();
        Self {
            ids: case.buses.iter().map(|b| b.id).collect(),
            kinds,
            y,
            v_set,
            p_spec,
            q_spec,
            angle_buses,
            mag_buses,
        }
    }

    pub fn bus_ids(&self) -> &[BusId] {
        &self.ids
    }

    pub fn dim(&self) -> usize {
        self.angle_buses.len() + self.mag_buses.len()
    }

    /// Flat start: set-point magnitudes, swing angle everywhere.
    pub fn flat_start(&self) -> Vec<Complex64> {
        let slack = self.kinds.iter().position(|&k| k == Kind::Slack).unwrap();
        let angle = self.v_set[slack].arg();
        self.v_set
            .iter()
            .map(|v| Complex64::from_polar(v.norm(), angle))
            .collect()
    }

    pub fn state(&self, v: &[Complex64]) -> DVector<f64> {
        let it = self
            .angle_buses
            .iter()
            .map(|&i| v[i].arg())
            .chain(self.mag_buses.iter().map(|&i| v[i].norm()));
        DVector::from_iterator(self.dim(), it)
    }

    /// Voltages for state `x`; magnitudes and angles not in the state are
    /// taken from `base`.
    pub fn voltages(&self, x: &DVector<f64>, base: &[Complex64]) -> Vec<Complex64> {
        let mut vm: Vec<f64> = base.iter().map(|v| v.norm()).collect();
        let mut va: Vec<f64> = base.iter().map(|v| v.arg()).collect();
        let na = self.angle_buses.len();
        for (k, &i) in self.angle_buses.iter().enumerate() {
            va[i] = x[k];
        }
        for (k, &i) in self.mag_buses.iter().enumerate() {
            vm[i] = x[na + k];
        }
        vm.iter()
            .zip(&va)
            .map(|(&m, &a)| Complex64::from_polar(m, a))
            .collect()
    }

    fn currents(&self, v: &[Complex64]) -> Vec<Complex64> {
        let vv = DVector::from_column_slice(v);
        (&self.y * vv).iter().copied().collect()
    }

    pub fn mismatch(&self, v: &[Complex64]) -> DVector<f64> {
        let i = self.currents(v);
        let s: Vec<Complex64> = v.iter().zip(&i).map(|(v, i)| v * i.conj()).collect();
        let it = self
            .angle_buses
            .iter()
            .map(|&k| s[k].re - self.p_spec[k])
            .chain(self.mag_buses.iter().map(|&k| s[k].im - self.q_spec[k]));
        DVector::from_iterator(self.dim(), it)
    }

    /// Analytic Jacobian of `mismatch` with respect to the state.
    pub fn jacobian(&self, v: &[Complex64]) -> DMatrix<f64> {
        let ibus = self.currents(v);
        // dS/dVa = j diag(V) conj(diag(I) - Y diag(V))
        // dS/dVm = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|)
        let unit: Vec<Complex64> = v.iter().map(|x| x / x.norm()).collect();
        let ds_dva = |r: usize, c: usize| {
            let mut t = -self.y[(r, c)] * v[c];
            if r == c {
                t += ibus[r];
            }
            J * v[r] * t.conj()
        };
        let ds_dvm = |r: usize, c: usize| {
            let mut t = v[r] * (self.y[(r, c)] * unit[c]).conj();
            if r == c {
                t += ibus[r].conj() * unit[r];
            }
            t
        };
        let na = self.angle_buses.len();
        let dim = self.dim();
        DMatrix::from_fn(dim, dim, |row, col| {
            let (r, real) = if row < na {
                (self.angle_buses[row], true)
            } else {
                (self.mag_buses[row - na], false)
            };
            let d = if col < na {
                ds_dva(r, self.angle_buses[col])
            } else {
                ds_dvm(r, self.mag_buses[col - na])
            };
            if real {
                d.re
            } else {
                d.im
            }
        })
    }

    /// Generator reactive output at each non-PQ bus as `(id, q)`.
    pub fn q_gen(&self, v: &[Complex64]) -> Vec<(BusId, f64)> {
        let i = self.currents(v);
        (0..v.len())
            .filter(|&k| self.kinds[k] != Kind::Pq)
            // q_spec at these buses is minus the scaled reactive load
            .map(|k| (self.ids[k], (v[k] * i[k].conj()).im - self.q_spec[k]))
            .collect()
    }
}

/// Newton solution at one load scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PfSolution {
    pub s: f64,
    /// Bus ids in case order.
    pub bus_ids: Vec<BusId>,
    pub voltages: Vec<Complex64>,
    /// Generator reactive output at PV and swing buses.
    pub q_gen: Vec<(BusId, f64)>,
    pub iterations: usize,
    pub max_mismatch: f64,
}

impl PfSolution {
    pub fn voltage(&self, id: BusId) -> Option<Complex64> {
        self.bus_ids
            .iter()
            .position(|&b| b == id)
            .map(|k| self.voltages[k])
    }
}

pub fn newton_solve(case: &NetworkCase, s: f64, tol: f64, max_iter: usize) -> Result<PfSolution> {
    let problem = PowerFlowProblem::new(case, &[], s);
    let start = problem.flat_start();
    solve_from(&problem, s, &start, tol, max_iter)
}

/// Full Newton-Raphson from a given starting voltage vector.
pub fn solve_from(
    problem: &PowerFlowProblem,
    s: f64,
    start: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> Result<PfSolution> {
    let mut v = start.to_vec();
    let mut x = problem.state(&v);
    let mut f = problem.mismatch(&v);
    let mut norm = f.amax();
    let mut it = 0;
    while !(norm < tol) {
        if it >= max_iter || !norm.is_finite() || norm > 1e8 {
            return Err(Error::OracleDivergence {
                s,
                iterations: it,
                mismatch: norm,
            });
        }
        let jac = problem.jacobian(&v);
        let dx = jac.lu().solve(&(-&f)).ok_or(Error::OracleDivergence {
            s,
            iterations: it,
            mismatch: norm,
        })?;
        x += dx;
        v = problem.voltages(&x, &v);
        f = problem.mismatch(&v);
        norm = f.amax();
        it += 1;
    }
    Ok(PfSolution {
        s,
        bus_ids: problem.bus_ids().to_vec(),
        q_gen: problem.q_gen(&v),
        voltages: v,
        iterations: it,
        max_mismatch: norm,
    })
}

/// Largest active/reactive power mismatch of `voltages` (case order) at load
/// scale `s`: active power at every non-swing bus, reactive power at PQ
/// buses, and set-point magnitude error at PV buses.
pub fn power_mismatch(case: &NetworkCase, clamps: &[Clamp], s: f64, voltages: &[Complex64]) -> f64 {
    let problem = PowerFlowProblem::new(case, clamps, s);
    let f = problem.mismatch(voltages).amax();
    let mag = problem
        .kinds
        .iter()
        .enumerate()
        .filter(|(_, &k)| k == Kind::Pv)
        .map(|(i, _)| (voltages[i].norm() - problem.v_set[i].norm()).abs())
        .fold(0.0, f64::max);
    f.max(mag)
}
