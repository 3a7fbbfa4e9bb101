use std::time::Instant;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;

use super::embedding::{injections, BusInjection, Role};
use super::germ::{solve_germ, Germ};
use super::linear::{add_conj_coeff, add_lin_coeff};
use crate::error::{Error, Result};
use crate::network::{build_ybus, AdmittanceMatrix, BusId, Clamp, NetworkCase};
use crate::series::{ComplexPowerSeries, EvalMethod, Evaluation};
use crate::sigma::sigma_coefficients;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

pub const DEFAULT_ORDER: usize = 30;

/// Embedded solution for one set of bus types.
///
/// Series are stored per bus in admittance-matrix order (swing first). With
/// `a = |V_sw|^2`, the voltage is `V = V_sw + a M` and `W = 1/V`.
#[derive(Clone, Debug)]
pub struct HeSolution {
    ids: Vec<BusId>,
    v_swing: Complex64,
    inj: Vec<BusInjection>,
    clamps: Vec<Clamp>,
    germ: Germ,
    w: Vec<ComplexPowerSeries>,
    m: Vec<ComplexPowerSeries>,
    v: Vec<ComplexPowerSeries>,
    q: Vec<Vec<f64>>,
    /// `q` as series, kept so that evaluation reuses the approximants.
    q_series: Vec<ComplexPowerSeries>,
    sigma: Vec<ComplexPowerSeries>,
    offsets: Vec<usize>,
    lu: LU<f64, Dyn, Dyn>,
}

pub fn compute_germ(case: &NetworkCase, ybus: &AdmittanceMatrix) -> Result<Germ> {
    solve_germ(ybus, &injections(case, ybus, &[]), case.v_swing())
}

/// Solves the embedding of `case` with declared bus types up to `order`.
pub fn solve(case: &NetworkCase, order: usize) -> Result<HeSolution> {
    let ybus = build_ybus(case);
    HeSolution::new(case, &ybus, &[], order)
}

pub fn extend_series(mut sol: HeSolution, target_order: usize) -> Result<HeSolution> {
    sol.extend_to(target_order)?;
    Ok(sol)
}

impl HeSolution {
    pub fn new(
        case: &NetworkCase,
        ybus: &AdmittanceMatrix,
        clamps: &[Clamp],
        order: usize,
    ) -> Result<Self> {
        let v_swing = case.v_swing();
        let inj = injections(case, ybus, clamps);
        let germ = solve_germ(ybus, &inj, v_swing)?;
        let n = ybus.dim();

        let mut offsets = Vec::with_capacity(n);
        let mut dim = 0;
        for b in &inj {
            offsets.push(dim);
            dim += match b.role {
                Role::Swing => 0,
                Role::Pq => 4,
                Role::Pv => 5,
            };
        }

        let a = v_swing.norm_sqr();
        let mut mat = DMatrix::<f64>::zeros(dim, dim);
        for i in 1..n {
            let r = offsets[i];
            for &(k, y) in ybus.row(i) {
                if k > 0 {
                    add_lin_coeff(&mut mat, r, offsets[k], y * a);
                }
            }
            let s0 = match inj[i].role {
                Role::Pv => Complex64::new(0.0, germ.q[i]),
                _ => inj[i].s_const,
            };
            add_conj_coeff(&mut mat, r, r + 2, -s0.conj());
            add_lin_coeff(&mut mat, r + 2, r, germ.w[i] * a);
            add_lin_coeff(&mut mat, r + 2, r + 2, germ.v[i]);
            if inj[i].role == Role::Pv {
                let cq = Complex64::new(0.0, 1.0) * germ.w[i].conj();
                mat[(r, r + 4)] += cq.re;
                mat[(r + 1, r + 4)] += cq.im;
                let cm = germ.v[i].conj() * (2.0 * a);
                mat[(r + 4, r)] += cm.re;
                mat[(r + 4, r + 1)] -= cm.im;
            }
        }
        let lu = mat.lu();
        if !lu.is_invertible() {
            return Err(Error::SingularSystem);
        }

        let one = |c: Complex64| ComplexPowerSeries::new(vec![c]);
        let mut sol = HeSolution {
            ids: ybus.bus_ids().to_vec(),
            v_swing,
            clamps: clamps.to_vec(),
            w: germ.w.iter().map(|&c| one(c)).collect(),
            m: germ.m.iter().map(|&c| one(c)).collect(),
            v: germ.v.iter().map(|&c| one(c)).collect(),
            q: (0..n)
                .map(|i| {
                    if inj[i].role == Role::Pv {
                        vec![germ.q[i]]
                    } else {
                        Vec::new()
                    }
                })
                .collect(),
            q_series: Vec::new(),
            sigma: Vec::new(),
            inj,
            germ,
            offsets,
            lu,
        };
        sol.extend_to(order)?;
        Ok(sol)
    }

    /// Computes further orders with the stored factorization.
    pub fn extend_to(&mut self, target_order: usize) -> Result<()> {
        let n = self.ids.len();
        let a = self.v_swing.norm_sqr();
        let dim = self.lu.l().nrows();
        for k in (self.order() + 1)..=target_order {
            let start = Instant::now();
            let mut b = DVector::<f64>::zeros(dim);
            for i in 1..n {
                let r = self.offsets[i];
                let w = self.w[i].coeffs();
                let v = self.v[i].coeffs();
                let inj = &self.inj[i];
                let rhs = match inj.role {
                    Role::Pv => {
                        let q = &self.q[i];
                        let mut acc = w[k - 1].conj() * inj.s_lin.re;
                        for t in 1..k {
                            acc -= Complex64::new(0.0, q[t]) * w[k - t].conj();
                        }
                        acc
                    }
                    _ => inj.s_lin.conj() * w[k - 1].conj(),
                };
                b[r] = rhs.re;
                b[r + 1] = rhs.im;
                let mut rw = ZERO;
                for t in 1..k {
                    rw -= w[t] * v[k - t];
                }
                b[r + 2] = rw.re;
                b[r + 3] = rw.im;
                if inj.role == Role::Pv {
                    let mut rv = 0.0;
                    for t in 1..k {
                        rv -= (v[t] * v[k - t].conj()).re;
                    }
                    b[r + 4] = rv;
                }
            }
            let x = self.lu.solve(&b).ok_or(Error::SingularSystem)?;
            self.w[0].push(ZERO);
            self.m[0].push(ZERO);
            self.v[0].push(ZERO);
            for i in 1..n {
                let r = self.offsets[i];
                let mk = Complex64::new(x[r], x[r + 1]);
                self.m[i].push(mk);
                self.w[i].push(Complex64::new(x[r + 2], x[r + 3]));
                self.v[i].push(mk * a);
                if self.inj[i].role == Role::Pv {
                    self.q[i].push(x[r + 4]);
                }
            }
            log::debug!("order {k} solved in {:?}", start.elapsed());
        }
        self.sigma = (0..n)
            .map(|i| {
                if i == 0 {
                    Ok(ComplexPowerSeries::default())
                } else {
                    sigma_coefficients(&self.w[i], &self.m[i])
                        .map_err(|_| Error::DegenerateGerm(self.ids[i]))
                }
            })
            .collect::<Result<_>>()?;
        self.q_series = self.q.iter().map(|q| ComplexPowerSeries::from_real(q)).collect();
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.w[0].order()
    }

    /// Bus ids in internal order; index 0 is the swing bus.
    pub fn bus_ids(&self) -> &[BusId] {
        &self.ids
    }

    /// Non-swing bus ids in internal order.
    pub fn channel_ids(&self) -> &[BusId] {
        &self.ids[1..]
    }

    pub fn swing_id(&self) -> BusId {
        self.ids[0]
    }

    pub fn index_of(&self, id: BusId) -> Option<usize> {
        self.ids.iter().position(|&b| b == id)
    }

    fn idx(&self, id: BusId) -> usize {
        self.index_of(id)
            .unwrap_or_else(|| panic!("bus {id} is not part of this solution"))
    }

    pub fn v_swing(&self) -> Complex64 {
        self.v_swing
    }

    pub fn germ(&self) -> &Germ {
        &self.germ
    }

    pub fn clamps(&self) -> &[Clamp] {
        &self.clamps
    }

    pub fn w(&self, id: BusId) -> &ComplexPowerSeries {
        &self.w[self.idx(id)]
    }

    pub fn m(&self, id: BusId) -> &ComplexPowerSeries {
        &self.m[self.idx(id)]
    }

    pub fn voltage_series(&self, id: BusId) -> &ComplexPowerSeries {
        &self.v[self.idx(id)]
    }

    /// Sigma series; `None` at the swing bus where it is undefined.
    pub fn sigma(&self, id: BusId) -> Option<&ComplexPowerSeries> {
        match self.idx(id) {
            0 => None,
            i => Some(&self.sigma[i]),
        }
    }

    /// Net reactive injection series at a free PV bus.
    pub fn q(&self, id: BusId) -> Option<&[f64]> {
        let q = &self.q[self.idx(id)];
        (!q.is_empty()).then_some(q.as_slice())
    }

    pub fn is_pv(&self, id: BusId) -> bool {
        self.inj[self.idx(id)].role == Role::Pv
    }

    pub fn voltage(&self, id: BusId, s: f64, method: EvalMethod) -> Evaluation {
        self.v[self.idx(id)].evaluate_with_increment(s, method)
    }

    /// All bus voltages at `s` in internal order.
    pub fn voltages(&self, s: f64, method: EvalMethod) -> Vec<Complex64> {
        self.v.iter().map(|v| v.evaluate(s, method)).collect()
    }

    pub fn sigma_at(&self, id: BusId, s: f64, method: EvalMethod) -> Option<Evaluation> {
        self.sigma(id).map(|f| f.evaluate_with_increment(s, method))
    }

    /// Complex injection `S_i(s)` at a bus, with the reactive part of free PV
    /// buses taken from the Q series. `None` at the swing bus.
    pub fn injection(&self, id: BusId, s: f64, method: EvalMethod) -> Option<Complex64> {
        let i = self.idx(id);
        let inj = &self.inj[i];
        match inj.role {
            Role::Swing => None,
            Role::Pq => Some(inj.s_lin * s + inj.s_const),
            Role::Pv => {
                let q = self.q_series[i].evaluate(s, method).re;
                Some(Complex64::new(inj.s_lin.re * s, q))
            }
        }
    }

    /// Generator reactive output at a PV bus (free or clamped): net injection
    /// plus the local reactive load.
    pub fn q_gen(&self, id: BusId, s: f64, method: EvalMethod) -> Option<Evaluation> {
        let i = self.idx(id);
        if let Some(c) = self.clamps.iter().find(|c| c.bus == id) {
            return Some(Evaluation {
                value: Complex64::new(c.q_gen, 0.0),
                increment: 0.0,
                method,
            });
        }
        if self.inj[i].role != Role::Pv {
            return None;
        }
        let e = self.q_series[i].evaluate_with_increment(s, method);
        Some(Evaluation {
            value: Complex64::new(e.value.re - self.inj[i].s_lin.im * s, 0.0),
            ..e
        })
    }

    /// Largest correction over all bus voltages at `s`.
    pub fn voltage_increment(&self, s: f64, method: EvalMethod) -> f64 {
        self.v
            .iter()
            .skip(1)
            .map(|v| v.evaluate_with_increment(s, method).increment)
            .fold(0.0, f64::max)
    }

    pub fn converged_at(&self, s: f64, method: EvalMethod, tol: f64) -> bool {
        self.voltage_increment(s, method) < tol
    }

    /// Bus-level magnitude of each coefficient identity, maximized over buses
    /// and orders.
    pub fn identity_residuals(&self, ybus: &AdmittanceMatrix) -> IdentityResiduals {
        let n = self.ids.len();
        let a = self.v_swing.norm_sqr();
        let order = self.order();
        let mut r = IdentityResiduals::default();
        let vs = ComplexPowerSeries::new(
            std::iter::once(self.v_swing)
                .chain(std::iter::repeat_n(ZERO, order))
                .collect(),
        );
        for i in 1..n {
            let wc = self.w[i].conj();
            let prod = self.sigma[i].mul(&wc);
            let mw = self.m[i].mul(&self.w[i]);
            for k in 0..=order {
                r.sigma_convolution = r
                    .sigma_convolution
                    .max((prod.coeffs()[k] - self.m[i].coeffs()[k]).norm());
                let target = if k == 0 { 1.0 } else { 0.0 };
                let recip = vs.coeffs()[0] * self.w[i].coeffs()[k] + mw.coeffs()[k] * a;
                r.reciprocal = r.reciprocal.max((recip - target).norm());
            }
        }
        // network equations, order by order
        for k in 0..=order {
            let vk: Vec<Complex64> = (0..n).map(|i| self.v[i].coeffs()[k]).collect();
            let yv = ybus.mul(&vk);
            for i in 1..n {
                let inj = &self.inj[i];
                let w = self.w[i].coeffs();
                let mut rhs = ZERO;
                match inj.role {
                    Role::Pv => {
                        for t in 0..=k {
                            rhs -= Complex64::new(0.0, self.q[i][t]) * w[k - t].conj();
                        }
                        if k >= 1 {
                            rhs += w[k - 1].conj() * inj.s_lin.re;
                        }
                    }
                    _ => {
                        rhs += inj.s_const.conj() * w[k].conj();
                        if k >= 1 {
                            rhs += inj.s_lin.conj() * w[k - 1].conj();
                        }
                    }
                }
                r.network = r.network.max((yv[i] - rhs).norm());
                if inj.role == Role::Pv {
                    let v = self.v[i].coeffs();
                    let vv: f64 = (0..=k).map(|t| (v[t] * v[k - t].conj()).re).sum();
                    let target = if k == 0 { inj.v_sp * inj.v_sp } else { 0.0 };
                    r.magnitude = r.magnitude.max((vv - target).abs());
                }
            }
        }
        r
    }
}

/// Worst coefficient mismatch of each identity over all orders and buses.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IdentityResiduals {
    /// `M[n] - (sigma * W*)[n]`.
    pub sigma_convolution: f64,
    /// `V_sw W[n] + |V_sw|^2 (M * W)[n] - [n = 0]`, i.e. `W V = 1`.
    pub reciprocal: f64,
    /// Nodal current balance `(Y V)[n] - (conj(S) * W*)[n]`.
    pub network: f64,
    /// `(V V*)[n] - [n = 0] |V_sp|^2` at free PV buses.
    pub magnitude: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.sigma_convolution
            .max(self.reciprocal)
            .max(self.network)
            .max(self.magnitude)
    }
}
