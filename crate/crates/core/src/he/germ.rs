use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::embedding::{BusInjection, Role};
use super::linear::{add_conj_coeff, add_lin_coeff};
use crate::error::{Error, Result};
use crate::network::AdmittanceMatrix;

const GERM_TOL: f64 = 1e-12;
const GERM_MAX_ITER: usize = 50;

/// Order-0 coefficients: the no-load network state.
#[derive(Clone, Debug, PartialEq)]
pub struct Germ {
    /// Internal bus order, swing first.
    pub v: Vec<Complex64>,
    pub w: Vec<Complex64>,
    pub m: Vec<Complex64>,
    /// Net reactive injection at s = 0 (meaningful at PV buses).
    pub q: Vec<f64>,
    /// Max-norm residual after each Newton iteration.
    pub residual_history: Vec<f64>,
}

impl Germ {
    pub fn residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::INFINITY)
    }
}

fn residuals(ybus: &AdmittanceMatrix, inj: &[BusInjection], v: &[Complex64]) -> Vec<f64> {
    let i = ybus.mul(v);
    let mut f = Vec::with_capacity(2 * (v.len() - 1));
    for k in 1..v.len() {
        let s = v[k] * i[k].conj();
        match inj[k].role {
            Role::Pv => {
                f.push(s.re - inj[k].s_const.re);
                f.push(v[k].norm_sqr() - inj[k].v_sp * inj[k].v_sp);
            }
            _ => {
                f.push(s.re - inj[k].s_const.re);
                f.push(s.im - inj[k].s_const.im);
            }
        }
    }
    f
}

fn max_abs(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton in rectangular coordinates on the s = 0 equations:
/// `V conj(YV) = S_const` at PQ buses, `Re(V conj(YV)) = 0` and
/// `|V|^2 = v_sp^2` at PV buses.
pub(crate) fn solve_germ(
    ybus: &AdmittanceMatrix,
    inj: &[BusInjection],
    v_sw: Complex64,
) -> Result<Germ> {
    let n = ybus.dim();
    let phase = v_sw / v_sw.norm();
    let mut v: Vec<Complex64> = (0..n)
        .map(|k| match inj[k].role {
            Role::Swing => v_sw,
            Role::Pv => phase * inj[k].v_sp,
            Role::Pq => v_sw,
        })
        .collect();

    let dim = 2 * (n - 1);
    let mut f = residuals(ybus, inj, &v);
    let mut history = vec![max_abs(&f)];
    while history.last().copied().unwrap_or(0.0) > GERM_TOL {
        if history.len() > GERM_MAX_ITER {
            return Err(Error::GermDivergence {
                residuals: history,
            });
        }
        let i = ybus.mul(&v);
        let mut jac = DMatrix::<f64>::zeros(dim, dim);
        for k in 1..n {
            let r = 2 * (k - 1);
            // dS_k = conj(I_k) dV_k + V_k sum_j conj(Y_kj) dconj(V_j)
            let mut lin = DMatrix::<f64>::zeros(2, dim);
            add_lin_coeff(&mut lin, 0, r, i[k].conj());
            for &(j, y) in ybus.row(k) {
                if j > 0 {
                    add_conj_coeff(&mut lin, 0, 2 * (j - 1), v[k] * y.conj());
                }
            }
            jac.row_mut(r).copy_from(&lin.row(0));
            if inj[k].role == Role::Pv {
                jac[(r + 1, r)] = 2.0 * v[k].re;
                jac[(r + 1, r + 1)] = 2.0 * v[k].im;
            } else {
                jac.row_mut(r + 1).copy_from(&lin.row(1));
            }
        }
        let rhs = -DVector::from_vec(f.clone());
        let dx = jac.lu().solve(&rhs).ok_or(Error::SingularSystem)?;

        let base = *history.last().unwrap();
        let mut step = 1.0;
        loop {
            let trial: Vec<Complex64> = (0..n)
                .map(|k| {
                    if k == 0 {
                        v[0]
                    } else {
                        let r = 2 * (k - 1);
                        v[k] + Complex64::new(dx[r], dx[r + 1]) * step
                    }
                })
                .collect();
            let ft = residuals(ybus, inj, &trial);
            if max_abs(&ft) < base || step < 1.0 / 64.0 {
                v = trial;
                f = ft;
                break;
            }
            step *= 0.5;
        }
        history.push(max_abs(&f));
    }

    let a = v_sw.norm_sqr();
    let i = ybus.mul(&v);
    let w = v.iter().map(|x| x.inv()).collect();
    let m = v.iter().map(|x| (x - v_sw) / a).collect();
    let q = (0..n).map(|k| (v[k] * i[k].conj()).im).collect();
    Ok(Germ {
        v,
        w,
        m,
        q,
        residual_history: history,
    })
}
