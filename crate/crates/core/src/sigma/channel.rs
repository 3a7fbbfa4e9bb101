use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::ComplexPowerSeries;

/// Coefficients below this many ulps of the terms that formed them are
/// rounding residue and are set to exactly zero.
const CHOP_ULPS: f64 = 64.0;

/// Solves `M = sigma * conj(W)` order by order for the sigma series.
///
/// `conj(W)` here is the conjugate-coefficient series `W*(s*)`.
pub fn sigma_coefficients(
    w: &ComplexPowerSeries,
    m: &ComplexPowerSeries,
) -> Result<ComplexPowerSeries> {
    let wc = w.coeffs();
    let mc = m.coeffs();
    let n = wc.len().min(mc.len());
    if n == 0 {
        return Ok(ComplexPowerSeries::default());
    }
    let w0 = wc[0].conj();
    if w0.norm() == 0.0 {
        return Err(Error::DegenerateGerm(0));
    }
    let mut sigma: Vec<Complex64> = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = mc[k];
        let mut scale = mc[k].norm();
        for t in 0..k {
            let term = sigma[t] * wc[k - t].conj();
            acc -= term;
            scale += term.norm();
        }
        let mut v = acc / w0;
        if v.norm() <= CHOP_ULPS * f64::EPSILON * scale / w0.norm() {
            v = Complex64::new(0.0, 0.0);
        }
        sigma.push(v);
    }
    Ok(ComplexPowerSeries::new(sigma))
}

/// Discriminant of the channel equation; non-negative iff a channel voltage
/// exists.
pub fn boundary_delta(sigma: Complex64) -> f64 {
    0.25 + sigma.re - sigma.im * sigma.im
}

/// Upper root of `U = 1 + sigma / conj(U)`, normalized to the swing voltage.
pub fn two_bus_voltage(sigma: Complex64) -> Result<Complex64> {
    let delta = boundary_delta(sigma);
    if delta < 0.0 {
        return Err(Error::InfeasibleChannel(delta));
    }
    Ok(Complex64::new(0.5 + delta.sqrt(), sigma.im))
}

/// Channel impedance `Z` with `sigma = Z conj(S) / |V_sw|^2`.
pub fn virtual_impedance(sigma: Complex64, injection: Complex64, v_sw: Complex64) -> Result<Complex64> {
    if injection.norm() == 0.0 {
        return Err(Error::ZeroInjection);
    }
    Ok(sigma * v_sw.norm_sqr() / injection.conj())
}
