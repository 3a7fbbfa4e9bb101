//! Truncated complex power series in the load scale `s`, with partial-sum
//! and Padé evaluation plus a radius-of-convergence estimate.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{DMatrix, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Relative singular-value cutoff used to detect degenerate Padé blocks.
const PADE_RANK_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EvalMethod {
    Direct,
    #[default]
    Pade,
}

impl fmt::Display for EvalMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMethod::Direct => "direct",
            EvalMethod::Pade => "pade",
        })
    }
}

impl FromStr for EvalMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(EvalMethod::Direct),
            "pade" => Ok(EvalMethod::Pade),
            other => Err(format!("unknown evaluation method '{other}'")),
        }
    }
}

/// Value of a series at a point together with a convergence indicator.
///
/// `increment` is the size of the last correction: the last partial-sum term
/// for direct evaluation, or the change between the approximants built from
/// `n` and `n - 1` coefficients for Padé.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub value: Complex64,
    pub increment: f64,
    pub method: EvalMethod,
}

impl Evaluation {
    pub fn converged(&self, tol: f64) -> bool {
        self.value.re.is_finite() && self.value.im.is_finite() && self.increment < tol
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Radius {
    Finite(f64),
    /// The stored coefficients terminate: the series is a polynomial.
    Unbounded,
}

impl Radius {
    pub fn value(self) -> f64 {
        match self {
            Radius::Finite(r) => r,
            Radius::Unbounded => f64::INFINITY,
        }
    }
}

/// Approximants of orders `n` and `n - 1`, built on first Padé evaluation.
type PadePair = Option<(PadeApproximant, PadeApproximant)>;

#[derive(Clone, Default, Serialize, Deserialize)]
pub struct ComplexPowerSeries {
    coeffs: Vec<Complex64>,
    #[serde(skip)]
    pade: OnceLock<PadePair>,
}

impl PartialEq for ComplexPowerSeries {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs
    }
}

impl fmt::Debug for ComplexPowerSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("ComplexPowerSeries").field(&self.coeffs).finish()
    }
}

impl ComplexPowerSeries {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self {
            coeffs,
            pade: OnceLock::new(),
        }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Highest stored order, `n` in `c[0..=n]`.
    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn push(&mut self, c: Complex64) {
        self.coeffs.push(c);
        self.pade = OnceLock::new();
    }

    pub fn truncated(&self, order: usize) -> Self {
        Self::new(self.coeffs[..=order.min(self.order())].to_vec())
    }

    /// Coefficients of `f*(s*)`.
    pub fn conj(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.conj()).collect())
    }

    /// Index of the last non-zero coefficient (0 for the zero series).
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| *c != ZERO).unwrap_or(0)
    }

    /// `(self * other)[n]`.
    pub fn convolve_at(&self, other: &Self, n: usize) -> Complex64 {
        (0..=n).map(|t| self.coeffs[t] * other.coeffs[n - t]).sum()
    }

    /// Cauchy product truncated to the shorter operand.
    pub fn mul(&self, other: &Self) -> Self {
        let n = self.len().min(other.len());
        Self::new((0..n).map(|k| self.convolve_at(other, k)).collect())
    }

    pub fn horner(&self, s: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * s + c)
    }

    pub fn evaluate(&self, s: f64, method: EvalMethod) -> Complex64 {
        self.evaluate_with_increment(s, method).value
    }

    pub fn evaluate_with_increment(&self, s: f64, method: EvalMethod) -> Evaluation {
        assert!(!self.coeffs.is_empty(), "cannot evaluate an empty series");
        let n = self.order();
        let polynomial = self.degree() <= n / 2;
        if method == EvalMethod::Pade && n >= 2 && !polynomial {
            if let Some((full, lower)) = self.pade_pair() {
                let (v, w) = (full.eval(s), lower.eval(s));
                if v.re.is_finite() && v.im.is_finite() && w.re.is_finite() && w.im.is_finite() {
                    return Evaluation {
                        value: v,
                        increment: (v - w).norm(),
                        method: EvalMethod::Pade,
                    };
                }
            }
            log::debug!("Padé value not finite at s = {s}; using partial sums");
        }
        let sc = Complex64::new(s, 0.0);
        let last = (self.coeffs[n] * sc.powu(n as u32)).norm();
        let prev = if n >= 1 && !polynomial {
            (self.coeffs[n - 1] * sc.powu(n as u32 - 1)).norm()
        } else {
            0.0
        };
        Evaluation {
            value: self.horner(sc),
            increment: last.max(prev),
            method: EvalMethod::Direct,
        }
    }

    fn pade_pair(&self) -> Option<&(PadeApproximant, PadeApproximant)> {
        self.pade
            .get_or_init(|| {
                let n = self.order();
                let scale = match self.radius_estimate() {
                    Radius::Finite(r) if r.is_finite() && r > 0.0 => r,
                    _ => 1.0,
                };
                let full = pade(&self.coeffs, n / 2, n - n / 2, scale);
                let lower = pade(&self.coeffs[..n], (n - 1) / 2, n - 1 - (n - 1) / 2, scale);
                let pair = full.zip(lower);
                if pair.is_none() {
                    log::warn!("Padé construction singular; falling back to partial sums");
                }
                pair
            })
            .as_ref()
    }

    /// Estimates the radius of convergence from the coefficient tail.
    ///
    /// Uses a Domb-Sykes fit of `|c[k]/c[k-1]|` against `1/k`, which is exact
    /// in the limit for algebraic branch points, and falls back to a
    /// log-linear root test when the ratios oscillate.
    pub fn radius_estimate(&self) -> Radius {
        let n = self.order();
        if self.degree() <= n / 2 {
            return Radius::Unbounded;
        }
        let mag: Vec<f64> = self.coeffs.iter().map(|c| c.norm()).collect();
        if n < 6 {
            return Radius::Finite(mag[n].powf(-1.0 / n as f64));
        }

        let lo = (n / 2).max(2);
        let pts: Vec<(f64, f64)> = (lo..=n)
            .filter(|&k| mag[k] > 0.0 && mag[k - 1] > 0.0)
            .map(|k| (1.0 / k as f64, mag[k] / mag[k - 1]))
            .collect();
        if pts.len() >= 4 {
            let (alpha, beta) = linear_fit(&pts);
            let mean = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
            let rms = (pts
                .iter()
                .map(|&(x, y)| (y - alpha - beta * x).powi(2))
                .sum::<f64>()
                / pts.len() as f64)
                .sqrt();
            if alpha > 0.0 && rms < 0.05 * mean {
                return Radius::Finite(1.0 / alpha);
            }
        }

        // log|c_k| ~ a + k log(1/R) + g log k
        let lo = (n / 3).max(1);
        let rows: Vec<(f64, f64, f64)> = (lo..=n)
            .filter(|&k| mag[k] > 0.0)
            .map(|k| (k as f64, (k as f64).ln(), mag[k].ln()))
            .collect();
        if rows.len() < 3 {
            return Radius::Unbounded;
        }
        let a = DMatrix::from_fn(rows.len(), 3, |i, j| match j {
            0 => 1.0,
            1 => rows[i].0,
            _ => rows[i].1,
        });
        let b = nalgebra::DVector::from_iterator(rows.len(), rows.iter().map(|r| r.2));
        let svd = SVD::new(a, true, true);
        match svd.solve(&b, 1e-12) {
            Ok(x) => Radius::Finite((-x[1]).exp()),
            Err(_) => Radius::Finite(mag[n].powf(-1.0 / n as f64)),
        }
    }
}

impl From<Vec<Complex64>> for ComplexPowerSeries {
    fn from(coeffs: Vec<Complex64>) -> Self {
        Self::new(coeffs)
    }
}

fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| {
        (a + (x - mx) * (x - mx), b + (x - mx) * (y - my))
    });
    let beta = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - beta * mx, beta)
}

/// Numerator and denominator of a Padé approximant in the scaled variable
/// `s / scale`, lowest order first.
#[derive(Clone, Debug)]
pub struct PadeApproximant {
    pub numerator: Vec<Complex64>,
    pub denominator: Vec<Complex64>,
    pub scale: f64,
}

impl PadeApproximant {
    pub fn eval(&self, s: f64) -> Complex64 {
        let x = Complex64::new(s / self.scale, 0.0);
        let h = |p: &[Complex64]| p.iter().rev().fold(ZERO, |acc, &c| acc * x + c);
        h(&self.numerator) / h(&self.denominator)
    }
}

/// `[l/m]` approximant via the SVD formulation, shrinking degenerate blocks.
/// Returns `None` when the denominator vanishes at the origin.
pub fn pade(coeffs: &[Complex64], l: usize, m: usize, scale: f64) -> Option<PadeApproximant> {
    assert!(l + m < coeffs.len(), "[{l}/{m}] needs {} coefficients", l + m + 1);
    let c: Vec<Complex64> = coeffs[..=l + m]
        .iter()
        .enumerate()
        .map(|(k, &v)| v * scale.powi(k as i32))
        .collect();
    let norm = c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || c[..=l].iter().all(|v| v.norm() <= PADE_RANK_TOL * norm) {
        return Some(PadeApproximant {
            numerator: vec![ZERO],
            denominator: vec![Complex64::new(1.0, 0.0)],
            scale,
        });
    }

    let (mut l, mut m) = (l, m);
    let b: Vec<Complex64> = loop {
        if m == 0 {
            break vec![Complex64::new(1.0, 0.0)];
        }
        // rows k = l+1..=l+m, columns j = 0..=m, padded square with a zero row
        let z = DMatrix::from_fn(m + 1, m + 1, |r, j| {
            if r == m {
                return ZERO;
            }
            let k = l + 1 + r;
            if k >= j {
                c[k - j]
            } else {
                ZERO
            }
        });
        let svd = SVD::new(z, false, true);
        let rank = svd
            .singular_values
            .iter()
            .take(m)
            .filter(|&&sv| sv > PADE_RANK_TOL * norm)
            .count();
        if rank == m {
            let v_t = svd.v_t?;
            break (0..=m).map(|j| v_t[(m, j)].conj()).collect();
        }
        let defect = m - rank;
        l = l.saturating_sub(defect);
        m = rank;
    };

    if b[0].norm() < PADE_RANK_TOL {
        return None;
    }
    let b0 = b[0];
    let denominator: Vec<Complex64> = b.iter().map(|v| v / b0).collect();
    let numerator: Vec<Complex64> = (0..=l)
        .map(|k| (0..=k.min(m)).map(|j| denominator[j] * c[k - j]).sum())
        .collect();
    Some(PadeApproximant {
        numerator,
        denominator,
        scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_series() {
        let mut coeffs = vec![c(1.0, 0.0)];
        coeffs.extend(std::iter::repeat_n(ZERO, 10));
        let f = ComplexPowerSeries::new(coeffs);
        for s in [0.0, 0.5, 3.0, 100.0] {
            assert_eq!(f.evaluate(s, EvalMethod::Direct), c(1.0, 0.0));
            assert_eq!(f.evaluate(s, EvalMethod::Pade), c(1.0, 0.0));
        }
        assert_eq!(f.radius_estimate(), Radius::Unbounded);
    }

    #[test]
    fn geometric_series_recovered_by_pade() {
        let f = ComplexPowerSeries::from_real(&[1.0; 11]);
        let v = f.evaluate(0.9, EvalMethod::Pade);
        assert!((v - c(10.0, 0.0)).norm() < 1e-6, "{v}");
        // partial sums are far off at this order
        let d = f.evaluate(0.9, EvalMethod::Direct);
        assert!((d.re - 10.0).abs() > 1.0);
    }

    #[test]
    fn sqrt_branch_radius() {
        // sqrt(1 - s/4) has its branch point at s = 4
        let n = 30;
        let mut coeffs = vec![c(1.0, 0.0)];
        let mut binom = 1.0;
        for k in 1..=n {
            binom *= (0.5 - (k - 1) as f64) / k as f64;
            coeffs.push(c(binom * (-0.25f64).powi(k), 0.0));
        }
        let f = ComplexPowerSeries::new(coeffs);
        let r = f.radius_estimate().value();
        assert!((r - 4.0).abs() < 0.02, "{r}");
        let exact = (1.0f64 - 3.5 / 4.0).sqrt();
        let v = f.evaluate_with_increment(3.5, EvalMethod::Pade);
        assert!((v.value.re - exact).abs() < 1e-6, "{:?}", v);
        assert!(v.increment < 1e-5);
    }

    #[test]
    fn direct_increment_is_last_term() {
        let f = ComplexPowerSeries::from_real(&[1.0, 1.0, 1.0, 1.0, 1.0]);
        let e = f.evaluate_with_increment(0.5, EvalMethod::Direct);
        assert!((e.increment - 0.125).abs() < 1e-15);
        assert!(!e.converged(1e-10));
    }

    #[test]
    fn short_series_pade_falls_back_to_direct() {
        let f = ComplexPowerSeries::from_real(&[1.0, 2.0]);
        let e = f.evaluate_with_increment(1.0, EvalMethod::Pade);
        assert_eq!(e.method, EvalMethod::Direct);
        assert_eq!(e.value, c(3.0, 0.0));
    }

    #[test]
    fn degenerate_block_shrinks() {
        let p = pade(&[c(1.0, 0.0); 11], 5, 5, 1.0).unwrap();
        assert_eq!(p.denominator.len(), 2);
        assert!((p.eval(0.5) - c(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rational_function_is_reproduced() {
        // (1 + 2s) / (1 - 0.3s + 0.02 s^2)
        let n = 12;
        let mut f = vec![ZERO; n + 1];
        for k in 0..=n {
            let mut v = if k == 0 { 1.0 } else if k == 1 { 2.0 } else { 0.0 };
            if k >= 1 {
                v += 0.3 * f[k - 1].re;
            }
            if k >= 2 {
                v -= 0.02 * f[k - 2].re;
            }
            f[k] = c(v, 0.0);
        }
        let series = ComplexPowerSeries::new(f);
        let exact = |s: f64| (1.0 + 2.0 * s) / (1.0 - 0.3 * s + 0.02 * s * s);
        for s in [0.5, 2.0, 4.0] {
            let v = series.evaluate(s, EvalMethod::Pade);
            assert!((v.re - exact(s)).abs() < 1e-9 * exact(s).abs(), "s={s}: {v}");
        }
    }

    proptest! {
        #[test]
        fn convolution_matches_pointwise_product(
            a in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 12),
            b in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 12),
            s in 0.0f64..0.3,
        ) {
            // coefficients bounded by 1.4 in magnitude, so |s| < 0.3 keeps the
            // truncated product's error far below the tolerance
            let fa = ComplexPowerSeries::new(a.iter().map(|&(x, y)| c(x, y)).collect());
            let fb = ComplexPowerSeries::new(b.iter().map(|&(x, y)| c(x, y)).collect());
            let mut padded_a = fa.coeffs().to_vec();
            let mut padded_b = fb.coeffs().to_vec();
            padded_a.resize(24, ZERO);
            padded_b.resize(24, ZERO);
            let full = ComplexPowerSeries::new(padded_a).mul(&ComplexPowerSeries::new(padded_b));
            let sc = c(s, 0.0);
            let direct = fa.horner(sc) * fb.horner(sc);
            prop_assert!((full.horner(sc) - direct).norm() < 1e-12);
        }

        #[test]
        fn conj_series_is_conjugate_on_real_axis(
            a in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..15),
            s in -0.9f64..0.9,
        ) {
            let f = ComplexPowerSeries::new(a.iter().map(|&(x, y)| c(x, y)).collect());
            let sc = c(s, 0.0);
            prop_assert!((f.conj().horner(sc) - f.horner(sc).conj()).norm() < 1e-12);
        }
    }
}
