//! Real 2x2 blocks for complex-linear terms in a real linear system.
//! A complex unknown `z` occupies columns `(col, col + 1)` as `(Re z, Im z)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Adds the block of `a * z` to rows `(row, row + 1)`.
pub(crate) fn add_lin_coeff(m: &mut DMatrix<f64>, row: usize, col: usize, a: Complex64) {
    m[(row, col)] += a.re;
    m[(row, col + 1)] -= a.im;
    m[(row + 1, col)] += a.im;
    m[(row + 1, col + 1)] += a.re;
}

/// Adds the block of `b * conj(z)`.
pub(crate) fn add_conj_coeff(m: &mut DMatrix<f64>, row: usize, col: usize, b: Complex64) {
    m[(row, col)] += b.re;
    m[(row, col + 1)] += b.im;
    m[(row + 1, col)] += b.im;
    m[(row + 1, col + 1)] -= b.re;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_match_complex_arithmetic() {
        let a = Complex64::new(0.3, -1.2);
        let b = Complex64::new(-0.7, 0.4);
        let z = Complex64::new(1.5, 2.5);
        let mut m = DMatrix::zeros(2, 2);
        add_lin_coeff(&mut m, 0, 0, a);
        add_conj_coeff(&mut m, 0, 0, b);
        let x = nalgebra::DVector::from_vec(vec![z.re, z.im]);
        let y = &m * x;
        let expect = a * z + b * z.conj();
        assert!((y[0] - expect.re).abs() < 1e-15);
        assert!((y[1] - expect.im).abs() < 1e-15);
    }
}
