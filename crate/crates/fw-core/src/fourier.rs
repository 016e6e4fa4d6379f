//! Discrete Fourier plumbing shared by the operator and functional modules.
//!
//! Coefficients use the convention c_k = (1/N) sum_j u_j e^{-2 pi i jk/N},
//! so a constant field A has c_0 = A and discrete Parseval reads
//! sum_j u_j^2 = N sum_k |c_k|^2.

use rustfft::num_complex::Complex;

use crate::grid::{Field, PeriodicGrid};

/// Forward transform, normalized by 1/N.
pub(crate) fn coeffs(u: &Field) -> Vec<Complex<f64>> {
    let grid = u.grid();
    let n = grid.n_modes();
    let mut buf: Vec<Complex<f64>> = u.values().iter().map(|&v| Complex::new(v, 0.0)).collect();
    grid.fft_forward(&mut buf);
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Inverse of [`coeffs`]; takes the real part.
pub(crate) fn field_from_coeffs(grid: &PeriodicGrid, mut coeffs: Vec<Complex<f64>>) -> Field {
    grid.fft_inverse(&mut coeffs);
    Field::from_values_unchecked(grid, coeffs.into_iter().map(|c| c.re).collect())
}

/// Multiply each coefficient by a complex symbol of the wavenumber.
///
/// The closure receives (xi_k, is_nyquist).
pub(crate) fn apply_symbol(u: &Field, symbol: impl Fn(f64, bool) -> Complex<f64>) -> Field {
    let grid = u.grid();
    let nyq = grid.nyquist_index();
    let mut c = coeffs(u);
    for (idx, (ck, &xi)) in c.iter_mut().zip(grid.wavenumbers()).enumerate() {
        *ck *= symbol(xi, idx == nyq);
    }
    field_from_coeffs(grid, c)
}

/// Translate a field by `s` length units: out(y) = in(y - s).
///
/// Spectral phase shift; the Nyquist mode is rotated by cos to keep the
/// output real.
pub(crate) fn shift(u: &Field, s: f64) -> Field {
    apply_symbol(u, |xi, is_nyq| {
        if is_nyq {
            Complex::new((xi * s).cos(), 0.0)
        } else {
            Complex::from_polar(1.0, -xi * s)
        }
    })
}

/// Zero all modes with |k| > N/3 (2/3-rule dealiasing).
pub(crate) fn dealias_two_thirds(coeffs: &mut [Complex<f64>], n: usize) {
    let cut = n / 3;
    for (idx, c) in coeffs.iter_mut().enumerate() {
        let k = if idx < n / 2 {
            idx as i64
        } else {
            idx as i64 - n as i64
        };
        if k.unsigned_abs() as usize > cut {
            *c = Complex::new(0.0, 0.0);
        }
    }
}
