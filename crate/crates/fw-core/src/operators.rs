//! The nonlocal operators of the equation, applied through their Fourier
//! symbols: L = (1 - d^2)^{-1} with symbol 1/(1+xi^2), spectral d/dy, and
//! (c - L)^{-1} with symbol (1+xi^2)/(c xi^2 + c - 1).

use rustfft::num_complex::Complex;

use crate::error::{FwError, Result};
use crate::fourier;
use crate::grid::Field;

/// Apply L = (1 - d^2)^{-1}: multiply coefficients by 1/(1 + xi^2).
pub fn apply_l(u: &Field) -> Field {
    fourier::apply_symbol(u, |xi, _| Complex::new(1.0 / (1.0 + xi * xi), 0.0))
}

/// Spectral derivative d/dy. The Nyquist mode is zeroed.
pub fn deriv(u: &Field) -> Field {
    fourier::apply_symbol(u, |xi, is_nyq| {
        if is_nyq {
            Complex::new(0.0, 0.0)
        } else {
            Complex::new(0.0, xi)
        }
    })
}

/// Apply (c - L)^{-1} for c > 1: multiply coefficients by
/// (1 + xi^2) / (c xi^2 + c - 1). The symbol has no real zero only for c > 1.
pub fn apply_inv_cl(u: &Field, c: f64) -> Result<Field> {
    if !(c > 1.0) {
        return Err(FwError::Domain(format!(
            "(c - L)^-1 requires c > 1 (symbol c*xi^2 + c - 1 would vanish), got c = {c}"
        )));
    }
    Ok(fourier::apply_symbol(u, |xi, _| {
        Complex::new((1.0 + xi * xi) / (c * xi * xi + c - 1.0), 0.0)
    }))
}

/// Traveling-wave defect -c u + u^2/2 + L u; zero exactly on traveling waves.
pub fn traveling_residual(u: &Field, c: f64) -> Field {
    let lu = apply_l(u);
    let values = u
        .values()
        .iter()
        .zip(lu.values())
        .map(|(&v, &lv)| -c * v + 0.5 * v * v + lv)
        .collect();
    Field::from_values_unchecked(u.grid(), values)
}
