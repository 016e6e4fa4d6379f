//! Integrals, norms, and the two variational functionals
//! J(u) = -1/2 <u, Lu> - 1/6 int u^3 and Q(u) = int u^2.
//!
//! Integrals over one period use the uniform trapezoid rule (2P/N) sum_j,
//! which is spectrally accurate for smooth periodic integrands and agrees
//! exactly with Plancherel for quadratic quantities.

use crate::fourier;
use crate::grid::{Field, SobolevIndex};

fn weight(u: &Field) -> f64 {
    u.grid().spacing()
}

/// int u over one period.
pub fn integral(u: &Field) -> f64 {
    weight(u) * u.values().iter().sum::<f64>()
}

/// L^2 pairing <u, v> = int u v.
pub fn inner(u: &Field, v: &Field) -> f64 {
    debug_assert!(u.grid().same_grid(v.grid()));
    weight(u)
        * u.values()
            .iter()
            .zip(v.values())
            .map(|(a, b)| a * b)
            .sum::<f64>()
}

/// Q(u) = int u^2 >= 0.
pub fn q_functional(u: &Field) -> f64 {
    weight(u) * u.values().iter().map(|v| v * v).sum::<f64>()
}

pub fn norm_l2(u: &Field) -> f64 {
    q_functional(u).sqrt()
}

/// int u^3 over one period.
pub fn cubic(u: &Field) -> f64 {
    weight(u) * u.values().iter().map(|v| v * v * v).sum::<f64>()
}

pub fn linf(u: &Field) -> f64 {
    u.max_abs()
}

/// J(u) = -1/2 int u L u - 1/6 int u^3, quadratic part via Plancherel.
pub fn j_functional(u: &Field) -> f64 {
    let two_p = 2.0 * u.grid().half_period();
    let c = fourier::coeffs(u);
    let quad: f64 = c
        .iter()
        .zip(u.grid().wavenumbers())
        .map(|(ck, &xi)| ck.norm_sqr() / (1.0 + xi * xi))
        .sum();
    -0.5 * two_p * quad - cubic(u) / 6.0
}

/// Sobolev norm (sum_k (1+xi_k^2)^s |c_k|^2 * 2P)^{1/2}.
///
/// Normalized so that s = 0 reproduces sqrt(Q(u)).
pub fn norm_hs(u: &Field, s: SobolevIndex) -> f64 {
    let two_p = 2.0 * u.grid().half_period();
    let c = fourier::coeffs(u);
    let sum: f64 = c
        .iter()
        .zip(u.grid().wavenumbers())
        .map(|(ck, &xi)| (1.0 + xi * xi).powf(s.value()) * ck.norm_sqr())
        .sum();
    (two_p * sum).sqrt()
}

/// Squared H^1 norm 2P sum (1+xi^2)|c_k|^2, the penalty argument.
pub fn h1_norm_sq(u: &Field) -> f64 {
    let two_p = 2.0 * u.grid().half_period();
    let c = fourier::coeffs(u);
    let sum: f64 = c
        .iter()
        .zip(u.grid().wavenumbers())
        .map(|(ck, &xi)| (1.0 + xi * xi) * ck.norm_sqr())
        .sum();
    two_p * sum
}
