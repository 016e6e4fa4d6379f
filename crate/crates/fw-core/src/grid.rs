//! Periodic grids, real-valued fields, and Sobolev indices.
//!
//! A [`PeriodicGrid`] discretizes one period (-P, P] with N uniformly spaced
//! nodes y_j = -P + 2Pj/N and carries the discrete wavenumbers
//! xi_k = pi k / P, k = -N/2 .. N/2-1 (stored in FFT order). FFT plans are
//! shared behind an `Arc`, so cloning a grid is cheap and fields on the same
//! grid can be processed from multiple threads.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{FwError, Result};

struct GridInner {
    half_period: f64,
    n_modes: usize,
    nodes: Vec<f64>,
    wavenumbers: Vec<f64>,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
}

/// Uniform grid on one period of length 2P with an even number of modes.
#[derive(Clone)]
pub struct PeriodicGrid {
    inner: Arc<GridInner>,
}

impl PeriodicGrid {
    /// Build a grid with half-period `half_period` and `n_modes` nodes.
    ///
    /// Rejects non-positive P, odd N, and N < 8.
    pub fn new(half_period: f64, n_modes: usize) -> Result<Self> {
        if !(half_period > 0.0) || !half_period.is_finite() {
            return Err(FwError::Config(format!(
                "half_period P must be positive and finite, got {half_period}"
            )));
        }
        if n_modes % 2 != 0 {
            return Err(FwError::Config(format!(
                "n_modes N must be even, got {n_modes}"
            )));
        }
        if n_modes < 8 {
            return Err(FwError::Config(format!(
                "n_modes N must be at least 8, got {n_modes}"
            )));
        }

        let spacing = 2.0 * half_period / n_modes as f64;
        let nodes: Vec<f64> = (0..n_modes)
            .map(|j| -half_period + spacing * j as f64)
            .collect();
        // FFT ordering: k = 0, 1, .., N/2-1, -N/2, .., -1
        let wavenumbers: Vec<f64> = (0..n_modes)
            .map(|idx| {
                let k = if idx < n_modes / 2 {
                    idx as i64
                } else {
                    idx as i64 - n_modes as i64
                };
                std::f64::consts::PI * k as f64 / half_period
            })
            .collect();

        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(n_modes);
        let fft_inv = planner.plan_fft_inverse(n_modes);

        Ok(Self {
            inner: Arc::new(GridInner {
                half_period,
                n_modes,
                nodes,
                wavenumbers,
                fft_fwd,
                fft_inv,
            }),
        })
    }

    pub fn half_period(&self) -> f64 {
        self.inner.half_period
    }

    pub fn n_modes(&self) -> usize {
        self.inner.n_modes
    }

    /// Node spacing 2P/N.
    pub fn spacing(&self) -> f64 {
        2.0 * self.inner.half_period / self.inner.n_modes as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.inner.nodes
    }

    /// Wavenumbers xi_k = pi k / P in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    /// Index of the single Nyquist mode k = -N/2.
    pub fn nyquist_index(&self) -> usize {
        self.inner.n_modes / 2
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.half_period == other.inner.half_period
                && self.inner.n_modes == other.inner.n_modes)
    }

    pub(crate) fn fft_forward(&self, buf: &mut [Complex<f64>]) {
        self.inner.fft_fwd.process(buf);
    }

    pub(crate) fn fft_inverse(&self, buf: &mut [Complex<f64>]) {
        self.inner.fft_inv.process(buf);
    }
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid")
            .field("half_period", &self.inner.half_period)
            .field("n_modes", &self.inner.n_modes)
            .finish()
    }
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        self.same_grid(other)
    }
}

/// Real samples on a [`PeriodicGrid`]. Values are finite by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: &PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_modes() {
            return Err(FwError::Config(format!(
                "field length {} does not match grid n_modes {}",
                values.len(),
                grid.n_modes()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FwError::Data("field contains non-finite values".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn zeros(grid: &PeriodicGrid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.n_modes()],
        }
    }

    pub fn constant(grid: &PeriodicGrid, a: f64) -> Result<Self> {
        Self::new(grid, vec![a; grid.n_modes()])
    }

    /// Sample `f` at every node.
    pub fn from_fn(grid: &PeriodicGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = grid.nodes().iter().map(|&y| f(y)).collect();
        Self::new(grid, values)
    }

    /// Bypasses the finiteness check; used by internal kernels that cannot
    /// produce non-finite values from finite inputs.
    pub(crate) fn from_values_unchecked(grid: &PeriodicGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_modes());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// Index of the maximum value (first occurrence).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Circular shift by `offset` nodes: `out[j] = in[j - offset]`.
    pub fn roll(&self, offset: isize) -> Field {
        let n = self.values.len() as isize;
        let values = (0..n)
            .map(|j| self.values[(j - offset).rem_euclid(n) as usize])
            .collect();
        Field::from_values_unchecked(&self.grid, values)
    }

    pub fn scaled(&self, a: f64) -> Field {
        Field::from_values_unchecked(&self.grid, self.values.iter().map(|v| a * v).collect())
    }

    /// self + a * other
    pub fn axpy(&self, a: f64, other: &Field) -> Field {
        debug_assert!(self.grid.same_grid(&other.grid));
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| u + a * v)
            .collect();
        Field::from_values_unchecked(&self.grid, values)
    }

    /// Pointwise product.
    pub fn mul_pointwise(&self, other: &Field) -> Field {
        debug_assert!(self.grid.same_grid(&other.grid));
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| u * v)
            .collect();
        Field::from_values_unchecked(&self.grid, values)
    }
}

impl std::ops::Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.axpy(1.0, rhs)
    }
}

impl std::ops::Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.axpy(-1.0, rhs)
    }
}

/// Sobolev exponent s in [0, 1] for the H^s norms of the stability metric.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SobolevIndex(f64);

impl SobolevIndex {
    pub fn new(s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(FwError::Domain(format!(
                "Sobolev index must lie in [0, 1], got {s}"
            )));
        }
        Ok(Self(s))
    }

    pub const L2: SobolevIndex = SobolevIndex(0.0);
    pub const H1: SobolevIndex = SobolevIndex(1.0);

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for SobolevIndex {
    /// s = 0.75, i.e. H^{1-eps} with eps = 0.25.
    fn default() -> Self {
        SobolevIndex(0.75)
    }
}
