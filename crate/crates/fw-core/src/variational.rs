//! Penalized constrained minimization of J over the sphere Q = q.
//!
//! The minimizer is found by projected gradient descent: steps follow the
//! negative H^1-preconditioned gradient of the penalized objective
//! J(u) + rho(||u||_{H1}^2), then rescale back onto {Q = q}. The wave speed
//! is recovered from the first-order condition as c = -2 lambda, and the
//! converged profile can be cut off and embedded into a longer period to
//! approximate the line problem.

use serde::Serialize;

use crate::error::{FwError, Result};
use crate::fourier;
use crate::functionals::{h1_norm_sq, inner, j_functional, linf, q_functional};
use crate::grid::{Field, PeriodicGrid};
use crate::operators::apply_l;

/// Smooth barrier on t = ||u||_{H1}^2: zero on [0, R^2], increasing on
/// (R^2, 2R^2), diverging at 2R^2.
#[derive(Clone, Debug)]
pub struct PenaltySpec {
    r_inner: f64,
    scale: f64,
}

impl PenaltySpec {
    pub fn new(r_inner: f64, scale: f64) -> Result<Self> {
        if !(r_inner > 0.0) || !(scale > 0.0) {
            return Err(FwError::Config(format!(
                "penalty requires R > 0 and scale > 0, got R = {r_inner}, scale = {scale}"
            )));
        }
        Ok(Self { r_inner, scale })
    }

    /// Default barrier for mass q: R^2 = 8q/c_guess with c_guess = 1.5,
    /// comfortably above the coercivity bound 4q/c, scale 1.
    pub fn for_mass(q: f64) -> Result<Self> {
        if !(q > 0.0) {
            return Err(FwError::Config(format!("mass q must be positive, got {q}")));
        }
        Self::new((16.0 * q / 3.0).sqrt(), 1.0)
    }

    pub fn r_inner(&self) -> f64 {
        self.r_inner
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// 2R^2, the barrier endpoint.
    pub fn barrier_limit(&self) -> f64 {
        2.0 * self.r_inner * self.r_inner
    }

    /// rho(t) and rho'(t). Domain error for t >= 2R^2.
    ///
    /// On (R^2, 2R^2): rho(t) = scale (t - R^2)^2 / (2R^2 - t), which is C^1
    /// at R^2, increasing, and divergent at 2R^2.
    pub fn value_and_deriv(&self, t: f64) -> Result<(f64, f64)> {
        let r2 = self.r_inner * self.r_inner;
        if t < 0.0 || !t.is_finite() {
            return Err(FwError::Domain(format!(
                "penalty argument must be finite and nonnegative, got {t}"
            )));
        }
        if t >= 2.0 * r2 {
            return Err(FwError::Domain(format!(
                "penalty argument t = {t} outside [0, 2R^2) = [0, {})",
                2.0 * r2
            )));
        }
        if t <= r2 {
            return Ok((0.0, 0.0));
        }
        let d = 2.0 * r2 - t;
        let e = t - r2;
        let value = self.scale * e * e / d;
        let deriv = self.scale * (2.0 * e * d + e * e) / (d * d);
        Ok((value, deriv))
    }
}

/// Parameters of one constrained minimization run.
#[derive(Clone, Debug)]
pub struct MinimizeConfig {
    /// Constraint value Q(u) = q > 0.
    pub q: f64,
    /// H^1 ball radius of the constraint set (recorded; the barrier enforces
    /// boundedness operationally).
    pub radius_r: f64,
    pub grid: PeriodicGrid,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step0: f64,
}

impl MinimizeConfig {
    /// Defaults: r = R of the default penalty, 20000 iterations, gradient
    /// tolerance 1e-8, initial step 1.
    pub fn new(q: f64, grid: &PeriodicGrid) -> Result<Self> {
        if !(q > 0.0) {
            return Err(FwError::Config(format!("q must be positive, got {q}")));
        }
        Ok(Self {
            q,
            radius_r: (16.0 * q / 3.0).sqrt(),
            grid: grid.clone(),
            max_iters: 20_000,
            grad_tol: 1e-8,
            step0: 1.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0) {
            return Err(FwError::Config(format!(
                "q must be positive, got {}",
                self.q
            )));
        }
        if !(self.radius_r > 0.0) {
            return Err(FwError::Config(format!(
                "radius r must be positive, got {}",
                self.radius_r
            )));
        }
        if !(self.grad_tol > 0.0) {
            return Err(FwError::Config(format!(
                "grad_tol must be positive, got {}",
                self.grad_tol
            )));
        }
        if !(self.step0 > 0.0) {
            return Err(FwError::Config(format!(
                "step0 must be positive, got {}",
                self.step0
            )));
        }
        Ok(())
    }
}

/// Outcome of [`minimize_periodic`].
#[derive(Clone, Debug, Serialize)]
pub struct MinimizeResult {
    #[serde(skip)]
    pub minimizer: Field,
    /// Recovered wave speed c = -2 lambda.
    pub multiplier_c: f64,
    /// J(u*) without the penalty term (they agree when the penalty is inactive).
    pub j_value: f64,
    pub q_value: f64,
    /// True if the minimizer sits where rho > 0; false on a clean success.
    pub penalty_active: bool,
    pub iterations: usize,
    /// L^2 norm of the projected (Euler-Lagrange) gradient at exit.
    pub grad_norm: f64,
    pub converged: bool,
}

fn default_init(grid: &PeriodicGrid, q: f64) -> Field {
    let g = Field::from_values_unchecked(
        grid,
        grid.nodes().iter().map(|&y| (-y * y / 4.0).exp()).collect(),
    );
    let scale = (q / q_functional(&g)).sqrt();
    g.scaled(scale)
}

/// Rescale onto the constraint sphere {Q = q}.
fn project_to_sphere(u: &Field, q: f64) -> Field {
    let qu = q_functional(u);
    u.scaled((q / qu).sqrt())
}

struct GradientData {
    /// L^2 gradient of the penalized objective.
    raw: Field,
    /// Least-squares multiplier c with the current penalty slope.
    c_ls: f64,
    /// raw + c u, the Euler-Lagrange residual (up to sign).
    el_residual: Field,
    h1_sq: f64,
    rho_deriv: f64,
}

/// L^2 gradient of J(u) + rho(||u||_{H1}^2):
/// -(Lu + u^2/2) + 2 rho' (u - u_yy), assembled spectrally.
fn gradient(u: &Field, spec: &PenaltySpec) -> Result<GradientData> {
    let t = h1_norm_sq(u);
    if t >= spec.barrier_limit() {
        return Err(FwError::BarrierBreach {
            h1_sq: t,
            limit: spec.barrier_limit(),
        });
    }
    let (_, rho_deriv) = spec.value_and_deriv(t)?;

    let mut c = fourier::coeffs(u);
    for (ck, &xi) in c.iter_mut().zip(u.grid().wavenumbers()) {
        let w = 1.0 + xi * xi;
        // -L u + 2 rho' (u - u_yy) in one pass
        *ck *= -1.0 / w + 2.0 * rho_deriv * w;
    }
    let linear = fourier::field_from_coeffs(u.grid(), c);
    let raw_values = linear
        .values()
        .iter()
        .zip(u.values())
        .map(|(&l, &v)| l - 0.5 * v * v)
        .collect();
    let raw = Field::from_values_unchecked(u.grid(), raw_values);

    let qu = q_functional(u);
    if qu <= 0.0 {
        return Err(FwError::Domain("multiplier undefined for Q(u) = 0".into()));
    }
    let c_ls = inner(&raw.scaled(-1.0), u) / qu;
    let el_residual = raw.axpy(c_ls, u);
    Ok(GradientData {
        raw,
        c_ls,
        el_residual,
        h1_sq: t,
        rho_deriv,
    })
}

fn penalized_objective(u: &Field, spec: &PenaltySpec) -> f64 {
    let t = h1_norm_sq(u);
    if t >= spec.barrier_limit() {
        return f64::INFINITY;
    }
    let (rho, _) = spec.value_and_deriv(t).expect("t checked above");
    j_functional(u) + rho
}

/// Minimize J(.|P, rho) over {Q = q} inside the barrier.
///
/// Projected gradient descent with Armijo backtracking (halving, c1 = 1e-4).
/// Terminates when the L^2 norm of the projected gradient (equivalently the
/// Euler-Lagrange residual with the least-squares multiplier) drops below
/// `grad_tol`. Hitting `max_iters` returns a result flagged
/// `converged = false`; an iterate escaping the barrier is an error.
pub fn minimize_periodic(
    cfg: &MinimizeConfig,
    spec: &PenaltySpec,
    init: Option<&Field>,
) -> Result<MinimizeResult> {
    cfg.validate()?;
    let grid = &cfg.grid;

    let mut u = match init {
        Some(f) => {
            if !f.grid().same_grid(grid) {
                return Err(FwError::Config(
                    "initial guess lives on a different grid".into(),
                ));
            }
            if q_functional(f) <= 0.0 {
                return Err(FwError::Config("initial guess has Q = 0".into()));
            }
            project_to_sphere(f, cfg.q)
        }
        None => default_init(grid, cfg.q),
    };

    let mut objective = penalized_objective(&u, spec);
    if !objective.is_finite() {
        let t = h1_norm_sq(&u);
        return Err(FwError::BarrierBreach {
            h1_sq: t,
            limit: spec.barrier_limit(),
        });
    }

    let mut alpha = cfg.step0;
    let mut iterations = 0;
    let armijo = 1e-4;

    for iter in 0..cfg.max_iters {
        iterations = iter;
        let gd = gradient(&u, spec)?;
        if q_functional(&gd.el_residual).sqrt() <= cfg.grad_tol {
            break;
        }

        // H^1-preconditioned direction, projected to the sphere tangent
        let pre = apply_l(&gd.raw);
        let mut dir = pre.axpy(-inner(&pre, &u) / cfg.q, &u);
        let mut slope = inner(&gd.raw, &dir);
        if slope <= 0.0 {
            // fall back to the unpreconditioned tangential gradient
            dir = gd.el_residual.clone();
            slope = q_functional(&dir);
        }

        // warm-started trial step, capped at step0
        let mut a = (2.0 * alpha).min(cfg.step0).max(f64::MIN_POSITIVE);
        let mut accepted = false;
        // objective comparisons saturate at rounding noise near the optimum
        let noise = 1e-15 * (1.0 + objective.abs());
        while a > 1e-18 {
            let trial = project_to_sphere(&u.axpy(-a, &dir), cfg.q);
            let f_trial = penalized_objective(&trial, spec);
            if f_trial <= objective - armijo * a * slope + noise {
                u = trial;
                objective = f_trial;
                accepted = true;
                break;
            }
            a *= 0.5;
        }
        if !accepted {
            // line search stagnated at numerical precision
            break;
        }
        alpha = a;
    }

    // final gradient data for the returned diagnostics
    let gd = gradient(&u, spec)?;
    let grad_norm = q_functional(&gd.el_residual).sqrt();
    let converged = grad_norm <= cfg.grad_tol;
    let multiplier = gd.c_ls;

    // re-center: translation invariance is broken by moving the peak to y = 0
    let shift = grid.n_modes() as isize / 2 - u.argmax() as isize;
    let u = u.roll(shift);

    Ok(MinimizeResult {
        q_value: q_functional(&u),
        j_value: j_functional(&u),
        penalty_active: gd.rho_deriv > 0.0 || gd.h1_sq > spec.r_inner * spec.r_inner,
        minimizer: u,
        multiplier_c: multiplier,
        iterations,
        grad_norm,
        converged,
    })
}

/// Least-squares multiplier of the first-order condition:
/// c = <Lu + u^2/2 - 2 rho'(u - u_yy), u> / <u, u>.
pub fn recover_multiplier(u: &Field, spec: &PenaltySpec) -> Result<f64> {
    if q_functional(u) <= 0.0 {
        return Err(FwError::Domain(
            "multiplier undefined for the zero field".into(),
        ));
    }
    Ok(gradient(u, spec)?.c_ls)
}

/// Report of the coercivity bound ||u*||_{H1}^2 <= 4q/c.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct H1BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// True when ||u*||_inf <= c/2, the regime in which the bound is claimed.
    pub linf_condition: bool,
}

pub fn check_h1_bound(res: &MinimizeResult, c: f64) -> H1BoundReport {
    let lhs = h1_norm_sq(&res.minimizer);
    let rhs = 4.0 * q_functional(&res.minimizer) / c;
    H1BoundReport {
        lhs,
        rhs,
        holds: lhs <= rhs,
        linf_condition: linf(&res.minimizer) <= c / 2.0,
    }
}

/// C-infinity step: 0 for s <= 0, 1 for s >= 1.
fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let f = (-1.0 / s).exp();
        let g = (-1.0 / (1.0 - s)).exp();
        f / (f + g)
    }
}

/// Transition width of the boundary cutoff, in length units.
const CUTOFF_WIDTH: f64 = 5.0;

/// Embed a periodic minimizer into a longer period.
///
/// Re-centers the profile at its maximum, multiplies by a smooth cutoff that
/// is 1 on [-P+w, P-w] and 0 at the old boundary (w = 5), renormalizes to the
/// original Q, and evaluates into the target grid (exact sample placement
/// when the spacings match, trigonometric interpolation otherwise; outside
/// the source period the embedding is zero).
pub fn extend_to_line(u_star: &Field, p_target: f64, n_target: usize) -> Result<Field> {
    let src = u_star.grid();
    let p_src = src.half_period();
    if p_target < p_src {
        return Err(FwError::Config(format!(
            "target half-period {p_target} smaller than source {p_src}"
        )));
    }
    let target = PeriodicGrid::new(p_target, n_target)?;

    let q0 = q_functional(u_star);
    let shift = src.n_modes() as isize / 2 - u_star.argmax() as isize;
    let centered = u_star.roll(shift);

    let cut_values: Vec<f64> = centered
        .values()
        .iter()
        .zip(src.nodes())
        .map(|(&v, &y)| v * smooth_step((p_src - y.abs()) / CUTOFF_WIDTH))
        .collect();
    let mut cut = Field::from_values_unchecked(src, cut_values);
    let qc = q_functional(&cut);
    if qc <= 0.0 {
        return Err(FwError::Data("cutoff annihilated the profile".into()));
    }
    cut = cut.scaled((q0 / qc).sqrt());

    if target.same_grid(src) {
        return Ok(cut);
    }

    let aligned = {
        // exact placement is possible when the spacings match and the source
        // nodes land on target nodes
        let ds = src.spacing();
        let dt = target.spacing();
        let offset = (p_target - p_src) / ds;
        (dt - ds).abs() < 1e-12 * ds && (offset - offset.round()).abs() < 1e-9
    };

    let values = if aligned {
        let offset = ((p_target - p_src) / src.spacing()).round() as usize;
        let mut values = vec![0.0; n_target];
        values[offset..offset + src.n_modes()].copy_from_slice(cut.values());
        values
    } else {
        let coeffs = fourier::coeffs(&cut);
        let n_src = src.n_modes();
        let nyq = src.nyquist_index();
        target
            .nodes()
            .iter()
            .map(|&y| {
                if y.abs() >= p_src {
                    return 0.0;
                }
                // real form of the trigonometric interpolant anchored at -P
                let x = y + p_src;
                let mut acc = coeffs[0].re;
                for idx in 1..nyq {
                    let xi = src.wavenumbers()[idx];
                    let (s, c) = (xi * x).sin_cos();
                    acc += 2.0 * (coeffs[idx].re * c - coeffs[idx].im * s);
                }
                let xi_n = src.wavenumbers()[nyq];
                acc += coeffs[nyq].re * (xi_n * x).cos();
                debug_assert_eq!(n_src % 2, 0);
                acc
            })
            .collect()
    };

    Field::new(&target, values)
}
