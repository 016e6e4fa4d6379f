//! Method-of-lines evolution of u_t + u u_x + L u_x = 0.
//!
//! The right-hand side is assembled in divergence form -d(u^2/2)/dy - L du/dy
//! with 2/3-rule dealiasing of the quadratic product, and advanced with
//! classical RK4. L d/dy has bounded symbol xi/(1+xi^2) <= 1/2, so stiffness
//! comes only from the advective term; the automatic step follows the
//! advective CFL dt = 0.4 dy / max(1, max|u|). Mass int u is conserved
//! exactly (the RHS is a total derivative), int u^2 up to time discretization
//! error.

use rustfft::num_complex::Complex;
use serde::Serialize;

use crate::error::{FwError, Result};
use crate::fourier;
use crate::functionals::{integral, q_functional};
use crate::grid::Field;

/// State of a trajectory at one instant.
#[derive(Clone, Debug)]
pub struct SimState {
    pub t: f64,
    pub field: Field,
}

/// Time step selection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DtSpec {
    /// 0.4 dy / max(1, max|u0|), frozen from the initial data.
    Auto,
    Fixed(f64),
}

#[derive(Clone, Debug)]
pub struct EvolveConfig {
    pub t_end: f64,
    pub dt: DtSpec,
    pub dealias: bool,
    /// Record every k-th step (the initial and final states are always kept).
    pub record_every: usize,
}

impl EvolveConfig {
    pub fn new(t_end: f64) -> Self {
        Self {
            t_end,
            dt: DtSpec::Auto,
            dealias: true,
            record_every: 10,
        }
    }
}

/// Traces of the conserved quantities at the recorded times.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ConservationTrace {
    pub times: Vec<f64>,
    /// int u
    pub mass: Vec<f64>,
    /// Q(u) = int u^2
    pub q: Vec<f64>,
}

const BLOWUP_AMPLITUDE: f64 = 1e6;

/// -(u u_y + L u_y), computed as -d(u^2/2)/dy - L du/dy.
pub fn rhs(u: &Field, dealias: bool) -> Field {
    let grid = u.grid();
    let n = grid.n_modes();
    let nyq = grid.nyquist_index();

    // quadratic flux u^2/2 in spectral space
    let w = u.mul_pointwise(u);
    let mut wc = fourier::coeffs(&w);
    if dealias {
        fourier::dealias_two_thirds(&mut wc, n);
    }
    let uc = fourier::coeffs(u);
    for (idx, &xi) in grid.wavenumbers().iter().enumerate() {
        let d = if idx == nyq {
            Complex::new(0.0, 0.0)
        } else {
            Complex::new(0.0, xi)
        };
        // -(d/dy)(w/2) - L (d/dy) u
        wc[idx] = -d * (0.5 * wc[idx] + uc[idx] / (1.0 + xi * xi));
    }
    fourier::field_from_coeffs(grid, wc)
}

/// One classical RK4 step. Non-finite or huge values abort with a blow-up
/// error carrying the pre-step time.
pub fn step(state: &SimState, dt: f64, dealias: bool) -> Result<SimState> {
    let u = &state.field;
    let k1 = rhs(u, dealias);
    let k2 = rhs(&u.axpy(0.5 * dt, &k1), dealias);
    let k3 = rhs(&u.axpy(0.5 * dt, &k2), dealias);
    let k4 = rhs(&u.axpy(dt, &k3), dealias);

    let values: Vec<f64> = u
        .values()
        .iter()
        .zip(k1.values())
        .zip(k2.values().iter().zip(k3.values()))
        .zip(k4.values())
        .map(|(((ui, a), (b, c)), d)| ui + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d))
        .collect();
    let next = Field::from_values_unchecked(u.grid(), values);

    let amp = next.max_abs();
    if !next.is_finite() || amp > BLOWUP_AMPLITUDE {
        return Err(FwError::BlowUp {
            t: state.t,
            amplitude: amp,
        });
    }
    Ok(SimState {
        t: state.t + dt,
        field: next,
    })
}

/// Integrate to `t_end`, recording every `record_every`-th state plus the
/// conserved quantities. Blow-up propagates with the detection time attached.
pub fn evolve(initial: &Field, cfg: &EvolveConfig) -> Result<(Vec<SimState>, ConservationTrace)> {
    if !(cfg.t_end > 0.0) {
        return Err(FwError::Config(format!(
            "t_end must be positive, got {}",
            cfg.t_end
        )));
    }
    if cfg.record_every == 0 {
        return Err(FwError::Config("record_every must be at least 1".into()));
    }
    let dt = match cfg.dt {
        DtSpec::Fixed(dt) => {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(FwError::Config(format!("dt must be positive, got {dt}")));
            }
            dt
        }
        DtSpec::Auto => 0.4 * initial.grid().spacing() / initial.max_abs().max(1.0),
    };
    let n_steps = (cfg.t_end / dt).ceil().max(1.0) as usize;
    let dt = cfg.t_end / n_steps as f64;

    let mut states = Vec::with_capacity(n_steps / cfg.record_every + 2);
    let mut trace = ConservationTrace::default();
    let mut record = |s: &SimState, trace: &mut ConservationTrace| {
        trace.times.push(s.t);
        trace.mass.push(integral(&s.field));
        trace.q.push(q_functional(&s.field));
        states.push(s.clone());
    };

    let mut state = SimState {
        t: 0.0,
        field: initial.clone(),
    };
    record(&state, &mut trace);
    for k in 1..=n_steps {
        state = step(&state, dt, cfg.dealias)?;
        // exact time stamps, immune to accumulation
        state.t = dt * k as f64;
        if k % cfg.record_every == 0 || k == n_steps {
            record(&state, &mut trace);
        }
    }
    Ok((states, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::norm_l2;
    use crate::grid::PeriodicGrid;
    use crate::operators::deriv;

    #[test]
    fn rhs_of_constant_is_zero() {
        let g = PeriodicGrid::new(10.0, 64).unwrap();
        let u = Field::constant(&g, 2.3).unwrap();
        assert!(rhs(&u, true).max_abs() < 1e-13);
    }

    #[test]
    fn rhs_of_resolved_sine() {
        // u = sin(y): -(sin cos + L cos) = -sin cos - cos/2 at xi = 1
        let g = PeriodicGrid::new(std::f64::consts::PI, 64).unwrap();
        let u = Field::from_fn(&g, |y| y.sin()).unwrap();
        let r = rhs(&u, true);
        for (j, &y) in g.nodes().iter().enumerate() {
            let exact = -y.sin() * y.cos() - 0.5 * y.cos();
            assert!(
                (r.values()[j] - exact).abs() < 1e-10,
                "at y = {y}: {} vs {exact}",
                r.values()[j]
            );
        }
    }

    #[test]
    fn step_keeps_equilibria() {
        let g = PeriodicGrid::new(10.0, 64).unwrap();
        for a in [0.0, 1.4] {
            let s = SimState {
                t: 0.0,
                field: Field::constant(&g, a).unwrap(),
            };
            let next = step(&s, 0.05, true).unwrap();
            assert!((next.t - 0.05).abs() < 1e-15);
            for &v in next.field.values() {
                assert!((v - a).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn rk4_self_convergence_order() {
        // Richardson: ||S_dt - S_{dt/2}^2|| / ||S_{dt/2}^2 - S_{dt/4}^4|| ~ 16
        let g = PeriodicGrid::new(40.0, 256).unwrap();
        let u0 = Field::from_fn(&g, |y| (-y * y / 4.0).exp()).unwrap();
        let advance = |dt: f64, n: usize| {
            let mut s = SimState {
                t: 0.0,
                field: u0.clone(),
            };
            for _ in 0..n {
                s = step(&s, dt, true).unwrap();
            }
            s.field
        };
        let dt = 0.2;
        let a = advance(dt, 4);
        let b = advance(dt / 2.0, 8);
        let c = advance(dt / 4.0, 16);
        let e1 = norm_l2(&(&a - &b));
        let e2 = norm_l2(&(&b - &c));
        let ratio = e1 / e2;
        assert!(
            (ratio - 16.0).abs() <= 0.2 * 16.0,
            "self-convergence ratio {ratio}, expected 16 +- 20%"
        );
    }

    #[test]
    fn evolve_zero_field_stays_zero() {
        let g = PeriodicGrid::new(10.0, 64).unwrap();
        let (states, trace) = evolve(&Field::zeros(&g), &EvolveConfig::new(1.0)).unwrap();
        assert!(states.last().unwrap().field.max_abs() == 0.0);
        assert!(trace.q.iter().all(|&q| q == 0.0));
    }

    #[test]
    fn evolve_conserves_mass_exactly_and_q_to_tolerance() {
        let g = PeriodicGrid::new(40.0, 512).unwrap();
        let u0 = Field::from_fn(&g, |y| 0.5 * (-y * y / 4.0).exp()).unwrap();
        let mut cfg = EvolveConfig::new(2.0);
        cfg.dt = DtSpec::Fixed(0.005);
        let (_, trace) = evolve(&u0, &cfg).unwrap();
        let m0 = trace.mass[0];
        let q0 = trace.q[0];
        for (&m, &q) in trace.mass.iter().zip(&trace.q) {
            assert!(((m - m0) / m0).abs() < 1e-12, "mass drift");
            assert!(((q - q0) / q0).abs() < 1e-9, "q drift {}", (q - q0) / q0);
        }
    }

    #[test]
    fn reversibility_smoke() {
        let g = PeriodicGrid::new(40.0, 256).unwrap();
        let u0 = Field::from_fn(&g, |y| 0.8 * (-y * y / 9.0).exp()).unwrap();
        let dt = 0.002;
        let n = 500; // t = 1
        let mut s = SimState {
            t: 0.0,
            field: u0.clone(),
        };
        for _ in 0..n {
            s = step(&s, dt, true).unwrap();
        }
        for _ in 0..n {
            s = step(&s, -dt, true).unwrap();
        }
        let err = norm_l2(&(&s.field - &u0));
        assert!(err < 1e-7, "forward-backward error {err}");
    }

    #[test]
    fn traveling_wave_rhs_is_pure_translation() {
        use crate::wave::petviashvili_solve;
        let g = PeriodicGrid::new(40.0, 1024).unwrap();
        let c = 1.25;
        let w = petviashvili_solve(c, &g, None, 1e-10, 3000).unwrap();
        let r = rhs(&w.field, true);
        let expected = deriv(&w.field).scaled(-c);
        let err = norm_l2(&(&r - &expected));
        assert!(err < 1e-8, "rhs - (-c g') = {err}");
    }
}
