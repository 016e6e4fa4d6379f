//! wasm-bindgen surface for the browser demo (www/index.html).
//!
//! Three interactive operations, each returning a JSON payload the page
//! plots directly: solve a solitary wave and fit its tail, tabulate the
//! convolution kernel, and evolve a perturbed wave while tracking the
//! orbit distance.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use fw_core::analysis::{stability_experiment, stability_metric};
use fw_core::dynamics::{evolve, DtSpec, EvolveConfig};
use fw_core::functionals::q_functional;
use fw_core::grid::{Field, PeriodicGrid, SobolevIndex};
use fw_core::wave::{crest_amplitude, decay_rate, fit_decay, kernel_smooth, petviashvili_solve};

fn thin(values: &[f64], max_points: usize) -> Vec<f64> {
    let stride = (values.len() / max_points).max(1);
    values.iter().step_by(stride).copied().collect()
}

#[derive(Serialize)]
struct WavePayload {
    c: f64,
    q: f64,
    residual_l2: f64,
    iterations_grid: usize,
    amplitude: f64,
    amplitude_formula: Option<f64>,
    family_exists: bool,
    sigma_fit: Option<f64>,
    sigma_theory: f64,
    r_squared: Option<f64>,
    y: Vec<f64>,
    u: Vec<f64>,
}

fn solve_wave_impl(c: f64, half_period: f64, n_modes: usize, tol: f64) -> Result<String, String> {
    let grid = PeriodicGrid::new(half_period, n_modes).map_err(|e| e.to_string())?;
    let wave = petviashvili_solve(c, &grid, None, tol, 20_000).map_err(|e| e.to_string())?;
    let fit = fit_decay(&wave, None).ok();
    let payload = WavePayload {
        c,
        q: wave.mass_q,
        residual_l2: wave.residual_l2,
        iterations_grid: n_modes,
        amplitude: wave.field.max(),
        amplitude_formula: crest_amplitude(c).ok(),
        family_exists: c <= 4.0 / 3.0,
        sigma_fit: fit.map(|f| f.sigma_fit),
        sigma_theory: decay_rate(c).map_err(|e| e.to_string())?,
        r_squared: fit.map(|f| f.r_squared),
        y: thin(grid.nodes(), 1024),
        u: thin(wave.field.values(), 1024),
    };
    serde_json::to_string(&payload).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct KernelPayload {
    c: f64,
    sigma: f64,
    identity_part: f64,
    y: Vec<f64>,
    g: Vec<f64>,
}

fn kernel_curve_impl(c: f64, y_max: f64, n: usize) -> Result<String, String> {
    if n < 2 {
        return Err("need at least two samples".into());
    }
    let mut y = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    for i in 0..n {
        let yi = -y_max + 2.0 * y_max * i as f64 / (n - 1) as f64;
        y.push(yi);
        g.push(kernel_smooth(yi, c).map_err(|e| e.to_string())?);
    }
    let payload = KernelPayload {
        c,
        sigma: decay_rate(c).map_err(|e| e.to_string())?,
        identity_part: 1.0 / c,
        y,
        g,
    };
    serde_json::to_string(&payload).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct EvolvePayload {
    c: f64,
    delta: f64,
    times: Vec<f64>,
    /// one thinned profile per recorded time
    frames: Vec<Vec<f64>>,
    y: Vec<f64>,
    metric: Vec<f64>,
    shift: Vec<f64>,
    q_drift: f64,
    blowup_t: Option<f64>,
}

fn evolve_wave_impl(
    c: f64,
    delta: f64,
    t_end: f64,
    n_frames: usize,
    seed: u32,
) -> Result<String, String> {
    let grid = PeriodicGrid::new(40.0, 512).map_err(|e| e.to_string())?;
    let wave = petviashvili_solve(c, &grid, None, 1e-9, 20_000).map_err(|e| e.to_string())?;

    // one-seed stability run gives the perturbed initial data and the metric
    let report = stability_experiment(&wave, delta, t_end, SobolevIndex::default(), 1, seed as u64)
        .map_err(|e| e.to_string())?;
    let trace = &report.seed_traces[0];
    if let Some(t) = trace.blowup_t {
        let payload = EvolvePayload {
            c,
            delta,
            times: vec![],
            frames: vec![],
            y: thin(grid.nodes(), 256),
            metric: vec![],
            shift: vec![],
            q_drift: f64::NAN,
            blowup_t: Some(t),
        };
        return serde_json::to_string(&payload).map_err(|e| e.to_string());
    }

    // re-run the same trajectory (the perturbation is seed-reproducible) to
    // collect frames for the animation
    let mut cfg = EvolveConfig::new(t_end);
    cfg.dt = DtSpec::Auto;
    let dt_auto = 0.4 * grid.spacing() / wave.field.max_abs().max(1.0);
    let n_steps = (t_end / dt_auto).ceil() as usize;
    cfg.record_every = (n_steps / n_frames.clamp(2, 200)).max(1);
    let u0 = perturbed_initial(&wave.field, delta, seed as u64);
    let (states, cons) = evolve(&u0, &cfg).map_err(|e| e.to_string())?;

    let mut frames = Vec::with_capacity(states.len());
    let mut times = Vec::with_capacity(states.len());
    let mut metric = Vec::with_capacity(states.len());
    let mut shift = Vec::with_capacity(states.len());
    for st in &states {
        times.push(st.t);
        frames.push(thin(st.field.values(), 256));
        let (d, s) = stability_metric(&st.field, &wave.field, SobolevIndex::default())
            .map_err(|e| e.to_string())?;
        metric.push(d);
        shift.push(s);
    }
    let q0 = cons.q.first().copied().unwrap_or(0.0);
    let q_drift = cons
        .q
        .iter()
        .fold(0.0f64, |m, &q| m.max(((q - q0) / q0).abs()));

    let payload = EvolvePayload {
        c,
        delta,
        times,
        frames,
        y: thin(grid.nodes(), 256),
        metric,
        shift,
        q_drift,
        blowup_t: None,
    };
    serde_json::to_string(&payload).map_err(|e| e.to_string())
}

/// Same perturbation model as the stability experiment: band-limited modes
/// |xi| <= 2 scaled to H^1 size delta, then renormalized to the sphere Q = Q(g).
fn perturbed_initial(g: &Field, delta: f64, seed: u64) -> Field {
    use fw_core::analysis::stability_perturbation;
    let p = stability_perturbation(g.grid(), delta, seed);
    let raw = g + &p;
    let q0 = q_functional(g);
    let qr = q_functional(&raw);
    raw.scaled((q0 / qr).sqrt())
}

#[wasm_bindgen]
pub fn solve_wave(c: f64, half_period: f64, n_modes: usize, tol: f64) -> Result<String, JsValue> {
    solve_wave_impl(c, half_period, n_modes, tol).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn kernel_curve(c: f64, y_max: f64, n: usize) -> Result<String, JsValue> {
    kernel_curve_impl(c, y_max, n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn evolve_wave(
    c: f64,
    delta: f64,
    t_end: f64,
    n_frames: usize,
    seed: u32,
) -> Result<String, JsValue> {
    evolve_wave_impl(c, delta, t_end, n_frames, seed).map_err(|e| JsValue::from_str(&e))
}
