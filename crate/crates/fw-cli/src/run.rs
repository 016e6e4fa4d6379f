//! Command bodies: validate resolved parameters, run, write artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use fw_core::analysis::{classify_sequence, stability_experiment, subadditivity_scan, ScanConfig};
use fw_core::dynamics::{step, ConservationTrace, DtSpec, SimState};
use fw_core::error::{FwError, Result};
use fw_core::functionals::{integral, norm_l2, q_functional};
use fw_core::grid::{Field, PeriodicGrid, SobolevIndex};
use fw_core::io::{read_profile_csv, write_json, write_profile_csv};
use fw_core::operators::traveling_residual;
use fw_core::variational::{check_h1_bound, minimize_periodic, MinimizeConfig, PenaltySpec};
use fw_core::wave::{decay_rate, fit_decay, fit_tail, kernel_smooth, petviashvili_solve};

use crate::resolve::{check_grid, get_bool, get_f64, get_str, get_usize, Diagnostics};

pub fn defaults(command: &str) -> Value {
    match command {
        "solve-wave" => json!({
            "c": null, "P": 40.0, "N": 4096, "tol": 1e-10, "max_iters": 10000
        }),
        "solve-variational" => json!({
            "q": null, "r": null, "P": 40.0, "N": 512,
            "max_iters": 20000, "grad_tol": 1e-8, "step0": 1.0,
            "penalty": {"R": null, "scale": 1.0}
        }),
        "evolve" => json!({
            "init": null, "t_end": null, "dt": "auto", "dealias": true, "record_every": 10
        }),
        "stability" => json!({
            "c": null, "delta": null, "seeds": 10, "t_end": 20.0, "s": 0.75,
            "P": 40.0, "N": 1024, "tol": 1e-10, "max_iters": 10000
        }),
        "subadditivity" => json!({
            "q_list": null, "P": 40.0, "N": 512, "restarts": 3,
            "grad_tol": 1e-6, "max_iters": 20000
        }),
        "kernel" => json!({"c": null, "y_max": null, "n": 512}),
        "decay" => json!({"profile": null, "c": null, "band_lo": 1e-8, "band_hi": 1e-3}),
        "classify" => json!({"densities": null, "q": null, "eps": null}),
        _ => Value::Null,
    }
}

/// All violations, not just the first. An empty list means runnable.
pub fn validate(command: &str, p: &Value) -> Diagnostics {
    let mut d = Diagnostics::new();
    let require_positive = |d: &mut Diagnostics, key: &str, msg: &str| match get_f64(p, key) {
        Some(v) if v > 0.0 => {}
        Some(v) => d.push(format!("{msg}, got {v}")),
        None => d.push(format!("{msg}, missing or not a number")),
    };
    match command {
        "solve-wave" | "stability" => {
            match get_f64(p, "c") {
                Some(c) if c > 1.0 => {}
                Some(c) => d.push(format!(
                    "c must exceed 1 (no decaying wave otherwise), got {c}"
                )),
                None => d.push("c must be a number > 1".into()),
            }
            check_grid(p, &mut d);
            require_positive(&mut d, "tol", "tol must be positive");
            if command == "stability" {
                match get_f64(p, "delta") {
                    Some(x) if x >= 0.0 => {}
                    Some(x) => d.push(format!("delta must be nonnegative, got {x}")),
                    None => d.push("delta must be a nonnegative number".into()),
                }
                match get_usize(p, "seeds") {
                    Some(s) if s >= 1 => {}
                    _ => d.push("seeds must be a positive integer".into()),
                }
                match get_f64(p, "s") {
                    Some(s) if (0.0..=1.0).contains(&s) => {}
                    Some(s) => d.push(format!("s must lie in [0, 1], got {s}")),
                    None => d.push("s must be a number in [0, 1]".into()),
                }
                require_positive(&mut d, "t_end", "t_end must be positive");
            }
        }
        "solve-variational" => {
            match get_f64(p, "q") {
                Some(q) if q > 0.0 => {}
                Some(q) => d.push(format!(
                    "q must be positive (the constraint is Q(u) = q > 0), got {q}"
                )),
                None => d.push("q must be a positive number (Q(u) = q > 0)".into()),
            }
            check_grid(p, &mut d);
            require_positive(&mut d, "grad_tol", "grad_tol must be positive");
            require_positive(&mut d, "step0", "step0 must be positive");
            if let Some(penalty) = p.get("penalty") {
                if let Some(r) = get_f64(penalty, "R") {
                    if r <= 0.0 {
                        d.push(format!("penalty.R must be positive, got {r}"));
                    }
                }
                if let Some(s) = get_f64(penalty, "scale") {
                    if s <= 0.0 {
                        d.push(format!("penalty.scale must be positive, got {s}"));
                    }
                }
            }
        }
        "evolve" => {
            if get_str(p, "init").is_none() {
                d.push("init must be a path to a profile CSV".into());
            }
            require_positive(&mut d, "t_end", "t_end must be positive");
            match p.get("dt") {
                Some(Value::String(s)) if s == "auto" => {}
                Some(Value::Number(n)) if n.as_f64().map_or(false, |x| x > 0.0) => {}
                Some(v) => d.push(format!("dt must be \"auto\" or a positive number, got {v}")),
                None => d.push("dt must be \"auto\" or a positive number".into()),
            }
            match get_usize(p, "record_every") {
                Some(k) if k >= 1 => {}
                _ => d.push("record_every must be a positive integer".into()),
            }
        }
        "subadditivity" => {
            match p.get("q_list").and_then(|v| v.as_array()) {
                Some(list) if !list.is_empty() => {
                    for v in list {
                        match v.as_f64() {
                            Some(q) if q > 0.0 => {}
                            _ => d.push(format!(
                                "q_list entries must be positive numbers (Q(u) = q > 0), got {v}"
                            )),
                        }
                    }
                }
                _ => d.push("q_list must be a non-empty list of positive numbers".into()),
            }
            check_grid(p, &mut d);
        }
        "kernel" => {
            match get_f64(p, "c") {
                Some(c) if c > 1.0 => {}
                Some(c) => d.push(format!("c must exceed 1, got {c}")),
                None => d.push("c must be a number > 1".into()),
            }
            require_positive(&mut d, "y_max", "y_max must be positive");
            match get_usize(p, "n") {
                Some(n) if n >= 2 => {}
                _ => d.push("n must be an integer >= 2".into()),
            }
        }
        "decay" => {
            if get_str(p, "profile").is_none() {
                d.push("profile must be a path to a profile CSV".into());
            }
            if let Some(c) = get_f64(p, "c") {
                if c <= 1.0 {
                    d.push(format!("c must exceed 1 when given, got {c}"));
                }
            }
        }
        "classify" => {
            if get_str(p, "densities").is_none() {
                d.push("densities must be a directory of density CSV files".into());
            }
        }
        other => d.push(format!("unknown command {other}")),
    }
    d
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Serialize)]
struct WaveSidecar {
    c: f64,
    q: f64,
    residual_l2: f64,
    sigma_fit: Option<f64>,
    sigma_theory: f64,
    r_squared: Option<f64>,
}

fn run_solve_wave(p: &Value, out: &Path, _seed: u64) -> Result<()> {
    let c = get_f64(p, "c").unwrap();
    let grid = PeriodicGrid::new(get_f64(p, "P").unwrap(), get_usize(p, "N").unwrap())?;
    let tol = get_f64(p, "tol").unwrap();
    let max_iters = get_usize(p, "max_iters").unwrap();
    let wave = petviashvili_solve(c, &grid, None, tol, max_iters)?;
    let fit = fit_decay(&wave, None).ok();
    write_profile_csv(out.join("profile.csv"), &wave.field)?;
    write_json(
        out.join("wave.json"),
        &WaveSidecar {
            c: wave.speed_c,
            q: wave.mass_q,
            residual_l2: wave.residual_l2,
            sigma_fit: fit.map(|f| f.sigma_fit),
            sigma_theory: decay_rate(c)?,
            r_squared: fit.map(|f| f.r_squared),
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct VariationalReport {
    q: f64,
    multiplier_c: f64,
    j_value: f64,
    q_value: f64,
    penalty_active: bool,
    iterations: usize,
    grad_norm: f64,
    converged: bool,
    el_residual_l2: f64,
    h1_bound: fw_core::variational::H1BoundReport,
}

fn run_solve_variational(p: &Value, out: &Path, _seed: u64) -> Result<()> {
    let q = get_f64(p, "q").unwrap();
    let grid = PeriodicGrid::new(get_f64(p, "P").unwrap(), get_usize(p, "N").unwrap())?;
    let penalty = p.get("penalty").cloned().unwrap_or(Value::Null);
    let spec = match get_f64(&penalty, "R") {
        Some(r) => PenaltySpec::new(r, get_f64(&penalty, "scale").unwrap_or(1.0))?,
        None => PenaltySpec::for_mass(q)?,
    };
    let mut cfg = MinimizeConfig::new(q, &grid)?;
    cfg.max_iters = get_usize(p, "max_iters").unwrap();
    cfg.grad_tol = get_f64(p, "grad_tol").unwrap();
    cfg.step0 = get_f64(p, "step0").unwrap();
    if let Some(r) = get_f64(p, "r") {
        cfg.radius_r = r;
    }

    let res = minimize_periodic(&cfg, &spec, None)?;
    let el = norm_l2(&traveling_residual(&res.minimizer, res.multiplier_c));
    write_profile_csv(out.join("minimizer.csv"), &res.minimizer)?;
    write_json(
        out.join("result.json"),
        &VariationalReport {
            q,
            multiplier_c: res.multiplier_c,
            j_value: res.j_value,
            q_value: res.q_value,
            penalty_active: res.penalty_active,
            iterations: res.iterations,
            grad_norm: res.grad_norm,
            converged: res.converged,
            el_residual_l2: el,
            h1_bound: check_h1_bound(&res, res.multiplier_c),
        },
    )?;
    if !res.converged {
        return Err(FwError::NonConvergence {
            reason: "minimization hit the iteration cap".into(),
            iterations: res.iterations,
            residual: res.grad_norm,
        });
    }
    Ok(())
}

#[derive(Serialize)]
struct TrajectoryManifest {
    times: Vec<f64>,
    mass_trace: Vec<f64>,
    q_trace: Vec<f64>,
    blowup_time: Option<f64>,
}

fn run_evolve(p: &Value, out: &Path, _seed: u64) -> Result<()> {
    let init = read_profile_csv(get_str(p, "init").unwrap())?;
    let t_end = get_f64(p, "t_end").unwrap();
    let dealias = get_bool(p, "dealias").unwrap_or(true);
    let record_every = get_usize(p, "record_every").unwrap().max(1);
    let dt_spec = match p.get("dt") {
        Some(Value::Number(n)) => DtSpec::Fixed(n.as_f64().unwrap()),
        _ => DtSpec::Auto,
    };
    let dt = match dt_spec {
        DtSpec::Fixed(dt) => dt,
        DtSpec::Auto => 0.4 * init.grid().spacing() / init.max_abs().max(1.0),
    };
    let n_steps = (t_end / dt).ceil().max(1.0) as usize;
    let dt = t_end / n_steps as f64;

    let mut trace = ConservationTrace::default();
    let mut blowup_time = None;
    let mut state = SimState {
        t: 0.0,
        field: init,
    };
    let mut recorded = 0usize;
    let record = |s: &SimState, trace: &mut ConservationTrace, idx: &mut usize| -> Result<()> {
        write_profile_csv(out.join(format!("state_{:06}.csv", *idx)), &s.field)?;
        *idx += 1;
        trace.times.push(s.t);
        trace.mass.push(integral(&s.field));
        trace.q.push(q_functional(&s.field));
        Ok(())
    };
    record(&state, &mut trace, &mut recorded)?;
    let mut blow_err = None;
    for k in 1..=n_steps {
        match step(&state, dt, dealias) {
            Ok(mut next) => {
                next.t = dt * k as f64;
                state = next;
                if k % record_every == 0 || k == n_steps {
                    record(&state, &mut trace, &mut recorded)?;
                }
            }
            Err(FwError::BlowUp { t, amplitude }) => {
                blowup_time = Some(t);
                blow_err = Some(FwError::BlowUp { t, amplitude });
                break;
            }
            Err(e) => return Err(e),
        }
    }
    write_json(
        out.join("trajectory.json"),
        &TrajectoryManifest {
            times: trace.times,
            mass_trace: trace.mass,
            q_trace: trace.q,
            blowup_time,
        },
    )?;
    match blow_err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn run_stability(p: &Value, out: &Path, seed: u64) -> Result<()> {
    let c = get_f64(p, "c").unwrap();
    let grid = PeriodicGrid::new(get_f64(p, "P").unwrap(), get_usize(p, "N").unwrap())?;
    let wave = petviashvili_solve(
        c,
        &grid,
        None,
        get_f64(p, "tol").unwrap(),
        get_usize(p, "max_iters").unwrap(),
    )?;
    let report = stability_experiment(
        &wave,
        get_f64(p, "delta").unwrap(),
        get_f64(p, "t_end").unwrap(),
        SobolevIndex::new(get_f64(p, "s").unwrap())?,
        get_usize(p, "seeds").unwrap(),
        seed,
    )?;
    write_profile_csv(out.join("wave.csv"), &wave.field)?;
    for (i, tr) in report.seed_traces.iter().enumerate() {
        let mut text = String::from("t,metric,shift\n");
        for ((&t, &m), &s) in tr.times.iter().zip(&tr.metric).zip(&tr.shift) {
            text.push_str(&format!("{},{},{}\n", fmt17(t), fmt17(m), fmt17(s)));
        }
        fs::write(out.join(format!("seed_{i:03}.csv")), text)?;
    }
    write_json(out.join("report.json"), &report)?;
    Ok(())
}

fn run_subadditivity(p: &Value, out: &Path, seed: u64) -> Result<()> {
    let q_list: Vec<f64> = p
        .get("q_list")
        .and_then(|v| v.as_array())
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let grid = PeriodicGrid::new(get_f64(p, "P").unwrap(), get_usize(p, "N").unwrap())?;
    let mut cfg = ScanConfig::new(&grid);
    cfg.max_iters = get_usize(p, "max_iters").unwrap();
    cfg.grad_tol = get_f64(p, "grad_tol").unwrap();
    cfg.restarts = get_usize(p, "restarts").unwrap();
    cfg.seed = seed;
    let report = subadditivity_scan(&q_list, &cfg)?;
    write_json(out.join("report.json"), &report)?;
    Ok(())
}

fn run_kernel(p: &Value, out: &Path, _seed: u64) -> Result<()> {
    let c = get_f64(p, "c").unwrap();
    let y_max = get_f64(p, "y_max").unwrap();
    let n = get_usize(p, "n").unwrap();
    let mut text = String::from("y,g\n");
    for i in 0..n {
        let y = -y_max + 2.0 * y_max * i as f64 / (n - 1) as f64;
        text.push_str(&format!("{},{}\n", fmt17(y), fmt17(kernel_smooth(y, c)?)));
    }
    fs::write(out.join("kernel.csv"), text)?;
    write_json(
        out.join("kernel.json"),
        &json!({
            "c": c,
            "sigma": decay_rate(c)?,
            "value_at_zero": kernel_smooth(0.0, c)?,
            "identity_part": 1.0 / c,
        }),
    )?;
    Ok(())
}

#[derive(Serialize)]
struct DecayReport {
    sigma_fit: f64,
    sigma_theory: Option<f64>,
    window: (f64, f64),
    r_squared: f64,
    accepted: bool,
}

fn run_decay(p: &Value, out: &Path, _seed: u64) -> Result<()> {
    let field = read_profile_csv(get_str(p, "profile").unwrap())?;
    let band = (
        get_f64(p, "band_lo").unwrap_or(1e-8),
        get_f64(p, "band_hi").unwrap_or(1e-3),
    );
    let (sigma_fit, r_squared, window) = fit_tail(&field, Some(band))?;
    let sigma_theory = match get_f64(p, "c") {
        Some(c) => Some(decay_rate(c)?),
        None => None,
    };
    write_json(
        out.join("fit.json"),
        &DecayReport {
            sigma_fit,
            sigma_theory,
            window,
            r_squared,
            accepted: r_squared >= 0.999,
        },
    )?;
    Ok(())
}

fn run_classify(p: &Value, out: &Path, _seed: u64) -> Result<()> {
    let dir = PathBuf::from(get_str(p, "densities").unwrap());
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map_or(false, |x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(FwError::Data(format!("no .csv densities found in {dir:?}")));
    }
    let densities: Vec<Field> = paths
        .iter()
        .map(read_profile_csv)
        .collect::<Result<Vec<_>>>()?;
    let q = match get_f64(p, "q") {
        Some(q) => q,
        None => integral(&densities[0]),
    };
    let eps = get_f64(p, "eps").unwrap_or(0.05 * q);
    let verdict = classify_sequence(&densities, q, eps)?;
    write_json(out.join("verdict.json"), &verdict)?;
    Ok(())
}

pub fn run(command: &str, params: &Value, out: &Path, seed: u64) -> Result<()> {
    match command {
        "solve-wave" => run_solve_wave(params, out, seed),
        "solve-variational" => run_solve_variational(params, out, seed),
        "evolve" => run_evolve(params, out, seed),
        "stability" => run_stability(params, out, seed),
        "subadditivity" => run_subadditivity(params, out, seed),
        "kernel" => run_kernel(params, out, seed),
        "decay" => run_decay(params, out, seed),
        "classify" => run_classify(params, out, seed),
        other => Err(FwError::Config(format!("unknown command {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resolve::{merge, set_path};

    #[test]
    fn valid_configs_produce_no_diagnostics() {
        let mut wave = defaults("solve-wave");
        set_path(&mut wave, "c", "1.25").unwrap();
        assert!(validate("solve-wave", &wave).is_empty());

        let mut var = defaults("solve-variational");
        set_path(&mut var, "q", "1.0").unwrap();
        assert!(validate("solve-variational", &var).is_empty());

        let mut stab = defaults("stability");
        merge(&mut stab, serde_json::json!({"c": 1.25, "delta": 1e-3}));
        assert!(validate("stability", &stab).is_empty());
    }

    #[test]
    fn every_violation_is_listed() {
        let mut p = defaults("solve-variational");
        set_path(&mut p, "q", "-2").unwrap();
        set_path(&mut p, "N", "7").unwrap();
        set_path(&mut p, "grad_tol", "0").unwrap();
        let diags = validate("solve-variational", &p);
        assert!(diags.len() >= 3, "expected all violations, got {diags:?}");
        assert!(diags.iter().any(|d| d.contains("Q(u) = q > 0")));
        assert!(diags.iter().any(|d| d.contains("N must be even")));
        assert!(diags.iter().any(|d| d.contains("grad_tol")));
    }

    #[test]
    fn unknown_command_is_diagnosed_and_rejected() {
        assert!(!validate("frobnicate", &serde_json::json!({})).is_empty());
        let out = std::env::temp_dir();
        assert!(run("frobnicate", &serde_json::json!({}), &out, 0).is_err());
    }
}
