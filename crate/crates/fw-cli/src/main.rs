//! `fw`: experiment runner for Fornberg-Whitham solitary waves.
//!
//! Every run resolves its parameters from defaults, an optional JSON config,
//! repeated `--set key=value` overrides, and explicit flags (in that order),
//! validates them, executes, and leaves a `manifest.json` with the fully
//! resolved configuration next to the command outputs.
//!
//! Exit codes: 0 success, 2 configuration/domain error, 3 non-convergence,
//! 4 blow-up, 5 i/o error.

mod resolve;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use fw_core::error::FwError;

#[derive(Parser)]
#[command(
    name = "fw",
    version,
    about = "Fornberg-Whitham solitary-wave experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Output directory for this run
    #[arg(long, default_value = "fw-run")]
    out: PathBuf,
    /// RNG seed (runs with equal config and seed are byte-identical)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON config file; flags and --set override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. --set penalty.R=2.5 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the traveling equation at speed c by stabilized fixed point
    SolveWave {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long = "P")]
        p: Option<f64>,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Minimize J over the sphere Q = q with the H^1 barrier
    SolveVariational {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long = "P")]
        p: Option<f64>,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        grad_tol: Option<f64>,
        #[arg(long)]
        step0: Option<f64>,
        #[arg(long = "penalty-r")]
        penalty_r: Option<f64>,
        #[arg(long = "penalty-scale")]
        penalty_scale: Option<f64>,
    },
    /// Evolve initial data from a profile CSV
    Evolve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        /// "auto" or a positive step
        #[arg(long)]
        dt: Option<String>,
        #[arg(long = "no-dealias")]
        no_dealias: bool,
        #[arg(long)]
        record_every: Option<usize>,
    },
    /// Perturb the wave at speed c and track the orbit distance
    Stability {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long = "P")]
        p: Option<f64>,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Scan I_q over a mass list and check strict subadditivity
    Subadditivity {
        #[command(flatten)]
        common: Common,
        /// Comma-separated masses, e.g. 0.5,1,1.5,2,3
        #[arg(long = "q-list")]
        q_list: Option<String>,
        #[arg(long = "P")]
        p: Option<f64>,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        grad_tol: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Tabulate the smooth convolution kernel of (c - L)^{-1}
    Kernel {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long = "y-max")]
        y_max: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Fit the exponential tail rate of a stored profile
    Decay {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Wave speed for the theoretical rate (optional)
        #[arg(long)]
        c: Option<f64>,
    },
    /// Label a directory of density CSVs by the concentration trichotomy
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        densities: Option<PathBuf>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
    },
}

fn exit_code_for(err: &FwError) -> u8 {
    match err {
        FwError::Config(_) | FwError::Domain(_) | FwError::Data(_) => 2,
        FwError::NonConvergence { .. } | FwError::BarrierBreach { .. } => 3,
        FwError::BlowUp { .. } => 4,
        FwError::Io(_) | FwError::Serialize(_) => 5,
    }
}

struct Prepared {
    name: &'static str,
    common: Common,
    flags: Vec<(String, Value)>,
}

fn prepare(cmd: &Command) -> Prepared {
    fn num(v: Option<f64>) -> Option<Value> {
        v.map(|x| json!(x))
    }
    fn int(v: Option<usize>) -> Option<Value> {
        v.map(|x| json!(x))
    }
    fn path(v: &Option<PathBuf>) -> Option<Value> {
        v.as_ref().map(|x| json!(x.to_string_lossy()))
    }

    let mut flags: Vec<(String, Option<Value>)> = Vec::new();
    let (name, common) = match cmd {
        Command::SolveWave {
            common,
            c,
            p,
            n,
            tol,
            max_iters,
        } => {
            flags.extend([
                ("c".into(), num(*c)),
                ("P".into(), num(*p)),
                ("N".into(), int(*n)),
                ("tol".into(), num(*tol)),
                ("max_iters".into(), int(*max_iters)),
            ]);
            ("solve-wave", common.clone())
        }
        Command::SolveVariational {
            common,
            q,
            r,
            p,
            n,
            max_iters,
            grad_tol,
            step0,
            penalty_r,
            penalty_scale,
        } => {
            flags.extend([
                ("q".into(), num(*q)),
                ("r".into(), num(*r)),
                ("P".into(), num(*p)),
                ("N".into(), int(*n)),
                ("max_iters".into(), int(*max_iters)),
                ("grad_tol".into(), num(*grad_tol)),
                ("step0".into(), num(*step0)),
                ("penalty.R".into(), num(*penalty_r)),
                ("penalty.scale".into(), num(*penalty_scale)),
            ]);
            ("solve-variational", common.clone())
        }
        Command::Evolve {
            common,
            init,
            t_end,
            dt,
            no_dealias,
            record_every,
        } => {
            flags.extend([
                ("init".into(), path(init)),
                ("t_end".into(), num(*t_end)),
                (
                    "dt".into(),
                    dt.as_ref().map(|s| {
                        s.parse::<f64>()
                            .map(|x| json!(x))
                            .unwrap_or_else(|_| json!(s))
                    }),
                ),
                ("record_every".into(), int(*record_every)),
            ]);
            if *no_dealias {
                flags.push(("dealias".into(), Some(json!(false))));
            }
            ("evolve", common.clone())
        }
        Command::Stability {
            common,
            c,
            delta,
            seeds,
            t_end,
            s,
            p,
            n,
            tol,
        } => {
            flags.extend([
                ("c".into(), num(*c)),
                ("delta".into(), num(*delta)),
                ("seeds".into(), int(*seeds)),
                ("t_end".into(), num(*t_end)),
                ("s".into(), num(*s)),
                ("P".into(), num(*p)),
                ("N".into(), int(*n)),
                ("tol".into(), num(*tol)),
            ]);
            ("stability", common.clone())
        }
        Command::Subadditivity {
            common,
            q_list,
            p,
            n,
            restarts,
            grad_tol,
            max_iters,
        } => {
            let parsed = q_list.as_ref().map(|s| {
                let vals: Vec<Value> = s
                    .split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| {
                        t.trim()
                            .parse::<f64>()
                            .map(|x| json!(x))
                            .unwrap_or_else(|_| json!(t.trim()))
                    })
                    .collect();
                json!(vals)
            });
            flags.extend([
                ("q_list".into(), parsed),
                ("P".into(), num(*p)),
                ("N".into(), int(*n)),
                ("restarts".into(), int(*restarts)),
                ("grad_tol".into(), num(*grad_tol)),
                ("max_iters".into(), int(*max_iters)),
            ]);
            ("subadditivity", common.clone())
        }
        Command::Kernel {
            common,
            c,
            y_max,
            n,
        } => {
            flags.extend([
                ("c".into(), num(*c)),
                ("y_max".into(), num(*y_max)),
                ("n".into(), int(*n)),
            ]);
            ("kernel", common.clone())
        }
        Command::Decay { common, profile, c } => {
            flags.extend([("profile".into(), path(profile)), ("c".into(), num(*c))]);
            ("decay", common.clone())
        }
        Command::Classify {
            common,
            densities,
            q,
            eps,
        } => {
            flags.extend([
                ("densities".into(), path(densities)),
                ("q".into(), num(*q)),
                ("eps".into(), num(*eps)),
            ]);
            ("classify", common.clone())
        }
    };
    Prepared {
        name,
        common,
        flags: flags
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k, v)))
            .collect(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let prepared = prepare(&cli.command);
    let started = Instant::now();

    // defaults <- config file <- --set <- explicit flags
    let mut params = run::defaults(prepared.name);
    if let Some(cfg_path) = &prepared.common.config {
        match resolve::load_config(cfg_path) {
            Ok(v) => resolve::merge(&mut params, v),
            Err(e) => {
                eprintln!("fw: {e}");
                return ExitCode::from(2);
            }
        }
    }
    if let Err(e) = resolve::apply_sets(&mut params, &prepared.common.sets) {
        eprintln!("fw: {e}");
        return ExitCode::from(2);
    }
    for (key, value) in &prepared.flags {
        if resolve::set_path(&mut params, key, &value.to_string()).is_err() {
            eprintln!("fw: cannot set {key}");
            return ExitCode::from(2);
        }
    }

    let diagnostics = run::validate(prepared.name, &params);
    if !diagnostics.is_empty() {
        for d in &diagnostics {
            eprintln!("fw: config: {d}");
        }
        return ExitCode::from(2);
    }

    let out = &prepared.common.out;
    if let Err(e) = std::fs::create_dir_all(out) {
        eprintln!("fw: cannot create output directory {out:?}: {e}");
        return ExitCode::from(5);
    }

    let result = run::run(prepared.name, &params, out, prepared.common.seed);

    let manifest = json!({
        "command": prepared.name,
        "params": params,
        "seed": prepared.common.seed,
        "version": env!("CARGO_PKG_VERSION"),
        "wall_time_s": started.elapsed().as_secs_f64(),
    });
    if let Err(e) = fw_core::io::write_json(out.join("manifest.json"), &manifest) {
        eprintln!("fw: cannot write manifest: {e}");
        return ExitCode::from(5);
    }

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fw: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
