//! Subcommand execution and artifact output.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use toda_core::ensemble::{sample_pair, sample_rng, summarize, Bias, SamplerParams};
use toda_core::flow::{darboux_power_exp, darboux_step, flow_finite, FlowSpec};
use toda_core::lattice::{truncate, Background, JacobiCoefficients};
use toda_core::ode::{exact_family, integrate, Boundary, ExactFamily, OdeRun};
use toda_core::series::{
    change_variable, conv_env, inv_env, log_envelope, log_sigma_bound, phi_coeffs, Direction,
    EnvelopeSeries,
};
use toda_core::Error;

use crate::config::{merge, require, DarbouxArgs, EnsembleArgs, FlowArgs, OdeArgs, SelftestArgs, SeriesArgs};
use crate::io::{coefficients_csv, read_lattice, trajectory_csv};
use crate::parallel::{map_indexed, thread_count};
use crate::{acceptance, Cli, CliError, Command};

pub const GENERATOR: &str = "ChaCha20";

#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Csv(String),
    Json(Value),
}

/// Result of one subcommand before anything is written.
#[derive(Debug, Clone)]
pub struct Execution {
    pub artifact: Artifact,
    pub seed: Option<u64>,
    /// Merged parameters, recorded in meta.json.
    pub config: Value,
    pub out: Option<PathBuf>,
    /// Set when the command ran but its checks failed (selftest).
    pub failure: Option<String>,
}

fn config_value<T: serde::Serialize>(args: &T) -> Value {
    serde_json::to_value(args).unwrap_or(Value::Null)
}

/// Runs `command` with parameters merged from `config` and the flags.
pub fn execute(command: &Command, config: Option<&Path>) -> Result<Execution, CliError> {
    match command {
        Command::Flow(a) => {
            let (a, out) = merge(a, config)?;
            Ok(plain(run_flow(&a)?, config_value(&a), out))
        }
        Command::Darboux(a) => {
            let (a, out) = merge(a, config)?;
            Ok(plain(run_darboux(&a)?, config_value(&a), out))
        }
        Command::Ode(a) => {
            let (a, out) = merge(a, config)?;
            Ok(plain(run_ode(&a)?, config_value(&a), out))
        }
        Command::Ensemble(a) => {
            let (a, out) = merge(a, config)?;
            let artifact = run_ensemble(&a)?;
            Ok(Execution { artifact, seed: a.seed, config: config_value(&a), out, failure: None })
        }
        Command::SeriesCheck(a) => {
            let (a, out) = merge(a, config)?;
            let (artifact, failure) = run_series(&a)?;
            Ok(Execution { artifact, seed: a.seed, config: config_value(&a), out, failure })
        }
        Command::Selftest(a) => {
            let (a, out) = merge(a, config)?;
            let (artifact, failure) = run_selftest(&a)?;
            Ok(Execution { artifact, seed: None, config: config_value(&a), out, failure })
        }
    }
}

fn plain(artifact: Artifact, config: Value, out: Option<PathBuf>) -> Execution {
    Execution { artifact, seed: None, config, out, failure: None }
}

/// Executes the parsed command line and writes its artifacts.
pub fn run(cli: &Cli, start: Instant) -> Result<(), CliError> {
    let exec = execute(&cli.command, cli.config.as_deref())?;
    let out = cli.out.clone().or_else(|| exec.out.clone());
    match &out {
        Some(dir) => write_artifacts(dir, cli.command.name(), &exec, start.elapsed().as_secs_f64())?,
        None => match &exec.artifact {
            Artifact::Csv(s) => print!("{s}"),
            // selftest already printed its lines
            Artifact::Json(_) if matches!(cli.command, Command::Selftest(_)) => {}
            Artifact::Json(v) => println!("{}", pretty(v)),
        },
    }
    match exec.failure {
        Some(f) => Err(CliError::SelftestFailed(f)),
        None => Ok(()),
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize")
}

/// `result.csv` or `result.json`, then `meta.json`.
pub fn write_artifacts(dir: &Path, command: &str, exec: &Execution, wall_time: f64) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    match &exec.artifact {
        Artifact::Csv(s) => std::fs::write(dir.join("result.csv"), s)?,
        Artifact::Json(v) => std::fs::write(dir.join("result.json"), pretty(v) + "\n")?,
    }
    let meta = json!({
        "tool": "toda",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "generator": exec.seed.map(|_| GENERATOR),
        "seed": exec.seed,
        "config": exec.config,
        "wall_time_seconds": wall_time,
    });
    std::fs::write(dir.join("meta.json"), pretty(&meta) + "\n")?;
    Ok(())
}

fn input(path: &Option<PathBuf>) -> Result<JacobiCoefficients, CliError> {
    let p = path.as_ref().ok_or_else(|| CliError::Config("missing parameter `input`".into()))?;
    read_lattice(p)
}

fn run_flow(a: &FlowArgs) -> Result<Artifact, CliError> {
    let q = input(&a.input)?;
    let t = require(a.time, "time")?;
    let poly = a.poly.clone().unwrap_or_else(|| vec![0.0, 1.0]);
    if poly.is_empty() {
        return Err(CliError::Config("`poly` needs at least one coefficient".into()));
    }
    let section = truncate(&q, q.window_start, q.window_end())?;
    let moved = flow_finite(&section, &FlowSpec::new(poly, t))?;
    let mut a_out = vec![q.a[0]];
    a_out.extend(&moved.offdiag);
    let r = JacobiCoefficients::new(q.window_start, a_out, moved.diag, Background::None)?;
    Ok(Artifact::Csv(coefficients_csv(&r)?))
}

fn run_darboux(a: &DarbouxArgs) -> Result<Artifact, CliError> {
    let q = input(&a.input)?;
    let r = match (a.zeta, a.steps, a.time) {
        (Some(z), None, None) => darboux_step(&q, z)?,
        (None, Some(n), Some(t)) => darboux_power_exp(&q, t, n)?,
        _ => return Err(CliError::Config("give either `zeta`, or `steps` and `time`".into())),
    };
    Ok(Artifact::Csv(coefficients_csv(&r)?))
}

fn family_of(a: &OdeArgs) -> Result<Option<ExactFamily>, CliError> {
    Ok(match a.family.as_deref() {
        None => None,
        Some("growing") => Some(ExactFamily::Growing { gamma: require(a.gamma, "gamma")? }),
        Some("exploding") => Some(ExactFamily::Exploding {
            c: require(a.c, "c")?,
            alpha: require(a.alpha, "alpha")?,
            beta: require(a.beta, "beta")?,
        }),
        Some(other) => return Err(CliError::Config(format!("unknown family `{other}`"))),
    })
}

fn run_ode(a: &OdeArgs) -> Result<Artifact, CliError> {
    let t = require(a.time, "time")?;
    let (q, boundary) = match family_of(a)? {
        Some(fam) => {
            let w = a.window.clone().unwrap_or_else(|| vec![1, 200]);
            if w.len() != 2 || w[0] < 1 || w[1] < w[0] {
                return Err(CliError::Config("`window` must be lo,hi with 1 <= lo <= hi".into()));
            }
            let (mut av, mut bv) = (Vec::new(), Vec::new());
            for n in w[0]..=w[1] {
                let (an, bn) = exact_family(&fam, n, 0.0)?;
                av.push(an);
                bv.push(bn);
            }
            (JacobiCoefficients::new(w[0], av, bv, Background::None)?, Boundary::Family(fam))
        }
        None => {
            let boundary = match a.boundary.as_deref().unwrap_or("open") {
                "open" => Boundary::OpenEnds,
                "periodic" => Boundary::Periodic,
                other => return Err(CliError::Config(format!("unknown boundary `{other}`"))),
            };
            (input(&a.input)?, boundary)
        }
    };
    let run = OdeRun {
        q0: q,
        t_final: t,
        boundary,
        rel_tol: a.rel_tol.unwrap_or(1e-10),
        abs_tol: a.abs_tol.unwrap_or(1e-10),
        dense_output_times: a.times.clone().unwrap_or_else(|| vec![t]),
    };
    run.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(Artifact::Csv(trajectory_csv(&integrate(&run)?)?))
}

fn run_ensemble(a: &EnsembleArgs) -> Result<Artifact, CliError> {
    let params = SamplerParams {
        l: require(a.l, "L")?,
        nu: require(a.nu, "nu")?,
        sigma: require(a.sigma, "sigma")?,
        mean_b: require(a.mean_b, "mean_b")?,
    };
    params.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let n = require(a.samples, "samples")?;
    let t = require(a.t, "t")?;
    let seed = require(a.seed, "seed")?;
    if n < 2 || t.is_nan() || t < 0.0 {
        return Err(CliError::Config("need samples >= 2 and t >= 0".into()));
    }
    let bias = match (a.bias_site, a.bias_shift) {
        (None, None) => None,
        (Some(site), Some(shift)) if site >= 1 && site <= params.l => Some(Bias { site: site - 1, shift }),
        _ => return Err(CliError::Config("bias needs both `bias_site` in 1..=L and `bias_shift`".into())),
    };
    let pairs = map_indexed(n, thread_count(), |i| sample_pair(&params, t, seed, i as u64, bias))
        .into_iter()
        .collect::<Result<Vec<_>, Error>>()?;
    let report = summarize(&params, t, seed, &pairs);
    Ok(Artifact::Json(serde_json::to_value(report).expect("report serializes")))
}

fn run_series(a: &SeriesArgs) -> Result<(Artifact, Option<String>), CliError> {
    let seed = require(a.seed, "seed")?;
    let pairs = a.pairs.unwrap_or(100);
    let terms = a.terms.unwrap_or(64);
    if !(4..=64).contains(&terms) {
        return Err(CliError::Config("`terms` must lie in 4..=64".into()));
    }
    let mut rng = sample_rng(seed, 0);
    let mut unif = |lo: f64, hi: f64| {
        use rand_core::RngCore;
        lo + (hi - lo) * ((rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
    };
    let member = |c: f64, alpha: f64, a0: f64, unif: &mut dyn FnMut(f64, f64) -> f64| {
        let mut v = vec![a0];
        for k in 1..terms {
            v.push(unif(-1.0, 1.0) * log_envelope(c, alpha, k).exp());
        }
        EnvelopeSeries::new(v, c, alpha)
    };
    let (mut conv_ok, mut inv_ok, mut sigma_ok) = (0usize, 0usize, 0usize);
    let mut round_trip: f64 = 0.0;
    for i in 0..pairs {
        let alpha = [0.5, 1.0, 2.0][i % 3];
        let (c1, c2) = (unif(0.2, 2.2), unif(0.2, 2.2));
        let (a0, b0) = (unif(-1.0, 1.0), unif(-1.0, 1.0));
        let x = member(c1, alpha, a0, &mut unif)?;
        let y = member(c2, alpha, b0, &mut unif)?;
        conv_ok += conv_env(&x, &y).is_ok() as usize;
        let u = member(c1, alpha, 1.0, &mut unif)?;
        inv_ok += inv_env(&u).is_ok() as usize;
        let mu = member(c2, alpha, 0.0, &mut unif)?.coeffs[1..].to_vec();
        let sigma = change_variable(&mu, Direction::MuToSigma)?;
        let held = sigma
            .iter()
            .enumerate()
            .all(|(k, s)| *s == 0.0 || s.abs().ln() <= log_sigma_bound(c2, alpha, k + 1) + 1e-10);
        sigma_ok += held as usize;
        let back = change_variable(&sigma, Direction::SigmaToMu)?;
        for (p, q) in mu.iter().zip(&back) {
            if *p != 0.0 {
                round_trip = round_trip.max((p - q).abs() / p.abs());
            }
        }
    }
    let p = phi_coeffs(10_000);
    let phi_sum: f64 = p.iter().sum();
    let pass = conv_ok == pairs
        && inv_ok == pairs
        && sigma_ok == pairs
        && round_trip <= 1e-12
        && p[..3] == [0.5, 0.125, 0.0625]
        && (0.99..=1.0).contains(&phi_sum);
    let v = json!({
        "seed": seed,
        "pairs": pairs,
        "terms": terms,
        "conv_bound_held": conv_ok,
        "inv_bound_held": inv_ok,
        "sigma_bound_held": sigma_ok,
        "round_trip_max_rel": round_trip,
        "p_first": &p[..3],
        "phi_partial_sum": phi_sum,
        "pass": pass,
    });
    Ok((Artifact::Json(v), (!pass).then(|| "series checks failed".to_string())))
}

fn run_selftest(a: &SelftestArgs) -> Result<(Artifact, Option<String>), CliError> {
    let ids: Vec<String> = match &a.only {
        Some(v) => v.iter().map(|s| s.trim().to_uppercase()).collect(),
        None => acceptance::IDS.iter().map(|s| s.to_string()).collect(),
    };
    let mut outcomes = Vec::new();
    for id in &ids {
        let o = acceptance::run(id).ok_or_else(|| CliError::Config(format!("unknown criterion `{id}`")))?;
        println!("{o}");
        outcomes.push(o);
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    let v = json!({
        "criteria": outcomes.iter().map(|o| json!({"id": o.id, "pass": o.pass, "detail": o.detail})).collect::<Vec<_>>(),
        "pass": failed.is_empty(),
    });
    Ok((Artifact::Json(v), (!failed.is_empty()).then(|| failed.join(", "))))
}
