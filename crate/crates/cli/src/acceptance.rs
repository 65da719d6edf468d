//! The A1–A12 acceptance suite, shared by `toda selftest` and the
//! `acceptance` integration test.

use std::time::Instant;

use num_complex::Complex64;
use rand_core::RngCore;
use serde::Serialize;

use toda_core::ensemble::{
    invariant_ik, poisson_bracket, sample_beta, sample_pair, sample_rng, summarize, Bias,
    PeriodicLattice, SamplerParams,
};
use toda_core::flow::{darboux_power_exp, darboux_step, flow_finite, FlowSpec, TODA_SIGN};
use toda_core::lattice::{eigendecompose, truncate, Background, JacobiCoefficients, TridiagonalMatrix};
use toda_core::mfunc::{eval_m, MRep, Transform};
use toda_core::ode::{exact_family, integrate, residual, Boundary, ExactFamily, OdeRun};
use toda_core::series::{
    change_variable, conv_env, exp_integrability_check, inv_env, log_envelope, log_sigma_bound,
    moment_growth_bound, phi_coeffs, Direction, EnvelopeSeries,
};
use toda_core::weyl::{fundamental_solutions, m_plus, m_whole, resolvent_diagonal, weyl_disk};
use toda_core::{lattice::operator_moment, Error};

use crate::parallel::{map_indexed, thread_count};

/// Outcome of one criterion.
#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{} {verdict} ({:.2}s) {}", self.id, self.seconds, self.detail)
    }
}

type Check = Result<(bool, String), Error>;

pub const IDS: [&str; 12] = ["A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9", "A10", "A11", "A12"];

/// Runs one criterion by id.
pub fn run(id: &str) -> Option<Outcome> {
    let (id, f): (&'static str, fn() -> Check) = match id {
        "A1" => ("A1", a1),
        "A2" => ("A2", a2),
        "A3" => ("A3", a3),
        "A4" => ("A4", a4),
        "A5" => ("A5", a5),
        "A6" => ("A6", a6),
        "A7" => ("A7", a7),
        "A8" => ("A8", a8),
        "A9" => ("A9", a9),
        "A10" => ("A10", a10),
        "A11" => ("A11", a11),
        "A12" => ("A12", a12),
        _ => return None,
    };
    let start = Instant::now();
    let res = f();
    let seconds = start.elapsed().as_secs_f64();
    let (pass, detail) = match res {
        Ok(r) => r,
        Err(e) => (false, format!("error {}: {e}", e.name())),
    };
    Some(Outcome { id, pass, detail, seconds })
}

pub fn run_all() -> Vec<Outcome> {
    IDS.iter().filter_map(|id| run(id)).collect()
}

fn unif<R: RngCore>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * ((rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let s = Instant::now();
    let v = f();
    (v, s.elapsed().as_secs_f64())
}

fn a1() -> Check {
    let (worst, secs) = timed(|| -> Result<f64, Error> {
        let fams = [
            ExactFamily::Growing { gamma: 0.3 },
            ExactFamily::Growing { gamma: 0.7 },
            ExactFamily::Growing { gamma: -0.5 },
            ExactFamily::Exploding { c: 1.0, alpha: 1.0, beta: 1.0 },
            ExactFamily::Exploding { c: 0.5, alpha: 2.0, beta: 2.0 },
            ExactFamily::Exploding { c: 2.0, alpha: -1.0, beta: 1.5 },
        ];
        let mut worst: f64 = 0.0;
        for fam in &fams {
            let t_hi = fam.blow_up_time().map_or(1.0, |ts| 0.8 * ts);
            for n in 1..=10 {
                for j in 0..5 {
                    let (ra, rb) = residual(fam, n, t_hi * j as f64 / 4.0)?;
                    worst = worst.max(ra.abs()).max(rb.abs());
                }
            }
        }
        Ok(worst)
    });
    let worst = worst?;
    Ok((worst <= 1e-10 && secs < 1.0, format!("max residual {worst:.2e} over 6x50 points")))
}

fn two_site() -> TridiagonalMatrix {
    TridiagonalMatrix::new(vec![0.0, 0.0], vec![1.0]).expect("valid")
}

fn a2() -> Check {
    let mut flow_err: f64 = 0.0;
    let mut ode_err: f64 = 0.0;
    for t in [0.1, 0.5, 1.0] {
        let f = flow_finite(&two_site(), &FlowSpec::toda(t))?;
        let (sech, tanh) = (1.0 / (2.0 * t).cosh(), (2.0 * t).tanh());
        flow_err = flow_err
            .max((f.offdiag[0] - sech).abs())
            .max((f.diag[0] - tanh).abs())
            .max((f.diag[1] + tanh).abs());
        let tr = integrate(&OdeRun::simple(two_site().to_half_line(), t, Boundary::OpenEnds, 1e-10))?;
        let s = &tr.states[0];
        ode_err = ode_err
            .max((s.a[1] - f.offdiag[0]).abs())
            .max((s.b[0] - f.diag[0]).abs())
            .max((s.b[1] - f.diag[1]).abs());
    }
    Ok((
        flow_err <= 1e-12 && ode_err <= 1e-8,
        format!("flow vs closed form {flow_err:.2e}, ode vs flow {ode_err:.2e}, SIGN = {TODA_SIGN:+}"),
    ))
}

fn a3() -> Check {
    let start = Instant::now();
    let mut rng = sample_rng(3, 0);
    let diag: Vec<f64> = (0..6).map(|_| unif(&mut rng, -1.0, 1.0)).collect();
    let off: Vec<f64> = (0..5).map(|_| unif(&mut rng, 0.5, 1.5)).collect();
    let t0 = TridiagonalMatrix::new(diag, off)?;
    let f = flow_finite(&t0, &FlowSpec::toda(0.25))?;
    let tr = integrate(&OdeRun::simple(t0.to_half_line(), 0.25, Boundary::OpenEnds, 1e-10))?;
    let s = &tr.states[0];
    let mut diff: f64 = 0.0;
    for k in 0..6 {
        diff = diff.max((s.b[k] - f.diag[k]).abs());
    }
    for k in 0..5 {
        diff = diff.max((s.a[k + 1] - f.offdiag[k]).abs());
    }
    let ev0 = eigendecompose(&t0)?.values;
    let ev_flow = eigendecompose(&f)?.values;
    let ev_ode = eigendecompose(&TridiagonalMatrix::new(s.b.clone(), s.a[1..].to_vec())?)?.values;
    let mut drift: f64 = 0.0;
    for k in 0..6 {
        drift = drift.max((ev_flow[k] - ev0[k]).abs()).max((ev_ode[k] - ev0[k]).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        diff <= 1e-6 && drift <= 1e-9 && secs < 5.0,
        format!("max coefficient difference {diff:.2e}, eigenvalue drift {drift:.2e}"),
    ))
}

fn a4() -> Check {
    let mut rng = sample_rng(4, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let a: Vec<f64> = (0..7).map(|_| unif(&mut rng, 0.7, 1.3)).collect();
        let b: Vec<f64> = (0..6).map(|_| unif(&mut rng, -0.6, 0.6)).collect();
        let q = JacobiCoefficients::new(-3, a, b, Background::Free { a0: 1.0, b0: 0.0 })?;
        let top = eigendecompose(&truncate(&q, -300, 300)?)?
            .values
            .last()
            .copied()
            .unwrap_or(2.0)
            .max(2.0);
        let e = top + 0.5 + unif(&mut rng, 0.0, 1.0);
        let eta = 0.5 * (e + (e * e - 4.0).sqrt());
        let qh = darboux_step(&q, eta)?;
        let rep = MRep::from_lattice(&q, 300)?.with(&[Transform::DEta(eta)]);
        for k in 0..20 {
            let th = 0.15 + 0.14 * k as f64;
            let r = if k % 2 == 0 { 1.6 } else { 0.55 };
            let z = Complex64::from_polar(r, th);
            worst = worst.max((eval_m(&rep, z)? - m_whole(&qh, z, 300)?).norm());
        }
    }
    Ok((worst <= 1e-8, format!("max |d_eta m - m(darboux)| = {worst:.2e} over 5 lattices x 20 points")))
}

fn a5() -> Check {
    let h = two_site().to_half_line();
    // n steps at ζ = n/t multiply the measure by (E-λ)^{-n} -> e^{tλ}: the flow at t/2
    let exact = flow_finite(&two_site(), &FlowSpec::toda(0.15))?;
    let mut errs = Vec::new();
    for n in [4usize, 8, 16, 32] {
        let r = darboux_power_exp(&h, 0.3, n)?;
        errs.push(
            (r.a[1] - exact.offdiag[0])
                .abs()
                .max((r.b[0] - exact.diag[0]).abs())
                .max((r.b[1] - exact.diag[1]).abs()),
        );
    }
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    // least-squares slope of log2(err) against log2(n)
    let xs = [2.0, 3.0, 4.0, 5.0];
    let ys: Vec<f64> = errs.iter().map(|e| e.log2()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    let order = -slope;
    Ok((
        monotone && order >= 0.8,
        format!("errors {:.2e} {:.2e} {:.2e} {:.2e}, fitted order {order:.2}", errs[0], errs[1], errs[2], errs[3]),
    ))
}

fn a6() -> Check {
    let start = Instant::now();
    let p = SamplerParams { l: 8, nu: 2.0, sigma: 1.0, mean_b: 0.0 };
    let lat = sample_beta(&p, &mut sample_rng(6, 0))?;
    let mut run = OdeRun::simple(lat.to_window(), 1.0, Boundary::Periodic, 1e-11);
    run.dense_output_times = (1..=10).map(|k| k as f64 / 10.0).collect();
    let tr = integrate(&run)?;
    let mut worst: f64 = 0.0;
    for s in &tr.states {
        let after = PeriodicLattice::from_window(s)?;
        for k in 1..=4 {
            let i0 = invariant_ik(&lat, k)?;
            let i1 = invariant_ik(&after, k)?;
            // I_1 can vanish, so drift is relative to max(|I_k|, 1)
            worst = worst.max((i1 - i0).abs() / i0.abs().max(1.0));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((worst <= 1e-8 && secs < 10.0, format!("max relative drift of I1..I4 {worst:.2e}")))
}

fn a7() -> Check {
    let p = SamplerParams { l: 6, nu: 2.0, sigma: 1.0, mean_b: 0.0 };
    let mut worst: f64 = 0.0;
    let mut edge: f64 = 0.0;
    for i in 0..10 {
        let lat = sample_beta(&p, &mut sample_rng(7, i))?;
        let inv = |k: u32| move |l: &PeriodicLattice| invariant_ik(l, k).unwrap_or(f64::NAN);
        for k in 1..=3 {
            for l in 1..=3 {
                worst = worst.max(poisson_bracket(inv(k), inv(l), &lat).abs());
            }
            worst = worst.max(poisson_bracket(inv(k), inv(0), &lat).abs());
        }
        let v = poisson_bracket(|l| l.a[0], |l| l.b[0], &lat);
        edge = edge.max((v - lat.a[0] / 4.0).abs());
    }
    Ok((
        worst <= 1e-6 && edge <= 1e-8,
        format!("max |{{I_k, I_l}}| {worst:.2e}, |{{a1,b1}} - a1/4| {edge:.2e}"),
    ))
}

fn a8() -> Check {
    let start = Instant::now();
    let p = SamplerParams { l: 8, nu: 2.0, sigma: 1.0, mean_b: 0.0 };
    let (t, n, seed) = (0.2, 10_000usize, 8u64);
    let threads = thread_count();
    let report = |bias: Option<Bias>| -> Result<_, Error> {
        let pairs = map_indexed(n, threads, |i| sample_pair(&p, t, seed, i as u64, bias))
            .into_iter()
            .collect::<Result<Vec<_>, Error>>()?;
        Ok(summarize(&p, t, seed, &pairs))
    };
    let clean = report(None)?;
    let biased = report(Some(Bias { site: 0, shift: 2.0 }))?;
    let worst = clean
        .per_site
        .iter()
        .map(|s| {
            ((s.mean_a2_after - s.mean_a2_before).abs() / s.se_a2)
                .max((s.mean_b_after - s.mean_b_before).abs() / s.se_b)
        })
        .fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    Ok((
        clean.pass && !biased.pass && secs < 120.0,
        format!(
            "largest |delta|/SE {worst:.2}, negative control {}",
            if biased.pass { "passed (bad)" } else { "rejected" }
        ),
    ))
}

fn random_member<R: RngCore>(rng: &mut R, n: usize, c: f64, alpha: f64, a0: f64) -> Result<EnvelopeSeries, Error> {
    let mut coeffs = vec![a0];
    for k in 1..n {
        coeffs.push(unif(rng, -1.0, 1.0) * log_envelope(c, alpha, k).exp());
    }
    EnvelopeSeries::new(coeffs, c, alpha)
}

fn a9() -> Check {
    let mut rng = sample_rng(9, 0);
    for i in 0..100 {
        let alpha = [0.5, 1.0, 2.0][i % 3];
        let (c1, c2) = (unif(&mut rng, 0.2, 2.2), unif(&mut rng, 0.2, 2.2));
        let (a0, b0) = (unif(&mut rng, -1.0, 1.0), unif(&mut rng, -1.0, 1.0));
        let a = random_member(&mut rng, 30, c1, alpha, a0)?;
        let b = random_member(&mut rng, 30, c2, alpha, b0)?;
        conv_env(&a, &b)?;
        inv_env(&random_member(&mut rng, 30, c1, alpha, 1.0)?)?;
    }
    let p = phi_coeffs(10_000);
    let exact = p[0] == 0.5 && p[1] == 0.125 && p[2] == 0.0625;
    let sum: f64 = p.iter().sum();
    let mut bound_ok = true;
    for i in 0..50 {
        let c = unif(&mut rng, 0.1, 3.0);
        let alpha = [0.5, 1.0, 1.5, 2.0, 3.0][i % 5];
        let mu = random_member(&mut rng, 40, c, alpha, 0.0)?.coeffs[1..].to_vec();
        let sigma = change_variable(&mu, Direction::MuToSigma)?;
        for (k, s) in sigma.iter().enumerate() {
            bound_ok &= *s == 0.0 || s.abs().ln() <= log_sigma_bound(c, alpha, k + 1) + 1e-10;
        }
    }
    let mut round_trip: f64 = 0.0;
    for (c, alpha) in [(0.5, 1.0), (1.0, 0.5), (2.0, 1.0), (1.0, 2.0)] {
        let mu = random_member(&mut rng, 64, c, alpha, 0.0)?.coeffs[1..].to_vec();
        let back = change_variable(&change_variable(&mu, Direction::MuToSigma)?, Direction::SigmaToMu)?;
        for (x, y) in mu.iter().zip(&back) {
            round_trip = round_trip.max((x - y).abs() / x.abs());
        }
    }
    Ok((
        exact && (0.99..=1.0).contains(&sum) && bound_ok && round_trip <= 1e-12,
        format!(
            "envelope bounds held on 100 pairs, sum p_j = {sum:.6}, sigma bound {}, round trip (L=64) {round_trip:.2e}",
            if bound_ok { "held" } else { "violated" }
        ),
    ))
}

/// Diagonal entry `k` of `(T - w)^{-1}` from the continued fractions run in from both ends.
fn tridiagonal_inverse_diagonal(t: &TridiagonalMatrix, w: Complex64, k: usize) -> Complex64 {
    let n = t.size();
    let d = |i: usize| Complex64::new(t.diag[i], 0.0) - w;
    let mut left = vec![Complex64::new(0.0, 0.0); n];
    left[0] = d(0);
    for i in 1..n {
        left[i] = d(i) - t.offdiag[i - 1] * t.offdiag[i - 1] / left[i - 1];
    }
    let mut right = vec![Complex64::new(0.0, 0.0); n];
    right[n - 1] = d(n - 1);
    for i in (0..n - 1).rev() {
        right[i] = d(i) - t.offdiag[i] * t.offdiag[i] / right[i + 1];
    }
    1.0 / (left[k] + right[k] - d(k))
}

fn a10() -> Check {
    let mut rng = sample_rng(10, 0);
    let (mut wr, mut nest, mut sat, mut res): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let mut inside = true;
    let mut sat_disks = 0;
    for _ in 0..10 {
        let a: Vec<f64> = (0..40).map(|_| unif(&mut rng, 0.3, 2.0)).collect();
        let b: Vec<f64> = (0..39).map(|_| unif(&mut rng, -1.0, 1.0)).collect();
        let q = JacobiCoefficients::new(1, a, b, Background::None)?;
        let z = Complex64::new(unif(&mut rng, -2.0, 2.0), unif(&mut rng, 0.1, 2.0));
        let fs = fundamental_solutions(&q, z, 37)?;
        for n in 0..=37 {
            wr = wr.max(fs.wronskian_error(n, q.a[0] / q.a[n]));
        }
        let m = m_plus(&q, z, 39)?;
        let mut prev = None;
        for l in 1..38 {
            let d = weyl_disk(&q, z, l)?;
            inside &= d.contains(m, 1e-12);
            if let Some(p) = prev {
                let p: toda_core::weyl::WeylDisk = p;
                nest = nest.max((d.center - p.center).norm() + d.radius - p.radius);
            }
            // below this radius the boundary points are not representable
            // apart from the center, so the form is only rounding noise
            if d.radius < 1e-8 * d.center.norm().max(1.0) {
                prev = Some(d);
                continue;
            }
            sat_disks += 1;
            let fsl = fundamental_solutions(&q, z, l)?;
            for j in 0..8 {
                let th = std::f64::consts::PI * j as f64 / 4.0;
                let mm = d.center + d.radius * Complex64::from_polar(1.0, th);
                let lhs: f64 = (1..=l).map(|n| (fsl.c[n] - q.a[0] * mm * fsl.s[n]).norm_sqr()).sum();
                let rhs = q.a[0] * q.a[0] * mm.im / z.im;
                sat = sat.max((lhs - rhs).abs() / rhs.abs().max(1.0));
            }
            prev = Some(d);
        }
        // whole-line resolvent on a bounded lattice against a direct solve
        let n = 20i64;
        let a: Vec<f64> = (0..2 * n + 2).map(|_| unif(&mut rng, 0.5, 1.5)).collect();
        let b: Vec<f64> = (0..2 * n + 1).map(|_| unif(&mut rng, -1.0, 1.0)).collect();
        let qw = JacobiCoefficients::new(-n, a, b, Background::None)?;
        let w = Complex64::new(unif(&mut rng, -2.0, 2.0), unif(&mut rng, 0.5, 3.0));
        let lhs = resolvent_diagonal(&qw, w, n as usize)?;
        let rhs = tridiagonal_inverse_diagonal(&truncate(&qw, -n, n)?, w, n as usize);
        res = res.max((lhs - rhs).norm());
    }
    let free = JacobiCoefficients::free(1.0, 0.0);
    let r = weyl_disk(&free, Complex64::new(0.0, 2.0), 1)?.radius;
    let pass = wr <= 1e-12 && nest <= 1e-12 && inside && (r - 0.25).abs() <= 1e-12 && sat <= 1e-10 && sat_disks >= 100 && res <= 1e-8;
    Ok((
        pass,
        format!(
            "wronskian {wr:.1e}, nesting excess {nest:.1e}, m+ inside {inside}, free radius {r}, saturation {sat:.1e} on {sat_disks} disks, resolvent {res:.1e}"
        ),
    ))
}

fn a11() -> Check {
    let mut rng = sample_rng(11, 0);
    let mut held = 0;
    for i in 0..20 {
        let alpha = if i % 2 == 0 { 1.0 } else { 2.0 };
        let c1 = unif(&mut rng, 0.5, 1.5);
        let cap = |n: usize| c1 * (n as f64).powf(1.0 / alpha);
        let b: Vec<f64> = (1..=30).map(|n| unif(&mut rng, -1.0, 1.0) * cap(n)).collect();
        let off: Vec<f64> = (2..=30).map(|n| unif(&mut rng, 0.05, 1.0) * cap(n)).collect();
        let q = JacobiCoefficients::half_line(b, off)?;
        let x1 = operator_moment(&q, 2, 1)?;
        let mut ok = true;
        for k in 1..=10u32 {
            let xk = operator_moment(&q, 2 * k as usize, 1)?;
            ok &= xk <= moment_growth_bound(c1, alpha, k, x1)? * (1.0 + 1e-12);
        }
        held += ok as usize;
    }
    let mut gauss = vec![1.0];
    for k in 1..15 {
        gauss.push(gauss[k - 1] * (2 * k - 1) as f64);
    }
    let fast: Vec<f64> = (0..15).map(|k| factorial(2 * k as u64) * 4f64.powi(k)).collect();
    let g = exp_integrability_check(&gauss, 1.0, 1.0)?.passes_growth;
    let f = exp_integrability_check(&fast, 1.0, 1.0)?.passes_growth;
    Ok((
        held == 20 && g && !f,
        format!("bound held for {held}/20 sequences, gaussian passes {g}, fast moments rejected {}", !f),
    ))
}

fn factorial(n: u64) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn a12() -> Check {
    let fam = ExactFamily::Growing { gamma: 0.8 };
    let a = (1..=200).map(|n| exact_family(&fam, n, 0.0).map(|v| v.0)).collect::<Result<Vec<_>, _>>()?;
    let b = (1..=200).map(|n| exact_family(&fam, n, 0.0).map(|v| v.1)).collect::<Result<Vec<_>, _>>()?;
    let q = JacobiCoefficients::new(1, a, b, Background::None)?;
    let mut run = OdeRun::simple(q, 0.5, Boundary::Family(fam), 1e-11);
    run.dense_output_times = vec![0.1, 0.2, 0.3, 0.4, 0.5];
    let tr = integrate(&run)?;
    let mut err: f64 = 0.0;
    for (t, s) in tr.times.iter().zip(&tr.states) {
        for n in 1..=20 {
            let (ea, eb) = exact_family(&fam, n, *t)?;
            err = err.max((s.a_at(n)? - ea).abs()).max((s.b_at(n)? - eb).abs());
        }
    }
    let x = ExactFamily::Exploding { c: 1.0, alpha: 1.0, beta: 1.0 };
    let xa = (1..=31).map(|n| exact_family(&x, n, 0.0).map(|v| v.0)).collect::<Result<Vec<_>, _>>()?;
    let xb = (1..=30).map(|n| exact_family(&x, n, 0.0).map(|v| v.1)).collect::<Result<Vec<_>, _>>()?;
    let t_star = x.blow_up_time().unwrap_or(f64::INFINITY);
    let qx = JacobiCoefficients::new(1, xa, xb, Background::None)?;
    let blow = match integrate(&OdeRun::simple(qx, t_star, Boundary::Family(x), 1e-8)) {
        Err(Error::StepSizeUnderflow(t)) if t < t_star => Some(t),
        _ => None,
    };
    Ok((
        err <= 1e-6 && blow.is_some(),
        format!(
            "growing family max error {err:.2e} (n<=20, t<=0.5); exploding family {}",
            blow.map_or("did not underflow".to_string(), |t| format!("underflowed at t = {t:.12} < t* = {t_star}"))
        ),
    ))
}
