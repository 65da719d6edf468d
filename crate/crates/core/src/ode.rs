//! Direct integration of the Flaschka equations
//! `ȧ_n = a_n (b_n - b_{n-1})`, `ḃ_n = 2 (a_{n+1}² - a_n²)`, and the exact
//! growing and exploding solution families.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::JacobiCoefficients;

/// How the finite window talks to the rest of the lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    /// Couplings leaving the window are zero; stored edge couplings are inert.
    OpenEnds,
    /// `a_{window_start}` couples the last site back to the first.
    Periodic,
    /// `b_{s-1}(t)` and `a_{e+1}(t)` taken from an exact family.
    Family(ExactFamily),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum ExactFamily {
    /// `a_n = √n e^{γt}`, `b_n = nγ - (1 - e^{2γt})/γ`.
    Growing { gamma: f64 },
    /// `a_n = c√(n(n-1)+αn+β)/(1-2ct)`, `b_n = c(2n+α)/(1-2ct)`.
    Exploding { c: f64, alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeRun {
    pub q0: JacobiCoefficients,
    pub t_final: f64,
    pub boundary: Boundary,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Output times in increasing order, all within `[0, t_final]`.
    pub dense_output_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<JacobiCoefficients>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl OdeRun {
    /// Run with equal tolerances and output at `t_final` only.
    pub fn simple(q0: JacobiCoefficients, t_final: f64, boundary: Boundary, tol: f64) -> Self {
        OdeRun {
            q0,
            t_final,
            boundary,
            rel_tol: tol,
            abs_tol: tol,
            dense_output_times: vec![t_final],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.q0.validate()?;
        let ok_tol = |x: f64| (1e-14..=1e-2).contains(&x);
        if !ok_tol(self.rel_tol) || !ok_tol(self.abs_tol) {
            return Err(Error::InvalidInput("tolerances must lie in [1e-14, 1e-2]"));
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(Error::InvalidInput(
                "t_final must be finite and non-negative",
            ));
        }
        if self.dense_output_times.windows(2).any(|w| !(w[0] < w[1]))
            || self
                .dense_output_times
                .iter()
                .any(|&t| !(0.0..=self.t_final).contains(&t))
        {
            return Err(Error::InvalidInput(
                "output times must increase within [0, t_final]",
            ));
        }
        if self.boundary == Boundary::Periodic
            && (self.q0.a.len() != self.q0.b.len() || self.q0.b.len() < 2)
        {
            return Err(Error::InvalidInput(
                "periodic runs need len(a) = len(b) >= 2",
            ));
        }
        if let Boundary::Family(f) = self.boundary {
            f.validate()?;
        }
        Ok(())
    }
}

impl ExactFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ExactFamily::Growing { gamma } if gamma != 0.0 && gamma.is_finite() => Ok(()),
            ExactFamily::Exploding { c, alpha, beta }
                if c > 0.0 && c.is_finite() && beta > (alpha - 1.0) * (alpha - 1.0) / 4.0 =>
            {
                Ok(())
            }
            _ => Err(Error::DomainError),
        }
    }

    /// Blow-up time, if any.
    pub fn blow_up_time(&self) -> Option<f64> {
        match *self {
            ExactFamily::Growing { .. } => None,
            ExactFamily::Exploding { c, .. } => Some(0.5 / c),
        }
    }

    fn b_only(&self, n: i64, t: f64) -> Result<f64> {
        self.validate()?;
        let nf = n as f64;
        match *self {
            ExactFamily::Growing { gamma } => {
                Ok(nf * gamma - (1.0 - libm::exp(2.0 * gamma * t)) / gamma)
            }
            ExactFamily::Exploding { c, alpha, .. } => {
                let d = 1.0 - 2.0 * c * t;
                if !(d > 0.0) {
                    return Err(Error::DomainError);
                }
                Ok(c * (2.0 * nf + alpha) / d)
            }
        }
    }
}

/// `(a_n(t), b_n(t))` of an exact family. For `Growing`, `n = 0` gives `a_0 = 0`.
pub fn exact_family(fam: &ExactFamily, n: i64, t: f64) -> Result<(f64, f64)> {
    fam.validate()?;
    if !t.is_finite() {
        return Err(Error::DomainError);
    }
    let nf = n as f64;
    match *fam {
        ExactFamily::Growing { gamma } => {
            if n < 0 {
                return Err(Error::DomainError);
            }
            Ok((libm::sqrt(nf) * libm::exp(gamma * t), fam.b_only(n, t)?))
        }
        ExactFamily::Exploding { c, alpha, beta } => {
            let rad = nf * (nf - 1.0) + alpha * nf + beta;
            let d = 1.0 - 2.0 * c * t;
            if !(rad > 0.0) || !(d > 0.0) {
                return Err(Error::DomainError);
            }
            Ok((c * libm::sqrt(rad) / d, c * (2.0 * nf + alpha) / d))
        }
    }
}

fn family_derivative(fam: &ExactFamily, n: i64, t: f64) -> Result<(f64, f64)> {
    let nf = n as f64;
    match *fam {
        ExactFamily::Growing { gamma } => {
            let (a, _) = exact_family(fam, n, t)?;
            Ok((gamma * a, 2.0 * libm::exp(2.0 * gamma * t)))
        }
        ExactFamily::Exploding { c, alpha, beta } => {
            exact_family(fam, n, t)?;
            let d = 1.0 - 2.0 * c * t;
            let rad = nf * (nf - 1.0) + alpha * nf + beta;
            Ok((
                2.0 * c * c * libm::sqrt(rad) / (d * d),
                2.0 * c * c * (2.0 * nf + alpha) / (d * d),
            ))
        }
    }
}

/// Residuals of the Flaschka equations along an exact family, with the
/// time derivatives taken analytically.
pub fn residual(fam: &ExactFamily, n: i64, t: f64) -> Result<(f64, f64)> {
    if matches!(fam, ExactFamily::Growing { .. }) && n < 1 {
        return Err(Error::DomainError);
    }
    let (a, b) = exact_family(fam, n, t)?;
    let (a_next, _) = exact_family(fam, n + 1, t)?;
    let b_prev = fam.b_only(n - 1, t)?;
    let (da, db) = family_derivative(fam, n, t)?;
    Ok((da - a * (b - b_prev), db - 2.0 * (a_next * a_next - a * a)))
}

/// Layout of the state vector: all stored `a`, then all `b`.
struct System<'a> {
    q: &'a JacobiCoefficients,
    boundary: Boundary,
}

impl System<'_> {
    fn na(&self) -> usize {
        self.q.a.len()
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let na = self.na();
        let nb = self.q.b.len();
        let (a, b) = y.split_at(na);
        let (da, db) = dy.split_at_mut(na);
        match self.boundary {
            Boundary::OpenEnds => {
                // a[0] links to the outside, a[nb] too when present
                for k in 0..na {
                    da[k] = if k == 0 || k >= nb {
                        0.0
                    } else {
                        a[k] * (b[k] - b[k - 1])
                    };
                }
                for k in 0..nb {
                    let right = if k + 1 < nb { a[k + 1] } else { 0.0 };
                    let left = if k > 0 { a[k] } else { 0.0 };
                    db[k] = 2.0 * (right * right - left * left);
                }
            }
            Boundary::Periodic => {
                for k in 0..nb {
                    let prev = if k == 0 { b[nb - 1] } else { b[k - 1] };
                    da[k] = a[k] * (b[k] - prev);
                    let right = a[(k + 1) % nb];
                    db[k] = 2.0 * (right * right - a[k] * a[k]);
                }
            }
            Boundary::Family(f) => {
                let s = self.q.window_start;
                let e = self.q.window_end();
                let b_before = f.b_only(s - 1, t)?;
                let a_after = if na > nb {
                    None
                } else {
                    Some(exact_family(&f, e + 1, t)?.0)
                };
                for k in 0..na {
                    let prev = if k == 0 { b_before } else { b[k - 1] };
                    let here = if k < nb { b[k] } else { f.b_only(e + 1, t)? };
                    da[k] = a[k] * (here - prev);
                }
                for k in 0..nb {
                    let right = if k + 1 < na {
                        a[k + 1]
                    } else {
                        a_after.expect("set when a ends at e")
                    };
                    db[k] = 2.0 * (right * right - a[k] * a[k]);
                }
            }
        }
        Ok(())
    }
}

/// Flaschka right-hand side for the window of `q`.
pub fn rhs(q: &JacobiCoefficients, boundary: Boundary) -> Result<(Vec<f64>, Vec<f64>)> {
    rhs_at(q, boundary, 0.0)
}

/// As [`rhs`], with supplied boundary values taken at time `t`.
pub fn rhs_at(q: &JacobiCoefficients, boundary: Boundary, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let sys = System { q, boundary };
    let y: Vec<f64> = q.a.iter().chain(&q.b).copied().collect();
    let mut dy = vec![0.0; y.len()];
    sys.rhs(t, &y, &mut dy)?;
    let db = dy.split_off(q.a.len());
    Ok((dy, db))
}

// Dormand–Prince 5(4) tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// difference between the 5th and 4th order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const MAX_STEPS: usize = 1_000_000;

/// Adaptive Dormand–Prince 5(4) with PI step control; lands exactly on the
/// requested output times.
pub fn integrate(run: &OdeRun) -> Result<Trajectory> {
    run.validate()?;
    let sys = System {
        q: &run.q0,
        boundary: run.boundary,
    };
    let n = run.q0.a.len() + run.q0.b.len();
    let mut y: Vec<f64> = run.q0.a.iter().chain(&run.q0.b).copied().collect();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut t = 0.0;
    let mut out = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        steps_accepted: 0,
        steps_rejected: 0,
    };
    let mut targets = run.dense_output_times.iter().copied().peekable();
    while let Some(&first) = targets.peek() {
        if first == 0.0 {
            out.times.push(0.0);
            out.states.push(run.q0.clone());
            targets.next();
        } else {
            break;
        }
    }
    sys.rhs(t, &y, &mut k[0])?;
    let mut h = initial_step(run, &y, &k[0]);
    let mut fac_old = 1e-4;
    let mut steps = 0;
    while let Some(&target) = targets.peek() {
        if steps > MAX_STEPS {
            return Err(Error::StepSizeUnderflow(t));
        }
        steps += 1;
        let mut last = false;
        if t + h >= target {
            h = target - t;
            last = true;
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow(t));
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += h * A[s][j] * kj[i];
                }
                tmp[i] = acc;
            }
            let tail = &mut k[s..];
            sys.rhs(t + C[s] * h, &tmp, &mut tail[0])?;
        }
        // stage 7 was evaluated at the 5th order solution
        y_new.copy_from_slice(&tmp);
        let mut err: f64 = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for s in 0..7 {
                e += E[s] * k[s][i];
            }
            let sc = run.abs_tol + run.rel_tol * y[i].abs().max(y_new[i].abs());
            err = err.max((h * e / sc).abs());
        }
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            h *= FAC_MIN;
            out.steps_rejected += 1;
            continue;
        }
        let fac11 = libm::pow(err, 0.2 - BETA * 0.75);
        if err <= 1.0 {
            let fac = (fac11 / libm::pow(fac_old, BETA) / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            fac_old = err.max(1e-4);
            t = if last { target } else { t + h };
            y.copy_from_slice(&y_new);
            let (k0, rest) = k.split_at_mut(1);
            k0[0].copy_from_slice(&rest[5]);
            out.steps_accepted += 1;
            if last {
                out.times.push(target);
                out.states.push(state_from(&run.q0, &y));
                targets.next();
            }
            h /= fac;
            if last {
                h = h.max(1e-14 * t.abs().max(1.0) * 10.0);
            }
        } else {
            h /= (fac11 / SAFE).min(1.0 / FAC_MIN);
            out.steps_rejected += 1;
        }
    }
    Ok(out)
}

fn state_from(q0: &JacobiCoefficients, y: &[f64]) -> JacobiCoefficients {
    let na = q0.a.len();
    JacobiCoefficients {
        window_start: q0.window_start,
        a: y[..na].to_vec(),
        b: y[na..].to_vec(),
        background: q0.background,
    }
}

fn initial_step(run: &OdeRun, y: &[f64], f0: &[f64]) -> f64 {
    let sc = |v: f64| run.abs_tol + run.rel_tol * v.abs();
    let d0 = y.iter().map(|v| (v / sc(*v)).abs()).fold(0.0, f64::max);
    let d1 = y
        .iter()
        .zip(f0)
        .map(|(v, f)| (f / sc(*v)).abs())
        .fold(0.0, f64::max);
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h.min(run.t_final.max(1e-12)).max(1e-10)
}
