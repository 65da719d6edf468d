//! The Toda flow by spectral deformation, single Darboux steps and the
//! iterated-Darboux approximation of exponential flows.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::{eigendecompose, truncate, Background, JacobiCoefficients, TridiagonalMatrix};
use crate::spectral::{jacobi_from_measure, measure_from_jacobi, DiscreteMeasure};

/// Orientation of the measure deformation relative to the Flaschka ODE.
///
/// With `+1`, `w ↦ w e^{2tλ}` reproduces the ODE solution from `a = 1`,
/// `b = 0` on two sites, `a(t) = sech 2t`, `b_1(t) = tanh 2t`.
pub const TODA_SIGN: i8 = 1;

const EXP_GUARD: f64 = 700.0;
const LEFT_EXTENSION_CAP: usize = 100_000;

/// Hierarchy flow `e^{2 t p(λ)}` with `p(λ) = Σ poly[k] λ^k`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlowSpec {
    pub poly: Vec<f64>,
    pub t: f64,
    pub sign: i8,
}

impl FlowSpec {
    /// The calibrated flow of `p` for time `t`.
    pub fn new(poly: Vec<f64>, t: f64) -> Self {
        FlowSpec {
            poly,
            t,
            sign: TODA_SIGN,
        }
    }

    /// The Toda lattice flow itself, `p(λ) = λ`.
    pub fn toda(t: f64) -> Self {
        FlowSpec::new(alloc::vec![0.0, 1.0], t)
    }

    pub fn degree(&self) -> usize {
        self.poly.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    /// Checks sign, finiteness and `deg p <= max_degree`.
    pub fn validate(&self, max_degree: usize) -> Result<()> {
        if self.sign != 1 && self.sign != -1 {
            return Err(Error::InvalidInput("sign must be +1 or -1"));
        }
        if !self.t.is_finite() || self.poly.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite flow parameters"));
        }
        if self.degree() > max_degree {
            return Err(Error::InvalidInput(
                "polynomial degree exceeds the hierarchy degree",
            ));
        }
        Ok(())
    }

    fn eval_poly(&self, x: f64) -> f64 {
        self.poly.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

/// `w_i ↦ w_i exp(sign·2t·p(λ_i))`, renormalised.
///
/// Atoms whose weight underflows relative to the largest are dropped.
pub fn deform_measure(sigma: &DiscreteMeasure, spec: &FlowSpec) -> Result<DiscreteMeasure> {
    spec.validate(usize::MAX)?;
    let expo: Vec<f64> = sigma
        .atoms
        .iter()
        .map(|&(l, _)| spec.sign as f64 * 2.0 * spec.t * spec.eval_poly(l))
        .collect();
    if let Some(&bad) = expo.iter().find(|e| e.abs() > EXP_GUARD || !e.is_finite()) {
        return Err(Error::OverflowGuard(bad));
    }
    let top = expo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut atoms: Vec<(f64, f64)> = sigma
        .atoms
        .iter()
        .zip(&expo)
        .map(|(&(l, w), e)| (l, w * libm::exp(e - top)))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    for a in &mut atoms {
        a.1 /= total;
    }
    Ok(DiscreteMeasure {
        atoms,
        normalized: true,
    })
}

/// Flow of a finite section through its spectral measure at the first site.
pub fn flow_finite(t: &TridiagonalMatrix, spec: &FlowSpec) -> Result<TridiagonalMatrix> {
    let sigma = measure_from_jacobi(t)?;
    let moved = deform_measure(&sigma, spec)?;
    let q = jacobi_from_measure(&moved, t.size())?;
    TridiagonalMatrix::new(q.b, q.a[1..].to_vec())
}

/// Positive solution of `H f = E f` stored through `log f_n` on `[start, start + len)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveSolution {
    pub start: i64,
    pub log_f: Vec<f64>,
    /// For a `None` background: `a_s f_{s-1}` at the wall, relative to `f_s`.
    /// Equals `E - b_s - a_{s+1} f_{s+1}/f_s`.
    pub wall: Option<f64>,
}

impl PositiveSolution {
    pub fn end(&self) -> i64 {
        self.start + self.log_f.len() as i64 - 1
    }

    /// `f_n` scaled so that the largest value is 1.
    pub fn values(&self) -> Vec<f64> {
        let top = self.log_f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.log_f.iter().map(|l| libm::exp(l - top)).collect()
    }

    /// `f_n / f_{n-1}` for `start < n <= end`.
    pub fn ratio(&self, n: i64) -> f64 {
        let k = (n - self.start) as usize;
        libm::exp(self.log_f[k] - self.log_f[k - 1])
    }

    /// Same solution multiplied by `e^shift`.
    pub fn rescaled(&self, shift: f64) -> Self {
        PositiveSolution {
            start: self.start,
            log_f: self.log_f.iter().map(|l| l + shift).collect(),
            wall: self.wall,
        }
    }
}

/// Background root `w > 1` of `w + 1/w = (E - b0)/a0`.
fn background_root(e: f64, a0: f64, b0: f64) -> Result<f64> {
    let x = (e - b0) / a0;
    if !(x > 2.0) {
        return Err(Error::EnergyInsideSpectrum);
    }
    Ok(0.5 * (x + libm::sqrt((x - 2.0) * (x + 2.0))))
}

/// Positive solution that decays to the right of the window.
///
/// With a `Free` background it is the Weyl solution `f_n ∝ w^{-n}` on the
/// right and the recursion is carried leftwards until the ratio reaches the
/// background value `1/w` to machine precision. With a `None` background
/// the right edge carries a Dirichlet condition `f_{e+1} = 0` and the left
/// edge is the wall.
pub fn positive_solution(q: &JacobiCoefficients, e: f64) -> Result<PositiveSolution> {
    q.validate()?;
    if !e.is_finite() {
        return Err(Error::InvalidInput("energy must be finite"));
    }
    match q.background {
        Background::Free { a0, b0 } => {
            let w = background_root(e, a0, b0)?;
            let last_a = q.window_start + q.a.len() as i64 - 1;
            let n_star = last_a.max(q.window_end()) + 1;
            // ratios r_n = f_n / f_{n-1}, built leftwards from r_{n*} = 1/w
            let mut ratios = alloc::vec![1.0 / w];
            let mut n = n_star;
            loop {
                let r_next = *ratios.last().expect("seeded");
                let den = e - q.b_at(n - 1)? - q.a_at(n)? * r_next;
                if !(den > 0.0) {
                    return Err(Error::SignChange(n - 1));
                }
                let r = q.a_at(n - 1)? / den;
                ratios.push(r);
                n -= 1;
                let settled = n < q.window_start && (r * w - 1.0).abs() <= 2.0 * f64::EPSILON;
                if settled || ratios.len() > LEFT_EXTENSION_CAP + q.b.len() {
                    break;
                }
            }
            // ratios[k] = r_{n* - k}; f on [n - 1, n*]
            let start = n - 1;
            let mut log_f = alloc::vec![0.0; ratios.len() + 1];
            for k in 1..log_f.len() {
                log_f[k] = log_f[k - 1] + libm::log(ratios[ratios.len() - k]);
            }
            Ok(PositiveSolution {
                start,
                log_f,
                wall: None,
            })
        }
        Background::None => {
            let top = eigendecompose(&truncate(q, q.window_start, q.window_end())?)?;
            let lam_max = *top.values.last().expect("non-empty");
            if !(e > lam_max) {
                return Err(Error::EnergyInsideSpectrum);
            }
            let (s, end) = (q.window_start, q.window_end());
            let mut ratios = Vec::with_capacity(q.b.len());
            let mut r_next = 0.0;
            for n in (s + 1..=end).rev() {
                let coupling = if n == end {
                    0.0
                } else {
                    q.a_at(n + 1)? * r_next
                };
                let den = e - q.b_at(n)? - coupling;
                if !(den > 0.0) {
                    return Err(Error::SignChange(n));
                }
                r_next = q.a_at(n)? / den;
                ratios.push(r_next);
            }
            let coupling = if end > s {
                q.a_at(s + 1)? * r_next
            } else {
                0.0
            };
            let wall = e - q.b_at(s)? - coupling;
            if !(wall > 0.0) {
                return Err(Error::SignChange(s));
            }
            let mut log_f = alloc::vec![0.0; q.b.len()];
            for k in 1..log_f.len() {
                log_f[k] = log_f[k - 1] + libm::log(ratios[ratios.len() - k]);
            }
            Ok(PositiveSolution {
                start: s,
                log_f,
                wall: Some(wall),
            })
        }
    }
}

/// `â_n² = a_{n-1} a_n r_n / r_{n-1}`, `b̂_n = a_{n+1} r_{n+1} - a_n r_n + b_n`
/// with `r_n = f_n / f_{n-1}` from the given positive solution.
pub fn darboux_with(q: &JacobiCoefficients, f: &PositiveSolution) -> Result<JacobiCoefficients> {
    match q.background {
        Background::Free { a0, b0 } => {
            let (lo, hi) = (f.start, f.end());
            // new b on [lo + 1, hi - 1], new a on [lo + 2, hi]
            let mut a = Vec::new();
            let mut b = Vec::new();
            for n in lo + 1..hi {
                b.push(q.a_at(n + 1)? * f.ratio(n + 1) - q.a_at(n)? * f.ratio(n) + q.b_at(n)?);
            }
            a.push(a0);
            for n in lo + 2..=hi {
                let sq = q.a_at(n - 1)? * q.a_at(n)? * f.ratio(n) / f.ratio(n - 1);
                a.push(libm::sqrt(sq));
            }
            let mut out = JacobiCoefficients {
                window_start: lo + 1,
                a,
                b,
                background: Background::Free { a0, b0 },
            };
            trim_left(&mut out, a0, b0);
            out.validate()?;
            Ok(out)
        }
        Background::None => {
            let wall = f
                .wall
                .ok_or(Error::InvalidInput("solution lacks the wall term"))?;
            let (s, end) = (q.window_start, q.window_end());
            let ratio = |n: i64| if n > end { 0.0 } else { f.ratio(n) };
            let mut b = Vec::with_capacity(q.b.len());
            let mut a = Vec::with_capacity(q.a.len());
            a.push(q.a[0]);
            for n in s..=end {
                let right = if n < end {
                    q.a_at(n + 1)? * ratio(n + 1)
                } else {
                    0.0
                };
                let left = if n > s { q.a_at(n)? * ratio(n) } else { 0.0 };
                b.push(right - left + q.b_at(n)?);
                if n > s {
                    let sq = if n == s + 1 {
                        q.a_at(n)? * ratio(n) * wall
                    } else {
                        q.a_at(n - 1)? * q.a_at(n)? * ratio(n) / ratio(n - 1)
                    };
                    a.push(libm::sqrt(sq));
                }
            }
            JacobiCoefficients::new(s, a, b, Background::None)
        }
    }
}

/// Drop leading sites that already equal the background to rounding.
fn trim_left(q: &mut JacobiCoefficients, a0: f64, b0: f64) {
    let tol = 4.0 * f64::EPSILON;
    let mut k = 0;
    while k + 1 < q.b.len()
        && (q.a[k] - a0).abs() <= tol * a0
        && (q.a[k + 1] - a0).abs() <= tol * a0
        && (q.b[k] - b0).abs() <= tol * b0.abs().max(a0)
    {
        k += 1;
    }
    if k > 0 {
        q.a.drain(..k);
        q.b.drain(..k);
        q.a[0] = a0;
        q.window_start += k as i64;
    }
}

/// One Darboux step at energy `ζ + 1/ζ`.
pub fn darboux_step(q: &JacobiCoefficients, zeta: f64) -> Result<JacobiCoefficients> {
    if !(zeta.abs() > 1.0) || !zeta.is_finite() {
        return Err(Error::InvalidInput("darboux_step needs real |zeta| > 1"));
    }
    let f = positive_solution(q, zeta + 1.0 / zeta)?;
    darboux_with(q, &f)
}

/// `n_steps` Darboux steps at `ζ = n_steps / t`.
///
/// On the spectral side each step multiplies the measure by `(E - λ)^{-1}`,
/// so the iterate tends to `e^{tλ}σ`, the Flaschka flow at time `t/2`.
pub fn darboux_power_exp(
    q: &JacobiCoefficients,
    t: f64,
    n_steps: usize,
) -> Result<JacobiCoefficients> {
    if t == 0.0 || n_steps == 0 {
        return Ok(q.clone());
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidInput("darboux_power_exp needs t >= 0"));
    }
    let zeta = n_steps as f64 / t;
    let mut cur = q.clone();
    for _ in 0..n_steps {
        cur = darboux_step(&cur, zeta)?;
    }
    Ok(cur)
}
