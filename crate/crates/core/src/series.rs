//! Sequences with Gevrey-type growth `|a_k| <= c^k Γ(αk+1)`, the change of
//! variable `ζ^{-1} ↔ (ζ+ζ^{-1})^{-1}` and moment-growth tests.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

// Slack for comparisons of quantities computed in floating point.
const LOG_SLACK: f64 = 1e-10;

/// A coefficient sequence together with an envelope `(c, α)` it is known to satisfy.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeSeries {
    pub coeffs: Vec<f64>,
    pub c: f64,
    pub alpha: f64,
}

/// `ln(c^k Γ(αk+1))`.
pub fn log_envelope(c: f64, alpha: f64, k: usize) -> f64 {
    let k = k as f64;
    k * libm::log(c) + libm::lgamma(alpha * k + 1.0)
}

fn log_abs(x: f64) -> f64 {
    libm::log(x.abs())
}

impl EnvelopeSeries {
    /// Checks `|a_k| <= c^k Γ(αk+1)` for `k >= 1`; `a_0` is unconstrained.
    pub fn new(coeffs: Vec<f64>, c: f64, alpha: f64) -> Result<Self> {
        if !(c > 0.0) || !(alpha > 0.0) || coeffs.is_empty() {
            return Err(Error::InvalidInput("envelope needs c, alpha > 0 and a_0"));
        }
        if coeffs.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("coefficients must be finite"));
        }
        for (k, &a) in coeffs.iter().enumerate().skip(1) {
            if a != 0.0 && log_abs(a) > log_envelope(c, alpha, k) + LOG_SLACK {
                return Err(Error::EnvelopeViolation(k));
            }
        }
        Ok(EnvelopeSeries { coeffs, c, alpha })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Smallest `c` making the sequence a member, over the stored range.
    pub fn tightest_c(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, a)| **a != 0.0)
            .map(|(k, a)| {
                libm::exp((log_abs(*a) - libm::lgamma(self.alpha * k as f64 + 1.0)) / k as f64)
            })
            .fold(0.0, f64::max)
    }
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().min(b.len());
    (0..n)
        .map(|k| (0..=k).map(|j| a[j] * b[k - j]).sum())
        .collect()
}

/// `ln` of `|a_0| c2^k + |b_0| c1^k + c1 c2 Σ_{i=0}^{k-2} c1^i c2^{k-2-i}`.
fn log_conv_bound(a0: f64, b0: f64, c1: f64, c2: f64, k: usize) -> f64 {
    let m = c1.max(c2);
    let (r1, r2) = (c1 / m, c2 / m);
    let mut inner = a0.abs() * libm::pow(r2, k as f64) + b0.abs() * libm::pow(r1, k as f64);
    if k >= 2 {
        let s: f64 = (0..=k - 2)
            .map(|i| libm::pow(r1, i as f64) * libm::pow(r2, (k - 2 - i) as f64))
            .sum();
        inner += r1 * r2 * s;
    }
    k as f64 * libm::log(m) + libm::log(inner)
}

/// Cauchy product. Each coefficient is checked against the product bound;
/// the returned envelope constant is the tightest one, but never below
/// `max(c1, c2)`.
pub fn conv_env(a: &EnvelopeSeries, b: &EnvelopeSeries) -> Result<EnvelopeSeries> {
    if a.alpha != b.alpha {
        return Err(Error::InvalidInput("envelopes must share alpha"));
    }
    let coeffs = convolve(&a.coeffs, &b.coeffs);
    for (k, &x) in coeffs.iter().enumerate().skip(1) {
        let bound = log_conv_bound(a.coeffs[0], b.coeffs[0], a.c, b.c, k)
            + libm::lgamma(a.alpha * k as f64 + 1.0);
        if x != 0.0 && log_abs(x) > bound + LOG_SLACK {
            return Err(Error::EnvelopeViolation(k));
        }
    }
    let mut out = EnvelopeSeries {
        coeffs,
        c: 1.0,
        alpha: a.alpha,
    };
    out.c = out.tightest_c().max(a.c).max(b.c);
    Ok(out)
}

/// Reciprocal series of `a` with `a_0 = 1`; lies in `ℰ_{2c,α}` with
/// `|(a^{-1})_k| <= ½(2c)^k Γ(αk+1)`.
pub fn inv_env(a: &EnvelopeSeries) -> Result<EnvelopeSeries> {
    if a.coeffs[0] != 1.0 {
        return Err(Error::InvalidInput("inv_env needs a_0 = 1"));
    }
    let n = a.len();
    let mut r = vec![0.0; n];
    r[0] = 1.0;
    for k in 1..n {
        r[k] = -(1..=k).map(|j| a.coeffs[j] * r[k - j]).sum::<f64>();
    }
    for k in 1..n {
        let resid: f64 = (0..=k).map(|j| a.coeffs[j] * r[k - j]).sum();
        let scale: f64 = (0..=k).map(|j| (a.coeffs[j] * r[k - j]).abs()).sum();
        if resid.abs() > 1e-12 * scale {
            return Err(Error::EnvelopeViolation(k));
        }
        let bound = libm::log(0.5) + log_envelope(2.0 * a.c, a.alpha, k);
        if r[k] != 0.0 && log_abs(r[k]) > bound + LOG_SLACK {
            return Err(Error::EnvelopeViolation(k));
        }
    }
    Ok(EnvelopeSeries {
        coeffs: r,
        c: 2.0 * a.c,
        alpha: a.alpha,
    })
}

/// Taylor coefficients `p_1..p_J` of `(1 - √(1-z))/z`.
pub fn phi_coeffs(j_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(j_max);
    let mut central = 1.0; // C(2j, j) / 4^j
    for j in 1..=j_max {
        central *= (2 * j - 1) as f64 / (2 * j) as f64;
        out.push(central / (2 * j - 1) as f64);
    }
    out
}

fn binom(n: usize, k: usize) -> BigInt {
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Coefficients in `(ζ+ζ^{-1})^{-k}` to coefficients in `ζ^{-k}`.
    SigmaToMu,
    MuToSigma,
}

/// Exact change of variable on `x_1..x_{L-1}` (index 0 holds `x_1`).
///
/// `Σ μ_k ζ^{-k} = Σ σ_k (ζ+ζ^{-1})^{-k} + O(ζ^{-L})`.
pub fn change_variable_exact(x: &[BigRational], dir: Direction) -> Vec<BigRational> {
    let n = x.len();
    match dir {
        Direction::SigmaToMu => {
            // (ζ+ζ^{-1})^{-k} = Σ_j (-1)^j C(k+j-1, j) ζ^{-k-2j}
            let mut mu = vec![BigRational::zero(); n];
            for k in 1..=n {
                if x[k - 1].is_zero() {
                    continue;
                }
                let mut j = 0;
                while k + 2 * j <= n {
                    let c = BigRational::from_integer(binom(k + j - 1, j));
                    let term = &x[k - 1] * c;
                    if j % 2 == 0 {
                        mu[k + 2 * j - 1] += term;
                    } else {
                        mu[k + 2 * j - 1] -= term;
                    }
                    j += 1;
                }
            }
            mu
        }
        Direction::MuToSigma => {
            // invert the triangular SigmaToMu map
            let mut sigma: Vec<BigRational> = vec![BigRational::zero(); n];
            for m in 1..=n {
                let mut v = x[m - 1].clone();
                let mut j = 1;
                while m > 2 * j {
                    let term =
                        BigRational::from_integer(binom(m - j - 1, j)) * &sigma[m - 2 * j - 1];
                    if j % 2 == 0 {
                        v -= term;
                    } else {
                        v += term;
                    }
                    j += 1;
                }
                sigma[m - 1] = v;
            }
            sigma
        }
    }
}

/// As [`change_variable_exact`], with binary64 at both ends. At most 63 coefficients.
pub fn change_variable(x: &[f64], dir: Direction) -> Result<Vec<f64>> {
    if x.len() > 63 {
        return Err(Error::InvalidInput("at most 63 coefficients (L <= 64)"));
    }
    let exact = x
        .iter()
        .map(|&v| {
            BigRational::from_float(v).ok_or(Error::InvalidInput("coefficients must be finite"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(change_variable_exact(&exact, dir)
        .iter()
        .map(|r| r.to_f64().unwrap_or(f64::NAN))
        .collect())
}

/// The right side of the bound on `σ_k` for `μ ∈ ℰ_{c,α}`, as a logarithm.
pub fn log_sigma_bound(c: f64, alpha: f64, k: usize) -> f64 {
    let kf = k as f64;
    let t1 = libm::log(kf * c) + libm::lgamma(alpha + 1.0);
    let t2 = libm::log(kf) + log_envelope(c, alpha, k);
    let (hi, lo) = if t1 > t2 { (t1, t2) } else { (t2, t1) };
    kf * core::f64::consts::LN_2 + hi + libm::log1p(libm::exp(lo - hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntegrabilityReport {
    pub passes_growth: bool,
    /// Smallest `c1` making `x_k <= c1 c^{-2k/α} Γ(2k/α+1)` over the data.
    pub c1: f64,
    pub predicted_c_prime_bound: f64,
}

/// Tests whether even moments `x_k = σ_{2k}` grow like `c^{-2k/α} Γ(2k/α+1)`.
///
/// A finite sample always admits some `c1`, so the test asks instead that the
/// ratio over the upper half of the data never exceed its maximum over the
/// lower half; geometric growth of the ratio fails this.
pub fn exp_integrability_check(
    even_moments: &[f64],
    alpha: f64,
    c: f64,
) -> Result<IntegrabilityReport> {
    if even_moments.len() < 4 {
        return Err(Error::InvalidInput("need at least x_0..x_3"));
    }
    if !(alpha > 0.0) || !(c > 0.0) {
        return Err(Error::InvalidInput("alpha and c must be positive"));
    }
    let log_ratio: Vec<f64> = even_moments
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            if x == 0.0 {
                f64::NEG_INFINITY
            } else {
                let e = 2.0 * k as f64 / alpha;
                log_abs(x) + e * libm::log(c) - libm::lgamma(e + 1.0)
            }
        })
        .collect();
    let split = even_moments.len().div_ceil(2);
    let low = log_ratio[..split]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let high = log_ratio[split..]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let c1 = libm::exp(low.max(high));
    Ok(IntegrabilityReport {
        passes_growth: high <= low + LOG_SLACK,
        c1,
        predicted_c_prime_bound: c,
    })
}

/// `x_1 (9 c1²)^{k-1} ((k+1)!/2)^{2/α}`.
pub fn moment_growth_bound(c1: f64, alpha: f64, k: u32, x1: f64) -> Result<f64> {
    if k < 1 || !(c1 > 0.0) || !(alpha > 0.0) || !(x1 > 0.0) {
        return Err(Error::InvalidInput(
            "need k >= 1 and positive c1, alpha, x1",
        ));
    }
    let kf = k as f64;
    let log = libm::log(x1)
        + (kf - 1.0) * libm::log(9.0 * c1 * c1)
        + 2.0 / alpha * (libm::lgamma(kf + 2.0) - core::f64::consts::LN_2);
    Ok(libm::exp(log))
}

/// `|x| <= bound` in log space, used for large moments.
pub fn log_le(x: f64, log_bound: f64) -> bool {
    x == 0.0 || log_abs(x) <= log_bound + LOG_SLACK
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::sample_rng;
    use crate::lattice::{operator_moment, JacobiCoefficients};
    use rand_core::RngCore;

    fn unif<R: RngCore>(rng: &mut R) -> f64 {
        (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn random_member<R: RngCore>(
        rng: &mut R,
        n: usize,
        c: f64,
        alpha: f64,
        a0: f64,
    ) -> EnvelopeSeries {
        let mut coeffs = vec![a0];
        for k in 1..n {
            let mag = libm::exp(log_envelope(c, alpha, k));
            coeffs.push((2.0 * unif(rng) - 1.0) * mag);
        }
        EnvelopeSeries::new(coeffs, c, alpha).unwrap()
    }

    fn phi_coeffs_exact(j_max: usize) -> Vec<BigRational> {
        let mut out = Vec::with_capacity(j_max);
        let mut central = BigRational::one();
        for j in 1..=j_max {
            central *= BigRational::new(BigInt::from(2 * j - 1), BigInt::from(2 * j));
            out.push(&central / BigRational::from_integer(BigInt::from(2 * j - 1)));
        }
        out
    }

    // σ_k = 2^k Σ_j μ_{k-2j} β_j^{(k-2j)}, β^{(i)} the coefficients of φ^i
    fn mu_to_sigma_via_phi(x: &[BigRational]) -> Vec<BigRational> {
        let n = x.len();
        let half = n / 2 + 1;
        let p = phi_coeffs_exact(half);
        let mut power = vec![BigRational::zero(); half];
        power[0] = BigRational::one();
        let mut betas: Vec<Vec<BigRational>> = vec![power.clone()];
        for _ in 1..=n {
            let mut next = vec![BigRational::zero(); half];
            for (i, pi) in power.iter().enumerate() {
                for (j, pj) in p.iter().enumerate().take(half - i) {
                    next[i + j] += pi * pj;
                }
            }
            power = next;
            betas.push(power.clone());
        }
        let mut two_k = BigRational::one();
        (1..=n)
            .map(|k| {
                two_k *= BigRational::from_integer(BigInt::from(2));
                let mut acc = BigRational::zero();
                let mut j = 0;
                while 2 * j < k {
                    acc += &x[k - 2 * j - 1] * &betas[k - 2 * j][j];
                    j += 1;
                }
                acc * &two_k
            })
            .collect()
    }

    #[test]
    fn triangular_inverse_matches_phi_expansion() {
        let x: Vec<BigRational> = (1..=24i64)
            .map(|k| BigRational::new(BigInt::from(k * k - 7 * k), BigInt::from(k + 3)))
            .collect();
        assert_eq!(
            change_variable_exact(&x, Direction::MuToSigma),
            mu_to_sigma_via_phi(&x)
        );
        let p = phi_coeffs_exact(3);
        assert_eq!(p[2], BigRational::new(BigInt::from(1), BigInt::from(16)));
    }

    #[test]
    fn convolution_examples() {
        let one = EnvelopeSeries::new(vec![1.0, 1.0, 1.0], 1.0, 1.0).unwrap();
        assert_eq!(conv_env(&one, &one).unwrap().coeffs, vec![1.0, 2.0, 3.0]);
        let z = EnvelopeSeries::new(vec![0.0, 0.5, 0.25], 1.0, 1.0).unwrap();
        assert_eq!(conv_env(&z, &one).unwrap().coeffs[0], 0.0);
        assert_eq!(
            EnvelopeSeries::new(vec![1.0, 3.0], 1.0, 1.0),
            Err(Error::EnvelopeViolation(1))
        );
    }

    #[test]
    fn product_bound_on_random_pairs() {
        let mut rng = sample_rng(1, 0);
        for i in 0..100 {
            let alpha = [0.5, 1.0, 2.0][i % 3];
            let c1 = 0.2 + 2.0 * unif(&mut rng);
            let c2 = if i % 10 == 0 {
                c1
            } else {
                0.2 + 2.0 * unif(&mut rng)
            };
            let (a0, b0) = (2.0 * unif(&mut rng) - 1.0, 2.0 * unif(&mut rng) - 1.0);
            let a = random_member(&mut rng, 40, c1, alpha, a0);
            let b = random_member(&mut rng, 40, c2, alpha, b0);
            let p = conv_env(&a, &b).unwrap();
            // independent direct check of the bound in plain arithmetic
            for k in 1..20 {
                let mixed: f64 = if k >= 2 {
                    c1 * c2
                        * (0..=k - 2)
                            .map(|i| c1.powi(i as i32) * c2.powi((k - 2 - i) as i32))
                            .sum::<f64>()
                } else {
                    0.0
                };
                let rhs = (a.coeffs[0].abs() * c2.powi(k as i32)
                    + b.coeffs[0].abs() * c1.powi(k as i32)
                    + mixed)
                    * libm::tgamma(alpha * k as f64 + 1.0);
                assert!(p.coeffs[k].abs() <= rhs * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn inverse_examples() {
        let x = 0.3;
        let a = EnvelopeSeries::new(vec![1.0, x, 0.0, 0.0, 0.0, 0.0], 1.0, 1.0).unwrap();
        let r = inv_env(&a).unwrap();
        for (k, v) in r.coeffs.iter().enumerate() {
            assert!((v - libm::pow(-x, k as f64)).abs() < 1e-16);
        }
        let mut rng = sample_rng(2, 0);
        for _ in 0..50 {
            let a = random_member(&mut rng, 30, 0.5, 1.0, 1.0);
            let r = inv_env(&a).unwrap();
            let unit = conv_env(&a, &r).unwrap();
            let mut fact = 1.0;
            for k in 1..30 {
                fact *= k as f64;
                assert!(r.coeffs[k].abs() <= 0.5 * fact * (1.0 + 1e-12));
                let scale: f64 = (0..=k).map(|j| (a.coeffs[j] * r.coeffs[k - j]).abs()).sum();
                assert!(unit.coeffs[k].abs() <= 1e-12 * scale);
            }
        }
        assert!(inv_env(&EnvelopeSeries::new(vec![2.0, 0.0], 1.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn phi_coefficient_values() {
        let p = phi_coeffs(10_000);
        assert_eq!(&p[..3], &[0.5, 0.125, 0.0625]);
        assert!(p.iter().all(|&x| x > 0.0 && x < 1.0));
        let s: f64 = p.iter().sum();
        assert!((0.99..=1.0).contains(&s));
        // tail of the series is about (π J)^{-1/2}
        assert!((1.0 - s - 1.0 / libm::sqrt(core::f64::consts::PI * 1e4)).abs() < 1e-4);
    }

    #[test]
    fn change_variable_examples() {
        let mu = change_variable(&[1.0, 0.0, 0.0, 0.0, 0.0], Direction::SigmaToMu).unwrap();
        assert_eq!(mu, vec![1.0, 0.0, -1.0, 0.0, 1.0]);
        assert_eq!(
            change_variable(&[0.0; 7], Direction::MuToSigma).unwrap(),
            vec![0.0; 7]
        );
        assert!(change_variable(&[0.0; 64], Direction::MuToSigma).is_err());
    }

    #[test]
    fn change_variable_exact_round_trip() {
        let mut rng = sample_rng(3, 0);
        let x: Vec<BigRational> = (0..63)
            .map(|_| {
                BigRational::new(
                    BigInt::from(rng.next_u32() as i64 - (1 << 31)),
                    BigInt::from(1 + rng.next_u32() % 1000),
                )
            })
            .collect();
        let there = change_variable_exact(&x, Direction::MuToSigma);
        assert_eq!(change_variable_exact(&there, Direction::SigmaToMu), x);
        let there = change_variable_exact(&x, Direction::SigmaToMu);
        assert_eq!(change_variable_exact(&there, Direction::MuToSigma), x);
    }

    #[test]
    fn change_variable_binary64_round_trip_on_envelopes() {
        let mut rng = sample_rng(4, 0);
        for (c, alpha) in [(0.5, 1.0), (1.0, 0.5), (2.0, 1.0), (1.0, 2.0), (0.3, 1.5)] {
            let mu = random_member(&mut rng, 64, c, alpha, 0.0).coeffs[1..].to_vec();
            let sigma = change_variable(&mu, Direction::MuToSigma).unwrap();
            let back = change_variable(&sigma, Direction::SigmaToMu).unwrap();
            for (x, y) in mu.iter().zip(&back) {
                assert!(
                    (x - y).abs() <= 1e-12 * x.abs(),
                    "c={c} alpha={alpha}: {x} vs {y}"
                );
            }
        }
    }

    #[test]
    fn sigma_bound_for_envelope_members() {
        let mut rng = sample_rng(5, 0);
        for i in 0..50 {
            let c = 0.1 + 3.0 * unif(&mut rng);
            let alpha = [0.5, 1.0, 1.5, 2.0, 3.0][i % 5];
            let mu = random_member(&mut rng, 40, c, alpha, 0.0).coeffs[1..].to_vec();
            let sigma = change_variable(&mu, Direction::MuToSigma).unwrap();
            for (k, s) in sigma.iter().enumerate() {
                assert!(log_le(*s, log_sigma_bound(c, alpha, k + 1)));
            }
        }
    }

    #[test]
    fn integrability_classifier() {
        // Gaussian moments (2k-1)!!
        let mut g = vec![1.0];
        for k in 1..15 {
            g.push(g[k - 1] * (2 * k - 1) as f64);
        }
        assert!(exp_integrability_check(&g, 1.0, 1.0).unwrap().passes_growth);
        let fast: Vec<f64> = (0..15)
            .map(|k| libm::tgamma(2.0 * k as f64 + 1.0) * libm::pow(4.0, k as f64))
            .collect();
        let r = exp_integrability_check(&fast, 1.0, 0.25).unwrap();
        assert!(r.passes_growth && (r.c1 - 1.0).abs() < 1e-12);
        assert!(
            !exp_integrability_check(&fast, 1.0, 1.0)
                .unwrap()
                .passes_growth
        );
        let point = [1.0, 0.0, 0.0, 0.0, 0.0];
        for (a, c) in [(0.5, 0.1), (1.0, 1.0), (3.0, 10.0)] {
            assert!(exp_integrability_check(&point, a, c).unwrap().passes_growth);
        }
    }

    #[test]
    fn growth_bound_values() {
        assert_eq!(moment_growth_bound(1.3, 1.0, 1, 2.5).unwrap(), 2.5);
        assert!((moment_growth_bound(1.0, 2.0, 3, 1.0).unwrap() - 972.0).abs() < 1e-9);
        let v: Vec<f64> = (1..12)
            .map(|k| moment_growth_bound(0.5, 1.5, k, 0.7).unwrap())
            .collect();
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn gamma_is_super_multiplicative() {
        let mut rng = sample_rng(6, 0);
        for _ in 0..200 {
            let x = 20.0 * unif(&mut rng);
            let y = 20.0 * unif(&mut rng);
            assert!(
                libm::lgamma(x + 1.0) + libm::lgamma(y + 1.0) <= libm::lgamma(x + y + 1.0) + 1e-12
            );
        }
    }

    #[test]
    fn operator_moments_obey_growth_bound() {
        let mut rng = sample_rng(7, 0);
        for i in 0..20 {
            let alpha = if i % 2 == 0 { 1.0 } else { 2.0 };
            let c1 = 0.5 + unif(&mut rng);
            let len = 30;
            let cap = |n: usize| c1 * libm::pow(n as f64, 1.0 / alpha);
            let b: Vec<f64> = (1..=len)
                .map(|n| (2.0 * unif(&mut rng) - 1.0) * cap(n))
                .collect();
            let off: Vec<f64> = (2..=len)
                .map(|n| (0.05 + 0.95 * unif(&mut rng)) * cap(n))
                .collect();
            let q = JacobiCoefficients::half_line(b, off).unwrap();
            let x1 = operator_moment(&q, 2, 1).unwrap();
            for k in 1..=10u32 {
                let xk = operator_moment(&q, 2 * k as usize, 1).unwrap();
                let bound = moment_growth_bound(c1, alpha, k, x1).unwrap();
                assert!(xk <= bound * (1.0 + 1e-12), "seq {i} k={k}: {xk} > {bound}");
            }
        }
    }
}
