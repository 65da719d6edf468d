//! Periodic lattices, their conserved traces, the Poisson structure and
//! β-ensemble sampling with a statistical invariance check.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, Normal, Open01};

use crate::error::{Error, Result};
use crate::lattice::{Background, JacobiCoefficients};
use crate::ode::{integrate, Boundary, OdeRun};

/// `a[j]` couples sites `j-1` and `j` (indices mod L), so `a[0]` closes the ring.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeriodicLattice {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GibbsParams {
    pub c1: f64,
    pub c2: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SamplerParams {
    #[cfg_attr(feature = "serde", serde(rename = "L"))]
    pub l: usize,
    pub nu: f64,
    pub sigma: f64,
    pub mean_b: f64,
}

impl PeriodicLattice {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let lat = PeriodicLattice { a, b };
        lat.validate()?;
        Ok(lat)
    }

    pub fn validate(&self) -> Result<()> {
        if self.b.len() < 2 || self.a.len() != self.b.len() {
            return Err(Error::InvalidInput(
                "periodic lattice needs L >= 2 and len(a) = len(b)",
            ));
        }
        if self.b.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("b must be finite"));
        }
        if let Some(&a) = self.a.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(Error::NonPositiveASquared(a));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn to_window(&self) -> JacobiCoefficients {
        JacobiCoefficients {
            window_start: 1,
            a: self.a.clone(),
            b: self.b.clone(),
            background: Background::None,
        }
    }

    pub fn from_window(q: &JacobiCoefficients) -> Result<Self> {
        Self::new(q.a.clone(), q.b.clone())
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let l = self.len();
        for j in 0..l {
            let prev = (j + l - 1) % l;
            let next = (j + 1) % l;
            out[j] = self.b[j] * v[j] + self.a[j] * v[prev] + self.a[next] * v[next];
        }
    }
}

/// `tr H^k` of the periodic Jacobi matrix; `k = 0` gives the product `Π a_j`.
pub fn invariant_ik(lat: &PeriodicLattice, k: u32) -> Result<f64> {
    lat.validate()?;
    if k > 20 {
        return Err(Error::InvalidInput("k must be at most 20"));
    }
    if k == 0 {
        return Ok(lat.a.iter().product());
    }
    if k == 1 {
        return Ok(lat.b.iter().sum());
    }
    let l = lat.len();
    let mut v = vec![0.0; l];
    let mut w = vec![0.0; l];
    let mut tr = 0.0;
    for i in 0..l {
        v.iter_mut().for_each(|x| *x = 0.0);
        v[i] = 1.0;
        for _ in 0..k {
            lat.apply(&v, &mut w);
            core::mem::swap(&mut v, &mut w);
        }
        tr += v[i];
    }
    Ok(tr)
}

/// Gradient of `f` by central differences, step `1e-5·max(1, |x|)` per coordinate.
fn gradient<F: Fn(&PeriodicLattice) -> f64>(f: &F, lat: &PeriodicLattice) -> (Vec<f64>, Vec<f64>) {
    let l = lat.len();
    let mut p = lat.clone();
    let mut ga = vec![0.0; l];
    let mut gb = vec![0.0; l];
    for j in 0..l {
        let h = 1e-5 * lat.a[j].abs().max(1.0);
        p.a[j] = lat.a[j] + h;
        let fp = f(&p);
        p.a[j] = lat.a[j] - h;
        ga[j] = (fp - f(&p)) / (2.0 * h);
        p.a[j] = lat.a[j];
        let h = 1e-5 * lat.b[j].abs().max(1.0);
        p.b[j] = lat.b[j] + h;
        let fp = f(&p);
        p.b[j] = lat.b[j] - h;
        gb[j] = (fp - f(&p)) / (2.0 * h);
        p.b[j] = lat.b[j];
    }
    (ga, gb)
}

/// `{F, G} = ¼ Σ_i [a_i(∂_{a_i}F ∂_{b_i}G − ∂_{a_i}G ∂_{b_i}F) − a_{i+1}(∂_{a_{i+1}}F ∂_{b_i}G − ∂_{a_{i+1}}G ∂_{b_i}F)]`.
pub fn poisson_bracket<F, G>(f: F, g: G, lat: &PeriodicLattice) -> f64
where
    F: Fn(&PeriodicLattice) -> f64,
    G: Fn(&PeriodicLattice) -> f64,
{
    let (fa, fb) = gradient(&f, lat);
    let (ga, gb) = gradient(&g, lat);
    let l = lat.len();
    let mut s = 0.0;
    for i in 0..l {
        let n = (i + 1) % l;
        s +=
            lat.a[i] * (fa[i] * gb[i] - ga[i] * fb[i]) - lat.a[n] * (fa[n] * gb[i] - ga[n] * fb[i]);
    }
    0.25 * s
}

/// Unnormalized `Σ_j (c1 b_j − c2(b_j² + 2a_j²) + (ν−1) log a_j)`.
pub fn gibbs_logdensity(lat: &PeriodicLattice, p: &GibbsParams) -> Result<f64> {
    lat.validate()?;
    if !(p.c2 > 0.0) || !(p.nu > 0.0) {
        return Err(Error::InvalidInput("c2 and nu must be positive"));
    }
    Ok(lat
        .a
        .iter()
        .zip(&lat.b)
        .map(|(&a, &b)| p.c1 * b - p.c2 * (b * b + 2.0 * a * a) + (p.nu - 1.0) * libm::log(a))
        .sum())
}

/// Regularized lower incomplete gamma `P(s, x)`.
pub fn gamma_p(s: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let log_pref = -x + s * libm::log(x) - libm::lgamma(s);
    if x < s + 1.0 {
        let mut term = 1.0 / s;
        let mut sum = term;
        let mut ap = s;
        for _ in 0..1000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        (sum * libm::exp(log_pref)).min(1.0)
    } else {
        // modified Lentz on the continued fraction for Q
        let tiny = 1e-300;
        let mut b = x + 1.0 - s;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -(i as f64) * (i as f64 - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (1.0 - libm::exp(log_pref) * h).max(0.0)
    }
}

/// Inverse of `u ↦ P(s, u)` by safeguarded Newton inside a bracket.
pub fn gamma_p_inv(s: f64, p: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = s.max(1.0);
    while gamma_p(s, hi) < p {
        lo = hi;
        hi *= 2.0;
    }
    let lg = libm::lgamma(s);
    let mut u = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = gamma_p(s, u) - p;
        if f > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let dens = libm::exp(-u + (s - 1.0) * libm::log(u) - lg);
        let mut next = u - f / dens;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() <= 1e-15 * u.max(1e-300) || hi - lo <= 1e-15 * hi {
            return next;
        }
        u = next;
    }
    u
}

/// Generator for sample `index`: seeded from `seed`, on stream `index`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `a_j` with density ∝ `e^{-y²/σ²} y^{ν-1}`, `b_j ~ N(mean_b, σ²)`, all independent.
pub fn sample_beta<R: RngCore>(params: &SamplerParams, rng: &mut R) -> Result<PeriodicLattice> {
    params.validate()?;
    let normal =
        Normal::new(params.mean_b, params.sigma).map_err(|_| Error::InvalidInput("sigma"))?;
    let shape = 0.5 * params.nu;
    let a = (0..params.l)
        .map(|_| {
            let p: f64 = Open01.sample(rng);
            params.sigma * libm::sqrt(gamma_p_inv(shape, p))
        })
        .collect();
    let b = (0..params.l).map(|_| normal.sample(rng)).collect();
    PeriodicLattice::new(a, b)
}

impl SamplerParams {
    pub fn validate(&self) -> Result<()> {
        if self.l < 2 {
            return Err(Error::InvalidInput("L must be at least 2"));
        }
        if !(self.nu > 0.0) || !(self.sigma > 0.0) || !self.mean_b.is_finite() {
            return Err(Error::InvalidInput("nu and sigma must be positive"));
        }
        Ok(())
    }

    /// The Gibbs parameters whose density matches the sampler up to a constant.
    pub fn gibbs(&self) -> GibbsParams {
        let s2 = self.sigma * self.sigma;
        GibbsParams {
            c1: self.mean_b / s2,
            c2: 0.5 / s2,
            nu: self.nu,
        }
    }
}

/// Shift applied to `b` at one site after sampling; a negative control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bias {
    pub site: usize,
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SiteStats {
    pub site: usize,
    pub mean_a2_before: f64,
    pub mean_a2_after: f64,
    pub se_a2: f64,
    pub mean_b_before: f64,
    pub mean_b_after: f64,
    pub se_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InvarianceReport {
    pub params: SamplerParams,
    pub t: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub per_site: Vec<SiteStats>,
    pub pass: bool,
}

/// One sampled lattice and its image under the flow.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePair {
    pub before: PeriodicLattice,
    pub after: PeriodicLattice,
}

pub const ENSEMBLE_TOL: f64 = 1e-10;

/// Sample `index` of a run: draw, optionally bias, integrate to `t`.
pub fn sample_pair(
    params: &SamplerParams,
    t: f64,
    seed: u64,
    index: u64,
    bias: Option<Bias>,
) -> Result<SamplePair> {
    let mut rng = sample_rng(seed, index);
    let before = sample_beta(params, &mut rng)?;
    let mut start = before.clone();
    if let Some(bias) = bias {
        start.b[bias.site % params.l] += bias.shift;
    }
    let after = if t == 0.0 {
        start
    } else {
        let run = OdeRun::simple(start.to_window(), t, Boundary::Periodic, ENSEMBLE_TOL);
        let tr = integrate(&run)?;
        PeriodicLattice::from_window(&tr.states[0])?
    };
    Ok(SamplePair { before, after })
}

fn mean_var(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let m = xs.clone().sum::<f64>() / n;
    let v = xs.map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, v)
}

/// Per-site statistics of pairs given in sample-index order.
pub fn summarize(
    params: &SamplerParams,
    t: f64,
    seed: u64,
    pairs: &[SamplePair],
) -> InvarianceReport {
    let n = pairs.len();
    let nf = n as f64;
    let mut pass = true;
    let per_site = (0..params.l)
        .map(|j| {
            let (ma0, va0) = mean_var(pairs.iter().map(|p| p.before.a[j] * p.before.a[j]));
            let (ma1, va1) = mean_var(pairs.iter().map(|p| p.after.a[j] * p.after.a[j]));
            let (mb0, vb0) = mean_var(pairs.iter().map(|p| p.before.b[j]));
            let (mb1, vb1) = mean_var(pairs.iter().map(|p| p.after.b[j]));
            let se_a2 = libm::sqrt(va0 / nf + va1 / nf);
            let se_b = libm::sqrt(vb0 / nf + vb1 / nf);
            if (ma1 - ma0).abs() > 4.0 * se_a2 || (mb1 - mb0).abs() > 4.0 * se_b {
                pass = false;
            }
            SiteStats {
                site: j + 1,
                mean_a2_before: ma0,
                mean_a2_after: ma1,
                se_a2,
                mean_b_before: mb0,
                mean_b_after: mb1,
                se_b,
            }
        })
        .collect();
    InvarianceReport {
        params: *params,
        t,
        n_samples: n,
        seed,
        per_site,
        pass,
    }
}

/// Samples, evolves each lattice to `t` and compares per-site moments.
pub fn invariance_report(
    params: &SamplerParams,
    t: f64,
    n_samples: usize,
    seed: u64,
) -> Result<InvarianceReport> {
    invariance_report_biased(params, t, n_samples, seed, None)
}

pub fn invariance_report_biased(
    params: &SamplerParams,
    t: f64,
    n_samples: usize,
    seed: u64,
    bias: Option<Bias>,
) -> Result<InvarianceReport> {
    params.validate()?;
    if n_samples < 2 || !(t >= 0.0) {
        return Err(Error::InvalidInput("need n_samples >= 2 and t >= 0"));
    }
    let pairs = (0..n_samples as u64)
        .map(|i| sample_pair(params, t, seed, i, bias))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(params, t, seed, &pairs))
}
