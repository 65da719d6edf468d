//! The whole-line m-function as a base plus a chain of transforms.
//!
//! Besides pointwise evaluation every level carries truncated Laurent jets
//! at 0 (`m = t_0 + t_1 z + …`) and at ∞ (`m = z + u_0 + u_1/z + …`), which
//! give the edge data `b_0 = t_0`, `a_0² = t_1`, `a_1² = 1 - u_1` without
//! numerical limits.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{truncate, JacobiCoefficients};
use crate::spectral::{measure_from_jacobi, stieltjes, DiscreteMeasure};
use crate::weyl::left_section;

/// Orders carried by the base jets.
pub const JET_ORDER: usize = 160;
/// Longest chain accepted by [`MRep::new`] and the shift helpers.
pub const MAX_CHAIN: usize = 64;
/// Largest `n_hi - n_lo` accepted by [`coefficients_from_m`].
pub const MAX_COEFF_SPAN: i64 = 16;

const POLE_TOL: f64 = 1e-13;

/// Spectral data of the unshifted lattice.
#[derive(Debug, Clone, PartialEq)]
pub enum Base {
    /// `a_n = 1`, `b_n = 0`, where `m(z) = z`.
    Free,
    Spectral {
        sigma_plus: DiscreteMeasure,
        a1: f64,
        sigma_minus: DiscreteMeasure,
        a0: f64,
        b0: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    /// Darboux step at a real `η` with `|η| > 1`.
    DEta(f64),
    /// Shift by one site to the left.
    DZero,
    /// Reflection `b_k -> b_{1-k}`, `a_k -> a_{2-k}`.
    Reflect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Left,
    Right,
}

/// `Left` appends `DZero`, which moves site -1 to the origin (new `b_0` is
/// the old `b_{-1}`). Checked against a non-symmetric lattice in the tests.
pub const LEFT_SHIFT: [Transform; 1] = [Transform::DZero];
pub const RIGHT_SHIFT: [Transform; 3] = [Transform::Reflect, Transform::DZero, Transform::Reflect];

/// Truncated Laurent series `Σ c[k] x^(lead + k)`, known below `x^(lead + len)`.
#[derive(Debug, Clone, PartialEq)]
struct Laurent {
    lead: i32,
    c: Vec<f64>,
}

impl Laurent {
    fn new(lead: i32, c: Vec<f64>) -> Self {
        Laurent { lead, c }
    }

    /// `x^-1 + x`, known to `len` terms.
    fn phi(len: usize) -> Self {
        let mut c = vec![0.0; len];
        c[0] = 1.0;
        if len > 2 {
            c[2] = 1.0;
        }
        Laurent::new(-1, c)
    }

    fn constant(v: f64, len: usize) -> Self {
        let mut c = vec![0.0; len];
        c[0] = v;
        Laurent::new(0, c)
    }

    fn end(&self) -> i32 {
        self.lead + self.c.len() as i32
    }

    fn coeff(&self, p: i32) -> f64 {
        let k = p - self.lead;
        if k >= 0 && (k as usize) < self.c.len() {
            self.c[k as usize]
        } else {
            0.0
        }
    }

    fn add_scaled(&self, other: &Laurent, s: f64) -> Laurent {
        let lead = self.lead.min(other.lead);
        let end = self.end().min(other.end());
        let c = (lead..end)
            .map(|p| self.coeff(p) + s * other.coeff(p))
            .collect();
        Laurent::new(lead, c)
    }

    fn sub(&self, other: &Laurent) -> Laurent {
        self.add_scaled(other, -1.0)
    }

    fn add_const(&self, v: f64) -> Laurent {
        let mut out = self.clone();
        if out.lead > 0 {
            let mut c = vec![0.0; out.lead as usize];
            c.extend_from_slice(&out.c);
            out = Laurent::new(0, c);
        }
        let k = (-out.lead) as usize;
        if k < out.c.len() {
            out.c[k] += v;
        }
        out
    }

    fn scale(&self, s: f64) -> Laurent {
        Laurent::new(self.lead, self.c.iter().map(|x| x * s).collect())
    }

    fn mul(&self, other: &Laurent) -> Laurent {
        let n = self.c.len().min(other.c.len());
        let mut c = vec![0.0; n];
        for i in 0..n {
            for j in 0..n - i {
                c[i + j] += self.c[i] * other.c[j];
            }
        }
        Laurent::new(self.lead + other.lead, c)
    }

    fn div(&self, other: &Laurent) -> Result<Laurent> {
        let d0 = other.c[0];
        if d0 == 0.0 || !d0.is_finite() {
            return Err(Error::PoleHit);
        }
        let n = self.c.len().min(other.c.len());
        let mut q = vec![0.0; n];
        for k in 0..n {
            let mut v = self.c[k];
            for j in 1..=k {
                v -= other.c[j] * q[k - j];
            }
            q[k] = v / d0;
        }
        Ok(Laurent::new(self.lead - other.lead, q))
    }

    /// Drop the `n` lowest terms, which the caller knows to vanish.
    fn strip(&self, n: usize) -> Laurent {
        Laurent::new(self.lead + n as i32, self.c[n.min(self.c.len())..].to_vec())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Consts {
    Base,
    DEta { eta: f64, t0: f64, m_eta: f64 },
    DZero { t0: f64, t1: f64 },
    Reflect { a: f64 },
}

#[derive(Debug, Clone, PartialEq)]
struct Level {
    zero: Laurent,
    inf: Laurent,
    consts: Consts,
}

impl Level {
    fn t0(&self) -> f64 {
        self.zero.coeff(0)
    }
    fn t1(&self) -> f64 {
        self.zero.coeff(1)
    }
    fn a1_sq(&self) -> f64 {
        1.0 - self.inf.coeff(1)
    }
}

/// Whole-line m-function: base spectral data and a chain of transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct MRep {
    base: Base,
    chain: Vec<Transform>,
    levels: Vec<Level>,
    failure: Option<Error>,
}

fn chebyshev_sums(sigma: &DiscreteMeasure, n: usize) -> Vec<f64> {
    // Σ w U_k(λ/2) for k < n
    let mut out = vec![0.0; n];
    for &(l, w) in &sigma.atoms {
        let (mut u_prev, mut u) = (0.0, 1.0);
        for slot in out.iter_mut() {
            *slot += w * u;
            let next = l * u - u_prev;
            u_prev = u;
            u = next;
        }
    }
    out
}

fn base_level(base: &Base) -> Level {
    let n = JET_ORDER;
    match base {
        Base::Free => {
            let mut zero = vec![0.0; n];
            zero[1] = 1.0;
            let mut inf = vec![0.0; n];
            inf[0] = 1.0;
            Level {
                zero: Laurent::new(0, zero),
                inf: Laurent::new(-1, inf),
                consts: Consts::Base,
            }
        }
        Base::Spectral {
            sigma_plus,
            a1,
            sigma_minus,
            a0,
            b0,
        } => {
            let dm = chebyshev_sums(sigma_minus, n - 1);
            let mut zero = vec![*b0];
            zero.extend(dm.iter().map(|d| a0 * a0 * d));
            let wp = chebyshev_sums(sigma_plus, n - 2);
            let mut inf = vec![1.0, 0.0];
            inf.extend(wp.iter().map(|w| -a1 * a1 * w));
            inf[2] += 1.0;
            Level {
                zero: Laurent::new(0, zero),
                inf: Laurent::new(-1, inf),
                consts: Consts::Base,
            }
        }
    }
}

fn checked_den(d: Complex64, scale: f64) -> Result<Complex64> {
    if d.norm() < POLE_TOL * scale.max(1.0) || !d.is_finite() {
        Err(Error::PoleHit)
    } else {
        Ok(d)
    }
}

fn phi(z: Complex64) -> Complex64 {
    z + z.inv()
}

impl MRep {
    pub fn new(base: Base, chain: Vec<Transform>) -> Result<Self> {
        if chain.len() > MAX_CHAIN {
            return Err(Error::InvalidInput("transform chain too long"));
        }
        if let Base::Spectral {
            sigma_plus,
            a1,
            sigma_minus,
            a0,
            ..
        } = &base
        {
            if !sigma_plus.normalized || !sigma_minus.normalized || !(*a1 > 0.0) || !(*a0 > 0.0) {
                return Err(Error::InvalidInput(
                    "base needs normalised measures and positive a0, a1",
                ));
            }
        }
        for t in &chain {
            if let Transform::DEta(eta) = t {
                if !(eta.abs() > 1.0) {
                    return Err(Error::InvalidInput("DEta needs real |eta| > 1"));
                }
            }
        }
        let mut rep = MRep {
            levels: vec![base_level(&base)],
            base,
            chain: Vec::new(),
            failure: None,
        };
        for t in chain {
            rep.push(t);
        }
        Ok(rep)
    }

    pub fn free() -> Self {
        MRep::new(Base::Free, Vec::new()).expect("free base is valid")
    }

    /// Base from finite sections `[1, M]` and `[-M, -1]` of `q`.
    pub fn from_lattice(q: &JacobiCoefficients, m: usize) -> Result<Self> {
        let sigma_plus = measure_from_jacobi(&truncate(q, 1, m as i64)?)?;
        let sigma_minus = measure_from_jacobi(&left_section(q, m)?)?;
        let base = Base::Spectral {
            sigma_plus,
            a1: q.a_at(1)?,
            sigma_minus,
            a0: q.a_at(0)?,
            b0: q.b_at(0)?,
        };
        MRep::new(base, Vec::new())
    }

    pub fn base(&self) -> &Base {
        &self.base
    }

    pub fn chain(&self) -> &[Transform] {
        &self.chain
    }

    /// Appends a transform. A failure is recorded and reported by later evaluations.
    pub fn push(&mut self, t: Transform) {
        self.chain.push(t);
        if self.failure.is_some() {
            return;
        }
        match self.next_level(t) {
            Ok(level) => self.levels.push(level),
            Err(e) => self.failure = Some(e),
        }
    }

    pub fn with(&self, ts: &[Transform]) -> Self {
        let mut out = self.clone();
        for &t in ts {
            out.push(t);
        }
        out
    }

    fn next_level(&self, t: Transform) -> Result<Level> {
        let prev = self.levels.last().expect("base level");
        if prev.zero.c.len() < 6 || prev.inf.c.len() < 6 {
            return Err(Error::ChainEdgeFailure);
        }
        let (t0, t1) = (prev.t0(), prev.t1());
        let len = prev.zero.c.len().max(prev.inf.c.len()) + 4;
        match t {
            Transform::DEta(eta) => {
                let k_top = self.levels.len() - 1;
                let m_eta = self.eval_level(k_top, Complex64::new(eta, 0.0))?.re;
                let phi_eta = eta + 1.0 / eta;
                let k = m_eta - t0;
                // at 0 the factor m - t0 vanishes to first order
                let z_mt0 = {
                    let mut s = prev.zero.add_const(-t0);
                    s.c[0] = 0.0;
                    s.strip(1)
                };
                let zero_num = Laurent::phi(len)
                    .mul(&z_mt0)
                    .sub(&prev.zero.add_const(phi_eta - m_eta).scale(k));
                let zero = zero_num.div(&prev.zero.add_const(-m_eta))?;
                let inf_num = Laurent::phi(len)
                    .mul(&prev.inf.add_const(-t0))
                    .sub(&prev.inf.add_const(phi_eta - m_eta).scale(k));
                let inf = inf_num.div(&prev.inf.add_const(-m_eta))?;
                Ok(Level {
                    zero: trim_lead(zero, 0),
                    inf: trim_lead(inf, -1),
                    consts: Consts::DEta { eta, t0, m_eta },
                })
            }
            Transform::DZero => {
                if !(t1 > 0.0) {
                    return Err(Error::ChainEdgeFailure);
                }
                let mut d = prev.zero.add_const(-t0);
                d.c[0] = 0.0;
                let d = d.strip(1);
                let r = Laurent::constant(t1, d.c.len()).div(&d)?;
                let mut zero = Laurent::phi(len).sub(&r);
                zero = cancel_to(zero, 0);
                let inf = Laurent::phi(len)
                    .sub(&Laurent::constant(t1, prev.inf.c.len()).div(&prev.inf.add_const(-t0))?);
                Ok(Level {
                    zero,
                    inf: trim_lead(inf, -1),
                    consts: Consts::DZero { t0, t1 },
                })
            }
            Transform::Reflect => {
                let a = prev.a1_sq();
                if !(a > 0.0) {
                    return Err(Error::ChainEdgeFailure);
                }
                // new jet at 0 from the old jet at ∞ evaluated at 1/ζ
                let mut p = Laurent::phi(len).sub(&prev.inf);
                p = cancel_to(p, 1);
                let zero = cancel_to(
                    Laurent::phi(len).sub(&Laurent::constant(a, p.c.len()).div(&p)?),
                    0,
                );
                // new jet at ∞ from the old jet at 0
                let q = Laurent::phi(len).sub(&prev.zero);
                let inf = Laurent::phi(len).sub(&Laurent::constant(a, q.c.len()).div(&q)?);
                Ok(Level {
                    zero,
                    inf: trim_lead(inf, -1),
                    consts: Consts::Reflect { a },
                })
            }
        }
    }

    fn eval_level(&self, k: usize, z: Complex64) -> Result<Complex64> {
        let level = &self.levels[k];
        if z == Complex64::new(0.0, 0.0) {
            return Ok(Complex64::new(level.t0(), 0.0));
        }
        let r = z.norm();
        match &level.consts {
            Consts::Base => match &self.base {
                Base::Free => Ok(z),
                Base::Spectral {
                    sigma_plus,
                    a1,
                    sigma_minus,
                    a0,
                    b0,
                } => {
                    let p = phi(z);
                    if r > 1.0 {
                        let s = stieltjes(sigma_plus, p).map_err(|_| Error::PoleHit)?;
                        Ok(p + a1 * a1 * s)
                    } else if r < 1.0 {
                        let s = stieltjes(sigma_minus, p).map_err(|_| Error::PoleHit)?;
                        Ok(-a0 * a0 * s + b0)
                    } else {
                        Err(Error::PoleHit)
                    }
                }
            },
            Consts::DEta { eta, t0, m_eta } => {
                let m = self.eval_level(k - 1, z)?;
                let d = checked_den(m - m_eta, m.norm())?;
                let phi_eta = eta + 1.0 / eta;
                let kk = m_eta - t0;
                Ok((phi(z) * (m - t0) - kk * (m - m_eta + phi_eta)) / d)
            }
            Consts::DZero { t0, t1 } => {
                let m = self.eval_level(k - 1, z)?;
                let d = checked_den(m - t0, m.norm())?;
                Ok(phi(z) - t1 / d)
            }
            Consts::Reflect { a } => {
                let m = self.eval_level(k - 1, z.inv())?;
                let p = phi(z);
                let d = checked_den(p - m, p.norm())?;
                Ok(p - a / d)
            }
        }
    }

    fn top(&self) -> Result<&Level> {
        match &self.failure {
            Some(e) => Err(e.clone()),
            None => Ok(self.levels.last().expect("base level")),
        }
    }

    /// Edge data read off the series of the top level.
    fn edge_from_jets(&self) -> Result<(f64, f64, f64)> {
        let top = self.top()?;
        Ok((top.a1_sq(), top.t0(), top.t1()))
    }

    /// Orders left in the top jets at 0 and ∞.
    pub fn jet_orders(&self) -> (usize, usize) {
        let top = self.levels.last().expect("base level");
        (top.zero.c.len(), top.inf.c.len())
    }
}

/// Zero the known-cancelling terms below `x^to` and strip them.
fn cancel_to(s: Laurent, to: i32) -> Laurent {
    let n = (to - s.lead).max(0) as usize;
    s.strip(n)
}

/// Re-anchor a series whose computed leading terms below `lead` vanish.
fn trim_lead(s: Laurent, lead: i32) -> Laurent {
    if s.lead >= lead {
        s
    } else {
        cancel_to(s, lead)
    }
}

/// Value of the composed m-function at `z`.
pub fn eval_m(m: &MRep, z: Complex64) -> Result<Complex64> {
    m.top()?;
    m.eval_level(m.levels.len() - 1, z)
}

/// `(a_1², b_0, a_0²)`.
///
/// An empty chain echoes the base fields. With a chain the values come from
/// the jets carried through every transform.
pub fn extract_edge(m: &MRep) -> Result<(f64, f64, f64)> {
    let out = if m.chain.is_empty() {
        match &m.base {
            Base::Free => (1.0, 0.0, 1.0),
            Base::Spectral { a1, a0, b0, .. } => (a1 * a1, *b0, a0 * a0),
        }
    } else {
        m.edge_from_jets()?
    };
    if !(out.0 > 0.0) {
        return Err(Error::NonPositiveASquared(out.0));
    }
    if !(out.2 > 0.0) {
        return Err(Error::NonPositiveASquared(out.2));
    }
    Ok(out)
}

/// Richardson table on samples taken at steps `h, h/2, h/4, …` with error
/// expansion in powers of `h^p`; returns the last two diagonal entries.
fn richardson(samples: &[f64], p: u32) -> (f64, f64) {
    let mut table = samples.to_vec();
    let mut prev_best = table[0];
    let mut best = table[0];
    for level in 1..samples.len() {
        let f = libm::pow(2.0, (p * level as u32) as f64);
        let mut next = Vec::with_capacity(table.len() - 1);
        for i in 0..table.len() - 1 {
            next.push((f * table[i + 1] - table[i]) / (f - 1.0));
        }
        prev_best = best;
        best = *next.last().expect("non-empty");
        table = next;
    }
    (best, prev_best)
}

fn settle(samples: &[f64], p: u32) -> Result<f64> {
    let (best, prev) = richardson(samples, p);
    let spread = (best - prev).abs() / best.abs().max(1e-300);
    if !best.is_finite() || spread > 1e-6 {
        Err(Error::ExtrapolationDivergence(spread))
    } else {
        Ok(best)
    }
}

/// Edge data by limits: `ζ(φ(ζ) - m(ζ))` along `ζ = iR`, `R ∈ {16, 32, 64, 128}`,
/// and symmetric differences at 0 with step halving.
pub fn extract_edge_richardson(m: &MRep) -> Result<(f64, f64, f64)> {
    let mut at_inf = Vec::new();
    for r in [16.0, 32.0, 64.0, 128.0] {
        let z = Complex64::new(0.0, r);
        at_inf.push((z * (phi(z) - eval_m(m, z)?)).re);
    }
    let a1_sq = settle(&at_inf, 1)?;
    let (mut vals, mut slopes) = (Vec::new(), Vec::new());
    for h in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0] {
        let p = eval_m(m, Complex64::new(h, 0.0))?.re;
        let q = eval_m(m, Complex64::new(-h, 0.0))?.re;
        vals.push(0.5 * (p + q));
        slopes.push((p - q) / (2.0 * h));
    }
    let b0 = settle_abs(&vals)?;
    let a0_sq = settle(&slopes, 2)?;
    Ok((a1_sq, b0, a0_sq))
}

fn settle_abs(samples: &[f64]) -> Result<f64> {
    let (best, prev) = richardson(samples, 2);
    let spread = (best - prev).abs() / best.abs().max(1.0);
    if !best.is_finite() || spread > 1e-6 {
        Err(Error::ExtrapolationDivergence(spread))
    } else {
        Ok(best)
    }
}

/// m-function of the lattice moved by one site.
pub fn shift(m: &MRep, direction: Direction) -> MRep {
    match direction {
        Direction::Left => m.with(&LEFT_SHIFT),
        Direction::Right => m.with(&RIGHT_SHIFT),
    }
}

/// Representation with site `n` moved to the origin.
///
/// `n < 0` appends `|n|` left shifts; `n > 0` appends one reflection, `n`
/// left shifts and another reflection, which is the right shift repeated
/// `n` times with the inner reflection pairs left out.
pub fn shifted_to(m: &MRep, n: i64) -> Result<MRep> {
    let extra = if n > 0 { n as usize + 2 } else { (-n) as usize };
    if m.chain.len() + extra > MAX_CHAIN {
        return Err(Error::InvalidInput("transform chain too long"));
    }
    let mut out = m.clone();
    if n > 0 {
        out.push(Transform::Reflect);
        for _ in 0..n {
            out.push(Transform::DZero);
        }
        out.push(Transform::Reflect);
    } else {
        for _ in 0..-n {
            out.push(Transform::DZero);
        }
    }
    Ok(out)
}

/// Jacobi coefficients `a_n`, `b_n` for `n_lo <= n <= n_hi` read off `m`.
pub fn coefficients_from_m(m: &MRep, n_lo: i64, n_hi: i64) -> Result<JacobiCoefficients> {
    if n_lo > n_hi {
        return Err(Error::InvalidInput("n_lo must not exceed n_hi"));
    }
    if n_hi - n_lo > MAX_COEFF_SPAN {
        return Err(Error::InvalidInput(
            "coefficient span exceeds the chain depth limit",
        ));
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for n in n_lo..=n_hi {
        let bn = shifted_to(m, n)?.edge_from_jets()?.1;
        // a_n couples n-1 and n, which is a_1 seen from site n-1
        let a_sq = shifted_to(m, n - 1)?.edge_from_jets()?.0;
        if !(a_sq > 0.0) {
            return Err(Error::NonPositiveASquared(a_sq));
        }
        a.push(libm::sqrt(a_sq));
        b.push(bn);
    }
    JacobiCoefficients::new(n_lo, a, b, crate::lattice::Background::None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Background;
    use crate::weyl::m_whole;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Non-symmetric compact perturbation of the free lattice around the origin.
    fn bumpy() -> JacobiCoefficients {
        let a = vec![1.1, 0.8, 1.3, 0.9, 1.2, 0.7, 1.05];
        let b = vec![0.3, -0.5, 0.2, 0.6, -0.1, 0.4];
        JacobiCoefficients::new(-3, a, b, Background::Free { a0: 1.0, b0: 0.0 }).unwrap()
    }

    #[test]
    fn free_examples() {
        let m = MRep::free();
        assert_eq!(eval_m(&m, c(3.0, 1.0)).unwrap(), c(3.0, 1.0));
        let v = eval_m(&m.with(&[Transform::DZero]), c(2.0, 0.0)).unwrap();
        assert!((v - c(2.0, 0.0)).norm() < 1e-15);
        let v = eval_m(&m.with(&[Transform::DEta(3.0)]), c(2.0, 0.0)).unwrap();
        assert!((v - c(2.0, 0.0)).norm() < 1e-15);
        assert_eq!(extract_edge(&m).unwrap(), (1.0, 0.0, 1.0));
        let e = extract_edge(&m.with(&[Transform::DEta(3.0)])).unwrap();
        assert!((e.0 - 1.0).abs() < 1e-14 && e.1.abs() < 1e-14 && (e.2 - 1.0).abs() < 1e-14);
        let v = eval_m(&shift(&m, Direction::Left), c(2.0, 0.0)).unwrap();
        assert!((v - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn base_matches_whole_line_m() {
        let q = bumpy();
        let m = MRep::from_lattice(&q, 200).unwrap();
        for z in [c(1.5, 0.3), c(0.4, -0.2), c(-2.0, 0.5), c(0.1, 0.6)] {
            let a = eval_m(&m, z).unwrap();
            let b = m_whole(&q, z, 200).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn left_shift_direction() {
        let q = bumpy();
        let m = MRep::from_lattice(&q, 200).unwrap();
        let (a1, b0, a0) = extract_edge(&shift(&m, Direction::Left)).unwrap();
        assert!((b0 - q.b_at(-1).unwrap()).abs() < 1e-10, "b0={b0}");
        assert!((a1 - q.a_at(0).unwrap().powi(2)).abs() < 1e-10);
        assert!((a0 - q.a_at(-1).unwrap().powi(2)).abs() < 1e-10);
        let (_, b0, _) = extract_edge(&shift(&m, Direction::Right)).unwrap();
        assert!((b0 - q.b_at(1).unwrap()).abs() < 1e-10, "b0={b0}");
    }

    #[test]
    fn coefficients_recover_lattice() {
        let q = bumpy();
        let m = MRep::from_lattice(&q, 200).unwrap();
        let r = coefficients_from_m(&m, -3, 3).unwrap();
        for n in -3..=3 {
            let (da, db) = (
                r.a_at(n).unwrap() - q.a_at(n).unwrap(),
                r.b_at(n).unwrap() - q.b_at(n).unwrap(),
            );
            assert!(da.abs() < 1e-8 && db.abs() < 1e-8, "n={n} da={da} db={db}");
        }
    }

    #[test]
    fn richardson_agrees_with_jets() {
        let q = bumpy();
        let m = MRep::from_lattice(&q, 200).unwrap().with(&[
            Transform::DZero,
            Transform::DEta(2.5),
            Transform::Reflect,
        ]);
        let j = extract_edge(&m).unwrap();
        let r = extract_edge_richardson(&m).unwrap();
        assert!(
            (j.0 - r.0).abs() < 1e-7 && (j.1 - r.1).abs() < 1e-7 && (j.2 - r.2).abs() < 1e-7,
            "{j:?} {r:?}"
        );
    }

    fn points() -> [Complex64; 5] {
        [c(1.7, 0.4), c(-2.3, 0.9), c(0.3, 1.8), c(3.1, 0.2), c(-0.6, 2.5)]
    }

    #[test]
    fn reflect_is_an_involution() {
        let m = MRep::from_lattice(&bumpy(), 200).unwrap();
        let twice = m.with(&[Transform::Reflect, Transform::Reflect]);
        for z in points() {
            assert!((eval_m(&twice, z).unwrap() - eval_m(&m, z).unwrap()).norm() < 1e-9);
        }
    }

    #[test]
    fn left_then_right_is_identity() {
        let m = MRep::from_lattice(&bumpy(), 200).unwrap();
        let back = shift(&shift(&m, Direction::Left), Direction::Right);
        for z in points() {
            assert!((eval_m(&back, z).unwrap() - eval_m(&m, z).unwrap()).norm() < 1e-9);
        }
    }

    #[test]
    fn herglotz_after_chains() {
        let m = MRep::from_lattice(&bumpy(), 200).unwrap();
        let chains: [&[Transform]; 4] = [
            &[Transform::DEta(3.0)],
            &[Transform::DZero, Transform::DEta(-2.5)],
            &[Transform::Reflect, Transform::DZero, Transform::Reflect, Transform::DEta(4.0)],
            &[Transform::DEta(2.8), Transform::DZero, Transform::DZero],
        ];
        for chain in chains {
            let mm = m.with(chain);
            for z in [c(1.5, 0.5), c(-1.2, 0.3), c(0.2, 1.4), c(4.0, 0.1), c(-0.9, 1.1)] {
                let v = eval_m(&mm, z).unwrap();
                assert!(v.im / z.im > 0.0, "{chain:?} at {z}: {v}");
            }
        }
    }

    #[test]
    fn grows_like_z_along_imaginary_axis() {
        let m = MRep::from_lattice(&bumpy(), 200)
            .unwrap()
            .with(&[Transform::DEta(3.0), Transform::DZero]);
        let z = c(0.0, 1e3);
        assert!((eval_m(&m, z).unwrap() - z).norm() < 0.01 * z.norm());
    }

    #[test]
    fn free_coefficients_and_span_limit() {
        let q = coefficients_from_m(&MRep::free(), -3, 3).unwrap();
        for n in -3..=3 {
            assert!((q.a_at(n).unwrap() - 1.0).abs() < 1e-12 && q.b_at(n).unwrap().abs() < 1e-12);
        }
        assert!(coefficients_from_m(&MRep::free(), -8, 9).is_err());
    }

    #[test]
    fn two_atom_base_echoes_fields() {
        let two = DiscreteMeasure::new(vec![(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        let base = Base::Spectral { sigma_plus: two.clone(), a1: 1.0, sigma_minus: two, a0: 1.0, b0: 0.0 };
        let m = MRep::new(base, Vec::new()).unwrap();
        assert_eq!(extract_edge(&m).unwrap(), (1.0, 0.0, 1.0));
    }

    #[test]
    fn symmetric_three_atom_base_matches_lanczos() {
        let three =
            DiscreteMeasure::new(vec![(-1.0, 1.0 / 3.0), (0.0, 1.0 / 3.0), (1.0, 1.0 / 3.0)]).unwrap();
        let half = crate::spectral::jacobi_from_measure(&three, 3).unwrap();
        let base = Base::Spectral {
            sigma_plus: three.clone(),
            a1: 1.0,
            sigma_minus: three,
            a0: 1.0,
            b0: 0.0,
        };
        let q = coefficients_from_m(&MRep::new(base, Vec::new()).unwrap(), -2, 2).unwrap();
        // right half from Lanczos, left half its mirror image
        for n in 1..=2i64 {
            assert!((q.b_at(n).unwrap() - half.b_at(n).unwrap()).abs() < 1e-7);
            assert!((q.b_at(-n).unwrap() - half.b_at(n).unwrap()).abs() < 1e-7);
        }
        assert!((q.a_at(2).unwrap() - half.a_at(2).unwrap()).abs() < 1e-7);
        assert!((q.a_at(-1).unwrap() - half.a_at(2).unwrap()).abs() < 1e-7);
        assert!((q.a_at(1).unwrap() - 1.0).abs() < 1e-7 && (q.a_at(0).unwrap() - 1.0).abs() < 1e-7);
    }
}
