//! Discrete spectral measures and the measure <-> Jacobi coefficient maps.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::lattice::{eigendecompose, Background, JacobiCoefficients, TridiagonalMatrix};

/// Finite atomic measure with strictly increasing locations.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiscreteMeasure {
    pub atoms: Vec<(f64, f64)>,
    pub normalized: bool,
}

const POLE_TOL: f64 = 1e-14;
const ORTHO_TOL: f64 = 1e-13;
pub const EXACT_MAX_N: usize = 8;

impl DiscreteMeasure {
    /// Checks ordering and positivity. `normalized` is set when the mass is 1.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidInput("measure needs at least one atom"));
        }
        if atoms
            .iter()
            .any(|&(l, w)| !l.is_finite() || !w.is_finite() || !(w > 0.0))
        {
            return Err(Error::InvalidInput(
                "atoms need finite locations and positive weights",
            ));
        }
        if atoms.windows(2).any(|p| !(p[0].0 < p[1].0)) {
            return Err(Error::InvalidInput(
                "atom locations must be strictly increasing",
            ));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        Ok(DiscreteMeasure {
            atoms,
            normalized: (total - 1.0).abs() <= 1e-12,
        })
    }

    /// Point mass at `x`.
    pub fn dirac(x: f64) -> Self {
        DiscreteMeasure {
            atoms: vec![(x, 1.0)],
            normalized: true,
        }
    }

    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn normalize(&self) -> Self {
        let m = self.mass();
        DiscreteMeasure {
            atoms: self.atoms.iter().map(|&(l, w)| (l, w / m)).collect(),
            normalized: true,
        }
    }

    pub fn locations(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.0).collect()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// `Σ w_i λ_i^k`.
pub fn measure_moment(sigma: &DiscreteMeasure, k: u32) -> f64 {
    sigma
        .atoms
        .iter()
        .map(|&(l, w)| w * libm::pow(l, k as f64))
        .sum()
}

/// `Σ w_i / (λ_i - z)`.
pub fn stieltjes(sigma: &DiscreteMeasure, z: Complex64) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for &(l, w) in &sigma.atoms {
        let d = Complex64::new(l, 0.0) - z;
        if d.norm() < POLE_TOL {
            return Err(Error::PoleAtZ(l));
        }
        acc += w / d;
    }
    Ok(acc)
}

/// Lanczos with full reorthogonalisation on `diag(λ)` started from `√w`.
///
/// The result is a half-line lattice with window starting at 1, `b_1..b_n`
/// and `a_1 = 1` followed by `a_2..a_n`; `a_{n+1}` is appended when the
/// measure has more than `n_max` atoms.
pub fn jacobi_from_measure(sigma: &DiscreteMeasure, n_max: usize) -> Result<JacobiCoefficients> {
    let m = sigma.len();
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be positive"));
    }
    if m < n_max {
        return Err(Error::RankDeficient {
            atoms: m,
            needed: n_max,
        });
    }
    let lam = sigma.locations();
    let scale = lam.iter().fold(0.0f64, |s, l| s.max(l.abs()));
    let floor = ORTHO_TOL * scale * scale;
    let norm = libm::sqrt(sigma.mass());
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n_max + 1);
    basis.push(
        sigma
            .atoms
            .iter()
            .map(|&(_, w)| libm::sqrt(w) / norm)
            .collect(),
    );
    let mut a = vec![1.0];
    let mut b = Vec::with_capacity(n_max);
    let want = if m > n_max { n_max + 1 } else { n_max };
    for j in 0..n_max {
        let qj = &basis[j];
        let mut v: Vec<f64> = qj.iter().zip(&lam).map(|(x, l)| x * l).collect();
        let bj = dot(qj, &v);
        b.push(bj);
        if j + 1 >= want {
            break;
        }
        for (vi, qi) in v.iter_mut().zip(qj) {
            *vi -= bj * qi;
        }
        if j > 0 {
            let aj = a[j];
            for (vi, qi) in v.iter_mut().zip(&basis[j - 1]) {
                *vi -= aj * qi;
            }
        }
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
        }
        let an = libm::sqrt(dot(&v, &v));
        if !(an * an > floor) || an == 0.0 {
            return Err(Error::LossOfOrthogonality(j + 2));
        }
        a.push(an);
        basis.push(v.iter().map(|x| x / an).collect());
    }
    Ok(JacobiCoefficients {
        window_start: 1,
        a,
        b,
        background: Background::None,
    })
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Spectral measure of a finite section at its first site.
///
/// Atoms whose weight underflowed are dropped.
pub fn measure_from_jacobi(t: &TridiagonalMatrix) -> Result<DiscreteMeasure> {
    let ev = eigendecompose(t)?;
    let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(ev.values.len());
    for (l, w) in ev.values.into_iter().zip(ev.weights) {
        if w <= 0.0 {
            continue;
        }
        match atoms.last_mut() {
            Some(last) if !(last.0 < l) => last.1 += w,
            _ => atoms.push((l, w)),
        }
    }
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    for a in &mut atoms {
        a.1 /= total;
    }
    Ok(DiscreteMeasure {
        atoms,
        normalized: true,
    })
}

/// Exact recurrence coefficients of a rational measure.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactJacobi {
    /// `b_1..b_n`
    pub b: Vec<BigRational>,
    /// `a_2², ..., a_{n}²` and `a_{n+1}²` when the measure has more atoms
    pub a_sq: Vec<BigRational>,
}

/// Stieltjes procedure in exact rational arithmetic, `n_max <= 8`.
pub fn jacobi_from_measure_exact(
    atoms: &[(BigRational, BigRational)],
    n_max: usize,
) -> Result<ExactJacobi> {
    if n_max == 0 || n_max > EXACT_MAX_N {
        return Err(Error::InvalidInput(
            "exact backend supports 1 <= n_max <= 8",
        ));
    }
    if atoms.len() < n_max {
        return Err(Error::RankDeficient {
            atoms: atoms.len(),
            needed: n_max,
        });
    }
    if atoms.iter().any(|(_, w)| !w.is_positive()) {
        return Err(Error::InvalidInput("weights must be positive"));
    }
    let zero = BigRational::zero();
    let one = BigRational::from_integer(BigInt::from(1));
    let mut prev: Vec<BigRational> = vec![zero.clone(); atoms.len()];
    let mut cur: Vec<BigRational> = vec![one; atoms.len()];
    let norm = |p: &[BigRational]| -> BigRational {
        atoms
            .iter()
            .zip(p)
            .fold(BigRational::zero(), |s, ((_, w), x)| s + w * x * x)
    };
    let mut n_cur = norm(&cur);
    let mut a_sq_prev = zero.clone();
    let mut out = ExactJacobi {
        b: Vec::new(),
        a_sq: Vec::new(),
    };
    let want = if atoms.len() > n_max {
        n_max + 1
    } else {
        n_max
    };
    for j in 0..n_max {
        let num = atoms
            .iter()
            .zip(&cur)
            .fold(BigRational::zero(), |s, ((l, w), x)| s + w * l * x * x);
        let bj = num / &n_cur;
        out.b.push(bj.clone());
        if j + 1 >= want {
            break;
        }
        let next: Vec<BigRational> = atoms
            .iter()
            .zip(cur.iter().zip(&prev))
            .map(|((l, _), (c, p))| (l - &bj) * c - &a_sq_prev * p)
            .collect();
        let n_next = norm(&next);
        if n_next.is_zero() {
            return Err(Error::LossOfOrthogonality(j + 2));
        }
        let a_sq = &n_next / &n_cur;
        out.a_sq.push(a_sq.clone());
        a_sq_prev = a_sq;
        prev = core::mem::replace(&mut cur, next);
        n_cur = n_next;
    }
    Ok(out)
}
