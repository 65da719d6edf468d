//! Jacobi coefficients, finite sections and their spectral data.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// What the coefficients look like outside the stored window.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum Background {
    /// Constant continuation `a_n = a0`, `b_n = b0`.
    Free { a0: f64, b0: f64 },
    /// No continuation. The left end of the window is a Dirichlet wall.
    None,
}

/// The lattice state `q = {a_n, b_n}`.
///
/// `a[k]` is `a_{window_start + k}` and `b[k]` is `b_{window_start + k}`.
/// `a` has either as many entries as `b` or one more; the extra entry is the
/// coupling past the right edge. With a `None` background the first entry
/// `a_{window_start}` couples to nothing and only serves as the
/// normalisation constant of the half-line Weyl function.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JacobiCoefficients {
    pub window_start: i64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub background: Background,
}

/// Symmetric tridiagonal matrix. `offdiag.len() == diag.len() - 1`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TridiagonalMatrix {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

/// Eigenvalues in ascending order with the squared first components of the
/// normalised eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    /// Set when some weight fell below 1e-300 and was clamped to zero.
    pub clamped: bool,
}

const WEIGHT_FLOOR: f64 = 1e-300;
const QL_MAX_SWEEPS: usize = 60;

impl JacobiCoefficients {
    pub fn new(
        window_start: i64,
        a: Vec<f64>,
        b: Vec<f64>,
        background: Background,
    ) -> Result<Self> {
        let q = JacobiCoefficients {
            window_start,
            a,
            b,
            background,
        };
        q.validate()?;
        Ok(q)
    }

    /// The constant lattice on all of Z.
    pub fn free(a0: f64, b0: f64) -> Self {
        JacobiCoefficients {
            window_start: 0,
            a: Vec::new(),
            b: Vec::new(),
            background: Background::Free { a0, b0 },
        }
    }

    /// Half-line data `b_1..b_n`, `a_2..a_n` with a wall at site 1 and `a_1 = 1`.
    pub fn half_line(b: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if offdiag.len() + 1 != b.len() {
            return Err(Error::InvalidInput("offdiag must be one shorter than b"));
        }
        let mut a = Vec::with_capacity(b.len());
        a.push(1.0);
        a.extend_from_slice(&offdiag);
        Self::new(1, a, b, Background::None)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.len() != self.b.len() && self.a.len() != self.b.len() + 1 {
            return Err(Error::InvalidInput(
                "a must have len(b) or len(b)+1 entries",
            ));
        }
        if self.a.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidInput("a_n must be finite and positive"));
        }
        if self.b.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("b_n must be finite"));
        }
        match self.background {
            Background::Free { a0, b0 } if !(a0 > 0.0) || !b0.is_finite() => {
                Err(Error::InvalidInput("background a0 must be positive"))
            }
            Background::None if self.b.is_empty() => {
                Err(Error::InvalidInput("empty window without background"))
            }
            _ => Ok(()),
        }
    }

    /// Index of the last stored `b`.
    pub fn window_end(&self) -> i64 {
        self.window_start + self.b.len() as i64 - 1
    }

    pub fn a_at(&self, n: i64) -> Result<f64> {
        let k = n - self.window_start;
        if k >= 0 && (k as usize) < self.a.len() {
            return Ok(self.a[k as usize]);
        }
        match self.background {
            Background::Free { a0, .. } => Ok(a0),
            Background::None => Err(Error::IndexOutOfBackground(n)),
        }
    }

    pub fn b_at(&self, n: i64) -> Result<f64> {
        let k = n - self.window_start;
        if k >= 0 && (k as usize) < self.b.len() {
            return Ok(self.b[k as usize]);
        }
        match self.background {
            Background::Free { b0, .. } => Ok(b0),
            Background::None => Err(Error::IndexOutOfBackground(n)),
        }
    }

    /// True when every stored coefficient equals the background.
    pub fn is_free(&self) -> bool {
        match self.background {
            Background::Free { a0, b0 } => {
                self.a.iter().all(|&x| x == a0) && self.b.iter().all(|&x| x == b0)
            }
            Background::None => false,
        }
    }
}

impl TridiagonalMatrix {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || offdiag.len() + 1 != diag.len() {
            return Err(Error::InvalidInput("offdiag must have size M-1"));
        }
        if diag.iter().chain(offdiag.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry"));
        }
        Ok(TridiagonalMatrix { diag, offdiag })
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    /// Dense row-major copy, mostly for tests.
    pub fn to_dense(&self) -> Vec<f64> {
        let m = self.size();
        let mut out = vec![0.0; m * m];
        for i in 0..m {
            out[i * m + i] = self.diag[i];
            if i + 1 < m {
                out[i * m + i + 1] = self.offdiag[i];
                out[(i + 1) * m + i] = self.offdiag[i];
            }
        }
        out
    }

    /// Half-line coefficients with `window_start = 1` and `a_1 = 1`.
    pub fn to_half_line(&self) -> JacobiCoefficients {
        let mut a = Vec::with_capacity(self.size());
        a.push(1.0);
        a.extend_from_slice(&self.offdiag);
        JacobiCoefficients {
            window_start: 1,
            a,
            b: self.diag.clone(),
            background: Background::None,
        }
    }
}

/// Finite section `[lo, hi]`: diagonal `b_lo..b_hi`, off-diagonal `a_{lo+1}..a_hi`.
pub fn truncate(q: &JacobiCoefficients, lo: i64, hi: i64) -> Result<TridiagonalMatrix> {
    if lo > hi {
        return Err(Error::InvalidInput("truncate needs lo <= hi"));
    }
    let diag = (lo..=hi).map(|n| q.b_at(n)).collect::<Result<Vec<_>>>()?;
    let offdiag = (lo + 1..=hi)
        .map(|n| q.a_at(n))
        .collect::<Result<Vec<_>>>()?;
    Ok(TridiagonalMatrix { diag, offdiag })
}

/// Implicit-shift QL on (d, e) with `e[i]` coupling `i` and `i+1`.
/// `z` holds `rows` rows of length n that are rotated along with the matrix.
fn tql(d: &mut [f64], e: &mut [f64], z: &mut [f64], rows: usize) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_SWEEPS {
                return Err(Error::ConvergenceFailure);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = libm::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = libm::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..rows {
                    let row = &mut z[k * n..(k + 1) * n];
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    idx
}

/// Eigenvalues and first-row weights of a finite section.
pub fn eigendecompose(t: &TridiagonalMatrix) -> Result<Eigen> {
    let n = t.size();
    let mut d = t.diag.clone();
    let mut e = t.offdiag.clone();
    e.push(0.0);
    let mut z = vec![0.0; n];
    if n > 0 {
        z[0] = 1.0;
    }
    tql(&mut d, &mut e, &mut z, 1)?;
    let idx = sorted_order(&d);
    let mut clamped = false;
    let values = idx.iter().map(|&i| d[i]).collect();
    let weights = idx
        .iter()
        .map(|&i| {
            let w = z[i] * z[i];
            if w < WEIGHT_FLOOR {
                clamped = true;
                0.0
            } else {
                w
            }
        })
        .collect();
    Ok(Eigen {
        values,
        weights,
        clamped,
    })
}

/// Eigenvalues with full eigenvectors; `vectors[j]` belongs to `values[j]`.
pub fn eigendecompose_full(t: &TridiagonalMatrix) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = t.size();
    let mut d = t.diag.clone();
    let mut e = t.offdiag.clone();
    e.push(0.0);
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    tql(&mut d, &mut e, &mut z, n)?;
    let idx = sorted_order(&d);
    let values = idx.iter().map(|&i| d[i]).collect();
    let vectors = idx
        .iter()
        .map(|&j| (0..n).map(|k| z[k * n + j]).collect())
        .collect();
    Ok((values, vectors))
}

/// `(H^k δ_site, δ_site)` by `k` banded applications of `H`.
///
/// With a `None` background the left end of the window is a wall; the right
/// end must reach `site + k`.
pub fn operator_moment(q: &JacobiCoefficients, k: usize, site: i64) -> Result<f64> {
    let kk = k as i64;
    let lo = match q.background {
        Background::None => {
            if site < q.window_start || site > q.window_end() {
                return Err(Error::IndexOutOfBackground(site));
            }
            if site + kk > q.window_end() {
                return Err(Error::IndexOutOfBackground(site + kk));
            }
            (site - kk).max(q.window_start)
        }
        Background::Free { .. } => site - kk,
    };
    let hi = site + kk;
    let len = (hi - lo + 1) as usize;
    let b: Vec<f64> = (lo..=hi).map(|n| q.b_at(n)).collect::<Result<_>>()?;
    // a_{lo+j} couples j-1 and j inside the band
    let a: Vec<f64> = (lo..=hi)
        .map(|n| if n == lo { Ok(0.0) } else { q.a_at(n) })
        .collect::<Result<_>>()?;
    let c = (site - lo) as usize;
    let mut u = vec![0.0; len];
    u[c] = 1.0;
    let mut next = vec![0.0; len];
    for step in 1..=k {
        let from = c.saturating_sub(step);
        let to = (c + step).min(len - 1);
        for j in from..=to {
            let mut v = b[j] * u[j];
            if j > 0 {
                v += a[j] * u[j - 1];
            }
            if j + 1 < len {
                v += a[j + 1] * u[j + 1];
            }
            next[j] = v;
        }
        core::mem::swap(&mut u, &mut next);
    }
    Ok(u[c])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn three_site() -> TridiagonalMatrix {
        TridiagonalMatrix::new(
            vec![0.0; 3],
            vec![(2.0f64 / 3.0).sqrt(), (1.0f64 / 3.0).sqrt()],
        )
        .unwrap()
    }

    #[test]
    fn truncate_free_lattice() {
        let t = truncate(&JacobiCoefficients::free(1.0, 0.0), 0, 2).unwrap();
        assert_eq!(t.diag, vec![0.0; 3]);
        assert_eq!(t.offdiag, vec![1.0, 1.0]);
    }

    #[test]
    fn truncate_window_has_spectrum_minus_one_zero_one() {
        let q = JacobiCoefficients::half_line(vec![0.0; 3], three_site().offdiag).unwrap();
        let t = truncate(&q, 1, 3).unwrap();
        let ev = eigendecompose(&t).unwrap();
        for (x, y) in ev.values.iter().zip([-1.0, 0.0, 1.0]) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-14);
        }
    }

    #[test]
    fn truncate_rejects_reversed_range_and_outside_window() {
        let q = JacobiCoefficients::free(1.0, 0.0);
        assert!(truncate(&q, 3, 2).is_err());
        let h = JacobiCoefficients::half_line(vec![0.0; 3], vec![1.0, 1.0]).unwrap();
        assert_eq!(truncate(&h, 0, 2), Err(Error::IndexOutOfBackground(0)));
        assert_eq!(truncate(&h, 1, 4), Err(Error::IndexOutOfBackground(4)));
    }

    #[test]
    fn eigen_small_cases() {
        let ev =
            eigendecompose(&TridiagonalMatrix::new(vec![0.0, 0.0], vec![1.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(ev.values[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ev.values[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ev.weights[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ev.weights[1], 0.5, epsilon = 1e-15);

        let ev = eigendecompose(&TridiagonalMatrix::new(vec![5.0], vec![]).unwrap()).unwrap();
        assert_eq!(ev.values, vec![5.0]);
        assert_eq!(ev.weights, vec![1.0]);

        let ev = eigendecompose(&three_site()).unwrap();
        for w in &ev.weights {
            assert_abs_diff_eq!(*w, 1.0 / 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn full_vectors_diagonalise() {
        let t = TridiagonalMatrix::new(vec![1.0, -2.0, 0.5, 3.0], vec![0.7, 1.3, 0.2]).unwrap();
        let (vals, vecs) = eigendecompose_full(&t).unwrap();
        let dense = t.to_dense();
        for (lam, v) in vals.iter().zip(&vecs) {
            for i in 0..4 {
                let hv: f64 = (0..4).map(|j| dense[i * 4 + j] * v[j]).sum();
                assert_abs_diff_eq!(hv, lam * v[i], epsilon = 1e-13);
            }
        }
        let w = eigendecompose(&t).unwrap().weights;
        for (wi, v) in w.iter().zip(&vecs) {
            assert_abs_diff_eq!(*wi, v[0] * v[0], epsilon = 1e-14);
        }
    }

    #[test]
    fn tiny_weights_are_clamped_and_flagged() {
        let mut diag = vec![0.0; 60];
        diag[59] = 50.0;
        let t = TridiagonalMatrix::new(diag, vec![1e-8; 59]).unwrap();
        let ev = eigendecompose(&t).unwrap();
        assert!(ev.clamped);
        assert_eq!(*ev.weights.last().unwrap(), 0.0);
    }

    #[test]
    fn moments_by_path_counting() {
        let free = JacobiCoefficients::free(1.0, 0.0);
        assert_eq!(operator_moment(&free, 2, 0).unwrap(), 2.0);
        assert_eq!(operator_moment(&free, 4, 7).unwrap(), 6.0);
        assert_eq!(operator_moment(&free, 0, 3).unwrap(), 1.0);
        let a: Vec<f64> = (1..=10).map(|n| (n as f64).sqrt()).collect();
        let q = JacobiCoefficients::new(1, a, vec![0.0; 10], Background::None).unwrap();
        assert_abs_diff_eq!(operator_moment(&q, 2, 1).unwrap(), 2.0, epsilon = 1e-14);
        assert!(operator_moment(&q, 12, 1).is_err());
    }

    #[test]
    fn free_background_extends_everywhere() {
        let q = JacobiCoefficients::free(1.0, 0.0);
        assert!(q.is_free());
        assert_eq!(q.a_at(-100).unwrap(), 1.0);
        assert_eq!(q.b_at(100).unwrap(), 0.0);
    }

    fn arb_window() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (3usize..14).prop_flat_map(|m| {
            (
                proptest::collection::vec(0.3f64..2.0, m),
                proptest::collection::vec(-1.5f64..1.5, m),
            )
        })
    }

    proptest! {
        #[test]
        fn eigen_moments_match_operator_moments((a, b) in arb_window()) {
            let m = b.len() as i64;
            let q = JacobiCoefficients::new(-m / 2, a, b, Background::Free { a0: 1.0, b0: 0.2 }).unwrap();
            let site = 0;
            let (lo, hi) = (site - 12, site + 12);
            let ev = eigendecompose(&truncate(&q, lo, hi).unwrap()).unwrap();
            // truncation at the centre site: shift weights to the middle row
            let (vals, vecs) = eigendecompose_full(&truncate(&q, lo, hi).unwrap()).unwrap();
            let c = (site - lo) as usize;
            for k in 0..=12usize {
                let spec: f64 = vals.iter().zip(&vecs).map(|(l, v)| l.powi(k as i32) * v[c] * v[c]).sum();
                let direct = operator_moment(&q, k, site).unwrap();
                prop_assert!((spec - direct).abs() <= 1e-10 * direct.abs().max(1.0));
            }
            let total: f64 = ev.weights.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(ev.weights.iter().all(|&w| w >= 0.0));
            let first: f64 = ev.values.iter().zip(&ev.weights).map(|(l, w)| l * w).sum();
            prop_assert!((first - q.b_at(lo).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn constant_background_spectrum_in_band(a0 in 0.2f64..3.0, b0 in -2.0f64..2.0, m in 1usize..40) {
            let q = JacobiCoefficients::free(a0, b0);
            let ev = eigendecompose(&truncate(&q, 0, m as i64).unwrap()).unwrap();
            for l in ev.values {
                prop_assert!(l >= b0 - 2.0 * a0 - 1e-12 && l <= b0 + 2.0 * a0 + 1e-12);
            }
        }
    }
}
