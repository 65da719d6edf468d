//! Fundamental solutions, Weyl disks and the half-line / whole-line Weyl functions.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{truncate, JacobiCoefficients, TridiagonalMatrix};
use crate::spectral::{measure_from_jacobi, stieltjes};

const RESCALE_AT: f64 = 1e150;
const RESCALE_LOG2: i32 = 498;
const DENOM_TOL: f64 = 1e-12;

/// `c_n`, `s_n` for `n = 0..=L+1`.
///
/// The true values are `c[n] * 2^exponent[n]` (same for `s`); the exponent is
/// only nonzero once the solutions grow past 1e150.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalSolutions {
    pub c: Vec<Complex64>,
    pub s: Vec<Complex64>,
    pub exponent: Vec<i32>,
}

impl FundamentalSolutions {
    /// Unscaled `(c_n, s_n)`; may overflow to infinity.
    pub fn value(&self, n: usize) -> (Complex64, Complex64) {
        let f = libm::ldexp(1.0, self.exponent[n]);
        (self.c[n] * f, self.s[n] * f)
    }

    /// `c_n s_{n+1} - c_{n+1} s_n` with scaling undone.
    pub fn wronskian(&self, n: usize) -> Complex64 {
        let w = self.c[n] * self.s[n + 1] - self.c[n + 1] * self.s[n];
        let e = self.exponent[n] + self.exponent[n + 1];
        w * libm::ldexp(1.0, e)
    }

    /// Relative deviation of the Wronskian at `n` from `expected`.
    ///
    /// Measured against the size of the two products, since that is the
    /// scale at which the difference is formed.
    pub fn wronskian_error(&self, n: usize, expected: f64) -> f64 {
        let inv = libm::ldexp(expected, -(self.exponent[n] + self.exponent[n + 1]));
        let p1 = (self.c[n] * self.s[n + 1]).norm();
        let p2 = (self.c[n + 1] * self.s[n]).norm();
        let w = self.c[n] * self.s[n + 1] - self.c[n + 1] * self.s[n];
        (w - inv).norm() / p1.max(p2).max(inv.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylDisk {
    pub center: Complex64,
    pub radius: f64,
    pub l: usize,
    pub z: Complex64,
}

impl WeylDisk {
    pub fn contains(&self, m: Complex64, slack: f64) -> bool {
        (m - self.center).norm() <= self.radius + slack
    }
}

/// Solutions of `a_{n+1} f_{n+1} + a_n f_{n-1} + b_n f_n = z f_n`, `1 <= n <= L`,
/// with `c_0 = s_1 = 1`, `c_1 = s_0 = 0`.
pub fn fundamental_solutions(
    q: &JacobiCoefficients,
    z: Complex64,
    l: usize,
) -> Result<FundamentalSolutions> {
    let len = l + 2;
    let mut c = Vec::with_capacity(len);
    let mut s = Vec::with_capacity(len);
    let mut exponent = Vec::with_capacity(len);
    c.extend([Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
    s.extend([Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
    exponent.extend([0, 0]);
    // working registers in the current scale
    let (mut cp, mut cc, mut sp, mut sc) = (c[0], c[1], s[0], s[1]);
    let mut e = 0;
    for n in 1..=l as i64 {
        let an = q.a_at(n)?;
        let an1 = q.a_at(n + 1)?;
        let zb = z - q.b_at(n)?;
        let cn = (zb * cc - an * cp) / an1;
        let sn = (zb * sc - an * sp) / an1;
        cp = cc;
        cc = cn;
        sp = sc;
        sc = sn;
        if cc.norm() + sc.norm() > RESCALE_AT {
            let f = libm::ldexp(1.0, -RESCALE_LOG2);
            cp *= f;
            cc *= f;
            sp *= f;
            sc *= f;
            e += RESCALE_LOG2;
        }
        c.push(cc);
        s.push(sc);
        exponent.push(e);
    }
    Ok(FundamentalSolutions { c, s, exponent })
}

/// Disk of all values `m` with `Σ_{n=1}^{L} |c_n - a_1 m s_n|^2 <= a_1^2 Im m / Im z`.
///
/// This is the disk containing the half-line Weyl function `m_+` itself.
pub fn weyl_disk(q: &JacobiCoefficients, z: Complex64, l: usize) -> Result<WeylDisk> {
    if !(z.im > 0.0) {
        return Err(Error::InvalidInput("weyl_disk needs Im z > 0"));
    }
    if l < 1 {
        return Err(Error::InvalidInput("weyl_disk needs L >= 1"));
    }
    let fs = fundamental_solutions(q, z, l)?;
    let a1 = q.a_at(1)?;
    // Green's identity turns the boundary Wronskians into sums of positive or
    // slowly varying terms, which avoids the cancellation in
    // c_L s_{L+1} - c_{L+1} s_L once the disks shrink below rounding:
    //   radius = 1 / (2 Im z Σ|s_n|^2)
    //   center = (i a_1 + 2 Im z Σ c_n conj(s_n)) / (2 a_1 Im z Σ|s_n|^2)
    // Sums are kept in the scale of site L.
    let el = fs.exponent[l];
    let (mut ss, mut cs) = (0.0, Complex64::new(0.0, 0.0));
    for n in 1..=l {
        let f = libm::ldexp(1.0, fs.exponent[n] - el);
        let (cn, sn) = (fs.c[n] * f, fs.s[n] * f);
        ss += sn.norm_sqr();
        cs += cn * sn.conj();
    }
    if !(ss.is_finite() && ss > 0.0) {
        return Err(Error::DegenerateDisk);
    }
    let y = z.im;
    let center = (Complex64::new(0.0, libm::ldexp(a1, -2 * el)) + 2.0 * y * cs) / (2.0 * a1 * y * ss);
    let radius = libm::ldexp(1.0 / (2.0 * y * ss), -2 * el);
    Ok(WeylDisk {
        center,
        radius,
        l,
        z,
    })
}

/// Stieltjes transform of the spectral measure of the section `[1, M]`.
pub fn m_plus(q: &JacobiCoefficients, z: Complex64, m: usize) -> Result<Complex64> {
    let t = truncate(q, 1, m as i64)?;
    stieltjes(&measure_from_jacobi(&t)?, z)
}

/// Section `b_{-1}, ..., b_{-M}` of the left half-lattice, read outward.
pub fn left_section(q: &JacobiCoefficients, m: usize) -> Result<TridiagonalMatrix> {
    let diag = (1..=m as i64)
        .map(|n| q.b_at(-n))
        .collect::<Result<Vec<_>>>()?;
    let offdiag = (1..m as i64)
        .map(|n| q.a_at(-n))
        .collect::<Result<Vec<_>>>()?;
    Ok(TridiagonalMatrix { diag, offdiag })
}

/// Weyl function of the left half-lattice (sites -1, -2, ...).
pub fn m_minus(q: &JacobiCoefficients, z: Complex64, m: usize) -> Result<Complex64> {
    stieltjes(&measure_from_jacobi(&left_section(q, m)?)?, z)
}

/// Result of a doubling search over the truncation size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Converged {
    pub value: Complex64,
    pub m: usize,
    /// `|value(M) - value(M/2)|`
    pub last_diff: f64,
}

/// `m_plus` with `M` doubled from `m0` until successive values differ by less than `tol`.
pub fn m_plus_converged(
    q: &JacobiCoefficients,
    z: Complex64,
    m0: usize,
    tol: f64,
    m_max: usize,
) -> Result<Converged> {
    let mut m = m0.max(1);
    let mut prev = m_plus(q, z, m)?;
    loop {
        let next_m = 2 * m;
        if next_m > m_max {
            return Err(Error::ExtrapolationDivergence(f64::NAN));
        }
        let next = m_plus(q, z, next_m)?;
        let diff = (next - prev).norm();
        if diff < tol {
            return Ok(Converged {
                value: next,
                m: next_m,
                last_diff: diff,
            });
        }
        prev = next;
        m = next_m;
    }
}

fn near(e: Error) -> Error {
    match e {
        Error::PoleAtZ(_) => Error::NearSpectrum,
        other => other,
    }
}

/// Whole-line m-function in the variable `z`, `φ(z) = z + 1/z`:
/// `φ + a_1² m_+(φ)` outside the unit circle, `-a_0² m_-(φ) + b_0` inside.
pub fn m_whole(q: &JacobiCoefficients, z: Complex64, m: usize) -> Result<Complex64> {
    let r = z.norm();
    if r == 0.0 || (r - 1.0).abs() < 1e-15 {
        return Err(Error::InvalidInput("m_whole needs 0 < |z| != 1"));
    }
    let phi = z + z.inv();
    if r > 1.0 {
        let a1 = q.a_at(1)?;
        Ok(phi + a1 * a1 * m_plus(q, phi, m).map_err(near)?)
    } else {
        let a0 = q.a_at(0)?;
        Ok(-a0 * a0 * m_minus(q, phi, m).map_err(near)? + q.b_at(0)?)
    }
}

/// `(H - w)^{-1}(0, 0) = -1 / (a_1² m_+(w) + a_0² m_-(w) + w - b_0)`.
pub fn resolvent_diagonal(q: &JacobiCoefficients, w: Complex64, m: usize) -> Result<Complex64> {
    let a1 = q.a_at(1)?;
    let a0 = q.a_at(0)?;
    let mp = m_plus(q, w, m).map_err(near)?;
    let mm = m_minus(q, w, m).map_err(near)?;
    let den = a1 * a1 * mp + a0 * a0 * mm + w - q.b_at(0)?;
    if den.norm() < DENOM_TOL {
        return Err(Error::NearSpectrum);
    }
    Ok(-den.inv())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Background;
    use alloc::vec;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn free() -> JacobiCoefficients {
        JacobiCoefficients::free(1.0, 0.0)
    }

    #[test]
    fn free_solutions_by_hand() {
        let fs = fundamental_solutions(&free(), c(0.0, 0.0), 6).unwrap();
        let expect = [0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0];
        for (x, y) in fs.s.iter().zip(expect) {
            assert_eq!(*x, c(y, 0.0));
        }
        let fs = fundamental_solutions(&free(), c(0.0, 2.0), 1).unwrap();
        assert_eq!(fs.s[2], c(0.0, 2.0));
        assert_eq!(fs.c[2], c(-1.0, 0.0));
        assert_eq!(fs.wronskian(0), c(1.0, 0.0));
    }

    #[test]
    fn rescaling_keeps_wronskian() {
        let q =
            JacobiCoefficients::new(1, vec![0.5; 400], vec![3.0; 400], Background::None).unwrap();
        let fs = fundamental_solutions(&q, c(20.0, 0.5), 300).unwrap();
        assert!(fs.exponent[300] > 0);
        for n in [0usize, 10, 150, 299] {
            assert!(
                fs.wronskian_error(n, 1.0) < 1e-12,
                "n={n} {}",
                fs.wronskian_error(n, 1.0)
            );
        }
    }

    #[test]
    fn free_disk_at_two_i() {
        let d = weyl_disk(&free(), c(0.0, 2.0), 1).unwrap();
        assert!((d.radius - 0.25).abs() < 1e-15);
        assert!((d.center - c(0.0, 0.25)).norm() < 1e-15);
    }

    #[test]
    fn disk_matches_direct_quadratic_form() {
        let q = JacobiCoefficients::new(
            1,
            vec![1.7, 0.6, 1.2, 0.9, 1.4, 0.8],
            vec![0.3, -0.4, 0.8, 0.1, -1.0, 0.2],
            Background::None,
        )
        .unwrap();
        let z = c(0.4, 0.7);
        for l in 1..=4 {
            let d = weyl_disk(&q, z, l).unwrap();
            let fs = fundamental_solutions(&q, z, l).unwrap();
            let a1 = q.a[0];
            let (mut s2, mut x, mut c0) = (0.0, c(0.0, 0.0), 0.0);
            for n in 1..=l {
                s2 += fs.s[n].norm_sqr();
                x += fs.c[n].conj() * fs.s[n];
                c0 += fs.c[n].norm_sqr();
            }
            let g = a1 * x - c(0.0, a1 * a1 / (2.0 * z.im));
            let center = g.conj() / (a1 * a1 * s2);
            let r2 = g.norm_sqr() / (a1.powi(4) * s2 * s2) - c0 / (a1 * a1 * s2);
            assert!((center - d.center).norm() < 1e-12);
            assert!((r2.sqrt() - d.radius).abs() < 1e-12);
        }
    }

    #[test]
    fn m_plus_examples() {
        let v = m_plus(&free(), c(2.5, 0.0), 60).unwrap();
        assert!((v - c(-0.5, 0.0)).norm() < 1e-10);
        let q = JacobiCoefficients::new(1, vec![1.0], vec![7.0], Background::None).unwrap();
        let v = m_plus(&q, c(0.0, 1.0), 1).unwrap();
        assert!((v - c(7.0, -1.0).inv()).norm() < 1e-15);
        let conv = m_plus_converged(&free(), c(0.3, 0.5), 8, 1e-10, 4096).unwrap();
        assert!(
            (conv.value - (-c(0.3, 0.5) + (c(0.3, 0.5) * c(0.3, 0.5) - 4.0).sqrt()) / 2.0).norm()
                < 1e-9
        );
    }

    #[test]
    fn free_whole_line_is_identity() {
        for z in [c(2.0, 0.0), c(1.0 / 3.0, 0.0), c(0.3, 0.4), c(-2.0, 1.5)] {
            let v = m_whole(&free(), z, 100).unwrap();
            assert!((v - z).norm() < 1e-8, "z={z} v={v}");
        }
        assert!(m_whole(&free(), c(1.0, 0.0), 10).is_err());
    }

    #[test]
    fn resolvent_matches_dense_solve() {
        let n = 20i64;
        let a: Vec<f64> = (0..2 * n + 2)
            .map(|k| 0.8 + 0.3 * libm::sin(k as f64 * 1.3))
            .collect();
        let b: Vec<f64> = (0..2 * n + 1)
            .map(|k| 0.5 * libm::cos(k as f64 * 0.7))
            .collect();
        let q = JacobiCoefficients::new(-n, a, b, Background::None).unwrap();
        let w = c(0.2, 3.0);
        let lhs = resolvent_diagonal(&q, w, n as usize).unwrap();
        let t = truncate(&q, -n, n).unwrap();
        let rhs = dense_resolvent(&t, w, n as usize);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    /// Gaussian elimination on the complex tridiagonal system (T - w) x = e_k.
    fn dense_resolvent(t: &TridiagonalMatrix, w: Complex64, k: usize) -> Complex64 {
        let m = t.size();
        let mut mat = vec![vec![c(0.0, 0.0); m + 1]; m];
        for i in 0..m {
            mat[i][i] = c(t.diag[i], 0.0) - w;
            if i + 1 < m {
                mat[i][i + 1] = c(t.offdiag[i], 0.0);
                mat[i + 1][i] = c(t.offdiag[i], 0.0);
            }
        }
        mat[k][m] = c(1.0, 0.0);
        for col in 0..m {
            let piv = (col..m)
                .max_by(|&x, &y| mat[x][col].norm().total_cmp(&mat[y][col].norm()))
                .unwrap();
            mat.swap(col, piv);
            for r in 0..m {
                if r != col {
                    let f = mat[r][col] / mat[col][col];
                    for j in col..=m {
                        let v = mat[col][j];
                        mat[r][j] -= f * v;
                    }
                }
            }
        }
        mat[k][m] / mat[k][k]
    }

    fn arb_half_line() -> impl Strategy<Value = JacobiCoefficients> {
        (
            proptest::collection::vec(0.3f64..2.0, 40),
            proptest::collection::vec(-1.0f64..1.0, 39),
        )
            .prop_map(|(a, b)| JacobiCoefficients::new(1, a, b, Background::None).unwrap())
    }

    proptest! {
        #[test]
        fn wronskian_identity(q in arb_half_line(), x in -3.0f64..3.0, y in -2.0f64..2.0) {
            let z = c(x, y);
            let fs = fundamental_solutions(&q, z, 37).unwrap();
            for n in 0..=37usize {
                prop_assert!(fs.wronskian_error(n, q.a[0] / q.a[n]) <= 1e-12);
            }
        }

        #[test]
        fn disks_nest_and_contain_m_plus(q in arb_half_line(), x in -2.0f64..2.0, y in 0.1f64..2.0) {
            let z = c(x, y);
            let m = m_plus(&q, z, 39).unwrap();
            let mut prev: Option<WeylDisk> = None;
            for l in 1..38 {
                let d = weyl_disk(&q, z, l).unwrap();
                prop_assert!(d.contains(m, 1e-12));
                if let Some(p) = prev {
                    prop_assert!((d.center - p.center).norm() + d.radius <= p.radius + 1e-12);
                }
                prev = Some(d);
            }
        }

        #[test]
        fn boundary_saturates(q in arb_half_line(), l in 1usize..20, x in -2.0f64..2.0, y in 0.1f64..2.0) {
            let z = c(x, y);
            let d = weyl_disk(&q, z, l).unwrap();
            let fs = fundamental_solutions(&q, z, l).unwrap();
            let a1 = q.a[0];
            for j in 0..8 {
                let th = core::f64::consts::PI * j as f64 / 4.0;
                let m = d.center + d.radius * c(libm::cos(th), libm::sin(th));
                let lhs: f64 = (1..=l).map(|n| (fs.c[n] - a1 * m * fs.s[n]).norm_sqr()).sum();
                let rhs = a1 * a1 * m.im / z.im;
                prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
            }
        }

        #[test]
        fn herglotz_outside_unit_circle(r in 1.05f64..4.0, th in 0.05f64..3.0) {
            let a: Vec<f64> = (0..81).map(|k| 1.0 + 0.3 * libm::sin(k as f64)).collect();
            let b: Vec<f64> = (0..81).map(|k| 0.4 * libm::cos(2.0 * k as f64)).collect();
            let q = JacobiCoefficients::new(-40, a, b, Background::Free { a0: 1.0, b0: 0.0 }).unwrap();
            let z = c(r * libm::cos(th), r * libm::sin(th));
            let v = m_whole(&q, z, 80).unwrap();
            prop_assert!(v.im / z.im > 0.0);
        }
    }
}
