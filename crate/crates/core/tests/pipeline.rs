//! Cross-module checks: spectral data, flows and the ODE agree with each other.

use proptest::prelude::*;
use toda_core::flow::{flow_finite, FlowSpec};
use toda_core::lattice::{eigendecompose, truncate, Background, JacobiCoefficients, TridiagonalMatrix};
use toda_core::ode::{integrate, Boundary, OdeRun};
use toda_core::spectral::{jacobi_from_measure, measure_from_jacobi};

fn chain() -> impl Strategy<Value = TridiagonalMatrix> {
    (2usize..7).prop_flat_map(|n| {
        (prop::collection::vec(-1.0..1.0f64, n), prop::collection::vec(0.3..1.5f64, n - 1))
            .prop_map(|(d, o)| TridiagonalMatrix::new(d, o).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn measure_round_trip(t in chain()) {
        let n = t.size();
        let q = jacobi_from_measure(&measure_from_jacobi(&t)?, n)?;
        let back = truncate(&q, 1, n as i64)?;
        for i in 0..n {
            prop_assert!((back.diag[i] - t.diag[i]).abs() < 1e-9);
        }
        for i in 0..n - 1 {
            prop_assert!((back.offdiag[i] - t.offdiag[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn flow_is_a_group(t in chain(), s1 in 0.0..0.5f64, s2 in 0.0..0.5f64) {
        let p = vec![0.0, 1.0];
        let two = flow_finite(&flow_finite(&t, &FlowSpec::new(p.clone(), s1))?, &FlowSpec::new(p.clone(), s2))?;
        let one = flow_finite(&t, &FlowSpec::new(p, s1 + s2))?;
        for i in 0..t.size() {
            prop_assert!((two.diag[i] - one.diag[i]).abs() < 1e-9);
        }
        for i in 0..t.size() - 1 {
            prop_assert!((two.offdiag[i] - one.offdiag[i]).abs() < 1e-9);
        }
    }
}

#[test]
fn ode_keeps_the_spectrum() {
    let q = JacobiCoefficients::new(1, vec![1.0, 0.8, 1.2, 0.5, 1.1], vec![0.3, -0.2, 0.0, 0.7, -0.5], Background::None)
        .unwrap();
    let tr = integrate(&OdeRun::simple(q.clone(), 2.0, Boundary::OpenEnds, 1e-11)).unwrap();
    let before = eigendecompose(&truncate(&q, 1, 5).unwrap()).unwrap().values;
    let last = tr.states.last().unwrap();
    let after = eigendecompose(&truncate(last, 1, 5).unwrap()).unwrap().values;
    for (x, y) in before.iter().zip(&after) {
        assert!((x - y).abs() < 1e-8, "{x} vs {y}");
    }
    // the flow separates the eigenvalues onto the diagonal, largest first with SIGN = +1
    assert!(last.b[0] > last.b[4]);
}
