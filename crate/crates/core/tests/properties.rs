use perilimit::convexify::{convexify_along, LatticeMode, MatrixLattice};
use perilimit::recoverability::recoverability_residual;
use perilimit::{ExtendedReal, Matrix, SphereQuadrature, StoredEnergy};
use proptest::prelude::*;

fn matrix3() -> impl Strategy<Value = Matrix> {
    prop::array::uniform9(-2.0f64..2.0).prop_map(|e| Matrix::new(3, 3, &e).unwrap())
}

fn matrix2() -> impl Strategy<Value = Matrix> {
    prop::array::uniform4(-2.0f64..2.0).prop_map(|e| Matrix::new(2, 2, &e).unwrap())
}

fn extended() -> impl Strategy<Value = ExtendedReal> {
    prop_oneof![
        4 => (-1e6f64..1e6).prop_map(ExtendedReal::Finite),
        1 => Just(ExtendedReal::Infinity),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn determinant_is_multiplicative(a in matrix3(), b in matrix3()) {
        let lhs = (a * b).determinant().unwrap();
        let rhs = a.determinant().unwrap() * b.determinant().unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn cofactor_is_multiplicative(a in matrix3(), b in matrix3()) {
        let lhs = (a * b).cofactor().unwrap();
        let rhs = a.cofactor().unwrap() * b.cofactor().unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-10 * (1.0 + rhs.frobenius()));
    }

    #[test]
    fn extended_addition_is_commutative_and_absorbing(x in extended(), y in extended()) {
        prop_assert_eq!(x + y, y + x);
        if x.is_infinite() || y.is_infinite() {
            prop_assert!((x + y).is_infinite());
        }
        if y >= ExtendedReal::ZERO {
            prop_assert!(x + y >= x);
        }
    }

    #[test]
    fn affine_in_frobenius_square_is_recoverable(a in matrix2(), c0 in -3.0f64..3.0, c1 in 0.0f64..3.0) {
        let q = SphereQuadrature::default_for(2).unwrap();
        let w = StoredEnergy::FrobeniusSquared { a: c0, b: c1 };
        let e = recoverability_residual(&w, &a, &q).unwrap();
        let r = e.residual.finite().unwrap();
        prop_assert!(r.abs() <= 1e-10 * (1.0 + e.lhs.to_f64().abs()));
    }

    #[test]
    fn line_envelope_is_below_and_convex(values in prop::collection::vec(-5.0f64..5.0, 41)) {
        let lat = MatrixLattice::new(1, LatticeMode::Full, 2.0, 0.1).unwrap();
        let env = convexify_along(&lat, &values, &[1]).unwrap();
        for (e, v) in env.iter().zip(&values) {
            prop_assert!(e <= v);
        }
        for w in env.windows(3) {
            prop_assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-12);
        }
        let again = convexify_along(&lat, &env, &[1]).unwrap();
        for (a, b) in again.iter().zip(&env) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
