mod support;

use proptest::prelude::*;
use support::{c, dense_inverse, reference_expm};
use tdph::fock::*;
use tdph::Error;

fn e(x: f64) -> C64 {
    c(x, 0.0)
}

#[test]
fn number_operator_and_k_zero_at_dim_four() {
    let ops = build_operator_set(4).unwrap();
    let n = &ops.a_dag * &ops.a;
    for i in 0..4 {
        for j in 0..4 {
            let want = if i == j { i as f64 } else { 0.0 };
            assert!((n.get(i, j) - e(want)).norm() < 1e-15);
        }
    }
    assert_eq!(ops.k_zero.diagonal(), vec![e(0.25), e(0.75), e(1.25), e(1.75)]);
}

#[test]
fn squared_lowering_entries() {
    let ops = build_operator_set(4).unwrap();
    let a2 = &ops.a * &ops.a;
    assert!((a2.get(0, 2) - e(2f64.sqrt())).norm() < 1e-15);
    assert!((a2.get(1, 3) - e(6f64.sqrt())).norm() < 1e-15);
    assert!((&ops.k_minus * 2.0).get(1, 3) == a2.get(1, 3));
}

#[test]
fn dimension_floor_is_enforced() {
    assert_eq!(build_operator_set(3).unwrap_err(), Error::InvalidDimension { dim: 3, min: MIN_DIM });
    assert!(StateVector::basis(4, 4).is_err());
}

#[test]
fn su11_commutators() {
    let dim = 24;
    let ops = build_operator_set(dim).unwrap();
    let zp = commutator(&ops.k_zero, &ops.k_plus).unwrap();
    assert!(frobenius_distance(&zp, &ops.k_plus, 0).unwrap() < 1e-12);
    let zm = commutator(&ops.k_zero, &ops.k_minus).unwrap();
    assert!(frobenius_distance(&zm, &(-&ops.k_minus), 0).unwrap() < 1e-13);
    // The raising/lowering pair only closes away from the truncation edge.
    let pm = commutator(&ops.k_plus, &ops.k_minus).unwrap();
    let target = &ops.k_zero * -2.0;
    assert!(frobenius_distance(&pm, &target, 2).unwrap() < 1e-12);
    assert!(frobenius_distance(&pm, &target, 0).unwrap() > 1.0);
}

#[test]
fn canonical_pair_commutes_to_i_on_the_interior() {
    let ops = build_operator_set(20).unwrap();
    let xp = commutator(&ops.x, &ops.p).unwrap();
    let target = &Operator::identity(20) * I;
    assert!(frobenius_distance(&xp, &target, 1).unwrap() < 1e-13);
}

#[test]
fn nilpotent_exponential_small_cases() {
    let ops = build_operator_set(4).unwrap();
    assert_eq!(nilpotent_exp(&Operator::zeros(4), 2).unwrap(), Operator::identity(4));
    let a = &ops.k_minus * 0.7;
    let want = &Operator::identity(4) + &a;
    assert!(frobenius_distance(&nilpotent_exp(&a, 2).unwrap(), &want, 0).unwrap() < 1e-15);
}

#[test]
fn nilpotent_exponential_rejects_non_banded_input() {
    let ops = build_operator_set(8).unwrap();
    assert!(matches!(nilpotent_exp(&ops.k_zero, 1), Err(Error::Structure(_))));
    assert!(matches!(nilpotent_exp(&ops.k_plus, 0), Err(Error::Structure(_))));
    let mixed = &ops.k_plus + &ops.k_minus;
    assert!(matches!(nilpotent_exp(&mixed, 2), Err(Error::Structure(_))));
}

#[test]
fn raising_exponential_inverts_exactly() {
    let ops = build_operator_set(64).unwrap();
    for theta in [-1.0, -0.4, -0.1, 0.05, 0.3, 1.0] {
        let up = nilpotent_exp(&(&ops.k_plus * theta), 2).unwrap();
        let down = nilpotent_exp(&(&ops.k_plus * -theta), 2).unwrap();
        let d = frobenius_distance(&(&up * &down), &Operator::identity(64), 0).unwrap();
        // Entries grow like 1e9 at |theta| = 1, so only the scaled error is at rounding level there.
        let scaled = d / (up.frobenius_norm(0) * down.frobenius_norm(0));
        assert!(scaled < 1e-16, "theta {theta}: {scaled:e}");
        if theta.abs() <= 0.1 {
            assert!(d < 1e-13, "theta {theta}: {d:e}");
        }
    }
}

#[test]
fn nilpotent_exponential_matches_dense_reference() {
    let ops = build_operator_set(16).unwrap();
    for (op, scale, bw) in [(&ops.k_plus, 0.08, 2), (&ops.k_minus, -0.08, 2), (&ops.a, 0.15, 1), (&ops.a_dag, 0.1, 1)] {
        let a = op * scale;
        assert!(a.frobenius_norm(0) <= 2.0);
        let d = frobenius_distance(&nilpotent_exp(&a, bw).unwrap(), &reference_expm(&a), 0).unwrap();
        assert!(d < 1e-12, "distance {d}");
    }
}

#[test]
fn diagonal_power_cases() {
    let ops = build_operator_set(6).unwrap();
    assert_eq!(diagonal_power(1.0, &ops.k_zero).unwrap(), Operator::identity(6));
    let d = Operator::from_diagonal(&[e(0.25), e(0.75)]);
    let p = diagonal_power(std::f64::consts::E.powi(2), &d).unwrap();
    assert!((p.get(0, 0) - e(0.5f64.exp())).norm() < 1e-14);
    assert!((p.get(1, 1) - e(1.5f64.exp())).norm() < 1e-14);
    assert!(matches!(diagonal_power(0.0, &ops.k_zero), Err(Error::Domain(_))));
    assert!(matches!(diagonal_power(2.0, &ops.k_plus), Err(Error::Structure(_))));
}

#[test]
fn elementary_identities() {
    let v = StateVector::from_vec(vec![c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 3.0), c(0.1, 0.1)]).unwrap();
    assert_eq!(apply(&Operator::identity(4), &v).unwrap(), v);
    let ops = build_operator_set(8).unwrap();
    assert_eq!(frobenius_distance(&ops.x, &ops.x, 0).unwrap(), 0.0);
    let d = Operator::from_diagonal(&[I; 4]);
    assert_eq!(adjoint(&d), Operator::from_diagonal(&[-I; 4]));
    assert!(matches!(apply(&Operator::identity(5), &v), Err(Error::Shape { .. })));
}

#[test]
fn dense_inverse_oracle_is_sound() {
    let ops = build_operator_set(10).unwrap();
    let m = &Operator::identity(10) + &(&ops.x * 0.3);
    let inv = dense_inverse(&m);
    assert!(frobenius_distance(&(&m * &inv), &Operator::identity(10), 0).unwrap() < 1e-13);
}

fn small_operator(dim: usize) -> impl Strategy<Value = Operator> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim * dim)
        .prop_map(move |v| Operator::from_fn(dim, |i, j| c(v[i * dim + j].0, v[i * dim + j].1)))
}

proptest! {
    #[test]
    fn commutator_is_antisymmetric(a in small_operator(5), b in small_operator(5)) {
        let ab = commutator(&a, &b).unwrap();
        let ba = commutator(&b, &a).unwrap();
        prop_assert!(frobenius_distance(&ab, &(-&ba), 0).unwrap() < 1e-13);
        prop_assert_eq!(commutator(&a, &a).unwrap(), Operator::zeros(5));
    }

    #[test]
    fn adjoint_reverses_products(a in small_operator(5), b in small_operator(5)) {
        let lhs = (&a * &b).adjoint();
        let rhs = &b.adjoint() * &a.adjoint();
        prop_assert!(frobenius_distance(&lhs, &rhs, 0).unwrap() < 1e-13);
    }

    #[test]
    fn inner_product_is_conjugate_symmetric(
        u in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 6),
        w in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 6),
    ) {
        let u = StateVector::from_vec(u.into_iter().map(|(r, i)| c(r, i)).collect()).unwrap();
        let w = StateVector::from_vec(w.into_iter().map(|(r, i)| c(r, i)).collect()).unwrap();
        prop_assert!((u.inner(&w) - w.inner(&u).conj()).norm() < 1e-14);
        prop_assert!((u.inner(&u).re - u.norm().powi(2)).abs() < 1e-13);
    }

    #[test]
    fn squeeze_exponentials_compose(s in -0.6f64..0.6, t in -0.6f64..0.6) {
        let ops = build_operator_set(32).unwrap();
        let es = nilpotent_exp(&(&ops.k_plus * s), 2).unwrap();
        let et = nilpotent_exp(&(&ops.k_plus * t), 2).unwrap();
        let est = nilpotent_exp(&(&ops.k_plus * (s + t)), 2).unwrap();
        prop_assert!(frobenius_distance(&(&es * &et), &est, 0).unwrap() < 1e-11 * est.frobenius_norm(0));
    }
}
