mod common;

use admeq::prox::checks::{
    adjoint_test, firm_nonexpansive_gap, midpoint_affinity_gap, moreau_gap, passes_midpoint_affinity,
};
use admeq::prox::{dot, Boundary, DenseOperator, Grad2d, L1Norm, LinearOperator, ProxFunction};
use admeq::rng::SeededRng;
use admeq::Vector;
use common::{all_functions, conjugate_pairs, operators, DIM, TAUS, TOL};
use ndarray::array;
use proptest::prelude::*;

fn vector() -> impl Strategy<Value = Vector> {
    prop::collection::vec(-5.0..5.0f64, DIM).prop_map(Vector::from)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn moreau_decomposition(x in vector()) {
        for (name, h, h_conj) in conjugate_pairs() {
            for tau in TAUS {
                let gap = moreau_gap(h.as_ref(), h_conj.as_ref(), &x, tau).unwrap();
                prop_assert!(gap <= TOL, "{name} tau={tau}: {gap:e}");
            }
        }
    }

    #[test]
    fn firm_nonexpansiveness(x in vector(), y in vector()) {
        for (name, h) in all_functions() {
            for tau in TAUS {
                let gap = firm_nonexpansive_gap(h.as_ref(), &x, &y, tau).unwrap();
                prop_assert!(gap <= TOL, "{name} tau={tau}: {gap:e}");
            }
        }
    }

    #[test]
    fn prox_optimality(x in vector(), seed in vector()) {
        for (name, h) in all_functions() {
            for tau in TAUS {
                let p = h.prox(&x, tau).unwrap();
                // a feasible competitor: any prox output lies in the domain
                let w = h.prox(&seed, 1.0).unwrap();
                let (Some(hp), Some(hw)) = (h.value(&p), h.value(&w)) else { continue };
                let lhs = hp + dot(&(&p - &x), &(&p - &x)) / (2.0 * tau);
                let rhs = hw + dot(&(&w - &x), &(&w - &x)) / (2.0 * tau);
                prop_assert!(lhs <= rhs + 1e-9 * (1.0 + rhs.abs()), "{name} tau={tau}: {lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn affine_flag_midpoint(x1 in vector(), x2 in vector()) {
        for (name, h) in all_functions() {
            if !h.is_affine_prox() {
                continue;
            }
            for tau in TAUS {
                let gap = midpoint_affinity_gap(h.as_ref(), &x1, &x2, tau).unwrap();
                prop_assert!(gap <= TOL * (1.0 + 5.0), "{name} tau={tau}: {gap:e}");
            }
        }
    }
}

#[test]
fn adjoint_tests_on_shipped_operators() {
    for (name, op) in operators() {
        let gap = adjoint_test(op.as_ref(), 128, 17);
        assert!(gap <= TOL, "{name}: {gap:e}");
    }
}

#[test]
fn materialized_apply_matches_matrix() {
    let mut rng = SeededRng::new(2);
    let a = rng.normal_matrix(5, 8);
    let op = DenseOperator::new(a.clone());
    for _ in 0..100 {
        let x = rng.normal_vector(8);
        let expect = a.dot(&x);
        let got = op.apply(&x);
        let scale = 1.0 + expect.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(admeq::prox::max_abs_diff(&got, &expect) <= 1e-12 * scale);
    }
}

#[test]
fn affinity_flags_match_empirical_test() {
    for (name, h) in all_functions() {
        let empirical = passes_midpoint_affinity(h.as_ref(), 99).unwrap();
        assert_eq!(h.is_affine_prox(), empirical, "{name}");
    }
}

#[test]
fn l1_affinity_witness() {
    let h = L1Norm::new(1);
    let gap = midpoint_affinity_gap(&h, &array![2.0], &array![0.0], 1.0).unwrap();
    assert!((gap - 0.5).abs() < 1e-15);
    assert!(!h.is_affine_prox());
}

#[test]
fn grad_adjoint_is_minus_div_exactly() {
    let mut rng = SeededRng::new(8);
    for boundary in [Boundary::Periodic, Boundary::Neumann] {
        let g = Grad2d::new(4, 6, boundary);
        let v = rng.normal_vector(48);
        assert_eq!(g.adjoint_apply(&v), -g.divergence(&v));
    }
}
