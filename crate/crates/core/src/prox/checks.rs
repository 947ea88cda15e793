//! Numerical property checks for operators and proximal maps.
//!
//! Each check returns a nonnegative violation measure; callers compare it
//! against their tolerance (1e-10 on unit-scale data by default).

use super::function::{dot, max_abs_diff, norm2, ProxFunction};
use super::operator::LinearOperator;
use super::Vector;
use crate::error::Result;
use crate::rng::SeededRng;

pub const DEFAULT_TOL: f64 = 1e-10;

/// `|⟨Ax, y⟩ − ⟨x, A*y⟩| / (1 + ‖x‖‖y‖)`.
pub fn adjoint_gap(op: &dyn LinearOperator, x: &Vector, y: &Vector) -> f64 {
    let lhs = dot(&op.apply(x), y);
    let rhs = dot(x, &op.adjoint_apply(y));
    (lhs - rhs).abs() / (1.0 + norm2(x) * norm2(y))
}

/// Worst [`adjoint_gap`] over `samples` random pairs.
pub fn adjoint_test(op: &dyn LinearOperator, samples: usize, seed: u64) -> f64 {
    let mut rng = SeededRng::new(seed);
    (0..samples)
        .map(|_| {
            let x = rng.normal_vector(op.cols());
            let y = rng.normal_vector(op.rows());
            adjoint_gap(op, &x, &y)
        })
        .fold(0.0, f64::max)
}

/// `‖x − prox_{τh}(x) − τ·prox_{τ⁻¹h*}(x/τ)‖∞` for an explicitly supplied conjugate pair.
pub fn moreau_gap(h: &dyn ProxFunction, h_conj: &dyn ProxFunction, x: &Vector, tau: f64) -> Result<f64> {
    let p = h.prox(x, tau)?;
    let q = h_conj.prox(&(x / tau), 1.0 / tau)?;
    Ok(max_abs_diff(&(p + &(q * tau)), x))
}

/// Violation of firm nonexpansiveness `‖Px − Py‖² ≤ ⟨Px − Py, x − y⟩`, clipped at zero.
pub fn firm_nonexpansive_gap(h: &dyn ProxFunction, x: &Vector, y: &Vector, tau: f64) -> Result<f64> {
    let d = h.prox(x, tau)? - h.prox(y, tau)?;
    let gap = dot(&d, &d) - dot(&d, &(x - y));
    Ok(gap.max(0.0))
}

/// `‖prox((x₁+x₂)/2) − (prox(x₁) + prox(x₂))/2‖∞`.
pub fn midpoint_affinity_gap(h: &dyn ProxFunction, x1: &Vector, x2: &Vector, tau: f64) -> Result<f64> {
    let mid = h.prox(&((x1 + x2) * 0.5), tau)?;
    let avg = (h.prox(x1, tau)? + h.prox(x2, tau)?) * 0.5;
    Ok(max_abs_diff(&mid, &avg))
}

/// Empirical affinity test: eight random midpoint pairs at scale 3 and each `τ` in
/// `{0.1, 1, 10}` must agree to `1e-10·(1 + scale)`.
pub fn passes_midpoint_affinity(h: &dyn ProxFunction, seed: u64) -> Result<bool> {
    let mut rng = SeededRng::new(seed);
    for tau in [0.1, 1.0, 10.0] {
        for _ in 0..8 {
            let x1 = rng.normal_vector(h.dim()) * 3.0;
            let x2 = rng.normal_vector(h.dim()) * 3.0;
            let scale = x1.iter().chain(x2.iter()).fold(0.0_f64, |m, v| m.max(v.abs()));
            if midpoint_affinity_gap(h, &x1, &x2, tau)? > DEFAULT_TOL * (1.0 + scale) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::function::{L1Norm, LinfBall};
    use crate::prox::operator::{DenseOperator, Grad2d};
    use ndarray::array;

    #[test]
    fn shipped_operators_are_adjoint_consistent() {
        let d = DenseOperator::new(SeededRng::new(5).normal_matrix(4, 7));
        assert!(adjoint_test(&d, 100, 1) <= DEFAULT_TOL);
        let g = Grad2d::new(5, 6, Default::default());
        assert!(adjoint_test(&g, 100, 2) <= DEFAULT_TOL);
    }

    #[test]
    fn l1_box_pair_satisfies_moreau() {
        let x = array![2.5, -0.3, 0.9, -4.0];
        for tau in [0.1, 1.0, 10.0] {
            let gap = moreau_gap(&L1Norm::new(4), &LinfBall::unit(4), &x, tau).unwrap();
            assert!(gap <= DEFAULT_TOL);
        }
    }

    #[test]
    fn affinity_detection() {
        assert!(!passes_midpoint_affinity(&L1Norm::new(3), 0).unwrap());
        let q = crate::prox::quadratic::QuadraticForm::squared_distance(2.0, &array![1.0, 0.0, -1.0]);
        assert!(passes_midpoint_affinity(&q, 0).unwrap());
    }
}
