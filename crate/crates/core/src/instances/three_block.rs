use std::sync::Arc;

use crate::error::{Error, Result};
use crate::formulations::{build_three_block, ThreeBlockProblem};
use crate::prox::{DenseOperator, L1Norm, QuadraticForm};
use crate::rng::SeededRng;

/// `min κ‖x‖₁ + ½‖Cx − d‖²` split into three blocks, `C` standard normal scaled by `1/√m`.
pub fn make_three_block(m: usize, n: usize, seed: u64, kappa: f64, mu: f64) -> Result<ThreeBlockProblem> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!("empty {m}x{n} instance")));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
    }
    let mut rng = SeededRng::new(seed);
    let c = rng.normal_matrix(m, n) / (m as f64).sqrt();
    let d = rng.normal_vector(m);
    build_three_block(
        Arc::new(L1Norm { dim: n, weight: kappa }),
        Arc::new(QuadraticForm::squared_distance(1.0, &d)),
        DenseOperator::shared(c),
        mu,
    )
}
