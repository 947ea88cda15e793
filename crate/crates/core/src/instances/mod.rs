//! Problem families with closed-form subproblem solvers, their generators and image readers.
//!
//! Generators draw from [`crate::rng::SeededRng`]; the same seed gives the same
//! instance on every platform.

mod bp;
mod bpdn;
mod composite;
mod image;
mod spec;
mod three_block;
mod tv;

pub use bp::{make_bp, BasisPursuitInstance, BpForm, BpStepper, MAX_GRAM_CONDITION};
pub use bpdn::{make_bpdn, make_bpdn_orthonormal, BpdnForm, BpdnInstance, BpdnStepper};
pub use composite::{lasso_composite, make_tight_frame_composite, CompositeInstance};
pub use image::{read_csv_grid, read_pgm};
pub use spec::{Family, Instance, InstanceSpec};
pub use three_block::make_three_block;
pub use tv::{make_tv, tv_steppers, two_block_image, TvAlgorithm, TvInstance, TvStepper, XSolve};

use crate::error::Error;
use crate::prox::Vector;
use crate::rng::SeededRng;
use crate::solvers::SolverState;

/// `k` standard normal entries at distinct random positions.
pub(crate) fn sparse_signal(rng: &mut SeededRng, n: usize, k: usize) -> Vector {
    let mut u = Vector::zeros(n);
    let mut placed = 0;
    while placed < k.min(n) {
        let i = rng.index(n);
        if u[i] == 0.0 {
            u[i] = rng.normal();
            placed += 1;
        }
    }
    u
}

pub(crate) fn check_layout(st: &SolverState, stepper: &str) -> Error {
    Error::Incompatible(format!("{stepper} cannot step a {:?} state", st.algorithm))
}
