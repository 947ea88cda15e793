//! Operator-splitting solvers for problems of the form
//! `min f(x) + g(y)  s.t.  Ax + By = b`, together with a lockstep harness
//! that checks the exact per-iteration maps between equivalent runs
//! (primal vs. dual ADM, ADM vs. its primal-dual form, swapped update
//! orders, and relaxed Peaceman-Rachford on primal and dual problems).
//!
//! The crate is organised bottom-up:
//!
//! * [`prox`]: linear operators, proximal functions, conjugates, dense
//!   factorizations.
//! * [`formulations`]: master, dual, saddle-point and three-block forms built
//!   from an [`formulations::AdmProblem`].
//! * [`solvers`]: one step function per algorithm and the shared driver.
//! * [`instances`]: basis pursuit, BPDN, TV denoising and friends with their
//!   closed-form steppers.
//! * [`equivalence`]: iterate maps and the lockstep runner.

pub mod equivalence;
pub mod error;
pub mod formulations;
pub mod instances;
pub mod prox;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use prox::Vector;
