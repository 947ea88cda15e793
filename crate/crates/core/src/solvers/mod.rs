//! Step functions for every algorithm and the shared run loop.
//!
//! Each algorithm is a pure map `SolverState → SolverState`; steppers own the
//! problem data and any cached factorizations.

mod adm;
mod driver;
mod mixed;
mod rprs;
mod state;
mod three_block;

pub use adm::{
    adm1_step, adm2_master_step, adm3_dual_step, adm4_primal_dual_step, adm5_swapped_step, AdmAlgorithm,
    AdmStepper,
};
pub use driver::{run, Trace, TraceEntry};
pub use mixed::MixedOrderStepper;
pub use rprs::{rprs_step, RprsStepper};
pub use state::{check_finite, Algorithm, Iterates, SolverConfig, SolverState, BLOWUP_NORM};
pub use three_block::{
    three_block_dual_step, three_block_primal_step, ThreeBlockDualStepper, ThreeBlockPrimalStepper,
};

use crate::error::Result;

/// One algorithm bound to its problem data.
pub trait Stepper: Send + Sync {
    fn name(&self) -> String;

    fn step(&self, st: &SolverState, cfg: &SolverConfig) -> Result<SolverState>;

    /// Constraint violation of the formulation the algorithm runs on.
    fn primal_residual(&self, st: &SolverState) -> f64;

    /// Objective of that formulation, when a value oracle exists.
    fn objective(&self, st: &SolverState) -> Option<f64>;
}
