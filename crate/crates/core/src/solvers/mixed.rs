use super::adm::{adm1_step, adm5_swapped_step, AdmStepper};
use super::state::{SolverConfig, SolverState};
use super::Stepper;
use crate::error::Result;

/// Alternates the update order: Alg1 on even `k`, Alg5 on odd `k`.
///
/// Demo only; nothing is claimed about its convergence.
#[derive(Debug, Clone)]
pub struct MixedOrderStepper {
    pub inner: AdmStepper,
}

impl Stepper for MixedOrderStepper {
    fn name(&self) -> String {
        "mixed".into()
    }

    fn step(&self, st: &SolverState, cfg: &SolverConfig) -> Result<SolverState> {
        let p = &self.inner;
        if st.k.is_multiple_of(2) {
            adm1_step(&p.problem, &p.master, st, cfg)
        } else {
            adm5_swapped_step(&p.problem, &p.master, st, cfg)
        }
    }

    fn primal_residual(&self, st: &SolverState) -> f64 {
        self.inner.primal_residual(st)
    }

    fn objective(&self, st: &SolverState) -> Option<f64> {
        self.inner.objective(st)
    }
}
