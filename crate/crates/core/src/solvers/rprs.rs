use super::state::{expect_layout, Algorithm, Iterates, SolverConfig, SolverState};
use super::Stepper;
use crate::error::Result;
use crate::prox::{norm2, FunctionRef, ProxFunction, Vector};

/// One relaxed Peaceman-Rachford update with prox parameter `tau`:
/// `x = prox_{τf}(w)`, `w ← (1−α)w + α(2prox_{τh}(2x − w) − (2x − w))`.
///
/// `α = 1/2` is Douglas-Rachford and `α = 1` is Peaceman-Rachford.
pub fn rprs_step(f: &dyn ProxFunction, h: &dyn ProxFunction, st: &SolverState, tau: f64, alpha: f64) -> Result<SolverState> {
    let Iterates::Rprs { w, .. } = &st.iterates else {
        return Err(expect_layout(st, "rprs"));
    };
    let x = f.prox(w, tau)?;
    let r = &x * 2.0 - w;
    let y = h.prox(&r, tau)?;
    let w = w * (1.0 - alpha) + &((&y * 2.0 - &r) * alpha);
    st.next(Iterates::Rprs { w, x, y })
}

/// RPRS for `min f(x) + h(x)` where `h` is a prox-able composition such as `g∘A`.
#[derive(Debug, Clone)]
pub struct RprsStepper {
    pub f: FunctionRef,
    pub h: FunctionRef,
    /// Runs with prox parameter `1/λ` instead of `λ` (the dual side of a matched pair).
    pub reciprocal: bool,
}

impl RprsStepper {
    pub fn new(f: FunctionRef, h: FunctionRef) -> Self {
        RprsStepper { f, h, reciprocal: false }
    }

    pub fn reciprocal(f: FunctionRef, h: FunctionRef) -> Self {
        RprsStepper { f, h, reciprocal: true }
    }

    pub fn init(&self, w: Vector) -> SolverState {
        let n = w.len();
        SolverState::new(
            Algorithm::Rprs,
            Iterates::Rprs {
                w,
                x: Vector::zeros(n),
                y: Vector::zeros(n),
            },
        )
    }

    pub fn parameter(&self, cfg: &SolverConfig) -> f64 {
        if self.reciprocal {
            1.0 / cfg.lambda
        } else {
            cfg.lambda
        }
    }
}

impl Stepper for RprsStepper {
    fn name(&self) -> String {
        if self.reciprocal {
            "rprs-dual".into()
        } else {
            "rprs".into()
        }
    }

    fn step(&self, st: &SolverState, cfg: &SolverConfig) -> Result<SolverState> {
        rprs_step(self.f.as_ref(), self.h.as_ref(), st, self.parameter(cfg), cfg.alpha)
    }

    /// `‖x − y‖`, zero at a fixed point.
    fn primal_residual(&self, st: &SolverState) -> f64 {
        match &st.iterates {
            Iterates::Rprs { x, y, .. } => norm2(&(x - y)),
            _ => f64::NAN,
        }
    }

    fn objective(&self, st: &SolverState) -> Option<f64> {
        match &st.iterates {
            Iterates::Rprs { x, .. } => Some(self.f.value(x)? + self.h.value(x)?),
            _ => None,
        }
    }
}
