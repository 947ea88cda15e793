use std::sync::{Arc, OnceLock};

use ndarray::Array2;

use super::state::{expect_layout, Algorithm, Iterates, SolverConfig, SolverState};
use super::Stepper;
use crate::error::{Error, Result};
use crate::formulations::ThreeBlockProblem;
use crate::prox::linalg::Cholesky;
use crate::prox::operator::to_dense;
use crate::prox::{norm2, Conjugate, FunctionRef, Vector};

fn cached_factor(cell: &OnceLock<Result<Cholesky>>, build: impl FnOnce() -> Array2<f64>) -> Result<&Cholesky> {
    cell.get_or_init(|| Cholesky::new(&build()))
        .as_ref()
        .map_err(|e| Error::SingularSystem {
            context: format!("three-block normal equations: {e}"),
        })
}

/// Primal three-block ADM: `x` from the normal equations `(C*C + μ²I)x = …`, then the
/// decoupled `s` and `y` proxes, then both multipliers.
#[derive(Debug)]
pub struct ThreeBlockPrimalStepper {
    pub problem: ThreeBlockProblem,
    factor: OnceLock<Result<Cholesky>>,
}

impl ThreeBlockPrimalStepper {
    pub fn new(problem: ThreeBlockProblem) -> Self {
        ThreeBlockPrimalStepper {
            problem,
            factor: OnceLock::new(),
        }
    }

    fn factor(&self) -> Result<&Cholesky> {
        cached_factor(&self.factor, || {
            let c = to_dense(self.problem.c.as_ref());
            let mu2 = self.problem.mu * self.problem.mu;
            c.t().dot(&c) + Array2::<f64>::eye(c.ncols()) * mu2
        })
    }

    /// `argmin u(s) + (1/2λ)‖μx − μs + λz_s‖²`.
    pub fn s_update(&self, x: &Vector, z_s: &Vector, lambda: f64) -> Result<Vector> {
        let mu = self.problem.mu;
        self.problem.u.prox(&(x + &(z_s * (lambda / mu))), lambda / (mu * mu))
    }

    /// `argmin v(y) + (1/2λ)‖Cx − y + λz_y‖²`.
    pub fn y_update(&self, cx: &Vector, z_y: &Vector, lambda: f64) -> Result<Vector> {
        self.problem.v.prox(&(cx + &(z_y * lambda)), lambda)
    }

    pub fn init(&self, x: Vector, s: Vector, y: Vector, z_s: Vector, z_y: Vector) -> SolverState {
        let cx = self.problem.c.apply(&x);
        SolverState::new(Algorithm::ThreeBlockPrimal, Iterates::ThreeBlockPrimal { x, s, y, z_s, z_y, cx })
    }

    pub fn zero_init(&self) -> SolverState {
        let (m, n) = (self.problem.c.rows(), self.problem.c.cols());
        self.init(Vector::zeros(n), Vector::zeros(n), Vector::zeros(m), Vector::zeros(n), Vector::zeros(m))
    }
}

pub fn three_block_primal_step(
    stepper: &ThreeBlockPrimalStepper,
    st: &SolverState,
    cfg: &SolverConfig,
) -> Result<SolverState> {
    let Iterates::ThreeBlockPrimal { s, y, z_s, z_y, .. } = &st.iterates else {
        return Err(expect_layout(st, "three-block primal"));
    };
    let (lambda, mu) = (cfg.lambda, stepper.problem.mu);
    let c = &stepper.problem.c;
    let rhs = (s * (mu * mu) - &(z_s * (mu * lambda))) + &c.adjoint_apply(&(y - &(z_y * lambda)));
    let x = stepper.factor()?.solve(&rhs);
    let cx = c.apply(&x);
    let s = stepper.s_update(&x, z_s, lambda)?;
    let y = stepper.y_update(&cx, z_y, lambda)?;
    let z_s = z_s + &((&x - &s) * (mu / lambda));
    let z_y = z_y + &((&cx - &y) / lambda);
    st.next(Iterates::ThreeBlockPrimal { x, s, y, z_s, z_y, cx })
}

impl Stepper for ThreeBlockPrimalStepper {
    fn name(&self) -> String {
        "tb-primal".into()
    }
    fn step(&self, st: &SolverState, cfg: &SolverConfig) -> Result<SolverState> {
        three_block_primal_step(self, st, cfg)
    }
    fn primal_residual(&self, st: &SolverState) -> f64 {
        match &st.iterates {
            Iterates::ThreeBlockPrimal { x, s, y, cx, .. } => {
                let a = norm2(&((x - s) * self.problem.mu));
                let b = norm2(&(cx - y));
                a.hypot(b)
            }
            _ => f64::NAN,
        }
    }
    fn objective(&self, st: &SolverState) -> Option<f64> {
        match &st.iterates {
            Iterates::ThreeBlockPrimal { s, y, .. } => Some(self.problem.u.value(s)? + self.problem.v.value(y)?),
            _ => None,
        }
    }
}

/// Dual three-block ADM on `min u*(u) + v*(t) s.t. C*v + u = 0, v − t = 0`.
#[derive(Debug)]
pub struct ThreeBlockDualStepper {
    pub problem: ThreeBlockProblem,
    u_conj: FunctionRef,
    v_conj: FunctionRef,
    factor: OnceLock<Result<Cholesky>>,
}

impl ThreeBlockDualStepper {
    pub fn new(problem: ThreeBlockProblem) -> Self {
        let u_conj: FunctionRef = Arc::new(Conjugate::new(problem.u.clone()));
        let v_conj: FunctionRef = Arc::new(Conjugate::new(problem.v.clone()));
        ThreeBlockDualStepper {
            problem,
            u_conj,
            v_conj,
            factor: OnceLock::new(),
        }
    }

    fn factor(&self) -> Result<&Cholesky> {
        cached_factor(&self.factor, || {
            let c = to_dense(self.problem.c.as_ref());
            c.dot(&c.t()) + Array2::<f64>::eye(c.nrows())
        })
    }

    pub fn init(&self, v: Vector, u: Vector, t: Vector, z_u: Vector, z_t: Vector) -> SolverState {
        SolverState::new(Algorithm::ThreeBlockDual, Iterates::ThreeBlockDual { v, u, t, z_u, z_t })
    }

    pub fn zero_init(&self) -> SolverState {
        let (m, n) = (self.problem.c.rows(), self.problem.c.cols());
        self.init(Vector::zeros(m), Vector::zeros(n), Vector::zeros(m), Vector::zeros(n), Vector::zeros(m))
    }
}

pub fn three_block_dual_step(
    stepper: &ThreeBlockDualStepper,
    st: &SolverState,
    cfg: &SolverConfig,
) -> Result<SolverState> {
    let Iterates::ThreeBlockDual { u, t, z_u, z_t, .. } = &st.iterates else {
        return Err(expect_layout(st, "three-block dual"));
    };
    let lambda = cfg.lambda;
    let c = &stepper.problem.c;
    let rhs = (t - &(z_t / lambda)) - &c.apply(&(u + &(z_u / lambda)));
    let v = stepper.factor()?.solve(&rhs);
    let ctv = c.adjoint_apply(&v);
    let u = stepper.u_conj.prox(&(-&ctv - &(z_u / lambda)), 1.0 / lambda)?;
    let t = stepper.v_conj.prox(&(&v + &(z_t / lambda)), 1.0 / lambda)?;
    let z_u = z_u + &((&ctv + &u) * lambda);
    let z_t = z_t + &((&v - &t) * lambda);
    st.next(Iterates::ThreeBlockDual { v, u, t, z_u, z_t })
}

impl Stepper for ThreeBlockDualStepper {
    fn name(&self) -> String {
        "tb-dual".into()
    }
    fn step(&self, st: &SolverState, cfg: &SolverConfig) -> Result<SolverState> {
        three_block_dual_step(self, st, cfg)
    }
    fn primal_residual(&self, st: &SolverState) -> f64 {
        match &st.iterates {
            Iterates::ThreeBlockDual { v, u, t, .. } => {
                let a = norm2(&(self.problem.c.adjoint_apply(v) + u));
                let b = norm2(&(v - t));
                a.hypot(b)
            }
            _ => f64::NAN,
        }
    }
    fn objective(&self, st: &SolverState) -> Option<f64> {
        match &st.iterates {
            Iterates::ThreeBlockDual { u, t, .. } => Some(self.u_conj.value(u)? + self.v_conj.value(t)?),
            _ => None,
        }
    }
}
