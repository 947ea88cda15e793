//! Composite problems `min f(x) + g(Ax)` and the three companion forms
//! `min (A▷f)(y) + g(y)`, `min f*(A*v) + g*(−v)`, `min f*(u) + (g∘A)*(−u)`.

use std::sync::Arc;

use ndarray::Array2;

use super::bpdn::BpdnInstance;
use crate::error::{Error, Result};
use crate::prox::{
    compose, Conjugate, DenseOperator, FunctionRef, InfimalPostcomposition, L1Norm, OperatorRef,
    QuadraticForm, Reflected, Vector,
};
use crate::rng::SeededRng;
use crate::solvers::RprsStepper;

#[derive(Debug, Clone)]
pub struct CompositeInstance {
    pub f: FunctionRef,
    pub g: FunctionRef,
    pub a: OperatorRef,
}

impl CompositeInstance {
    pub fn new(f: FunctionRef, g: FunctionRef, a: OperatorRef) -> Result<Self> {
        if f.dim() != a.cols() || g.dim() != a.rows() {
            return Err(Error::DimensionMismatch(format!(
                "f on R^{}, g on R^{}, A is {}x{}",
                f.dim(),
                g.dim(),
                a.rows(),
                a.cols()
            )));
        }
        Ok(CompositeInstance { f, g, a })
    }

    pub fn composed(&self) -> Result<FunctionRef> {
        compose(self.g.clone(), self.a.clone())
    }

    /// `A▷f`, whose conjugate is `f*∘A*`.
    pub fn postcomposed(&self) -> Result<Arc<InfimalPostcomposition>> {
        let pc = InfimalPostcomposition::new(self.f.clone(), self.a.clone(), Vector::zeros(self.a.rows()))?;
        if !pc.has_joint_solver() {
            return Err(Error::NoSubproblemSolver {
                function: self.f.label(),
                operator: self.a.label(),
            });
        }
        Ok(Arc::new(pc))
    }

    /// RPRS on `f + g∘A` with parameter `λ`.
    pub fn primal_stepper(&self) -> Result<RprsStepper> {
        Ok(RprsStepper::new(self.f.clone(), self.composed()?))
    }

    /// RPRS on `f*(u) + (g∘A)*(−u)` with parameter `1/λ`.
    pub fn dual_stepper(&self) -> Result<RprsStepper> {
        let h = Reflected::shared(Arc::new(Conjugate::new(self.composed()?)));
        Ok(RprsStepper::reciprocal(Arc::new(Conjugate::new(self.f.clone())), h))
    }

    /// RPRS on `(A▷f)(y) + g(y)`.
    pub fn image_stepper(&self) -> Result<RprsStepper> {
        Ok(RprsStepper::new(self.postcomposed()?, self.g.clone()))
    }

    /// RPRS on `f*(A*v) + g*(−v)` with parameter `1/λ`.
    pub fn image_dual_stepper(&self) -> Result<RprsStepper> {
        let h = Reflected::shared(Arc::new(Conjugate::new(self.g.clone())));
        Ok(RprsStepper::reciprocal(Arc::new(Conjugate::new(self.postcomposed()?)), h))
    }

    pub fn objective(&self, x: &Vector) -> Option<f64> {
        Some(self.f.value(x)? + self.g.value(&self.a.apply(x))?)
    }

    /// `(A▷f)(y) + g(y)`.
    pub fn image_objective(&self, y: &Vector) -> Option<f64> {
        use crate::prox::ProxFunction;
        Some(self.postcomposed().ok()?.value(y)? + self.g.value(y)?)
    }
}

/// `f = ‖·‖₁`, `g = (1/2α)‖· − b‖²` from a BPDN instance.
pub fn lasso_composite(inst: &BpdnInstance) -> Result<CompositeInstance> {
    CompositeInstance::new(
        Arc::new(L1Norm::new(inst.n())),
        Arc::new(QuadraticForm::squared_distance(1.0 / inst.alpha, &inst.b)),
        DenseOperator::shared(inst.a.clone()),
    )
}

/// `f = ½‖· − c‖²`, `g = κ‖·‖₁`, `A` with orthonormal rows (`m ≤ n`).
pub fn make_tight_frame_composite(m: usize, n: usize, seed: u64, kappa: f64) -> Result<CompositeInstance> {
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!("tight frame needs 0 < m <= n, got {m}x{n}")));
    }
    let mut rng = SeededRng::new(seed);
    let g = rng.normal_matrix(n, n);
    let q = nalgebra::DMatrix::from_fn(n, n, |i, j| g[[i, j]]).qr().q();
    let a = Array2::from_shape_fn((m, n), |(i, j)| q[(j, i)]);
    let c = rng.normal_vector(n);
    CompositeInstance::new(
        Arc::new(QuadraticForm::squared_distance(1.0, &c)),
        Arc::new(L1Norm { dim: m, weight: kappa }),
        DenseOperator::shared(a),
    )
}
