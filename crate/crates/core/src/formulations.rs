//! Problem forms built from ADM-ready data `min f(x) + g(y) s.t. Ax + By = b`.
//!
//! * the master problem `min F(s) + G(t) s.t. s + t = 0` with
//!   `F = A▷f` and `G = (B·−b)▷g`;
//! * the dual `min F*(−u) + G*(−v) s.t. u − v = 0`, whose prox oracles come
//!   from the master ones through the Moreau decomposition and a reflection;
//! * the three-block split `min u(s) + v(y) s.t. Cx − y = 0, μ(x − s) = 0`.

use std::sync::Arc;

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::prox::{
    dot, norm2, Conjugate, FunctionRef, InfimalPostcomposition, JointSolution,
    OperatorRef, Reflected, Vector,
};

#[derive(Debug, Clone)]
pub struct AdmProblem {
    pub f: FunctionRef,
    pub g: FunctionRef,
    pub a: OperatorRef,
    pub b_op: OperatorRef,
    pub b: Vector,
}

impl AdmProblem {
    pub fn new(f: FunctionRef, g: FunctionRef, a: OperatorRef, b_op: OperatorRef, b: Vector) -> Result<Self> {
        if a.rows() != b.len() || b_op.rows() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "A is {}x{}, B is {}x{}, b has length {}",
                a.rows(),
                a.cols(),
                b_op.rows(),
                b_op.cols(),
                b.len()
            )));
        }
        if f.dim() != a.cols() || g.dim() != b_op.cols() {
            return Err(Error::DimensionMismatch(format!(
                "f on R^{} with A on R^{}, g on R^{} with B on R^{}",
                f.dim(),
                a.cols(),
                g.dim(),
                b_op.cols()
            )));
        }
        Ok(AdmProblem { f, g, a, b_op, b })
    }

    /// Constraint dimension `m`.
    pub fn constraint_dim(&self) -> usize {
        self.b.len()
    }

    /// `Ax + By − b` from cached images.
    pub fn residual(&self, ax: &Vector, by: &Vector) -> Vector {
        (ax + by) - &self.b
    }

    pub fn objective(&self, x: &Vector, y: &Vector) -> Option<f64> {
        Some(self.f.value(x)? + self.g.value(y)?)
    }

    /// `−[f*(−A*u) + g*(−B*u) + ⟨u, b⟩]`.
    pub fn dual_objective(&self, u: &Vector) -> Option<f64> {
        let fs = self.f.conjugate_value(&-self.a.adjoint_apply(u))?;
        let gs = self.g.conjugate_value(&-self.b_op.adjoint_apply(u))?;
        Some(-(fs + gs + dot(u, &self.b)))
    }
}

/// `F(s) = inf{f(x) : Ax = s}` and `G(t) = inf{g(y) : By − b = t}`.
#[derive(Debug, Clone)]
pub struct MasterProblem {
    pub big_f: Arc<InfimalPostcomposition>,
    pub big_g: Arc<InfimalPostcomposition>,
}

impl MasterProblem {
    /// `argmin_x f(x) + (1/2λ)‖Ax − r‖²`.
    pub fn x_update(&self, r: &Vector, lambda: f64) -> Result<JointSolution> {
        self.big_f.joint(r, lambda)
    }

    /// `argmin_y g(y) + (1/2λ)‖By − b − r‖²`.
    pub fn y_update(&self, r: &Vector, lambda: f64) -> Result<JointSolution> {
        self.big_g.joint(r, lambda)
    }

    pub fn recover_x(&self, s: &Vector) -> Result<Vector> {
        self.big_f.recover(s)
    }

    pub fn recover_y(&self, t: &Vector) -> Result<Vector> {
        self.big_g.recover(t)
    }

    pub fn f_function(&self) -> FunctionRef {
        self.big_f.clone()
    }

    pub fn g_function(&self) -> FunctionRef {
        self.big_g.clone()
    }
}

/// Joint subproblem solvers are checked eagerly so that a missing solver
/// surfaces here rather than mid-run.
pub fn build_master(p: &AdmProblem) -> Result<MasterProblem> {
    let zero = Array1::zeros(p.constraint_dim());
    let big_f = InfimalPostcomposition::new(p.f.clone(), p.a.clone(), zero)?;
    let big_g = InfimalPostcomposition::new(p.g.clone(), p.b_op.clone(), -&p.b)?;
    for side in [&big_f, &big_g] {
        if !side.has_joint_solver() {
            return Err(Error::NoSubproblemSolver {
                function: side.function().label(),
                operator: side.operator().label(),
            });
        }
    }
    Ok(MasterProblem {
        big_f: Arc::new(big_f),
        big_g: Arc::new(big_g),
    })
}

/// `u ↦ F*(−u)` and `v ↦ G*(−v)`.
#[derive(Debug, Clone)]
pub struct DualProblem {
    pub fstar_neg: FunctionRef,
    pub gstar_neg: FunctionRef,
}

pub fn build_dual(p: &AdmProblem) -> Result<DualProblem> {
    Ok(dual_of_master(&build_master(p)?))
}

pub fn dual_of_master(m: &MasterProblem) -> DualProblem {
    DualProblem {
        fstar_neg: Reflected::shared(Arc::new(Conjugate::new(m.f_function()))),
        gstar_neg: Reflected::shared(Arc::new(Conjugate::new(m.g_function()))),
    }
}

/// `min u(s) + v(y) s.t. Cx − y = 0, μ(x − s) = 0`; `x` is the first block and
/// `(y, s)` the second.
#[derive(Debug, Clone)]
pub struct ThreeBlockProblem {
    pub u: FunctionRef,
    pub v: FunctionRef,
    pub c: OperatorRef,
    pub mu: f64,
}

pub fn build_three_block(u: FunctionRef, v: FunctionRef, c: OperatorRef, mu: f64) -> Result<ThreeBlockProblem> {
    if u.dim() != c.cols() || v.dim() != c.rows() {
        return Err(Error::DimensionMismatch(format!(
            "C is {}x{} but u lives on R^{} and v on R^{}",
            c.rows(),
            c.cols(),
            u.dim(),
            v.dim()
        )));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("coupling scalar must be positive, got {mu}")));
    }
    Ok(ThreeBlockProblem { u, v, c, mu })
}

impl ThreeBlockProblem {
    /// `u(x) + v(Cx)`.
    pub fn objective(&self, x: &Vector) -> Option<f64> {
        Some(self.u.value(x)? + self.v.value(&self.c.apply(x))?)
    }
}

/// `‖Ax + By − b‖ + ‖x − prox_f(x − A*u)‖ + ‖y − prox_g(y − B*u)‖`.
///
/// The second and third terms are the prox fixed-point forms of
/// `−A*u ∈ ∂f(x)` and `−B*u ∈ ∂g(y)`; all three vanish exactly at saddle points
/// of `f(x) + g(y) + ⟨u, Ax + By − b⟩`.
pub fn saddle_point_residual(p: &AdmProblem, x: &Vector, y: &Vector, u: &Vector) -> Result<f64> {
    let (primal, dual) = saddle_point_parts(p, x, y, u)?;
    Ok(primal + dual)
}

/// The primal-feasibility and dual (subgradient) parts of [`saddle_point_residual`].
pub fn saddle_point_parts(p: &AdmProblem, x: &Vector, y: &Vector, u: &Vector) -> Result<(f64, f64)> {
    let primal = norm2(&p.residual(&p.a.apply(x), &p.b_op.apply(y)));
    let px = p.f.prox(&(x - &p.a.adjoint_apply(u)), 1.0)?;
    let py = p.g.prox(&(y - &p.b_op.adjoint_apply(u)), 1.0)?;
    Ok((primal, norm2(&(x - &px)) + norm2(&(y - &py))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::{L1Norm, QuadraticForm, ScaledIdentity};
    use ndarray::array;

    fn scalar_problem() -> AdmProblem {
        // min |x| + ½(y − 2)² s.t. x − y = 0, solution x = y = 1, u = 1
        AdmProblem::new(
            Arc::new(L1Norm::new(1)),
            Arc::new(QuadraticForm::squared_distance(1.0, &array![2.0])),
            ScaledIdentity::identity(1),
            ScaledIdentity::negated(1),
            array![0.0],
        )
        .unwrap()
    }

    #[test]
    fn point_master_for_affine_indicator() {
        let p = AdmProblem::new(
            Arc::new(QuadraticForm::affine_indicator(array![[1.0, 1.0]], array![3.0]).unwrap()),
            Arc::new(QuadraticForm::zero(1)),
            crate::prox::DenseOperator::shared(array![[1.0, 1.0]]),
            ScaledIdentity::identity(1),
            array![0.0],
        )
        .unwrap();
        let m = build_master(&p).unwrap();
        assert!((m.f_function().prox(&array![-7.0], 2.0).unwrap()[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dual_prox_of_point_indicator_is_shift() {
        // F = ι{b}: F*(−u) = −⟨u, b⟩ so prox at λ of r is r + λb
        let p = AdmProblem::new(
            Arc::new(QuadraticForm::point_indicator(&array![1.0])),
            Arc::new(QuadraticForm::zero(1)),
            ScaledIdentity::identity(1),
            ScaledIdentity::identity(1),
            array![0.0],
        )
        .unwrap();
        let d = build_dual(&p).unwrap();
        let got = d.fstar_neg.prox(&array![0.0], 2.0).unwrap();
        assert!((got[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn data_term_master_prox() {
        // (1/2α)‖x − b‖² with α = λ = 1, b = 0, r = 2
        let p = AdmProblem::new(
            Arc::new(QuadraticForm::squared_distance(1.0, &array![0.0])),
            Arc::new(QuadraticForm::zero(1)),
            ScaledIdentity::identity(1),
            ScaledIdentity::identity(1),
            array![0.0],
        )
        .unwrap();
        let m = build_master(&p).unwrap();
        assert_eq!(m.f_function().prox(&array![2.0], 1.0).unwrap(), array![1.0]);
    }

    #[test]
    fn saddle_residual_vanishes_at_solution() {
        let p = scalar_problem();
        let r = saddle_point_residual(&p, &array![1.0], &array![1.0], &array![-1.0]).unwrap();
        assert!(r < 1e-14, "{r}");
        let r = saddle_point_residual(&p, &array![0.0], &array![0.0], &array![0.0]).unwrap();
        assert!(r > 0.1);
        // feasible but wrong multiplier: only the dual part is nonzero
        let (primal, dual) = saddle_point_parts(&p, &array![1.0], &array![1.0], &array![0.5]).unwrap();
        assert_eq!(primal, 0.0);
        assert!(dual > 0.1);
    }

    #[test]
    fn strong_duality_on_scalar_problem() {
        let p = scalar_problem();
        let primal = p.objective(&array![1.0], &array![1.0]).unwrap();
        let dual = p.dual_objective(&array![-1.0]).unwrap();
        assert!((primal - dual).abs() < 1e-12, "{primal} vs {dual}");
    }

    #[test]
    fn three_block_dimension_checks() {
        let c = crate::prox::DenseOperator::shared(array![[1.0, 2.0, 3.0]]);
        assert!(build_three_block(Arc::new(L1Norm::new(3)), Arc::new(L1Norm::new(1)), c.clone(), 1.0).is_ok());
        assert!(build_three_block(Arc::new(L1Norm::new(2)), Arc::new(L1Norm::new(1)), c.clone(), 1.0).is_err());
        assert!(build_three_block(Arc::new(L1Norm::new(3)), Arc::new(L1Norm::new(1)), c, 0.0).is_err());
    }
}
