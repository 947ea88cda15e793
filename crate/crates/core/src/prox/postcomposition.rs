use std::sync::{Arc, OnceLock};

use ndarray::{concatenate, Array2, Axis};

use super::conjugate::conjugate_of_postcomposition;
use super::function::{check_tau, FunctionRef, ProxFunction};
use super::linalg::QpFactor;
use super::operator::{to_dense, OperatorRef};
use super::quadratic::FactorCache;
use super::Vector;
use crate::error::{Error, Result};

/// `(L▷f)(s) = inf{f(x) : Lx + offset = s}`.
///
/// The prox of `λ(L▷f)` at `r` is `Lx* + offset` where `x*` jointly minimizes
/// `f(x) + (1/2λ)‖Lx + offset − r‖²`. Joint solvers exist when `L` is a
/// nonzero multiple of the identity (any `f` with a prox) or when `f` is a
/// quadratic form (possibly affine-constrained).
#[derive(Debug)]
pub struct InfimalPostcomposition {
    f: FunctionRef,
    op: OperatorRef,
    offset: Vector,
    dense: OnceLock<Array2<f64>>,
    joint_cache: FactorCache<QpFactor>,
    recover_factor: OnceLock<Result<QpFactor>>,
}

/// Output of a joint minimization: the minimizer and its image `Lx` (without the offset).
#[derive(Debug, Clone)]
pub struct JointSolution {
    pub x: Vector,
    pub image: Vector,
}

impl InfimalPostcomposition {
    pub fn new(f: FunctionRef, op: OperatorRef, offset: Vector) -> Result<Self> {
        if op.cols() != f.dim() || op.rows() != offset.len() {
            return Err(Error::DimensionMismatch(format!(
                "postcomposition of a {}-dim function by a {}x{} operator with offset of length {}",
                f.dim(),
                op.rows(),
                op.cols(),
                offset.len()
            )));
        }
        Ok(InfimalPostcomposition {
            f,
            op,
            offset,
            dense: OnceLock::new(),
            joint_cache: FactorCache::default(),
            recover_factor: OnceLock::new(),
        })
    }

    pub fn function(&self) -> &FunctionRef {
        &self.f
    }

    pub fn operator(&self) -> &OperatorRef {
        &self.op
    }

    pub fn offset(&self) -> &Vector {
        &self.offset
    }

    fn dense(&self) -> &Array2<f64> {
        self.dense.get_or_init(|| to_dense(self.op.as_ref()))
    }

    /// Whether [`InfimalPostcomposition::joint`] has a solver for this `(f, L)` pair.
    pub fn has_joint_solver(&self) -> bool {
        matches!(self.op.scalar_identity(), Some(c) if c != 0.0) || self.f.as_quadratic().is_some()
    }

    /// `argmin_x f(x) + (1/2λ)‖Lx + offset − r‖²`, returned with `Lx`.
    pub fn joint(&self, r: &Vector, lambda: f64) -> Result<JointSolution> {
        check_tau(lambda)?;
        let target = r - &self.offset;
        if let Some(c) = self.op.scalar_identity().filter(|c| *c != 0.0) {
            let x = self.f.prox(&(&target / c), lambda / (c * c))?;
            let image = self.op.apply(&x);
            return Ok(JointSolution { x, image });
        }
        let Some(q) = self.f.as_quadratic() else {
            return Err(Error::NoSubproblemSolver {
                function: self.f.label(),
                operator: self.op.label(),
            });
        };
        let l = self.dense();
        let factor = self.joint_cache.get_or_try_insert(lambda, || {
            let m = q.hessian_matrix() + &(l.t().dot(l) / lambda);
            QpFactor::new(&m, q.constraint().map(|c| &c.matrix), true)
        })?;
        let rhs = self.op.adjoint_apply(&target) / lambda - q.linear_term();
        let x = factor.solve(&rhs, q.constraint().map(|c| &c.rhs));
        let image = self.op.apply(&x);
        Ok(JointSolution { x, image })
    }

    /// Least-norm `x` in `argmin{f(x) : Lx + offset = s}`.
    pub fn recover(&self, s: &Vector) -> Result<Vector> {
        let target = s - &self.offset;
        if let Some(c) = self.op.scalar_identity().filter(|c| *c != 0.0) {
            return Ok(target / c);
        }
        let Some(q) = self.f.as_quadratic() else {
            return Err(Error::NoSubproblemSolver {
                function: self.f.label(),
                operator: self.op.label(),
            });
        };
        let l = self.dense();
        let stacked = match q.constraint() {
            None => l.clone(),
            Some(c) => concatenate(Axis(0), &[l.view(), c.matrix.view()]).expect("column counts agree"),
        };
        let factor = self
            .recover_factor
            .get_or_init(|| QpFactor::new(&q.hessian_matrix(), Some(&stacked), true))
            .as_ref()
            .map_err(Clone::clone)?;
        let d = match q.constraint() {
            None => target,
            Some(c) => concatenate(Axis(0), &[target.view(), c.rhs.view()]).expect("1-d concat"),
        };
        Ok(factor.solve(&-q.linear_term(), Some(&d)))
    }
}

impl ProxFunction for InfimalPostcomposition {
    fn dim(&self) -> usize {
        self.op.rows()
    }

    fn value(&self, s: &Vector) -> Option<f64> {
        let x = self.recover(s).ok()?;
        let back = self.op.apply(&x) + &self.offset;
        let scale = 1.0 + s.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
        if (&back - s).iter().any(|t| t.abs() > 1e-8 * scale) {
            return Some(f64::INFINITY);
        }
        self.f.value(&x)
    }

    fn prox(&self, r: &Vector, tau: f64) -> Result<Vector> {
        let sol = self.joint(r, tau)?;
        Ok(sol.image + &self.offset)
    }

    fn is_affine_prox(&self) -> bool {
        self.f.as_quadratic().is_some()
            || (self.op.scalar_identity().is_some_and(|c| c != 0.0) && self.f.is_affine_prox())
    }

    fn conjugate_available(&self) -> bool {
        self.f.conjugate_available()
    }

    fn conjugate_value(&self, v: &Vector) -> Option<f64> {
        conjugate_of_postcomposition(Arc::clone(&self.f), Arc::clone(&self.op), self.offset.clone())
            .ok()?
            .value(v)
    }

    fn label(&self) -> String {
        format!("({}) |> {}", self.op.label(), self.f.label())
    }
}
