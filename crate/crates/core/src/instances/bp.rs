use std::sync::Arc;

use ndarray::Array2;

use super::{check_layout, sparse_signal};
use crate::error::{Error, Result};
use crate::formulations::AdmProblem;
use crate::prox::linalg::{Cholesky, SymmetricEigen};
use crate::prox::{
    dot, norm2, project_linf_ball, prox_l1, Adjoint, DenseOperator, LinfBall, OperatorRef, QuadraticForm,
    ScaledIdentity, Vector,
};
use crate::rng::SeededRng;
use crate::solvers::{Algorithm, Iterates, SolverConfig, SolverState, Stepper};

/// Largest accepted condition number of `AA*` for generated instances.
pub const MAX_GRAM_CONDITION: f64 = 1e6;

/// `min ‖u‖₁ s.t. Au = b` with `A` of full row rank.
#[derive(Debug, Clone)]
pub struct BasisPursuitInstance {
    pub a: Array2<f64>,
    pub b: Vector,
    pub op: OperatorRef,
    /// Sparse generator of `b`, when the instance was sampled.
    pub planted: Option<Vector>,
    gram: Arc<Cholesky>,
}

impl BasisPursuitInstance {
    pub fn new(a: Array2<f64>, b: Vector) -> Result<Self> {
        Self::with_operator(DenseOperator::shared(a.clone()), a, b)
    }

    /// Like [`BasisPursuitInstance::new`] with `op` standing in for `A` in every product.
    pub fn with_operator(op: OperatorRef, a: Array2<f64>, b: Vector) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch(format!("A has {} rows, b has {}", a.nrows(), b.len())));
        }
        let gram = Cholesky::new(&a.dot(&a.t())).map_err(|e| Error::RankDeficient {
            context: format!("AA* of basis pursuit: {e}"),
        })?;
        Ok(BasisPursuitInstance {
            a,
            b,
            op,
            planted: None,
            gram: Arc::new(gram),
        })
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// `(AA*)⁻¹r`.
    pub fn gram_solve(&self, r: &Vector) -> Vector {
        self.gram.solve(r)
    }

    /// `x − A*(AA*)⁻¹(Ax − b)`.
    pub fn project(&self, x: &Vector) -> Vector {
        x - &self.op.adjoint_apply(&self.gram_solve(&(self.op.apply(x) - &self.b)))
    }

    /// `min −⟨b, x⟩ + ι_{‖·‖∞≤1}(y) s.t. A*x − y = 0`.
    pub fn dual_split(&self) -> Result<AdmProblem> {
        let n = self.n();
        AdmProblem::new(
            Arc::new(QuadraticForm::linear(-&self.b)),
            Arc::new(LinfBall::unit(n)),
            Adjoint::of(self.op.clone()),
            ScaledIdentity::negated(n),
            Vector::zeros(n),
        )
    }

    pub fn primal_objective(&self, u: &Vector) -> f64 {
        u.iter().map(|v| v.abs()).sum()
    }

    pub fn dual_objective(&self, x: &Vector) -> f64 {
        dot(&self.b, x)
    }
}

/// Standard normal `A` (resampled until `cond(AA*) ≤ 1e6`) and `b = Au₀` for a sparse `u₀`.
pub fn make_bp(m: usize, n: usize, seed: u64) -> Result<BasisPursuitInstance> {
    if m == 0 || m >= n {
        return Err(Error::InvalidParameter(format!("basis pursuit needs 0 < m < n, got {m}x{n}")));
    }
    let mut rng = SeededRng::new(seed);
    for _ in 0..10 {
        let a = rng.normal_matrix(m, n);
        if SymmetricEigen::new(&a.dot(&a.t())).condition_number() > MAX_GRAM_CONDITION {
            continue;
        }
        let u0 = sparse_signal(&mut rng, n, (m / 2).max(1));
        let b = a.dot(&u0);
        let mut inst = BasisPursuitInstance::new(a, b)?;
        inst.planted = Some(u0);
        return Ok(inst);
    }
    Err(Error::Generation(format!(
        "no {m}x{n} matrix with cond(AA*) <= {MAX_GRAM_CONDITION:e} in 10 draws"
    )))
}

/// Closed-form iterations on the two basis pursuit splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BpForm {
    /// ADM on the primal split `‖v‖₁ + ι{Au=b}(u)`, `u − v = 0`; `Dual` layout `{u, v, z}`.
    Primal,
    /// ADM on the dual split; `Primal` layout with `ax = A*x`, `by = −y`.
    Dual,
    /// The dual iteration with `s = A*x` stored; `Master` layout with `t = y` (not `−y`).
    Memoized,
}

#[derive(Debug, Clone)]
pub struct BpStepper {
    pub inst: Arc<BasisPursuitInstance>,
    pub form: BpForm,
}

impl BpStepper {
    pub fn new(inst: Arc<BasisPursuitInstance>, form: BpForm) -> Self {
        BpStepper { inst, form }
    }

    pub fn zero_init(&self) -> SolverState {
        let (m, n) = (self.inst.m(), self.inst.n());
        let z = || Vector::zeros(n);
        match self.form {
            BpForm::Primal => SolverState::new(Algorithm::Alg3, Iterates::Dual { u: z(), v: z(), z: z() }),
            BpForm::Dual => self.dual_init(Vector::zeros(m), z(), z()),
            BpForm::Memoized => SolverState::new(Algorithm::Alg2, Iterates::Master { s: z(), t: z(), z: z() }),
        }
    }

    pub fn dual_init(&self, x: Vector, y: Vector, z: Vector) -> SolverState {
        let ax = self.inst.op.adjoint_apply(&x);
        let by = -&y;
        SolverState::new(Algorithm::Alg1, Iterates::Primal { x, y, z, ax, by })
    }
}

impl Stepper for BpStepper {
    fn name(&self) -> String {
        format!("bp-{:?}", self.form).to_lowercase()
    }

    fn step(&self, st: &SolverState, cfg: &SolverConfig) -> Result<SolverState> {
        let inst = &self.inst;
        let lambda = cfg.lambda;
        match (self.form, &st.iterates) {
            (BpForm::Primal, Iterates::Dual { u, z, .. }) => {
                let v = prox_l1(&(u + &(z / lambda)), 1.0 / lambda);
                let u = inst.project(&(&v - &(z / lambda)));
                let z = z + &((&u - &v) * lambda);
                st.next(Iterates::Dual { u, v, z })
            }
            (BpForm::Dual, Iterates::Primal { ax, z, .. }) => {
                let y = project_linf_ball(&(ax + &(z * lambda)));
                let rhs = inst.op.apply(&y) - &((inst.op.apply(z) - &inst.b) * lambda);
                let x = inst.gram_solve(&rhs);
                let ax = inst.op.adjoint_apply(&x);
                let z = z + &((&ax - &y) / lambda);
                let by = -&y;
                st.next(Iterates::Primal { x, y, z, ax, by })
            }
            (BpForm::Memoized, Iterates::Master { s, z, .. }) => {
                let t = project_linf_ball(&(s + &(z * lambda)));
                let rhs = inst.op.apply(&(&t - &(z * lambda))) + &(&inst.b * lambda);
                let s = inst.op.adjoint_apply(&inst.gram_solve(&rhs));
                let z = z + &((&s - &t) / lambda);
                st.next(Iterates::Master { s, t, z })
            }
            _ => Err(check_layout(st, &self.name())),
        }
    }

    fn primal_residual(&self, st: &SolverState) -> f64 {
        match &st.iterates {
            Iterates::Dual { u, v, .. } => norm2(&(u - v)),
            Iterates::Primal { ax, y, .. } => norm2(&(ax - y)),
            Iterates::Master { s, t, .. } => norm2(&(s - t)),
            _ => f64::NAN,
        }
    }

    /// `‖u‖₁` for the primal split, `−⟨b, x⟩` for the dual one.
    fn objective(&self, st: &SolverState) -> Option<f64> {
        match &st.iterates {
            Iterates::Dual { u, .. } => Some(self.inst.primal_objective(u)),
            Iterates::Primal { x, .. } => Some(-self.inst.dual_objective(x)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn two_by_one_example_solution() {
        // min |u1| + |u2| s.t. u1 + 2 u2 = 2 has its vertex optimum at (0, 1)
        let inst = Arc::new(BasisPursuitInstance::new(array![[1.0, 2.0]], array![2.0]).unwrap());
        let stepper = BpStepper::new(inst.clone(), BpForm::Primal);
        let cfg = SolverConfig::default().with_max_iter(3000);
        let trace = crate::solvers::run(&stepper, stepper.zero_init(), &cfg).unwrap();
        let Iterates::Dual { u, .. } = &trace.last().state.iterates else { unreachable!() };
        assert!((u[0]).abs() < 1e-6 && (u[1] - 1.0).abs() < 1e-6, "{u}");
        assert!((inst.primal_objective(u) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn dual_step_clamps() {
        let inst = Arc::new(BasisPursuitInstance::new(array![[1.0, 0.0]], array![1.0]).unwrap());
        let stepper = BpStepper::new(inst, BpForm::Dual);
        let st = stepper.dual_init(array![3.0], array![0.0, 0.0], array![0.0, 0.0]);
        let next = stepper.step(&st, &SolverConfig::default()).unwrap();
        let Iterates::Primal { y, .. } = &next.iterates else { unreachable!() };
        assert_eq!(y, &array![1.0, 0.0]);
    }

    #[test]
    fn generated_instance_is_consistent() {
        let inst = make_bp(5, 15, 3).unwrap();
        let u0 = inst.planted.clone().unwrap();
        assert!(norm2(&(inst.a.dot(&u0) - &inst.b)) < 1e-12);
        let p = inst.project(&Vector::zeros(15));
        assert!(norm2(&(inst.a.dot(&p) - &inst.b)) < 1e-10);
    }

    #[test]
    fn identity_constraint_pins_solution() {
        let b = array![0.5, -1.5];
        let inst = BasisPursuitInstance::new(Array2::eye(2), b.clone()).unwrap();
        assert!(norm2(&(inst.project(&array![7.0, 3.0]) - &b)) < 1e-14);
    }
}
