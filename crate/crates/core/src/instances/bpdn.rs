use std::sync::Arc;

use ndarray::Array2;

use super::{check_layout, sparse_signal};
use crate::error::{Error, Result};
use crate::formulations::AdmProblem;
use crate::prox::linalg::Cholesky;
use crate::prox::quadratic::FactorCache;
use crate::prox::{
    dot, norm2, project_linf_ball, prox_l1, Adjoint, CountingOperator, DenseOperator, L1Norm, LinfBall,
    OperatorRef, QuadraticForm, ScaledIdentity, Vector,
};
use crate::rng::SeededRng;
use crate::solvers::{Algorithm, Iterates, SolverConfig, SolverState, Stepper};

/// `min ‖u‖₁ + (1/2α)‖Au − b‖²`.
#[derive(Debug)]
pub struct BpdnInstance {
    pub a: Array2<f64>,
    pub b: Vector,
    pub alpha: f64,
    pub op: OperatorRef,
    /// `A*A = I`, verified to 1e-10 when set.
    pub orthonormal: bool,
    /// Present when the instance was built with [`BpdnInstance::counted`].
    pub counter: Option<Arc<CountingOperator>>,
    outer: FactorCache<Cholesky>,
    inner: FactorCache<Cholesky>,
}

impl BpdnInstance {
    pub fn new(a: Array2<f64>, b: Vector, alpha: f64) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch(format!("A has {} rows, b has {}", a.nrows(), b.len())));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        let op = DenseOperator::shared(a.clone());
        Ok(BpdnInstance {
            a,
            b,
            alpha,
            op,
            orthonormal: false,
            counter: None,
            outer: FactorCache::default(),
            inner: FactorCache::default(),
        })
    }

    /// Marks `A*A = I`; fails when the columns are not orthonormal to 1e-10.
    pub fn with_orthonormal(mut self) -> Result<Self> {
        let gram = self.a.t().dot(&self.a);
        let eye = Array2::<f64>::eye(gram.nrows());
        let gap = (&gram - &eye).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if gap > 1e-10 {
            return Err(Error::InvalidParameter(format!("A*A differs from I by {gap:e}")));
        }
        self.orthonormal = true;
        Ok(self)
    }

    /// Routes every product with `A` or `A*` through a call counter.
    pub fn counted(mut self) -> Self {
        let counter = CountingOperator::new(self.op.clone());
        self.op = counter.clone();
        self.counter = Some(counter);
        self
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn objective(&self, u: &Vector) -> f64 {
        let r = self.a.dot(u) - &self.b;
        u.iter().map(|v| v.abs()).sum::<f64>() + dot(&r, &r) / (2.0 * self.alpha)
    }

    /// `⟨b, x⟩ − (α/2)‖x‖²` when `‖A*x‖∞ ≤ 1`.
    pub fn dual_value(&self, x: &Vector) -> f64 {
        dot(&self.b, x) - 0.5 * self.alpha * dot(x, x)
    }

    /// `(AA* + αλI)⁻¹`, one factor per `λ`.
    fn outer_factor(&self, lambda: f64) -> Result<Arc<Cholesky>> {
        self.outer.get_or_try_insert(lambda, || {
            let m = self.a.dot(&self.a.t()) + Array2::<f64>::eye(self.m()) * (self.alpha * lambda);
            Cholesky::new(&m)
        })
    }

    /// `(A*A + αλI)⁻¹`, one factor per `λ`.
    fn inner_factor(&self, lambda: f64) -> Result<Arc<Cholesky>> {
        self.inner.get_or_try_insert(lambda, || {
            let m = self.a.t().dot(&self.a) + Array2::<f64>::eye(self.n()) * (self.alpha * lambda);
            Cholesky::new(&m)
        })
    }

    /// `min −⟨b, x⟩ + (α/2)‖x‖² + ι_{‖·‖∞≤1}(y) s.t. A*x − y = 0`.
    pub fn dual_split(&self) -> Result<AdmProblem> {
        let n = self.n();
        AdmProblem::new(
            Arc::new(QuadraticForm::scaled_identity(self.alpha, -&self.b, 0.0)),
            Arc::new(LinfBall::unit(n)),
            Adjoint::of(self.op.clone()),
            ScaledIdentity::negated(n),
            Vector::zeros(n),
        )
    }

    /// `data_term`: `(1/2α)‖Ay − b‖²` as a quadratic form in `y`.
    pub fn data_term(&self) -> Result<QuadraticForm> {
        let q = self.a.t().dot(&self.a) / self.alpha;
        let c = self.a.t().dot(&self.b) / (-self.alpha);
        QuadraticForm::new(q, c, dot(&self.b, &self.b) / (2.0 * self.alpha))
    }

    /// `min ‖x‖₁ + (1/2α)‖Ay − b‖² s.t. x − y = 0`; `g` is quadratic so its master has an affine prox.
    pub fn primal_split(&self) -> Result<AdmProblem> {
        let n = self.n();
        AdmProblem::new(
            Arc::new(L1Norm::new(n)),
            Arc::new(self.data_term()?),
            ScaledIdentity::identity(n),
            ScaledIdentity::negated(n),
            Vector::zeros(n),
        )
    }

    /// Same split with the roles swapped, so that `g = ‖·‖₁` (non-affine prox).
    pub fn swapped_split(&self) -> Result<AdmProblem> {
        let n = self.n();
        AdmProblem::new(
            Arc::new(self.data_term()?),
            Arc::new(L1Norm::new(n)),
            ScaledIdentity::identity(n),
            ScaledIdentity::negated(n),
            Vector::zeros(n),
        )
    }
}

/// Standard normal `A` and `b = Au₀ + 0.01·noise` for a sparse `u₀`.
pub fn make_bpdn(m: usize, n: usize, seed: u64, alpha: f64) -> Result<BpdnInstance> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!("empty {m}x{n} instance")));
    }
    let mut rng = SeededRng::new(seed);
    let a = rng.normal_matrix(m, n);
    let u0 = sparse_signal(&mut rng, n, (m / 2).max(1));
    let b = a.dot(&u0) + &(rng.normal_vector(m) * 0.01);
    BpdnInstance::new(a, b, alpha)
}

/// Square instance with `A` the orthogonal factor of a QR decomposition of a normal matrix.
pub fn make_bpdn_orthonormal(n: usize, seed: u64, alpha: f64) -> Result<BpdnInstance> {
    let mut rng = SeededRng::new(seed);
    let g = rng.normal_matrix(n, n);
    let qr = nalgebra::DMatrix::from_fn(n, n, |i, j| g[[i, j]]).qr();
    let q = qr.q();
    let a = Array2::from_shape_fn((n, n), |(i, j)| q[(i, j)]);
    let u0 = sparse_signal(&mut rng, n, (n / 3).max(1));
    let b = a.dot(&u0) + &(rng.normal_vector(n) * 0.01);
    BpdnInstance::new(a, b, alpha)?.with_orthonormal()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BpdnForm {
    /// ADM on the dual split; `Primal` layout with `ax = A*x`, `by = −y`.
    Dual,
    /// Dual iteration with `s = A*x` stored; `Master` layout with `t = y`.
    Memoized,
    /// Memoized iteration using `A*A = I`: no operator products inside the loop.
    Orthonormal,
    /// ADM on `‖v‖₁ + (1/2α)‖Au − b‖²`, `u − v = 0`; `Dual` layout `{u, v, z}`.
    Primal,
}

#[derive(Debug, Clone)]
pub struct BpdnStepper {
    pub inst: Arc<BpdnInstance>,
    pub form: BpdnForm,
    /// `A*b`, computed once.
    atb: Vector,
}

impl BpdnStepper {
    pub fn new(inst: Arc<BpdnInstance>, form: BpdnForm) -> Result<Self> {
        if form == BpdnForm::Orthonormal && !inst.orthonormal {
            return Err(Error::Incompatible("orthonormal shortcut needs A*A = I".into()));
        }
        let atb = inst.op.adjoint_apply(&inst.b);
        Ok(BpdnStepper { inst, form, atb })
    }

    pub fn zero_init(&self) -> SolverState {
        let (m, n) = (self.inst.m(), self.inst.n());
        let z = || Vector::zeros(n);
        match self.form {
            BpdnForm::Primal => SolverState::new(Algorithm::Alg3, Iterates::Dual { u: z(), v: z(), z: z() }),
            BpdnForm::Dual => self.dual_init(Vector::zeros(m), z(), z()),
            BpdnForm::Memoized | BpdnForm::Orthonormal => {
                SolverState::new(Algorithm::Alg2, Iterates::Master { s: z(), t: z(), z: z() })
            }
        }
    }

    pub fn dual_init(&self, x: Vector, y: Vector, z: Vector) -> SolverState {
        let ax = self.inst.op.adjoint_apply(&x);
        let by = -&y;
        SolverState::new(Algorithm::Alg1, Iterates::Primal { x, y, z, ax, by })
    }
}

impl Stepper for BpdnStepper {
    fn name(&self) -> String {
        format!("bpdn-{:?}", self.form).to_lowercase()
    }

    fn step(&self, st: &SolverState, cfg: &SolverConfig) -> Result<SolverState> {
        let inst = &self.inst;
        let (lambda, alpha) = (cfg.lambda, inst.alpha);
        match (self.form, &st.iterates) {
            (BpdnForm::Dual, Iterates::Primal { ax, z, .. }) => {
                let y = project_linf_ball(&(ax + &(z * lambda)));
                let rhs = inst.op.apply(&y) - &((inst.op.apply(z) - &inst.b) * lambda);
                let x = inst.outer_factor(lambda)?.solve(&rhs);
                let ax = inst.op.adjoint_apply(&x);
                let z = z + &((&ax - &y) / lambda);
                let by = -&y;
                st.next(Iterates::Primal { x, y, z, ax, by })
            }
            (BpdnForm::Memoized, Iterates::Master { s, z, .. }) => {
                let t = project_linf_ball(&(s + &(z * lambda)));
                let rhs = inst.op.apply(&(&t - &(z * lambda))) + &(&inst.b * lambda);
                let s = inst.op.adjoint_apply(&inst.outer_factor(lambda)?.solve(&rhs));
                let z = z + &((&s - &t) / lambda);
                st.next(Iterates::Master { s, t, z })
            }
            (BpdnForm::Orthonormal, Iterates::Master { s, z, .. }) => {
                let t = project_linf_ball(&(s + &(z * lambda)));
                let s = (&t - &(z * lambda) + &(&self.atb * lambda)) / (alpha * lambda + 1.0);
                let z = z + &((&s - &t) / lambda);
                st.next(Iterates::Master { s, t, z })
            }
            (BpdnForm::Primal, Iterates::Dual { u, z, .. }) => {
                let v = prox_l1(&(u + &(z / lambda)), 1.0 / lambda);
                let rhs = &self.atb + &(&v * (alpha * lambda)) - &(z * alpha);
                let u = inst.inner_factor(lambda)?.solve(&rhs);
                let z = z + &((&u - &v) * lambda);
                st.next(Iterates::Dual { u, v, z })
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

    fn objective(&self, st: &SolverState) -> Option<f64> {
        match &st.iterates {
            Iterates::Dual { u, .. } => Some(self.inst.objective(u)),
            Iterates::Primal { x, .. } => Some(-self.inst.dual_value(x)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn identity_instance_is_soft_threshold() {
        let inst = Arc::new(BpdnInstance::new(Array2::eye(2), array![2.0, 0.2], 1.0).unwrap());
        let stepper = BpdnStepper::new(inst, BpdnForm::Primal).unwrap();
        let cfg = SolverConfig::default().with_max_iter(500);
        let trace = crate::solvers::run(&stepper, stepper.zero_init(), &cfg).unwrap();
        let Iterates::Dual { u, .. } = &trace.last().state.iterates else { unreachable!() };
        assert!((u[0] - 1.0).abs() < 1e-9 && u[1].abs() < 1e-9, "{u}");
    }

    #[test]
    fn one_dimensional_dual_step_by_hand() {
        // A = 1, b = 2, α = λ = 1 from zero: y = P(0) = 0, x = (1 + 1)⁻¹(0 − (0 − 2)) = 1, z = (1 − 0)/1
        let inst = Arc::new(BpdnInstance::new(array![[1.0]], array![2.0], 1.0).unwrap());
        let stepper = BpdnStepper::new(inst, BpdnForm::Dual).unwrap();
        let next = stepper.step(&stepper.zero_init(), &SolverConfig::default()).unwrap();
        let Iterates::Primal { x, y, z, .. } = &next.iterates else { unreachable!() };
        assert!((x[0] - 1.0).abs() < 1e-14 && y[0] == 0.0 && (z[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn orthonormal_generator_checks_columns() {
        let inst = make_bpdn_orthonormal(6, 1, 0.5).unwrap();
        assert!(inst.orthonormal);
        assert!(BpdnInstance::new(array![[2.0]], array![1.0], 1.0).unwrap().with_orthonormal().is_err());
    }

    #[test]
    fn shortcut_refuses_general_matrix() {
        let inst = Arc::new(make_bpdn(3, 5, 2, 1.0).unwrap());
        assert!(BpdnStepper::new(inst, BpdnForm::Orthonormal).is_err());
    }
}
