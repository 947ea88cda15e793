use std::sync::Arc;

use ndarray::Array2;

use super::function::{check_tau, dot, FunctionRef, ProxFunction};
use super::operator::{to_dense, LinearOperator, OperatorRef};
use super::quadratic::QuadraticForm;
use super::Vector;
use crate::error::{Error, Result};

/// `h*`, with its prox obtained from `h`'s through the generalized Moreau
/// decomposition `prox_{τh*}(x) = x − τ·prox_{τ⁻¹h}(x/τ)`.
#[derive(Debug, Clone)]
pub struct Conjugate {
    inner: FunctionRef,
}

impl Conjugate {
    pub fn new(inner: FunctionRef) -> Self {
        Conjugate { inner }
    }

    pub fn inner(&self) -> &FunctionRef {
        &self.inner
    }
}

/// Wraps `h` as `h*`; the prox oracle is always defined, the value oracle only when `h`
/// exposes a conjugate value.
pub fn conjugate_prox(h: FunctionRef) -> FunctionRef {
    Arc::new(Conjugate::new(h))
}

impl ProxFunction for Conjugate {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &Vector) -> Option<f64> {
        self.inner.conjugate_value(x)
    }
    fn prox(&self, x: &Vector, tau: f64) -> Result<Vector> {
        check_tau(tau)?;
        let scaled = x / tau;
        let p = self.inner.prox(&scaled, 1.0 / tau)?;
        Ok(x - &(p * tau))
    }
    fn is_affine_prox(&self) -> bool {
        self.inner.is_affine_prox()
    }
    fn conjugate_available(&self) -> bool {
        true
    }
    /// `h** = h` for closed convex `h`.
    fn conjugate_value(&self, v: &Vector) -> Option<f64> {
        self.inner.value(v)
    }
    fn label(&self) -> String {
        format!("({})*", self.inner.label())
    }
}

/// `x ↦ h(−x)`.
#[derive(Debug, Clone)]
pub struct Reflected {
    inner: FunctionRef,
}

impl Reflected {
    pub fn new(inner: FunctionRef) -> Self {
        Reflected { inner }
    }

    pub fn shared(inner: FunctionRef) -> FunctionRef {
        Arc::new(Reflected { inner })
    }
}

impl ProxFunction for Reflected {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &Vector) -> Option<f64> {
        self.inner.value(&-x)
    }
    fn prox(&self, x: &Vector, tau: f64) -> Result<Vector> {
        Ok(-self.inner.prox(&-x, tau)?)
    }
    fn is_affine_prox(&self) -> bool {
        self.inner.is_affine_prox()
    }
    fn conjugate_available(&self) -> bool {
        self.inner.conjugate_available()
    }
    fn conjugate_value(&self, v: &Vector) -> Option<f64> {
        self.inner.conjugate_value(&-v)
    }
    fn label(&self) -> String {
        format!("{}(-.)", self.inner.label())
    }
}

/// `x ↦ g(c·x)` for a nonzero scalar `c`.
#[derive(Debug, Clone)]
pub struct ScaledComposition {
    inner: FunctionRef,
    scale: f64,
}

impl ProxFunction for ScaledComposition {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &Vector) -> Option<f64> {
        self.inner.value(&(x * self.scale))
    }
    fn prox(&self, x: &Vector, tau: f64) -> Result<Vector> {
        check_tau(tau)?;
        let c = self.scale;
        Ok(self.inner.prox(&(x * c), tau * c * c)? / c)
    }
    fn is_affine_prox(&self) -> bool {
        self.inner.is_affine_prox()
    }
    fn conjugate_available(&self) -> bool {
        self.inner.conjugate_available()
    }
    fn conjugate_value(&self, v: &Vector) -> Option<f64> {
        self.inner.conjugate_value(&(v / self.scale))
    }
    fn label(&self) -> String {
        format!("{}({}*.)", self.inner.label(), self.scale)
    }
}

/// `g∘A` for `A` with orthonormal rows (`AA* = I`):
/// `prox_{τ g∘A}(x) = x + A*(prox_{τg}(Ax) − Ax)`.
#[derive(Debug, Clone)]
pub struct TightFrameComposition {
    inner: FunctionRef,
    op: OperatorRef,
}

impl ProxFunction for TightFrameComposition {
    fn dim(&self) -> usize {
        self.op.cols()
    }
    fn value(&self, x: &Vector) -> Option<f64> {
        self.inner.value(&self.op.apply(x))
    }
    fn prox(&self, x: &Vector, tau: f64) -> Result<Vector> {
        let ax = self.op.apply(x);
        let p = self.inner.prox(&ax, tau)?;
        Ok(x + &self.op.adjoint_apply(&(p - &ax)))
    }
    fn is_affine_prox(&self) -> bool {
        self.inner.is_affine_prox()
    }
    fn conjugate_available(&self) -> bool {
        self.inner.conjugate_available()
    }
    /// `A*` is injective, so `(g∘A)*(v) = g*(Av)` when `v ∈ range(A*)` and `+∞` otherwise.
    fn conjugate_value(&self, v: &Vector) -> Option<f64> {
        let w = self.op.apply(v);
        let back = self.op.adjoint_apply(&w);
        let scale = 1.0 + v.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
        if (&back - v).iter().any(|t| t.abs() > 1e-9 * scale) {
            return Some(f64::INFINITY);
        }
        self.inner.conjugate_value(&w)
    }
    fn label(&self) -> String {
        format!("{} o {}", self.inner.label(), self.op.label())
    }
}

/// True when `AA*` equals the identity to `1e-10`.
fn is_tight_frame(op: &dyn LinearOperator) -> bool {
    let a = to_dense(op);
    let gram = a.dot(&a.t());
    let eye = Array2::<f64>::eye(op.rows());
    (&gram - &eye).iter().all(|v| v.abs() <= 1e-10)
}

/// Builds `g∘A` from the registered composition rules: scalar `A`, quadratic `g`
/// (pulled back through `A`), or `A` with orthonormal rows.
pub fn compose(g: FunctionRef, a: OperatorRef) -> Result<FunctionRef> {
    if a.rows() != g.dim() {
        return Err(Error::DimensionMismatch(format!(
            "composing a {}-dim function with a {}x{} operator",
            g.dim(),
            a.rows(),
            a.cols()
        )));
    }
    if let Some(c) = a.scalar_identity() {
        if c == 1.0 {
            return Ok(g);
        }
        if c != 0.0 {
            return Ok(Arc::new(ScaledComposition { inner: g, scale: c }));
        }
    }
    if let Some(q) = g.as_quadratic() {
        return Ok(Arc::new(pull_back(q, a.as_ref())?));
    }
    if is_tight_frame(a.as_ref()) {
        return Ok(Arc::new(TightFrameComposition { inner: g, op: a }));
    }
    Err(Error::NoProxForComposition {
        function: g.label(),
        operator: a.label(),
    })
}

/// `x ↦ q(Ax)` as a quadratic form in `x`.
pub fn pull_back(q: &QuadraticForm, a: &dyn LinearOperator) -> Result<QuadraticForm> {
    let m = to_dense(a);
    let hess = m.t().dot(&q.hessian_matrix().dot(&m));
    let hess = (&hess + &hess.t()) * 0.5;
    let lin = m.t().dot(q.linear_term());
    let mut out = QuadraticForm::new(hess, lin, q.constant())?;
    if let Some(c) = q.constraint() {
        out = out.with_constraint(c.matrix.dot(&m), c.rhs.clone())?;
    }
    if q.allows_pinv() {
        out = out.with_pseudo_inverse();
    }
    Ok(out)
}

/// Value oracle `v ↦ f*(A*v) + ⟨v, b⟩`, the conjugate of `s ↦ inf{f(x) : Ax + b = s}`.
#[derive(Debug, Clone)]
pub struct PostcompositionConjugate {
    f: FunctionRef,
    op: OperatorRef,
    shift: Vector,
}

impl PostcompositionConjugate {
    /// `None` only when `f` declines a particular point (e.g. a degenerate quadratic).
    pub fn value(&self, v: &Vector) -> Option<f64> {
        let inner = self.f.conjugate_value(&self.op.adjoint_apply(v))?;
        Some(inner + dot(v, &self.shift))
    }
}

pub fn conjugate_of_postcomposition(
    f: FunctionRef,
    a: OperatorRef,
    b: Vector,
) -> Result<PostcompositionConjugate> {
    if !f.conjugate_available() {
        return Err(Error::ConjugateUnavailable { function: f.label() });
    }
    if a.cols() != f.dim() || a.rows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "postcomposition of a {}-dim function by a {}x{} operator with shift of length {}",
            f.dim(),
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    Ok(PostcompositionConjugate { f, op: a, shift: b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::function::{L1Norm, LinfBall};
    use crate::prox::operator::{DenseOperator, ScaledIdentity};
    use ndarray::array;

    #[test]
    fn conjugate_of_l1_projects_onto_box() {
        let h = conjugate_prox(Arc::new(L1Norm::new(1)));
        assert_eq!(h.prox(&array![2.0], 1.0).unwrap(), array![1.0]);
    }

    #[test]
    fn half_squared_norm_is_self_conjugate() {
        let h = conjugate_prox(Arc::new(QuadraticForm::squared_distance(1.0, &array![0.0])));
        assert_eq!(h.prox(&array![4.0], 1.0).unwrap(), array![2.0]);
    }

    #[test]
    fn moreau_identity_at_unit_tau() {
        let h: FunctionRef = Arc::new(L1Norm::new(3));
        let hs = conjugate_prox(h.clone());
        let x = array![1.7, -0.2, 0.9];
        let sum = h.prox(&x, 1.0).unwrap() + hs.prox(&x, 1.0).unwrap();
        assert!((sum - &x).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn reflection_negates_through_prox() {
        let h = Reflected::new(Arc::new(QuadraticForm::linear(array![1.0])));
        // h(x) = −x, prox_{τh}(q) = q + τ
        assert_eq!(h.prox(&array![0.0], 2.0).unwrap(), array![2.0]);
    }

    #[test]
    fn postcomposition_conjugate_examples() {
        let zero_point: FunctionRef = Arc::new(QuadraticForm::point_indicator(&array![0.0]));
        let c = conjugate_of_postcomposition(zero_point, ScaledIdentity::identity(1), array![0.0]).unwrap();
        assert_eq!(c.value(&array![3.5]), Some(0.0));

        let half: FunctionRef = Arc::new(QuadraticForm::squared_distance(1.0, &array![0.0]));
        let c = conjugate_of_postcomposition(half, ScaledIdentity::identity(1), array![1.0]).unwrap();
        assert!((c.value(&array![3.0]).unwrap() - 7.5).abs() < 1e-14);

        let l1: FunctionRef = Arc::new(L1Norm::new(1));
        let c = conjugate_of_postcomposition(l1, ScaledIdentity::scaled(1, 2.0), array![0.0]).unwrap();
        assert_eq!(c.value(&array![0.4]), Some(0.0));
        assert_eq!(c.value(&array![0.6]), Some(f64::INFINITY));
    }

    #[test]
    fn postcomposition_conjugate_needs_value_oracle() {
        #[derive(Debug)]
        struct Opaque;
        impl ProxFunction for Opaque {
            fn dim(&self) -> usize {
                1
            }
            fn value(&self, _x: &Vector) -> Option<f64> {
                None
            }
            fn prox(&self, x: &Vector, _tau: f64) -> Result<Vector> {
                Ok(x.clone())
            }
            fn label(&self) -> String {
                "opaque".into()
            }
        }
        let err = conjugate_of_postcomposition(Arc::new(Opaque), ScaledIdentity::identity(1), array![0.0]);
        assert!(matches!(err, Err(Error::ConjugateUnavailable { .. })));
    }

    #[test]
    fn composition_rules() {
        let l1: FunctionRef = Arc::new(L1Norm::new(2));
        // scaled identity
        let h = compose(l1.clone(), ScaledIdentity::scaled(2, 2.0)).unwrap();
        // |2x| has prox shrinking by 2τ
        let p = h.prox(&array![3.0, 0.5], 1.0).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1] == 0.0);
        // tight frame: a permutation
        let perm = DenseOperator::shared(array![[0.0, 1.0], [1.0, 0.0]]);
        assert!(compose(l1.clone(), perm).is_ok());
        // generic matrix with a non-quadratic function has no rule
        let a = DenseOperator::shared(array![[1.0, 2.0], [0.0, 1.0]]);
        assert!(matches!(compose(l1, a.clone()), Err(Error::NoProxForComposition { .. })));
        // quadratic pulled back
        let q: FunctionRef = Arc::new(QuadraticForm::squared_distance(1.0, &array![1.0, 0.0]));
        let h = compose(q, a).unwrap();
        assert!(h.is_affine_prox());
    }

    #[test]
    fn box_conjugate_is_l1() {
        let b: FunctionRef = Arc::new(LinfBall::unit(2));
        let c = conjugate_prox(b);
        assert_eq!(c.value(&array![1.0, -2.0]), Some(3.0));
        let back = Conjugate::new(Arc::new(LinfBall::unit(2)));
        assert_eq!(back.conjugate_value(&array![0.5, 0.5]), Some(0.0));
    }
}
