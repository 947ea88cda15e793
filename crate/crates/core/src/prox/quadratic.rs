use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use ndarray::{Array1, Array2};

use super::function::{check_tau, dot, indicator, ProxFunction, FEASIBILITY_TOL};
use super::linalg::{QpFactor, SpdSolver, SymmetricEigen, SymmetricPinv};
use super::operator::{to_dense, LinearOperator};
use super::Vector;
use crate::error::{Error, Result};

/// Read-through cache of factorizations keyed by a scalar parameter.
///
/// Concurrent callers may race to fill the same key; the fill is idempotent so
/// whichever value lands first is kept.
#[derive(Debug)]
pub struct FactorCache<T> {
    entries: RwLock<HashMap<u64, Arc<T>>>,
}

impl<T> Default for FactorCache<T> {
    fn default() -> Self {
        FactorCache {
            entries: RwLock::new(HashMap::new()),
        }
    }
}

impl<T> FactorCache<T> {
    pub fn get_or_try_insert(&self, param: f64, build: impl FnOnce() -> Result<T>) -> Result<Arc<T>> {
        let key = param.to_bits();
        if let Some(hit) = self.entries.read().expect("factor cache poisoned").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let built = Arc::new(build()?);
        let mut guard = self.entries.write().expect("factor cache poisoned");
        Ok(Arc::clone(guard.entry(key).or_insert(built)))
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("factor cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Orthogonal projection onto `{x : Ax = b}` with a cached factorization of `AA*`.
#[derive(Debug, Clone)]
pub struct AffineProjector {
    matrix: Array2<f64>,
    gram: SpdSolver,
}

impl AffineProjector {
    /// Fails with `RankDeficient` when `AA*` is singular, unless `allow_pinv` selects the
    /// pseudo-inverse branch.
    pub fn new(op: &dyn LinearOperator, allow_pinv: bool) -> Result<Self> {
        Self::from_matrix(to_dense(op), allow_pinv)
    }

    pub fn from_matrix(matrix: Array2<f64>, allow_pinv: bool) -> Result<Self> {
        let gram_m = matrix.dot(&matrix.t());
        let gram = SpdSolver::new(&gram_m, allow_pinv).map_err(|_| Error::RankDeficient {
            context: format!("AA* of a {}x{} matrix is singular", matrix.nrows(), matrix.ncols()),
        })?;
        Ok(AffineProjector { matrix, gram })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    /// `(AA*)⁻¹ r` (pseudo-inverse on the opt-in branch).
    pub fn gram_solve(&self, r: &Vector) -> Vector {
        self.gram.solve(r)
    }

    /// `x − A*(AA*)⁻¹(Ax − b)`.
    pub fn project(&self, x: &Vector, b: &Vector) -> Vector {
        let r = self.matrix.dot(x) - b;
        x - &self.matrix.t().dot(&self.gram.solve(&r))
    }
}

/// Strict affine projection; see [`AffineProjector`] for the cached form.
pub fn project_affine(x: &Vector, a: &dyn LinearOperator, b: &Vector) -> Result<Vector> {
    if a.cols() != x.len() || a.rows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "projection onto {}x{} system with x of length {} and b of length {}",
            a.rows(),
            a.cols(),
            x.len(),
            b.len()
        )));
    }
    Ok(AffineProjector::new(a, false)?.project(x, b))
}

/// Second-order part of a [`QuadraticForm`].
#[derive(Debug, Clone)]
pub enum Hessian {
    Zero,
    /// `s·I`
    Scaled(f64),
    Dense(Array2<f64>),
}

#[derive(Debug, Clone)]
pub struct AffineConstraint {
    pub matrix: Array2<f64>,
    pub rhs: Vector,
}

/// `½⟨x, Qx⟩ + ⟨c, x⟩ + k`, optionally restricted to `{x : Ex = d}`.
///
/// This is the class whose proximal maps are affine; it also covers linear
/// functions and indicators of points and affine sets.
#[derive(Debug)]
pub struct QuadraticForm {
    dim: usize,
    hessian: Hessian,
    linear: Vector,
    constant: f64,
    constraint: Option<AffineConstraint>,
    allow_pinv: bool,
    prox_cache: FactorCache<QpFactor>,
    projector: OnceLock<Result<AffineProjector>>,
}

impl QuadraticForm {
    fn build(dim: usize, hessian: Hessian, linear: Vector, constant: f64) -> Self {
        QuadraticForm {
            dim,
            hessian,
            linear,
            constant,
            constraint: None,
            allow_pinv: false,
            prox_cache: FactorCache::default(),
            projector: OnceLock::new(),
        }
    }

    /// Dense `Q`, checked for symmetry and positive semidefiniteness.
    pub fn new(q: Array2<f64>, linear: Vector, constant: f64) -> Result<Self> {
        let n = linear.len();
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "Q is {}x{} but c has length {n}",
                q.nrows(),
                q.ncols()
            )));
        }
        let scale = q.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
        for i in 0..n {
            for j in (i + 1)..n {
                if (q[[i, j]] - q[[j, i]]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidParameter(format!("Q is not symmetric at ({i}, {j})")));
                }
            }
        }
        let eig = SymmetricEigen::new(&q);
        let min = eig.values.iter().fold(f64::INFINITY, |m, v| m.min(*v));
        if min < -1e-10 * scale {
            return Err(Error::InvalidParameter(format!(
                "Q is not positive semidefinite (eigenvalue {min:e})"
            )));
        }
        Ok(Self::build(n, Hessian::Dense(q), linear, constant))
    }

    pub fn zero(dim: usize) -> Self {
        Self::build(dim, Hessian::Zero, Array1::zeros(dim), 0.0)
    }

    /// `⟨c, x⟩`.
    pub fn linear(c: Vector) -> Self {
        Self::build(c.len(), Hessian::Zero, c, 0.0)
    }

    /// `(s/2)‖x − center‖²`.
    pub fn squared_distance(scale: f64, center: &Vector) -> Self {
        let linear = center * (-scale);
        let constant = 0.5 * scale * dot(center, center);
        Self::build(center.len(), Hessian::Scaled(scale), linear, constant)
    }

    /// `(s/2)‖x‖² + ⟨c, x⟩ + k`.
    pub fn scaled_identity(scale: f64, linear: Vector, constant: f64) -> Self {
        Self::build(linear.len(), Hessian::Scaled(scale), linear, constant)
    }

    /// Indicator of the single point `p`.
    pub fn point_indicator(p: &Vector) -> Self {
        let n = p.len();
        Self::zero(n)
            .with_constraint(Array2::eye(n), p.clone())
            .expect("identity constraint is always consistent")
    }

    /// Indicator of `{x : Ex = d}`.
    pub fn affine_indicator(e: Array2<f64>, d: Vector) -> Result<Self> {
        Self::zero(e.ncols()).with_constraint(e, d)
    }

    /// Restricts the form to `{x : Ex = d}`; `d` must lie in the range of `E`.
    pub fn with_constraint(mut self, e: Array2<f64>, d: Vector) -> Result<Self> {
        if e.ncols() != self.dim || e.nrows() != d.len() {
            return Err(Error::DimensionMismatch(format!(
                "constraint {}x{} with rhs {} on a {}-dim form",
                e.nrows(),
                e.ncols(),
                d.len(),
                self.dim
            )));
        }
        let gram = SymmetricPinv::new(&e.dot(&e.t()));
        let x = e.t().dot(&gram.solve(&d));
        let resid = (e.dot(&x) - &d).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let scale = 1.0 + d.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if resid > 1e-9 * scale {
            return Err(Error::InvalidParameter(format!(
                "constraint is inconsistent: d is not in the range of E (residual {resid:e})"
            )));
        }
        self.constraint = Some(AffineConstraint { matrix: e, rhs: d });
        Ok(self)
    }

    /// Opts into pseudo-inverse solves for rank-deficient systems.
    pub fn with_pseudo_inverse(mut self) -> Self {
        self.allow_pinv = true;
        self
    }

    pub fn hessian(&self) -> &Hessian {
        &self.hessian
    }

    pub fn linear_term(&self) -> &Vector {
        &self.linear
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn constraint(&self) -> Option<&AffineConstraint> {
        self.constraint.as_ref()
    }

    pub fn allows_pinv(&self) -> bool {
        self.allow_pinv
    }

    /// Dense `Q`.
    pub fn hessian_matrix(&self) -> Array2<f64> {
        match &self.hessian {
            Hessian::Zero => Array2::zeros((self.dim, self.dim)),
            Hessian::Scaled(s) => Array2::eye(self.dim) * *s,
            Hessian::Dense(q) => q.clone(),
        }
    }

    pub fn apply_hessian(&self, x: &Vector) -> Vector {
        match &self.hessian {
            Hessian::Zero => Array1::zeros(self.dim),
            Hessian::Scaled(s) => x * *s,
            Hessian::Dense(q) => q.dot(x),
        }
    }

    /// Value without the constraint indicator.
    pub fn smooth_value(&self, x: &Vector) -> f64 {
        0.5 * dot(x, &self.apply_hessian(x)) + dot(&self.linear, x) + self.constant
    }

    pub fn is_feasible(&self, x: &Vector) -> bool {
        match &self.constraint {
            None => true,
            Some(c) => {
                let ex = c.matrix.dot(x);
                let scale = 1.0
                    + ex.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
                    + c.rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                (ex - &c.rhs).iter().all(|v| v.abs() <= FEASIBILITY_TOL * scale)
            }
        }
    }

    fn projector(&self) -> Result<&AffineProjector> {
        let c = self
            .constraint
            .as_ref()
            .expect("projector requested for an unconstrained form");
        self.projector
            .get_or_init(|| {
                AffineProjector::from_matrix(c.matrix.clone(), self.allow_pinv).map_err(|_| {
                    Error::SingularSystem {
                        context: "constraint rows are linearly dependent".into(),
                    }
                })
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Number of cached prox factorizations (one per distinct τ).
    pub fn cached_factorizations(&self) -> usize {
        self.prox_cache.len()
    }

    fn prox_impl(&self, x: &Vector, tau: f64) -> Result<Vector> {
        let rhs = x - &(&self.linear * tau);
        let scalar = match &self.hessian {
            Hessian::Zero => Some(1.0),
            Hessian::Scaled(s) => Some(1.0 + tau * s),
            Hessian::Dense(_) => None,
        };
        if let Some(a) = scalar {
            let w = rhs / a;
            return match &self.constraint {
                None => Ok(w),
                Some(c) => Ok(self.projector()?.project(&w, &c.rhs)),
            };
        }
        let factor = self.prox_cache.get_or_try_insert(tau, || {
            let m = Array2::eye(self.dim) + &(self.hessian_matrix() * tau);
            QpFactor::new(&m, self.constraint.as_ref().map(|c| &c.matrix), self.allow_pinv)
        })?;
        Ok(factor.solve(&rhs, self.constraint.as_ref().map(|c| &c.rhs)))
    }
}

/// `prox_{τq}(x)` for a quadratic form.
pub fn prox_quadratic(x: &Vector, q: &QuadraticForm, tau: f64) -> Result<Vector> {
    q.prox(x, tau)
}

impl ProxFunction for QuadraticForm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &Vector) -> Option<f64> {
        if !self.is_feasible(x) {
            return Some(f64::INFINITY);
        }
        Some(self.smooth_value(x))
    }

    fn prox(&self, x: &Vector, tau: f64) -> Result<Vector> {
        check_tau(tau)?;
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "prox input has length {}, form has dim {}",
                x.len(),
                self.dim
            )));
        }
        self.prox_impl(x, tau)
    }

    fn is_affine_prox(&self) -> bool {
        true
    }

    fn conjugate_available(&self) -> bool {
        true
    }

    fn conjugate_value(&self, v: &Vector) -> Option<f64> {
        let w = v - &self.linear;
        let d = self.constraint.as_ref().map(|c| &c.rhs);
        let x = match (&self.hessian, &self.constraint) {
            (Hessian::Zero, None) => {
                let scale = 1.0 + w.len() as f64;
                return Some(indicator(w.iter().all(|t| t.abs() <= FEASIBILITY_TOL * scale)) - self.constant);
            }
            (Hessian::Zero, Some(c)) => {
                // finite iff w = Eᵀμ; then the sup over {Ex = d} equals ⟨μ, d⟩
                let gram = SymmetricPinv::new(&c.matrix.dot(&c.matrix.t()));
                let mu = gram.solve(&c.matrix.dot(&w));
                let back = c.matrix.t().dot(&mu);
                let scale = 1.0 + w.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
                let inside = (&back - &w).iter().all(|t| t.abs() <= 1e-8 * scale);
                return Some(if inside {
                    dot(&mu, &c.rhs) - self.constant
                } else {
                    f64::INFINITY
                });
            }
            (Hessian::Scaled(s), _) if *s > 0.0 => {
                let x = &w / *s;
                match &self.constraint {
                    None => x,
                    Some(c) => self.projector().ok()?.project(&x, &c.rhs),
                }
            }
            (Hessian::Scaled(_), _) => return None,
            (Hessian::Dense(q), _) => {
                let f = QpFactor::new(q, self.constraint.as_ref().map(|c| &c.matrix), false).ok()?;
                f.solve(&w, d)
            }
        };
        Some(dot(&w, &x) - 0.5 * dot(&x, &self.apply_hessian(&x)) - self.constant)
    }

    fn as_quadratic(&self) -> Option<&QuadraticForm> {
        Some(self)
    }

    fn label(&self) -> String {
        let kind = match (&self.hessian, &self.constraint) {
            (Hessian::Zero, None) => "linear",
            (Hessian::Zero, Some(_)) => "affine indicator",
            _ => "quadratic",
        };
        format!("{kind} ({} dims)", self.dim)
    }
}
