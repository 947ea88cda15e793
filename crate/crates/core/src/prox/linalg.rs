//! Small dense factorizations used by the subproblem solvers.
//!
//! Problem sizes in this crate are modest (a few hundred unknowns at most).
//! Factorizations are delegated to `nalgebra`; callers see `ndarray` types.

use nalgebra::{DMatrix, DVector, Dyn};
use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Relative pivot / eigenvalue threshold below which a system is treated as singular.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    factor: nalgebra::Cholesky<f64, Dyn>,
}

fn to_na(m: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

fn from_na(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

impl Cholesky {
    /// Fails with `SingularSystem` when a pivot falls below `SINGULAR_TOL` relative to the
    /// largest diagonal entry.
    pub fn new(m: &Array2<f64>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "cholesky of non-square {}x{} matrix",
                n,
                m.ncols()
            )));
        }
        let scale = m.diag().iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(1.0);
        let singular = |detail: String| Error::SingularSystem {
            context: format!("cholesky {detail}"),
        };
        let factor = nalgebra::Cholesky::new(to_na(m)).ok_or_else(|| singular("failed".into()))?;
        let l = factor.l_dirty();
        for j in 0..n {
            let pivot = l[(j, j)] * l[(j, j)];
            if !(pivot > SINGULAR_TOL * scale) {
                return Err(singular(format!("pivot {j} is {pivot:e}")));
            }
        }
        Ok(Cholesky { factor })
    }

    pub fn dim(&self) -> usize {
        self.factor.l_dirty().nrows()
    }

    pub fn solve(&self, rhs: &Array1<f64>) -> Array1<f64> {
        let x = self.factor.solve(&DVector::from_iterator(rhs.len(), rhs.iter().copied()));
        Array1::from_iter(x.iter().copied())
    }

    /// Solves `M X = B`.
    pub fn solve_matrix(&self, rhs: &Array2<f64>) -> Array2<f64> {
        from_na(&self.factor.solve(&to_na(rhs)))
    }
}

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Array1<f64>,
    /// Eigenvectors stored as columns.
    pub vectors: Array2<f64>,
}

impl SymmetricEigen {
    /// The input is symmetrized first to discard round-off from the caller.
    pub fn new(m: &Array2<f64>) -> Self {
        let a = to_na(m);
        let sym = (&a + a.transpose()) * 0.5;
        let eig = nalgebra::SymmetricEigen::new(sym);
        SymmetricEigen {
            values: Array1::from_iter(eig.eigenvalues.iter().copied()),
            vectors: from_na(&eig.eigenvectors),
        }
    }

    pub fn condition_number(&self) -> f64 {
        let max = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let min = self.values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        max / min
    }
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix, applied through its eigenbasis.
#[derive(Debug, Clone)]
pub struct SymmetricPinv {
    eigen: SymmetricEigen,
    inv_values: Array1<f64>,
    rank: usize,
}

impl SymmetricPinv {
    pub fn new(m: &Array2<f64>) -> Self {
        let eigen = SymmetricEigen::new(m);
        let max = eigen.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let cutoff = SINGULAR_TOL.sqrt() * max;
        let inv_values = eigen
            .values
            .mapv(|v| if v.abs() > cutoff { 1.0 / v } else { 0.0 });
        let rank = inv_values.iter().filter(|v| **v != 0.0).count();
        SymmetricPinv {
            eigen,
            inv_values,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn solve(&self, rhs: &Array1<f64>) -> Array1<f64> {
        let coeffs = self.eigen.vectors.t().dot(rhs) * &self.inv_values;
        self.eigen.vectors.dot(&coeffs)
    }
}

/// Solver for a symmetric positive (semi)definite system.
#[derive(Debug, Clone)]
pub enum SpdSolver {
    Cholesky(Cholesky),
    Pinv(SymmetricPinv),
}

impl SpdSolver {
    /// Factors `m`; on failure falls back to the pseudo-inverse when `allow_pinv` is set.
    pub fn new(m: &Array2<f64>, allow_pinv: bool) -> Result<Self> {
        match Cholesky::new(m) {
            Ok(c) => Ok(SpdSolver::Cholesky(c)),
            Err(_) if allow_pinv => Ok(SpdSolver::Pinv(SymmetricPinv::new(m))),
            Err(e) => Err(e),
        }
    }

    pub fn solve(&self, rhs: &Array1<f64>) -> Array1<f64> {
        match self {
            SpdSolver::Cholesky(c) => c.solve(rhs),
            SpdSolver::Pinv(p) => p.solve(rhs),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, SpdSolver::Cholesky(_))
    }
}

/// Factorization for equality-constrained quadratic minimization
///
/// `min ½⟨w, M w⟩ − ⟨r, w⟩  s.t.  E w = d`
///
/// with `M` symmetric positive semidefinite. When `M` is positive definite the
/// constraint is eliminated through the Schur complement `E M⁻¹ Eᵀ`; otherwise
/// (only with `allow_pinv`) the full KKT matrix is pseudo-inverted, which
/// selects a least-norm stationary point.
#[derive(Debug, Clone)]
pub enum QpFactor {
    Unconstrained(SpdSolver),
    Schur {
        inner: Cholesky,
        e: Array2<f64>,
        m_inv_et: Array2<f64>,
        schur: SpdSolver,
    },
    Kkt {
        n: usize,
        kkt: SymmetricPinv,
    },
}

impl QpFactor {
    pub fn new(m: &Array2<f64>, e: Option<&Array2<f64>>, allow_pinv: bool) -> Result<Self> {
        let Some(e) = e else {
            return Ok(QpFactor::Unconstrained(SpdSolver::new(m, allow_pinv)?));
        };
        let n = m.nrows();
        if e.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "constraint has {} columns, quadratic has {n}",
                e.ncols()
            )));
        }
        match Cholesky::new(m) {
            Ok(inner) => {
                let m_inv_et = inner.solve_matrix(&e.t().to_owned());
                let schur_m = e.dot(&m_inv_et);
                let schur = SpdSolver::new(&schur_m, allow_pinv).map_err(|_| Error::SingularSystem {
                    context: "constraint rows are linearly dependent".into(),
                })?;
                Ok(QpFactor::Schur {
                    inner,
                    e: e.clone(),
                    m_inv_et,
                    schur,
                })
            }
            Err(err) => {
                if !allow_pinv {
                    return Err(err);
                }
                let p = e.nrows();
                let mut kkt = Array2::<f64>::zeros((n + p, n + p));
                kkt.slice_mut(ndarray::s![..n, ..n]).assign(m);
                kkt.slice_mut(ndarray::s![..n, n..]).assign(&e.t());
                kkt.slice_mut(ndarray::s![n.., ..n]).assign(e);
                Ok(QpFactor::Kkt {
                    n,
                    kkt: SymmetricPinv::new(&kkt),
                })
            }
        }
    }

    /// Returns the minimizer for linear term `r` and constraint right-hand side `d`.
    pub fn solve(&self, r: &Array1<f64>, d: Option<&Array1<f64>>) -> Array1<f64> {
        match self {
            QpFactor::Unconstrained(s) => s.solve(r),
            QpFactor::Schur {
                inner,
                e,
                m_inv_et,
                schur,
            } => {
                let w0 = inner.solve(r);
                let d = d.expect("constrained factor needs a right-hand side");
                let nu = schur.solve(&(e.dot(&w0) - d));
                w0 - m_inv_et.dot(&nu)
            }
            QpFactor::Kkt { n, kkt } => {
                let d = d.expect("constrained factor needs a right-hand side");
                let mut rhs = Array1::zeros(n + d.len());
                rhs.slice_mut(ndarray::s![..*n]).assign(r);
                rhs.slice_mut(ndarray::s![*n..]).assign(d);
                kkt.solve(&rhs).slice(ndarray::s![..*n]).to_owned()
            }
        }
    }
}
