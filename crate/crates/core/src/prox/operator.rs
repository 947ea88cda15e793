use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use ndarray::{Array1, Array2};

use super::Vector;

/// A finite-dimensional linear map `ℝᶜᵒˡˢ → ℝʳᵒʷˢ` together with its adjoint.
pub trait LinearOperator: Send + Sync + fmt::Debug {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn apply(&self, x: &Vector) -> Vector;
    fn adjoint_apply(&self, y: &Vector) -> Vector;

    /// Dense matrix, when the operator stores one.
    fn materialization(&self) -> Option<&Array2<f64>> {
        None
    }

    /// `Some(c)` when the operator is `c·I`.
    fn scalar_identity(&self) -> Option<f64> {
        None
    }

    fn label(&self) -> String {
        format!("{}x{} operator", self.rows(), self.cols())
    }
}

pub type OperatorRef = Arc<dyn LinearOperator>;

/// Builds the dense matrix of `op`, probing unit vectors when it has no stored matrix.
pub fn to_dense(op: &dyn LinearOperator) -> Array2<f64> {
    if let Some(m) = op.materialization() {
        return m.clone();
    }
    let (rows, cols) = (op.rows(), op.cols());
    let mut out = Array2::zeros((rows, cols));
    let mut e = Array1::zeros(cols);
    for j in 0..cols {
        e[j] = 1.0;
        out.column_mut(j).assign(&op.apply(&e));
        e[j] = 0.0;
    }
    out
}

#[derive(Debug, Clone)]
pub struct DenseOperator {
    matrix: Array2<f64>,
}

impl DenseOperator {
    pub fn new(matrix: Array2<f64>) -> Self {
        DenseOperator { matrix }
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn shared(matrix: Array2<f64>) -> OperatorRef {
        Arc::new(Self::new(matrix))
    }
}

impl LinearOperator for DenseOperator {
    fn rows(&self) -> usize {
        self.matrix.nrows()
    }
    fn cols(&self) -> usize {
        self.matrix.ncols()
    }
    fn apply(&self, x: &Vector) -> Vector {
        self.matrix.dot(x)
    }
    fn adjoint_apply(&self, y: &Vector) -> Vector {
        self.matrix.t().dot(y)
    }
    fn materialization(&self) -> Option<&Array2<f64>> {
        Some(&self.matrix)
    }
    fn label(&self) -> String {
        format!("dense {}x{}", self.rows(), self.cols())
    }
}

/// `c·I` on `ℝⁿ`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledIdentity {
    pub dim: usize,
    pub scale: f64,
}

impl ScaledIdentity {
    pub fn identity(dim: usize) -> OperatorRef {
        Arc::new(ScaledIdentity { dim, scale: 1.0 })
    }

    pub fn negated(dim: usize) -> OperatorRef {
        Arc::new(ScaledIdentity { dim, scale: -1.0 })
    }

    pub fn scaled(dim: usize, scale: f64) -> OperatorRef {
        Arc::new(ScaledIdentity { dim, scale })
    }
}

impl LinearOperator for ScaledIdentity {
    fn rows(&self) -> usize {
        self.dim
    }
    fn cols(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &Vector) -> Vector {
        if self.scale == 1.0 {
            x.clone()
        } else if self.scale == -1.0 {
            -x
        } else {
            x * self.scale
        }
    }
    fn adjoint_apply(&self, y: &Vector) -> Vector {
        self.apply(y)
    }
    fn scalar_identity(&self) -> Option<f64> {
        Some(self.scale)
    }
    fn label(&self) -> String {
        if self.scale == 1.0 {
            format!("I_{}", self.dim)
        } else {
            format!("{}·I_{}", self.scale, self.dim)
        }
    }
}

/// The adjoint `L*` of another operator, sharing its storage.
#[derive(Debug, Clone)]
pub struct Adjoint {
    inner: OperatorRef,
    transposed: Option<Array2<f64>>,
}

impl Adjoint {
    pub fn of(inner: OperatorRef) -> OperatorRef {
        let transposed = inner.materialization().map(|m| m.t().to_owned());
        Arc::new(Adjoint { inner, transposed })
    }
}

impl LinearOperator for Adjoint {
    fn rows(&self) -> usize {
        self.inner.cols()
    }
    fn cols(&self) -> usize {
        self.inner.rows()
    }
    fn apply(&self, x: &Vector) -> Vector {
        self.inner.adjoint_apply(x)
    }
    fn adjoint_apply(&self, y: &Vector) -> Vector {
        self.inner.apply(y)
    }
    fn materialization(&self) -> Option<&Array2<f64>> {
        self.transposed.as_ref()
    }
    fn scalar_identity(&self) -> Option<f64> {
        self.inner.scalar_identity()
    }
    fn label(&self) -> String {
        format!("({})*", self.inner.label())
    }
}

/// Boundary rule for the forward-difference gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Wrap around; the gradient is translation invariant and diagonalized by the DFT.
    #[default]
    Periodic,
    /// Replicate boundary: differences leaving the grid are zero.
    Neumann,
}

/// Forward-difference gradient on an `height × width` grid.
///
/// Pixels are stored row-major (`i * width + j`). The output stacks one
/// 2-vector per pixel: entry `2p` is the vertical difference
/// `x[i+1, j] − x[i, j]`, entry `2p + 1` the horizontal difference
/// `x[i, j+1] − x[i, j]`.
#[derive(Debug, Clone, Copy)]
pub struct Grad2d {
    pub height: usize,
    pub width: usize,
    pub boundary: Boundary,
}

impl Grad2d {
    pub fn new(height: usize, width: usize, boundary: Boundary) -> Self {
        Grad2d {
            height,
            width,
            boundary,
        }
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    /// Neighbour of pixel `(i, j)` in direction `d` (0 = down, 1 = right), if any.
    fn neighbour(&self, i: usize, j: usize, d: usize) -> Option<usize> {
        let (h, w) = (self.height, self.width);
        let (ni, nj) = if d == 0 { (i + 1, j) } else { (i, j + 1) };
        match self.boundary {
            Boundary::Periodic => Some((ni % h) * w + (nj % w)),
            Boundary::Neumann if ni < h && nj < w => Some(ni * w + nj),
            Boundary::Neumann => None,
        }
    }

    /// `∇*v`, computed by scattering each difference back onto its two pixels.
    fn adjoint_scatter(&self, v: &Vector) -> Vector {
        let mut out = Array1::zeros(self.pixels());
        for i in 0..self.height {
            for j in 0..self.width {
                let p = i * self.width + j;
                for d in 0..2 {
                    if let Some(q) = self.neighbour(i, j, d) {
                        let val = v[2 * p + d];
                        out[q] += val;
                        out[p] -= val;
                    }
                }
            }
        }
        out
    }

    /// The discrete divergence `div = −∇*`.
    pub fn divergence(&self, v: &Vector) -> Vector {
        -self.adjoint_scatter(v)
    }
}

impl LinearOperator for Grad2d {
    fn rows(&self) -> usize {
        2 * self.pixels()
    }
    fn cols(&self) -> usize {
        self.pixels()
    }
    fn apply(&self, x: &Vector) -> Vector {
        let mut out = Array1::zeros(2 * self.pixels());
        for i in 0..self.height {
            for j in 0..self.width {
                let p = i * self.width + j;
                for d in 0..2 {
                    if let Some(q) = self.neighbour(i, j, d) {
                        out[2 * p + d] = x[q] - x[p];
                    }
                }
            }
        }
        out
    }
    fn adjoint_apply(&self, y: &Vector) -> Vector {
        self.adjoint_scatter(y)
    }
    fn label(&self) -> String {
        format!("grad {}x{} ({:?})", self.height, self.width, self.boundary)
    }
}

/// Divergence `ℝ^{2HW} → ℝ^{HW}`, the negative adjoint of [`Grad2d`].
#[derive(Debug, Clone, Copy)]
pub struct Div2d {
    pub grad: Grad2d,
}

impl LinearOperator for Div2d {
    fn rows(&self) -> usize {
        self.grad.pixels()
    }
    fn cols(&self) -> usize {
        2 * self.grad.pixels()
    }
    fn apply(&self, v: &Vector) -> Vector {
        self.grad.divergence(v)
    }
    fn adjoint_apply(&self, x: &Vector) -> Vector {
        -self.grad.apply(x)
    }
    fn label(&self) -> String {
        format!("div {}x{}", self.grad.height, self.grad.width)
    }
}

/// Wraps an operator and counts forward and adjoint applications.
#[derive(Debug)]
pub struct CountingOperator {
    inner: OperatorRef,
    applies: AtomicUsize,
    adjoints: AtomicUsize,
}

impl CountingOperator {
    pub fn new(inner: OperatorRef) -> Arc<Self> {
        Arc::new(CountingOperator {
            inner,
            applies: AtomicUsize::new(0),
            adjoints: AtomicUsize::new(0),
        })
    }

    /// Total number of forward plus adjoint applications so far.
    pub fn calls(&self) -> usize {
        self.applies.load(Ordering::Relaxed) + self.adjoints.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.applies.store(0, Ordering::Relaxed);
        self.adjoints.store(0, Ordering::Relaxed);
    }
}

impl LinearOperator for CountingOperator {
    fn rows(&self) -> usize {
        self.inner.rows()
    }
    fn cols(&self) -> usize {
        self.inner.cols()
    }
    fn apply(&self, x: &Vector) -> Vector {
        self.applies.fetch_add(1, Ordering::Relaxed);
        self.inner.apply(x)
    }
    fn adjoint_apply(&self, y: &Vector) -> Vector {
        self.adjoints.fetch_add(1, Ordering::Relaxed);
        self.inner.adjoint_apply(y)
    }
    fn materialization(&self) -> Option<&Array2<f64>> {
        self.inner.materialization()
    }
    fn scalar_identity(&self) -> Option<f64> {
        self.inner.scalar_identity()
    }
    fn label(&self) -> String {
        self.inner.label()
    }
}
