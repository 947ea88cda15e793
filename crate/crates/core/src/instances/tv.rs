//! Total-variation denoising `min ‖∇x‖_{2,1} + (α/2)‖x − b‖²`.
//!
//! As an ADM problem the gradient field is the first block and the image the
//! second: `f = ‖·‖_{2,1}` with `A = −I`, `g = (α/2)‖· − b‖²` with `B = ∇`, and
//! right-hand side 0. The four closed-form iterations below emit the same
//! iterate layouts as the generic steppers on that problem, so in their states
//! `x` is the gradient field and `y` the image (`Primal` layout), `u` is the
//! bounded field and `v` the divergence-side field (`Dual` layout).
//!
//! The v-update of the primal-dual form maximizes `⟨v, ∇x⟩` over the unit
//! `‖·‖_{2,∞}` ball exactly as written, i.e. `v ← P(v + ∇x/λ)`.

use std::sync::Arc;

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::check_layout;
use crate::error::{Error, Result};
use crate::formulations::AdmProblem;
use crate::prox::linalg::Cholesky;
use crate::prox::operator::to_dense;
use crate::prox::quadratic::FactorCache;
use crate::prox::{
    dot, norm2, project_l2inf_ball, prox_group_l21, Boundary, GroupL21, LinearOperator, OperatorRef,
    QuadraticForm, ScaledIdentity, Vector,
};
use crate::rng::SeededRng;
use crate::solvers::{Algorithm, Iterates, SolverConfig, SolverState, Stepper};

/// How the pixel systems `(cI + ∇*∇)x = r` are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum XSolve {
    /// Diagonalize the periodic Laplacian with a 2-D DFT.
    #[default]
    Fft,
    /// Cached dense Cholesky factor per shift `c`.
    Direct,
}

struct FftSolver {
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    /// Eigenvalues of `∇*∇`, row-major.
    laplacian: Vec<f64>,
}

impl std::fmt::Debug for FftSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftSolver").field("len", &self.laplacian.len()).finish()
    }
}

impl FftSolver {
    fn new(h: usize, w: usize) -> Self {
        let mut planner = FftPlanner::new();
        let eig = |k: usize, n: usize| 2.0 - 2.0 * (std::f64::consts::TAU * k as f64 / n as f64).cos();
        let laplacian = (0..h * w).map(|p| eig(p / w, h) + eig(p % w, w)).collect();
        FftSolver {
            row_fwd: planner.plan_fft_forward(w),
            row_inv: planner.plan_fft_inverse(w),
            col_fwd: planner.plan_fft_forward(h),
            col_inv: planner.plan_fft_inverse(h),
            laplacian,
        }
    }

    fn transform(&self, data: &mut [Complex<f64>], rows: &dyn Fft<f64>, cols: &dyn Fft<f64>) {
        let (h, w) = (cols.len(), rows.len());
        rows.process(data);
        let mut column = vec![Complex::default(); h];
        for j in 0..w {
            for i in 0..h {
                column[i] = data[i * w + j];
            }
            cols.process(&mut column);
            for i in 0..h {
                data[i * w + j] = column[i];
            }
        }
    }

    fn solve(&self, c: f64, r: &Vector) -> Vector {
        let n = r.len();
        let mut data: Vec<Complex<f64>> = r.iter().map(|v| Complex::new(*v, 0.0)).collect();
        self.transform(&mut data, self.row_fwd.as_ref(), self.col_fwd.as_ref());
        for (d, l) in data.iter_mut().zip(&self.laplacian) {
            *d /= c + l;
        }
        self.transform(&mut data, self.row_inv.as_ref(), self.col_inv.as_ref());
        Vector::from_iter(data.iter().map(|d| d.re / n as f64))
    }
}

#[derive(Debug)]
pub struct TvInstance {
    pub height: usize,
    pub width: usize,
    /// Noisy image `b`, row-major.
    pub image: Vector,
    pub alpha: f64,
    pub grad: crate::prox::Grad2d,
    pub op: OperatorRef,
    fft: Option<FftSolver>,
    direct: FactorCache<Cholesky>,
}

impl TvInstance {
    pub fn new(height: usize, width: usize, image: Vector, alpha: f64, boundary: Boundary) -> Result<Self> {
        if height < 2 || width < 2 {
            return Err(Error::InvalidParameter(format!("image must be at least 2x2, got {height}x{width}")));
        }
        if image.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "{} intensities for a {height}x{width} grid",
                image.len()
            )));
        }
        if image.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("image has non-finite intensities".into()));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        let grad = crate::prox::Grad2d::new(height, width, boundary);
        let fft = (boundary == Boundary::Periodic).then(|| FftSolver::new(height, width));
        Ok(TvInstance {
            height,
            width,
            image,
            alpha,
            grad,
            op: Arc::new(grad),
            fft,
            direct: FactorCache::default(),
        })
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    /// The fastest x-update path this boundary allows.
    pub fn preferred_solve(&self) -> XSolve {
        if self.fft.is_some() {
            XSolve::Fft
        } else {
            XSolve::Direct
        }
    }

    /// `(cI + ∇*∇)⁻¹r`.
    pub fn solve_shifted(&self, c: f64, r: &Vector, how: XSolve) -> Result<Vector> {
        match how {
            XSolve::Fft => {
                let fft = self
                    .fft
                    .as_ref()
                    .ok_or_else(|| Error::Incompatible("the DFT path needs periodic boundaries".into()))?;
                Ok(fft.solve(c, r))
            }
            XSolve::Direct => {
                let factor = self.direct.get_or_try_insert(c, || {
                    let g = to_dense(&self.grad);
                    Cholesky::new(&(g.t().dot(&g) + Array2::<f64>::eye(self.pixels()) * c))
                })?;
                Ok(factor.solve(r))
            }
        }
    }

    pub fn divergence(&self, v: &Vector) -> Vector {
        self.grad.divergence(v)
    }

    pub fn tv(&self, x: &Vector) -> f64 {
        let g = self.grad.apply(x);
        g.as_slice()
            .expect("contiguous")
            .chunks(2)
            .map(|p| p[0].hypot(p[1]))
            .sum()
    }

    pub fn objective(&self, x: &Vector) -> f64 {
        let r = x - &self.image;
        self.tv(x) + 0.5 * self.alpha * dot(&r, &r)
    }

    /// `(α/2)‖b‖² − (1/2α)‖div v + αb‖²`, a lower bound on the optimum when `‖v‖_{2,∞} ≤ 1`.
    pub fn dual_value(&self, v: &Vector) -> f64 {
        let r = self.divergence(v) + &(&self.image * self.alpha);
        0.5 * self.alpha * dot(&self.image, &self.image) - dot(&r, &r) / (2.0 * self.alpha)
    }

    pub fn adm_problem(&self) -> Result<AdmProblem> {
        let m = 2 * self.pixels();
        AdmProblem::new(
            Arc::new(GroupL21 {
                pixels: self.pixels(),
                weight: 1.0,
            }),
            Arc::new(QuadraticForm::squared_distance(self.alpha, &self.image)),
            ScaledIdentity::negated(m),
            self.op.clone(),
            Vector::zeros(m),
        )
    }
}

/// Validates `image` (row-major `H × W`) and builds the instance.
pub fn make_tv(image: &Array2<f64>, alpha: f64, boundary: Boundary) -> Result<TvInstance> {
    let (h, w) = image.dim();
    TvInstance::new(h, w, Vector::from_iter(image.iter().copied()), alpha, boundary)
}

/// Left half 0.25, right half 0.75, plus seeded Gaussian noise of deviation 0.05, clipped to `[0, 1]`.
pub fn two_block_image(height: usize, width: usize, seed: u64) -> Array2<f64> {
    let mut rng = SeededRng::new(seed);
    Array2::from_shape_fn((height, width), |(_, j)| {
        let base = if 2 * j < width { 0.25 } else { 0.75 };
        (base + 0.05 * rng.normal()).clamp(0.0, 1.0)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvAlgorithm {
    /// Image, then gradient field, then multiplier.
    Primal,
    /// ADM on the dual: quadratic divergence term, then the ball projection.
    Dual,
    /// Extrapolated primal-dual iteration.
    PrimalDual,
    /// Gradient field first, then image.
    Swapped,
}

impl TvAlgorithm {
    pub const ALL: [TvAlgorithm; 4] = [
        TvAlgorithm::Primal,
        TvAlgorithm::Dual,
        TvAlgorithm::PrimalDual,
        TvAlgorithm::Swapped,
    ];

    fn tag(self) -> Algorithm {
        match self {
            TvAlgorithm::Primal => Algorithm::Alg1,
            TvAlgorithm::Dual => Algorithm::Alg3,
            TvAlgorithm::PrimalDual => Algorithm::Alg4,
            TvAlgorithm::Swapped => Algorithm::Alg5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TvStepper {
    pub inst: Arc<TvInstance>,
    pub algorithm: TvAlgorithm,
    pub solve: XSolve,
}

pub fn tv_steppers(inst: Arc<TvInstance>, solve: XSolve) -> [TvStepper; 4] {
    TvAlgorithm::ALL.map(|algorithm| TvStepper {
        inst: inst.clone(),
        algorithm,
        solve,
    })
}

impl TvStepper {
    pub fn new(inst: Arc<TvInstance>, algorithm: TvAlgorithm, solve: XSolve) -> Self {
        TvStepper { inst, algorithm, solve }
    }

    /// `argmin (α/2)‖x − b‖² + (1/2λ)‖∇x − q‖²`.
    fn image_update(&self, q: &Vector, lambda: f64) -> Result<Vector> {
        let inst = &self.inst;
        let al = inst.alpha * lambda;
        let rhs = &inst.image * al + &inst.grad.adjoint_apply(q);
        inst.solve_shifted(al, &rhs, self.solve)
    }

    /// `argmin (1/2α)‖div v + αb‖² + (λ/2)‖v − w‖²`, through the pixel system.
    fn divergence_update(&self, w: &Vector, lambda: f64) -> Result<Vector> {
        let inst = &self.inst;
        let r = w * lambda + &inst.grad.apply(&inst.image);
        let inner = inst.solve_shifted(inst.alpha * lambda, &inst.grad.adjoint_apply(&r), self.solve)?;
        Ok((r - &inst.grad.apply(&inner)) / lambda)
    }

    pub fn zero_init(&self) -> SolverState {
        let (p, m) = (self.inst.pixels(), 2 * self.inst.pixels());
        let iterates = match self.algorithm {
            TvAlgorithm::Primal | TvAlgorithm::Swapped => Iterates::Primal {
                x: Vector::zeros(m),
                y: Vector::zeros(p),
                z: Vector::zeros(m),
                ax: Vector::zeros(m),
                by: Vector::zeros(m),
            },
            TvAlgorithm::Dual => Iterates::Dual {
                u: Vector::zeros(m),
                v: Vector::zeros(m),
                z: Vector::zeros(m),
            },
            TvAlgorithm::PrimalDual => Iterates::PrimalDual {
                y: Vector::zeros(p),
                by: Vector::zeros(m),
                u: Vector::zeros(m),
                u_prev: Vector::zeros(m),
            },
        };
        SolverState::new(self.algorithm.tag(), iterates)
    }

    /// `Primal` layout from gradient field `field`, image `image` and multiplier `z`.
    pub fn primal_init(&self, field: Vector, image: Vector, z: Vector) -> SolverState {
        let ax = -&field;
        let by = self.inst.grad.apply(&image);
        SolverState::new(
            self.algorithm.tag(),
            Iterates::Primal {
                x: field,
                y: image,
                z,
                ax,
                by,
            },
        )
    }
}

impl Stepper for TvStepper {
    fn name(&self) -> String {
        format!("tv-{:?}", self.algorithm).to_lowercase()
    }

    fn step(&self, st: &SolverState, cfg: &SolverConfig) -> Result<SolverState> {
        let lambda = cfg.lambda;
        let grad = &self.inst.grad;
        match (self.algorithm, &st.iterates) {
            (TvAlgorithm::Primal, Iterates::Primal { x: field, z, .. }) => {
                let image = self.image_update(&(field - &(z * lambda)), lambda)?;
                let by = grad.apply(&image);
                let field = prox_group_l21(&(&by + &(z * lambda)), lambda);
                let z = z + &((&by - &field) / lambda);
                let ax = -&field;
                st.next(Iterates::Primal {
                    x: field,
                    y: image,
                    z,
                    ax,
                    by,
                })
            }
            (TvAlgorithm::Swapped, Iterates::Primal { by, z, .. }) => {
                let field = prox_group_l21(&(by + &(z * lambda)), lambda);
                let image = self.image_update(&(&field - &(z * lambda)), lambda)?;
                let by = grad.apply(&image);
                let z = z + &((&by - &field) / lambda);
                let ax = -&field;
                st.next(Iterates::Primal {
                    x: field,
                    y: image,
                    z,
                    ax,
                    by,
                })
            }
            (TvAlgorithm::Dual, Iterates::Dual { u, z, .. }) => {
                let v = self.divergence_update(&(u + &(z / lambda)), lambda)?;
                let u = project_l2inf_ball(&(&v - &(z / lambda)));
                let z = z + &((&u - &v) * lambda);
                st.next(Iterates::Dual { u, v, z })
            }
            (TvAlgorithm::PrimalDual, Iterates::PrimalDual { by, u, u_prev, .. }) => {
                let u_bar = u * 2.0 - u_prev;
                let image = self.image_update(&(by - &(&u_bar * lambda)), lambda)?;
                let by = grad.apply(&image);
                let u_new = project_l2inf_ball(&(u + &(&by / lambda)));
                st.next(Iterates::PrimalDual {
                    y: image,
                    by,
                    u: u_new,
                    u_prev: u.clone(),
                })
            }
            _ => Err(check_layout(st, &self.name())),
        }
    }

    fn primal_residual(&self, st: &SolverState) -> f64 {
        match &st.iterates {
            Iterates::Primal { ax, by, .. } => norm2(&(ax + by)),
            Iterates::Dual { u, v, .. } => norm2(&(u - v)),
            Iterates::PrimalDual { u, u_prev, .. } => norm2(&(u - u_prev)),
            _ => f64::NAN,
        }
    }

    fn objective(&self, st: &SolverState) -> Option<f64> {
        let inst = &self.inst;
        match &st.iterates {
            Iterates::Primal { x: field, y: image, .. } => {
                let r = image - &inst.image;
                let l21: f64 = field
                    .as_slice()?
                    .chunks(2)
                    .map(|p| p[0].hypot(p[1]))
                    .sum();
                Some(l21 + 0.5 * inst.alpha * dot(&r, &r))
            }
            Iterates::Dual { v, .. } => Some(-inst.dual_value(v)),
            Iterates::PrimalDual { y, .. } => Some(inst.objective(y)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dft_and_direct_solves_agree() {
        let inst = make_tv(&two_block_image(6, 5, 1), 1.0, Boundary::Periodic).unwrap();
        let r = SeededRng::new(2).normal_vector(30);
        for c in [0.1, 1.0, 10.0] {
            let a = inst.solve_shifted(c, &r, XSolve::Fft).unwrap();
            let b = inst.solve_shifted(c, &r, XSolve::Direct).unwrap();
            assert!(crate::prox::max_abs_diff(&a, &b) < 1e-12);
        }
    }

    #[test]
    fn neumann_has_no_dft_path() {
        let inst = make_tv(&two_block_image(4, 4, 1), 1.0, Boundary::Neumann).unwrap();
        assert!(matches!(
            inst.solve_shifted(1.0, &Vector::zeros(16), XSolve::Fft),
            Err(Error::Incompatible(_))
        ));
        assert!(inst.solve_shifted(1.0, &Vector::zeros(16), XSolve::Direct).is_ok());
    }

    #[test]
    fn constant_image_is_a_fixed_point() {
        let img = Array2::from_elem((4, 4), 0.3);
        let inst = Arc::new(make_tv(&img, 1.0, Boundary::Periodic).unwrap());
        let cfg = SolverConfig::default().with_max_iter(5);
        for s in tv_steppers(inst.clone(), XSolve::Fft) {
            let init = match s.algorithm {
                TvAlgorithm::Primal | TvAlgorithm::Swapped => {
                    s.primal_init(Vector::zeros(32), inst.image.clone(), Vector::zeros(32))
                }
                TvAlgorithm::PrimalDual => SolverState::new(
                    Algorithm::Alg4,
                    Iterates::PrimalDual {
                        y: inst.image.clone(),
                        by: Vector::zeros(32),
                        u: Vector::zeros(32),
                        u_prev: Vector::zeros(32),
                    },
                ),
                TvAlgorithm::Dual => s.zero_init(),
            };
            let trace = crate::solvers::run(&s, init.clone(), &cfg).unwrap();
            assert!(trace.last().state.max_change(&init) < 1e-12, "{}", s.name());
        }
    }

    #[test]
    fn rejects_tiny_or_bad_images() {
        assert!(make_tv(&Array2::zeros((1, 4)), 1.0, Boundary::Periodic).is_err());
        assert!(make_tv(&Array2::from_elem((2, 2), f64::NAN), 1.0, Boundary::Periodic).is_err());
        assert!(make_tv(&Array2::zeros((2, 2)), 0.0, Boundary::Periodic).is_err());
    }
}
