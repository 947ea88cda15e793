use std::sync::Arc;

use ndarray::Array2;

use super::bp::{make_bp, BasisPursuitInstance};
use super::bpdn::{make_bpdn, BpdnInstance};
use super::composite::{lasso_composite, CompositeInstance};
use super::three_block::make_three_block;
use super::tv::{make_tv, two_block_image, TvInstance};
use crate::error::{Error, Result};
use crate::formulations::ThreeBlockProblem;
use crate::prox::{Boundary, DenseOperator, L1Norm, QuadraticForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Bp,
    Bpdn,
    Tv,
    ThreeBlock,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Bp, Family::Bpdn, Family::Tv, Family::ThreeBlock];

    pub fn tag(self) -> &'static str {
        match self {
            Family::Bp => "bp",
            Family::Bpdn => "bpdn",
            Family::Tv => "tv",
            Family::ThreeBlock => "three-block",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.tag() == s)
    }
}

/// Everything needed to rebuild an instance deterministically.
///
/// `m × n` is the matrix shape, or `height × width` for TV.
#[derive(Debug, Clone)]
pub struct InstanceSpec {
    pub family: Family,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    /// Data-term weight (BPDN, TV).
    pub alpha: f64,
    /// `ℓ₁` weight of the three-block instance.
    pub kappa: f64,
    /// Coupling scalar of the three-block instance.
    pub mu: f64,
    /// TV input; a seeded two-block image when absent.
    pub image: Option<Array2<f64>>,
    pub boundary: Boundary,
}

impl InstanceSpec {
    /// bp 5×15 seed 3, bpdn 10×30 seed 7, tv 8×8 seed 1, three-block 8×12 seed 11.
    pub fn canonical(family: Family) -> InstanceSpec {
        let (m, n, seed) = match family {
            Family::Bp => (5, 15, 3),
            Family::Bpdn => (10, 30, 7),
            Family::Tv => (8, 8, 1),
            Family::ThreeBlock => (8, 12, 11),
        };
        InstanceSpec {
            family,
            m,
            n,
            seed,
            alpha: 1.0,
            kappa: 0.5,
            mu: 1.0,
            image: None,
            boundary: Boundary::Periodic,
        }
    }

    pub fn build(&self) -> Result<Instance> {
        Ok(match self.family {
            Family::Bp => Instance::Bp(Arc::new(make_bp(self.m, self.n, self.seed)?)),
            Family::Bpdn => Instance::Bpdn(Arc::new(make_bpdn(self.m, self.n, self.seed, self.alpha)?)),
            Family::Tv => {
                let image = match &self.image {
                    Some(img) => img.clone(),
                    None => two_block_image(self.m, self.n, self.seed),
                };
                Instance::Tv(Arc::new(make_tv(&image, self.alpha, self.boundary)?))
            }
            Family::ThreeBlock => {
                Instance::ThreeBlock(make_three_block(self.m, self.n, self.seed, self.kappa, self.mu)?)
            }
        })
    }
}

#[derive(Debug, Clone)]
pub enum Instance {
    Bp(Arc<BasisPursuitInstance>),
    Bpdn(Arc<BpdnInstance>),
    Tv(Arc<TvInstance>),
    ThreeBlock(ThreeBlockProblem),
    Composite(CompositeInstance),
}

impl Instance {
    pub fn tag(&self) -> &'static str {
        match self {
            Instance::Bp(_) => "bp",
            Instance::Bpdn(_) => "bpdn",
            Instance::Tv(_) => "tv",
            Instance::ThreeBlock(_) => "three-block",
            Instance::Composite(_) => "composite",
        }
    }

    /// `min f(x) + g(Ax)` form: `‖u‖₁ + ι{b}(Au)`, the LASSO, `κ‖x‖₁ + ½‖Cx − d‖²`,
    /// or `(α/2)‖x − b‖² + ‖∇x‖_{2,1}`.
    pub fn composite(&self) -> Result<CompositeInstance> {
        match self {
            Instance::Bp(bp) => CompositeInstance::new(
                Arc::new(L1Norm::new(bp.n())),
                Arc::new(QuadraticForm::point_indicator(&bp.b)),
                DenseOperator::shared(bp.a.clone()),
            ),
            Instance::Bpdn(inst) => lasso_composite(inst),
            Instance::Tv(tv) => CompositeInstance::new(
                Arc::new(QuadraticForm::squared_distance(tv.alpha, &tv.image)),
                Arc::new(crate::prox::GroupL21 {
                    pixels: tv.pixels(),
                    weight: 1.0,
                }),
                tv.op.clone(),
            ),
            Instance::ThreeBlock(p) => CompositeInstance::new(p.u.clone(), p.v.clone(), p.c.clone()),
            Instance::Composite(c) => Ok(c.clone()),
        }
    }

    pub fn incompatible(&self, what: &str) -> Error {
        Error::Incompatible(format!("{what} is not available on a {} instance", self.tag()))
    }
}
