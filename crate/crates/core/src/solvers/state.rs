use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prox::Vector;

/// Any iterate whose sup-norm exceeds this is treated as a blowup.
pub const BLOWUP_NORM: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Penalty `λ > 0`.
    pub lambda: f64,
    /// Relaxation `α ∈ (0, 1]` for relaxed Peaceman-Rachford.
    pub alpha: f64,
    pub max_iter: usize,
    /// Stop once the primal residual is at most this.
    pub stop_tol: f64,
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda: 1.0,
            alpha: 0.5,
            max_iter: 100,
            stop_tol: 0.0,
            record_trace: true,
        }
    }
}

impl SolverConfig {
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_stop_tol(mut self, stop_tol: f64) -> Self {
        self.stop_tol = stop_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if self.stop_tol.is_nan() || self.stop_tol < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "stop tolerance must be nonnegative, got {}",
                self.stop_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    Alg1,
    Alg2,
    Alg3,
    Alg4,
    Alg5,
    Rprs,
    ThreeBlockPrimal,
    ThreeBlockDual,
    Mixed,
}

/// Live iterates, one variant per iterate layout.
///
/// Images `Ax` and `By` are stored next to `x` and `y` so that maps between
/// algorithms never recompute operator products.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Iterates {
    /// `x, y, z` for ADM in either update order.
    Primal {
        x: Vector,
        y: Vector,
        z: Vector,
        ax: Vector,
        by: Vector,
    },
    /// `s, t, z` on the master problem.
    Master { s: Vector, t: Vector, z: Vector },
    /// `u, v, z` on the dual problem.
    Dual { u: Vector, v: Vector, z: Vector },
    /// `y, u` and the previous `u` of the primal-dual form.
    PrimalDual {
        y: Vector,
        by: Vector,
        u: Vector,
        u_prev: Vector,
    },
    /// Relaxed Peaceman-Rachford: governing `w`, the last `x = prox_f(w)` and the last
    /// output `y` of the second prox.
    Rprs { w: Vector, x: Vector, y: Vector },
    ThreeBlockPrimal {
        x: Vector,
        s: Vector,
        y: Vector,
        z_s: Vector,
        z_y: Vector,
        cx: Vector,
    },
    ThreeBlockDual {
        v: Vector,
        u: Vector,
        t: Vector,
        z_u: Vector,
        z_t: Vector,
    },
}

impl Iterates {
    /// Named vectors in a fixed order.
    pub fn named(&self) -> Vec<(&'static str, &Vector)> {
        match self {
            Iterates::Primal { x, y, z, ax, by } => vec![("x", x), ("y", y), ("z", z), ("ax", ax), ("by", by)],
            Iterates::Master { s, t, z } => vec![("s", s), ("t", t), ("z", z)],
            Iterates::Dual { u, v, z } => vec![("u", u), ("v", v), ("z", z)],
            Iterates::PrimalDual { y, by, u, u_prev } => {
                vec![("y", y), ("by", by), ("u", u), ("u_prev", u_prev)]
            }
            Iterates::Rprs { w, x, y } => vec![("w", w), ("x", x), ("y", y)],
            Iterates::ThreeBlockPrimal { x, s, y, z_s, z_y, cx } => {
                vec![("x", x), ("s", s), ("y", y), ("z_s", z_s), ("z_y", z_y), ("cx", cx)]
            }
            Iterates::ThreeBlockDual { v, u, t, z_u, z_t } => {
                vec![("v", v), ("u", u), ("t", t), ("z_u", z_u), ("z_t", z_t)]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverState {
    pub algorithm: Algorithm,
    pub k: usize,
    pub iterates: Iterates,
}

impl SolverState {
    pub fn new(algorithm: Algorithm, iterates: Iterates) -> Self {
        SolverState {
            algorithm,
            k: 0,
            iterates,
        }
    }

    pub(crate) fn next(&self, iterates: Iterates) -> Result<Self> {
        let st = SolverState {
            algorithm: self.algorithm,
            k: self.k + 1,
            iterates,
        };
        check_finite(&st)?;
        Ok(st)
    }

    /// Largest absolute change across all iterate vectors.
    pub fn max_change(&self, other: &SolverState) -> f64 {
        self.iterates
            .named()
            .iter()
            .zip(other.iterates.named())
            .map(|((_, a), (_, b))| crate::prox::max_abs_diff(a, b))
            .fold(0.0, f64::max)
    }
}

/// `NumericalBlowup` when any entry is non-finite or exceeds [`BLOWUP_NORM`].
pub fn check_finite(st: &SolverState) -> Result<()> {
    for (name, v) in st.iterates.named() {
        if let Some(bad) = v.iter().find(|t| !t.is_finite() || t.abs() > BLOWUP_NORM) {
            return Err(Error::NumericalBlowup {
                iteration: st.k,
                detail: format!("{name} has entry {bad:e}"),
            });
        }
    }
    Ok(())
}

pub(crate) fn expect_layout(st: &SolverState, wanted: &str) -> Error {
    Error::Incompatible(format!("state for {:?} does not carry {wanted} iterates", st.algorithm))
}
