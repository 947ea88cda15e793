//! Lockstep checks of iterate maps between algorithm pairs.
//!
//! A pair builds matched initial states from one seeded draw, steps its runs
//! side by side and records, for every iteration and mapped quantity, the
//! largest absolute difference between an iterate and the value the map
//! predicts from the partner run. Quantities are operator images and
//! multipliers, never raw minimizers, which may be non-unique.

mod pairs;
mod solution;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::instances::{Family, Instance};
use crate::prox::{max_abs_diff, Vector};
use crate::solvers::SolverConfig;

pub use solution::{check_dual_solution_map, check_solution_maps, SolutionMapCheck};

/// Default lockstep tolerance on unit-scale data.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// The registered iterate maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IterateMap {
    /// `(Ax₁, By₁ − b, z₁) = (s₂, t₂, z₂)`.
    Alg1Alg2,
    /// `(u₃, z₃) = (z₂, s₂)` and `v₃ᵏ⁺¹ = (s₂ᵏ + t₂ᵏ⁺¹ + λz₂ᵏ)/λ`.
    Alg2Alg3,
    /// `Ax₁ᵏ = λ(u₄ᵏ − u₄ᵏ⁻¹) + b − By₄ᵏ`, `z₁ᵏ = u₄ᵏ`.
    Alg1Alg4,
    /// `Ax₁ᵏ = Ax₅ᵏ⁺¹`, `z₁ᵏ = z₅ᵏ + (Ax₅ᵏ⁺¹ + By₅ᵏ − b)/λ` under an affine `prox_G`.
    Alg5Alg1,
    /// The same map shifted by one swapped-order iteration; no condition on the initial point.
    Alg5Alg1Offset,
    /// Basis pursuit: `u₃ = z₁`, `z₃ = A*x₁`, `x₁ = (AA*)⁻¹Az₃`.
    BasisPursuit,
    /// Basis pursuit denoising: `z₁ = u₃`, `x₁ = −(Au₃ − b)/α` from `k = 1`.
    Bpdn,
    /// `z_y = t`, `z_s = u`, `s = −z_u`, `y = z_t`.
    ThreeBlock,
    /// `w₂ = w₁/λ` and `x₁ᵏ⁺¹ + λx₂ᵏ⁺¹ = w₁ᵏ` for RPRS on a problem and its dual.
    Rprs,
    /// The two identity rows linking the four TV iterations.
    TotalVariation,
}

impl IterateMap {
    pub const ALL: [IterateMap; 10] = [
        IterateMap::Alg1Alg2,
        IterateMap::Alg2Alg3,
        IterateMap::Alg1Alg4,
        IterateMap::Alg5Alg1,
        IterateMap::Alg5Alg1Offset,
        IterateMap::BasisPursuit,
        IterateMap::Bpdn,
        IterateMap::ThreeBlock,
        IterateMap::Rprs,
        IterateMap::TotalVariation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IterateMap::Alg1Alg2 => "alg1-alg2",
            IterateMap::Alg2Alg3 => "alg2-alg3",
            IterateMap::Alg1Alg4 => "alg1-alg4",
            IterateMap::Alg5Alg1 => "alg5-alg1",
            IterateMap::Alg5Alg1Offset => "alg5-alg1-offset",
            IterateMap::BasisPursuit => "bp",
            IterateMap::Bpdn => "bpdn",
            IterateMap::ThreeBlock => "three-block",
            IterateMap::Rprs => "rprs",
            IterateMap::TotalVariation => "tv",
        }
    }

    pub fn parse(s: &str) -> Option<IterateMap> {
        IterateMap::ALL.into_iter().find(|p| p.name() == s)
    }

    /// First iteration from which every mapped quantity is constrained.
    pub fn first_iteration(self) -> usize {
        match self {
            IterateMap::Bpdn => 1,
            _ => 0,
        }
    }

    /// The initialization the map requires, in words.
    pub fn init_contract(self) -> &'static str {
        match self {
            IterateMap::Alg1Alg2 => "s⁰ = Ax⁰, t⁰ = By⁰ − b, z₂⁰ = z₁⁰",
            IterateMap::Alg2Alg3 => "u₃⁰ = z₂⁰, z₃⁰ = s₂⁰",
            IterateMap::Alg1Alg4 => "u₄⁰ = z₁⁰, Ax₁⁰ = λ(u₄⁰ − u₄⁻¹) + b − By₄⁰",
            IterateMap::Alg5Alg1 => "−z₅⁰ ∈ ∂G(By₅⁰ − b); x₁⁰ = x₅¹, z₁⁰ = z₅⁰ + (Ax₅¹ + By₅⁰ − b)/λ",
            IterateMap::Alg5Alg1Offset => "x₁⁰ = x₅², z₁⁰ = z₅¹ + (Ax₅² + By₅¹ − b)/λ",
            IterateMap::BasisPursuit | IterateMap::Bpdn => "u₃⁰ = z₁⁰, z₃⁰ = A*x₁⁰",
            IterateMap::ThreeBlock => "t⁰ = z_y⁰, u⁰ = z_s⁰, z_u⁰ = −s⁰, z_t⁰ = y⁰ (μ = 1)",
            IterateMap::Rprs => "w₂⁰ = w₁⁰/λ, dual run with parameter 1/λ",
            IterateMap::TotalVariation => {
                "x₅⁰ = b + div z₅⁰/α; Alg1 from one swapped step; u₃⁰ = u₄⁰ = z₁⁰, z₃⁰ = −y₁⁰"
            }
        }
    }

    /// Family of the instance the suite runs this pair on.
    pub fn canonical_family(self) -> Family {
        match self {
            IterateMap::BasisPursuit => Family::Bp,
            IterateMap::ThreeBlock => Family::ThreeBlock,
            IterateMap::TotalVariation => Family::Tv,
            _ => Family::Bpdn,
        }
    }
}

pub fn map_alg1_alg2() -> IterateMap {
    IterateMap::Alg1Alg2
}

pub fn map_alg2_alg3() -> IterateMap {
    IterateMap::Alg2Alg3
}

pub fn map_alg1_alg4() -> IterateMap {
    IterateMap::Alg1Alg4
}

pub fn map_alg5_alg1(offset: bool) -> IterateMap {
    if offset {
        IterateMap::Alg5Alg1Offset
    } else {
        IterateMap::Alg5Alg1
    }
}

pub fn map_bp() -> IterateMap {
    IterateMap::BasisPursuit
}

pub fn map_bpdn() -> IterateMap {
    IterateMap::Bpdn
}

pub fn map_three_block() -> IterateMap {
    IterateMap::ThreeBlock
}

pub fn map_rprs() -> IterateMap {
    IterateMap::Rprs
}

pub fn map_tv() -> IterateMap {
    IterateMap::TotalVariation
}

/// Every pair the suite runs, with the family of its instance.
pub fn suite_entries() -> Vec<(IterateMap, Family)> {
    let mut out: Vec<_> = IterateMap::ALL.iter().map(|p| (*p, p.canonical_family())).collect();
    out.extend([
        (IterateMap::Alg2Alg3, Family::Bp),
        (IterateMap::Alg1Alg4, Family::Tv),
        (IterateMap::Alg5Alg1, Family::Tv),
        (IterateMap::Rprs, Family::ThreeBlock),
    ]);
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockstepOptions {
    /// Seed of the random initial point.
    pub seed: u64,
    /// Added to the first entry of one required initial quantity (negative control).
    pub perturb: f64,
}

impl Default for LockstepOptions {
    fn default() -> Self {
        LockstepOptions { seed: 1, perturb: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub pair: String,
    pub iterations: usize,
    pub tolerance: f64,
    pub max_deviation: f64,
    pub per_quantity: BTreeMap<String, f64>,
    pub pass: bool,
    /// Largest deviation over all quantities at each `k = 0…iterations`.
    #[serde(skip)]
    pub per_iteration: Vec<f64>,
}

impl EquivalenceReport {
    /// Largest deviation over iterations `0…k`.
    pub fn max_through(&self, k: usize) -> f64 {
        self.per_iteration.iter().take(k + 1).fold(0.0, |m, d| m.max(*d))
    }
}

/// Accumulates per-quantity and per-iteration maxima.
pub(crate) struct Recorder {
    per_quantity: BTreeMap<String, f64>,
    per_iteration: Vec<f64>,
}

impl Recorder {
    pub(crate) fn new(iterations: usize) -> Self {
        Recorder {
            per_quantity: BTreeMap::new(),
            per_iteration: vec![0.0; iterations + 1],
        }
    }

    pub(crate) fn record(&mut self, k: usize, name: &str, actual: &Vector, predicted: &Vector) {
        let mut d = max_abs_diff(actual, predicted);
        if d.is_nan() || actual.len() != predicted.len() {
            d = f64::INFINITY;
        }
        let q = self.per_quantity.entry(name.to_string()).or_insert(0.0);
        *q = q.max(d);
        self.per_iteration[k] = self.per_iteration[k].max(d);
    }

    pub(crate) fn finish(self, pair: IterateMap, tolerance: f64) -> EquivalenceReport {
        let max_deviation = self.per_iteration.iter().fold(0.0, |m: f64, d| m.max(*d));
        EquivalenceReport {
            pair: pair.name().to_string(),
            iterations: self.per_iteration.len() - 1,
            tolerance,
            max_deviation,
            per_quantity: self.per_quantity,
            pass: max_deviation <= tolerance,
            per_iteration: self.per_iteration,
        }
    }
}

/// Runs `pair` for `cfg.max_iter` iterations from a matched seeded initialization.
pub fn run_lockstep(pair: IterateMap, inst: &Instance, cfg: &SolverConfig, tol: f64) -> Result<EquivalenceReport> {
    run_lockstep_with(pair, inst, cfg, tol, LockstepOptions::default())
}

pub fn run_lockstep_with(
    pair: IterateMap,
    inst: &Instance,
    cfg: &SolverConfig,
    tol: f64,
    opts: LockstepOptions,
) -> Result<EquivalenceReport> {
    cfg.validate()?;
    let mut rec = Recorder::new(cfg.max_iter);
    pairs::run(pair, inst, cfg, opts, &mut rec)?;
    Ok(rec.finish(pair, tol))
}
