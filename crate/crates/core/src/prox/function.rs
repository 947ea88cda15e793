use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, Zip};

use super::quadratic::QuadraticForm;
use super::Vector;
use crate::error::{Error, Result};

/// Slack allowed when indicator functions test membership.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// A proper closed convex function exposed through value and proximal oracles.
///
/// `prox(x, τ)` returns `argmin_w h(w) + (1/2τ)‖w − x‖²`.
pub trait ProxFunction: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// `h(x)`, possibly `+∞`; `None` when no value oracle exists.
    fn value(&self, x: &Vector) -> Option<f64>;

    fn prox(&self, x: &Vector, tau: f64) -> Result<Vector>;

    /// True iff `prox(·, τ)` is an affine map for every `τ`.
    fn is_affine_prox(&self) -> bool {
        false
    }

    /// Whether [`ProxFunction::conjugate_value`] is implemented.
    fn conjugate_available(&self) -> bool {
        false
    }

    /// `h*(v) = sup_x ⟨v, x⟩ − h(x)`.
    fn conjugate_value(&self, _v: &Vector) -> Option<f64> {
        None
    }

    fn as_quadratic(&self) -> Option<&QuadraticForm> {
        None
    }

    fn label(&self) -> String;
}

pub type FunctionRef = Arc<dyn ProxFunction>;

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("prox parameter must be positive, got {tau}")))
    }
}

pub(crate) fn indicator(inside: bool) -> f64 {
    if inside {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Componentwise soft threshold `sign(xᵢ)·max(|xᵢ| − τ, 0)`.
pub fn prox_l1(x: &Vector, tau: f64) -> Vector {
    x.mapv(|v| v.signum() * (v.abs() - tau).max(0.0))
}

/// Componentwise clamp to `[−1, 1]`.
pub fn project_linf_ball(x: &Vector) -> Vector {
    x.mapv(|v| v.clamp(-1.0, 1.0))
}

/// Per-pixel shrinkage of stacked 2-vectors: `g·max(1 − τ/|g|, 0)`, zero when `|g| = 0`.
pub fn prox_group_l21(y: &Vector, tau: f64) -> Vector {
    let mut out = Array1::zeros(y.len());
    for (o, g) in out
        .exact_chunks_mut(2)
        .into_iter()
        .zip(y.exact_chunks(2))
    {
        let mag = g[0].hypot(g[1]);
        if mag > tau {
            let k = 1.0 - tau / mag;
            let mut o = o;
            o[0] = g[0] * k;
            o[1] = g[1] * k;
        }
    }
    out
}

/// Per-pixel radial projection `v / max(1, |v|)`.
pub fn project_l2inf_ball(v: &Vector) -> Vector {
    let mut out = v.clone();
    for mut p in out.exact_chunks_mut(2) {
        let mag = p[0].hypot(p[1]);
        if mag > 1.0 {
            p[0] /= mag;
            p[1] /= mag;
        }
    }
    out
}

fn pixel_norms(v: &Vector) -> impl Iterator<Item = f64> + '_ {
    v.exact_chunks(2).into_iter().map(|p| p[0].hypot(p[1]))
}

/// The zero function.
#[derive(Debug, Clone, Copy)]
pub struct Zero {
    pub dim: usize,
}

impl ProxFunction for Zero {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &Vector) -> Option<f64> {
        Some(0.0)
    }
    fn prox(&self, x: &Vector, tau: f64) -> Result<Vector> {
        check_tau(tau)?;
        Ok(x.clone())
    }
    fn is_affine_prox(&self) -> bool {
        true
    }
    fn conjugate_available(&self) -> bool {
        true
    }
    fn conjugate_value(&self, v: &Vector) -> Option<f64> {
        let scale = 1.0 + v.len() as f64;
        Some(indicator(v.iter().all(|x| x.abs() <= FEASIBILITY_TOL * scale)))
    }
    fn label(&self) -> String {
        "0".into()
    }
}

/// `weight·‖x‖₁`.
#[derive(Debug, Clone, Copy)]
pub struct L1Norm {
    pub dim: usize,
    pub weight: f64,
}

impl L1Norm {
    pub fn new(dim: usize) -> Self {
        L1Norm { dim, weight: 1.0 }
    }
}

impl ProxFunction for L1Norm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &Vector) -> Option<f64> {
        Some(self.weight * x.iter().map(|v| v.abs()).sum::<f64>())
    }
    fn prox(&self, x: &Vector, tau: f64) -> Result<Vector> {
        check_tau(tau)?;
        Ok(prox_l1(x, tau * self.weight))
    }
    fn conjugate_available(&self) -> bool {
        true
    }
    fn conjugate_value(&self, v: &Vector) -> Option<f64> {
        let bound = self.weight * (1.0 + FEASIBILITY_TOL);
        Some(indicator(v.iter().all(|x| x.abs() <= bound)))
    }
    fn label(&self) -> String {
        "l1".into()
    }
}

/// Indicator of the box `{x : ‖x‖∞ ≤ radius}`.
#[derive(Debug, Clone, Copy)]
pub struct LinfBall {
    pub dim: usize,
    pub radius: f64,
}

impl LinfBall {
    pub fn unit(dim: usize) -> Self {
        LinfBall { dim, radius: 1.0 }
    }
}

impl ProxFunction for LinfBall {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &Vector) -> Option<f64> {
        let bound = self.radius * (1.0 + FEASIBILITY_TOL);
        Some(indicator(x.iter().all(|v| v.abs() <= bound)))
    }
    fn prox(&self, x: &Vector, tau: f64) -> Result<Vector> {
        check_tau(tau)?;
        let r = self.radius;
        Ok(x.mapv(|v| v.clamp(-r, r)))
    }
    fn conjugate_available(&self) -> bool {
        true
    }
    fn conjugate_value(&self, v: &Vector) -> Option<f64> {
        Some(self.radius * v.iter().map(|x| x.abs()).sum::<f64>())
    }
    fn label(&self) -> String {
        "indicator(linf ball)".into()
    }
}

/// `weight·Σ_p |g_p|` over stacked per-pixel 2-vectors.
#[derive(Debug, Clone, Copy)]
pub struct GroupL21 {
    pub pixels: usize,
    pub weight: f64,
}

impl ProxFunction for GroupL21 {
    fn dim(&self) -> usize {
        2 * self.pixels
    }
    fn value(&self, x: &Vector) -> Option<f64> {
        Some(self.weight * pixel_norms(x).sum::<f64>())
    }
    fn prox(&self, x: &Vector, tau: f64) -> Result<Vector> {
        check_tau(tau)?;
        Ok(prox_group_l21(x, tau * self.weight))
    }
    fn conjugate_available(&self) -> bool {
        true
    }
    fn conjugate_value(&self, v: &Vector) -> Option<f64> {
        let bound = self.weight * (1.0 + FEASIBILITY_TOL);
        Some(indicator(pixel_norms(v).all(|m| m <= bound)))
    }
    fn label(&self) -> String {
        "l21".into()
    }
}

/// Indicator of `{v : max_p |v_p| ≤ 1}` over stacked per-pixel 2-vectors.
#[derive(Debug, Clone, Copy)]
pub struct L2InfBall {
    pub pixels: usize,
}

impl ProxFunction for L2InfBall {
    fn dim(&self) -> usize {
        2 * self.pixels
    }
    fn value(&self, x: &Vector) -> Option<f64> {
        Some(indicator(pixel_norms(x).all(|m| m <= 1.0 + FEASIBILITY_TOL)))
    }
    fn prox(&self, x: &Vector, tau: f64) -> Result<Vector> {
        check_tau(tau)?;
        Ok(project_l2inf_ball(x))
    }
    fn conjugate_available(&self) -> bool {
        true
    }
    fn conjugate_value(&self, v: &Vector) -> Option<f64> {
        Some(pixel_norms(v).sum::<f64>())
    }
    fn label(&self) -> String {
        "indicator(l2inf ball)".into()
    }
}

/// `⟨a, b⟩` for two vectors of equal length.
pub fn dot(a: &Vector, b: &Vector) -> f64 {
    Zip::from(a).and(b).fold(0.0, |acc, x, y| acc + x * y)
}

pub fn norm2(a: &Vector) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs_diff(a: &Vector, b: &Vector) -> f64 {
    Zip::from(a)
        .and(b)
        .fold(0.0_f64, |acc, x, y| acc.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(prox_l1(&array![2.0], 1.0), array![1.0]);
        assert_eq!(prox_l1(&array![0.0, 0.0], 0.7), array![0.0, 0.0]);
        assert_eq!(prox_l1(&array![-0.3, 2.0], 0.5), array![0.0, 1.5]);
    }

    #[test]
    fn linf_projection_examples() {
        assert_eq!(project_linf_ball(&array![2.0, -0.5]), array![1.0, -0.5]);
        assert_eq!(project_linf_ball(&array![0.3]), array![0.3]);
        assert_eq!(project_linf_ball(&array![-7.0, 1.0]), array![-1.0, 1.0]);
    }

    #[test]
    fn group_shrinkage_examples() {
        let out = prox_group_l21(&array![3.0, 4.0], 1.0);
        assert!((out[0] - 2.4).abs() < 1e-15 && (out[1] - 3.2).abs() < 1e-15);
        assert_eq!(prox_group_l21(&array![0.0, 0.0], 0.3), array![0.0, 0.0]);
        assert_eq!(prox_group_l21(&array![0.1, 0.0], 1.0), array![0.0, 0.0]);
    }

    #[test]
    fn l2inf_projection_examples() {
        let out = project_l2inf_ball(&array![3.0, 4.0]);
        assert!((out[0] - 0.6).abs() < 1e-15 && (out[1] - 0.8).abs() < 1e-15);
        assert_eq!(project_l2inf_ball(&array![0.3, 0.4]), array![0.3, 0.4]);
        assert_eq!(project_l2inf_ball(&array![-2.0, 0.0]), array![-1.0, 0.0]);
    }

    #[test]
    fn nonpositive_tau_is_rejected() {
        let h = L1Norm::new(1);
        assert!(h.prox(&array![1.0], 0.0).is_err());
        assert!(h.prox(&array![1.0], -1.0).is_err());
    }

    #[test]
    fn l1_is_not_affine_on_witness() {
        // prox((2 + 0)/2) = 0 but the average of prox(2) = 1 and prox(0) = 0 is 0.5
        let h = L1Norm::new(1);
        let mid = h.prox(&array![1.0], 1.0).unwrap();
        let avg = (h.prox(&array![2.0], 1.0).unwrap() + h.prox(&array![0.0], 1.0).unwrap()) / 2.0;
        assert!((mid[0] - avg[0]).abs() > 0.4);
        assert!(!h.is_affine_prox());
    }
}
