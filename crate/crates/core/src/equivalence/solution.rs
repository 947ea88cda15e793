use serde::Serialize;

use crate::error::{Error, Result};
use crate::instances::CompositeInstance;
use crate::prox::{max_abs_diff, ProxFunction, Vector};
use crate::solvers::{run, Iterates, RprsStepper, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionMapCheck {
    pub direction: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

/// Runs `stepper` from `w = 0` and returns the last `x`.
fn solve(stepper: &RprsStepper, dim: usize, cfg: &SolverConfig) -> Result<Vector> {
    let mut cfg = *cfg;
    cfg.record_trace = false;
    let trace = run(stepper, stepper.init(Vector::zeros(dim)), &cfg)?;
    if let Some(why) = &trace.blowup {
        return Err(Error::NumericalBlowup {
            iteration: trace.last().k,
            detail: why.clone(),
        });
    }
    match &trace.last().state.iterates {
        Iterates::Rprs { x, .. } => Ok(x.clone()),
        _ => unreachable!("rprs steppers keep the rprs layout"),
    }
}

/// `Ax*` for a solution `x*` of `min f(x) + g(Ax)` should solve `min (A▷f)(y) + g(y)`:
/// compares that objective at `Ax*` with its value after an independent RPRS run of
/// `cfg.max_iter` iterations.
pub fn check_solution_maps(
    inst: &CompositeInstance,
    x_star: &Vector,
    cfg: &SolverConfig,
    tol: f64,
) -> Result<SolutionMapCheck> {
    let pc = inst.postcomposed()?;
    let y_mapped = inst.a.apply(x_star);
    let y_ref = solve(&inst.image_stepper()?, inst.a.rows(), cfg)?;
    let objective = |y: &Vector| -> Result<f64> {
        match (pc.value(y), inst.g.value(y)) {
            (Some(a), Some(b)) => Ok(a + b),
            _ => Err(Error::Incompatible("no value oracle for the image-space objective".into())),
        }
    };
    let (mapped, reference) = (objective(&y_mapped)?, objective(&y_ref)?);
    let deviation = (mapped - reference).abs();
    Ok(SolutionMapCheck {
        direction: "primal".into(),
        deviation,
        tolerance: tol,
        pass: deviation <= tol,
        detail: format!(
            "objective at Ax* {mapped:.12e}, reference {reference:.12e}, max |Ax* − y*| {:.3e}",
            max_abs_diff(&y_mapped, &y_ref)
        ),
    })
}

/// `A*v*` for a solution `v*` of `min f*(A*v) + g*(−v)` should solve
/// `min f*(u) + (g∘A)*(−u)`; compares it with the RPRS solution of the latter.
pub fn check_dual_solution_map(
    inst: &CompositeInstance,
    v_star: &Vector,
    cfg: &SolverConfig,
    tol: f64,
) -> Result<SolutionMapCheck> {
    let u_mapped = inst.a.adjoint_apply(v_star);
    let u_ref = solve(&inst.dual_stepper()?, inst.a.cols(), cfg)?;
    let deviation = max_abs_diff(&u_mapped, &u_ref);
    Ok(SolutionMapCheck {
        direction: "dual".into(),
        deviation,
        tolerance: tol,
        pass: deviation <= tol,
        detail: format!("max |A*v* − u*| {deviation:.3e}"),
    })
}
