use serde::Serialize;

use super::state::{SolverConfig, SolverState};
use super::Stepper;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub k: usize,
    pub state: SolverState,
    pub objective: Option<f64>,
    pub primal_residual: f64,
    /// Max-abs change of all iterates since the previous entry; a dual-residual proxy.
    pub change: f64,
}

impl TraceEntry {
    /// Primal residual plus iterate change.
    pub fn combined_residual(&self) -> f64 {
        self.primal_residual + self.change
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub stepper: String,
    pub entries: Vec<TraceEntry>,
    /// Stopped on `primal_residual ≤ stop_tol` before `max_iter`.
    pub converged: bool,
    /// Ended early on a numerical blowup.
    pub truncated: bool,
    pub blowup: Option<String>,
}

impl Trace {
    pub fn last(&self) -> &TraceEntry {
        self.entries.last().expect("trace always holds the initial entry")
    }

    pub fn iterations(&self) -> usize {
        self.last().k
    }

    pub fn states(&self) -> impl Iterator<Item = &SolverState> {
        self.entries.iter().map(|e| &e.state)
    }
}

fn entry(stepper: &dyn Stepper, state: SolverState, change: f64) -> TraceEntry {
    TraceEntry {
        k: state.k,
        objective: stepper.objective(&state),
        primal_residual: stepper.primal_residual(&state),
        change,
        state,
    }
}

/// Step until `max_iter` or until the primal residual drops to `stop_tol`.
///
/// The initial state is entry 0. A `NumericalBlowup` ends the run with a
/// truncated trace; every other error is returned.
pub fn run(stepper: &dyn Stepper, initial: SolverState, cfg: &SolverConfig) -> Result<Trace> {
    cfg.validate()?;
    let mut trace = Trace {
        stepper: stepper.name(),
        entries: vec![entry(stepper, initial, 0.0)],
        converged: false,
        truncated: false,
        blowup: None,
    };
    for _ in 0..cfg.max_iter {
        let prev = &trace.last().state;
        let next = match stepper.step(prev, cfg) {
            Ok(st) => st,
            Err(e @ Error::NumericalBlowup { .. }) => {
                trace.truncated = true;
                trace.blowup = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        let change = next.max_change(prev);
        let e = entry(stepper, next, change);
        let done = e.primal_residual <= cfg.stop_tol;
        if !cfg.record_trace {
            trace.entries.clear();
        }
        trace.entries.push(e);
        if done {
            trace.converged = true;
            break;
        }
    }
    Ok(trace)
}
