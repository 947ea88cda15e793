use std::sync::Arc;

use super::state::{expect_layout, Algorithm, Iterates, SolverConfig, SolverState};
use super::Stepper;
use crate::error::Result;
use crate::formulations::{build_master, dual_of_master, AdmProblem, DualProblem, MasterProblem};
use crate::prox::{norm2, ProxFunction, Vector};

/// Alg1: `y` by the `g` subproblem, then `x` by the `f` subproblem, then the multiplier.
pub fn adm1_step(p: &AdmProblem, m: &MasterProblem, st: &SolverState, cfg: &SolverConfig) -> Result<SolverState> {
    let Iterates::Primal { ax, z, .. } = &st.iterates else {
        return Err(expect_layout(st, "primal"));
    };
    let lambda = cfg.lambda;
    let ysol = m.y_update(&(-ax - &(z * lambda)), lambda)?;
    let xsol = m.x_update(&(-(&ysol.image - &p.b) - &(z * lambda)), lambda)?;
    let z = z + &(p.residual(&xsol.image, &ysol.image) / lambda);
    st.next(Iterates::Primal {
        x: xsol.x,
        y: ysol.x,
        z,
        ax: xsol.image,
        by: ysol.image,
    })
}

/// Alg2 on the master problem: `t`, then `s`, then `z`.
pub fn adm2_master_step(m: &MasterProblem, st: &SolverState, cfg: &SolverConfig) -> Result<SolverState> {
    let Iterates::Master { s, z, .. } = &st.iterates else {
        return Err(expect_layout(st, "master"));
    };
    let lambda = cfg.lambda;
    let t = m.big_g.prox(&(-s - &(z * lambda)), lambda)?;
    let s = m.big_f.prox(&(-&t - &(z * lambda)), lambda)?;
    let z = z + &((&s + &t) / lambda);
    st.next(Iterates::Master { s, t, z })
}

/// Alg3 on the dual problem; the penalty enters as `1/λ` in both prox calls.
pub fn adm3_dual_step(d: &DualProblem, st: &SolverState, cfg: &SolverConfig) -> Result<SolverState> {
    let Iterates::Dual { u, z, .. } = &st.iterates else {
        return Err(expect_layout(st, "dual"));
    };
    let lambda = cfg.lambda;
    let v = d.gstar_neg.prox(&(u + &(z / lambda)), 1.0 / lambda)?;
    let u = d.fstar_neg.prox(&(&v - &(z / lambda)), 1.0 / lambda)?;
    let z = z + &((&u - &v) * lambda);
    st.next(Iterates::Dual { u, v, z })
}

/// Alg4: extrapolated multiplier, `y` with metric `‖By − By_k + λū‖²`, then the `u` prox.
pub fn adm4_primal_dual_step(
    p: &AdmProblem,
    m: &MasterProblem,
    d: &DualProblem,
    st: &SolverState,
    cfg: &SolverConfig,
) -> Result<SolverState> {
    let Iterates::PrimalDual { by, u, u_prev, .. } = &st.iterates else {
        return Err(expect_layout(st, "primal-dual"));
    };
    let lambda = cfg.lambda;
    let u_bar = u * 2.0 - u_prev;
    let ysol = m.y_update(&(by - &(&u_bar * lambda) - &p.b), lambda)?;
    let u_new = d.fstar_neg.prox(&(u + &((&ysol.image - &p.b) / lambda)), 1.0 / lambda)?;
    st.next(Iterates::PrimalDual {
        y: ysol.x,
        by: ysol.image,
        u: u_new,
        u_prev: u.clone(),
    })
}

/// Alg5: the same three updates as Alg1 with `x` before `y`.
pub fn adm5_swapped_step(
    p: &AdmProblem,
    m: &MasterProblem,
    st: &SolverState,
    cfg: &SolverConfig,
) -> Result<SolverState> {
    let Iterates::Primal { by, z, .. } = &st.iterates else {
        return Err(expect_layout(st, "primal"));
    };
    let lambda = cfg.lambda;
    let xsol = m.x_update(&(-(by - &p.b) - &(z * lambda)), lambda)?;
    let ysol = m.y_update(&(-&xsol.image - &(z * lambda)), lambda)?;
    let z = z + &(p.residual(&xsol.image, &ysol.image) / lambda);
    st.next(Iterates::Primal {
        x: xsol.x,
        y: ysol.x,
        z,
        ax: xsol.image,
        by: ysol.image,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AdmAlgorithm {
    Alg1,
    Alg2,
    Alg3,
    Alg4,
    Alg5,
}

impl AdmAlgorithm {
    pub fn tag(self) -> Algorithm {
        match self {
            AdmAlgorithm::Alg1 => Algorithm::Alg1,
            AdmAlgorithm::Alg2 => Algorithm::Alg2,
            AdmAlgorithm::Alg3 => Algorithm::Alg3,
            AdmAlgorithm::Alg4 => Algorithm::Alg4,
            AdmAlgorithm::Alg5 => Algorithm::Alg5,
        }
    }
}

/// Generic ADM stepper over an [`AdmProblem`] and its derived forms.
#[derive(Debug, Clone)]
pub struct AdmStepper {
    pub problem: AdmProblem,
    pub master: Arc<MasterProblem>,
    pub dual: Arc<DualProblem>,
    pub algorithm: AdmAlgorithm,
}

impl AdmStepper {
    pub fn new(problem: AdmProblem, algorithm: AdmAlgorithm) -> Result<Self> {
        let master = build_master(&problem)?;
        let dual = dual_of_master(&master);
        Ok(AdmStepper {
            problem,
            master: Arc::new(master),
            dual: Arc::new(dual),
            algorithm,
        })
    }

    /// Shares the master and dual forms (and their factor caches) with `self`.
    pub fn with_algorithm(&self, algorithm: AdmAlgorithm) -> Self {
        AdmStepper {
            algorithm,
            ..self.clone()
        }
    }

    /// Start from `x⁰` and `z⁰` for the primal orders; `y⁰ = 0` (its image is what Alg5 reads).
    pub fn primal_init(&self, x: Vector, y: Vector, z: Vector) -> SolverState {
        let ax = self.problem.a.apply(&x);
        let by = self.problem.b_op.apply(&y);
        SolverState::new(self.algorithm.tag(), Iterates::Primal { x, y, z, ax, by })
    }

    pub fn zero_init(&self) -> SolverState {
        let p = &self.problem;
        let m = p.constraint_dim();
        let zeros = |n| Vector::zeros(n);
        let iterates = match self.algorithm {
            AdmAlgorithm::Alg1 | AdmAlgorithm::Alg5 => Iterates::Primal {
                x: zeros(p.a.cols()),
                y: zeros(p.b_op.cols()),
                z: zeros(m),
                ax: zeros(m),
                by: zeros(m),
            },
            AdmAlgorithm::Alg2 => Iterates::Master {
                s: zeros(m),
                t: zeros(m),
                z: zeros(m),
            },
            AdmAlgorithm::Alg3 => Iterates::Dual {
                u: zeros(m),
                v: zeros(m),
                z: zeros(m),
            },
            AdmAlgorithm::Alg4 => Iterates::PrimalDual {
                y: zeros(p.b_op.cols()),
                by: zeros(m),
                u: zeros(m),
                u_prev: zeros(m),
            },
        };
        SolverState::new(self.algorithm.tag(), iterates)
    }
}

impl Stepper for AdmStepper {
    fn name(&self) -> String {
        format!("{:?}", self.algorithm).to_lowercase()
    }

    fn step(&self, st: &SolverState, cfg: &SolverConfig) -> Result<SolverState> {
        match self.algorithm {
            AdmAlgorithm::Alg1 => adm1_step(&self.problem, &self.master, st, cfg),
            AdmAlgorithm::Alg2 => adm2_master_step(&self.master, st, cfg),
            AdmAlgorithm::Alg3 => adm3_dual_step(&self.dual, st, cfg),
            AdmAlgorithm::Alg4 => adm4_primal_dual_step(&self.problem, &self.master, &self.dual, st, cfg),
            AdmAlgorithm::Alg5 => adm5_swapped_step(&self.problem, &self.master, st, cfg),
        }
    }

    fn primal_residual(&self, st: &SolverState) -> f64 {
        match &st.iterates {
            Iterates::Primal { ax, by, .. } => norm2(&self.problem.residual(ax, by)),
            Iterates::Master { s, t, .. } => norm2(&(s + t)),
            Iterates::Dual { u, v, .. } => norm2(&(u - v)),
            // Ax + By − b = λ(u − u_prev) along matched runs
            Iterates::PrimalDual { u, u_prev, .. } => norm2(&(u - u_prev)),
            _ => f64::NAN,
        }
    }

    fn objective(&self, st: &SolverState) -> Option<f64> {
        let p = &self.problem;
        match &st.iterates {
            Iterates::Primal { x, y, .. } => p.objective(x, y),
            Iterates::Master { s, t, .. } => Some(self.master.big_f.value(s)? + self.master.big_g.value(t)?),
            Iterates::Dual { u, v, .. } => Some(self.dual.fstar_neg.value(u)? + self.dual.gstar_neg.value(v)?),
            Iterates::PrimalDual { y, by, .. } => {
                Some(p.g.value(y)? + self.master.big_f.value(&(&p.b - by))?)
            }
            _ => None,
        }
    }
}
