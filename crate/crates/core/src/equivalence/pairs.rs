use std::sync::Arc;

use super::{IterateMap, LockstepOptions, Recorder};
use crate::error::{Error, Result};
use crate::instances::{
    BasisPursuitInstance, BpForm, BpStepper, BpdnForm, BpdnInstance, BpdnStepper, Instance, TvAlgorithm, TvInstance,
    TvStepper,
};
use crate::prox::checks::passes_midpoint_affinity;
use crate::prox::{max_abs_diff, ProxFunction, Vector};
use crate::rng::SeededRng;
use crate::solvers::{
    AdmAlgorithm, AdmStepper, Algorithm, Iterates, SolverConfig, SolverState, Stepper, ThreeBlockDualStepper,
    ThreeBlockPrimalStepper,
};

/// Tolerance of the prox fixed-point test for the swapped-order precondition.
const PRECONDITION_TOL: f64 = 1e-10;

pub(super) fn run(
    pair: IterateMap,
    inst: &Instance,
    cfg: &SolverConfig,
    opts: LockstepOptions,
    rec: &mut Recorder,
) -> Result<()> {
    let mut rng = SeededRng::new(opts.seed);
    let ctx = Ctx {
        cfg,
        n: cfg.max_iter,
        eps: opts.perturb,
    };
    match pair {
        IterateMap::Alg1Alg2 => alg1_alg2(&adm_suite(inst, false)?, &ctx, &mut rng, rec),
        IterateMap::Alg2Alg3 => alg2_alg3(&adm_suite(inst, false)?, &ctx, &mut rng, rec),
        IterateMap::Alg1Alg4 => alg1_alg4(&adm_suite(inst, false)?, &ctx, &mut rng, rec),
        IterateMap::Alg5Alg1 => alg5_alg1(&adm_suite(inst, true)?, &ctx, &mut rng, rec, false),
        IterateMap::Alg5Alg1Offset => alg5_alg1(&adm_suite(inst, true)?, &ctx, &mut rng, rec, true),
        IterateMap::BasisPursuit => match inst {
            Instance::Bp(bp) => basis_pursuit(bp, &ctx, &mut rng, rec),
            _ => Err(inst.incompatible("the basis pursuit map")),
        },
        IterateMap::Bpdn => match inst {
            Instance::Bpdn(b) => bpdn(b, &ctx, &mut rng, rec),
            _ => Err(inst.incompatible("the BPDN map")),
        },
        IterateMap::ThreeBlock => match inst {
            Instance::ThreeBlock(p) => three_block(p, &ctx, &mut rng, rec),
            _ => Err(inst.incompatible("the three-block map")),
        },
        IterateMap::Rprs => rprs(inst, &ctx, &mut rng, rec),
        IterateMap::TotalVariation => match inst {
            Instance::Tv(tv) => total_variation(tv, &ctx, &mut rng, rec),
            _ => Err(inst.incompatible("the TV map")),
        },
    }
}

struct Ctx<'a> {
    cfg: &'a SolverConfig,
    n: usize,
    eps: f64,
}

impl Ctx<'_> {
    fn lambda(&self) -> f64 {
        self.cfg.lambda
    }

    fn trajectory(&self, stepper: &dyn Stepper, init: SolverState, steps: usize) -> Result<Vec<SolverState>> {
        let mut out = Vec::with_capacity(steps + 1);
        out.push(init);
        for _ in 0..steps {
            let next = stepper.step(out.last().expect("non-empty"), self.cfg)?;
            out.push(next);
        }
        Ok(out)
    }

    fn nudge(&self, mut v: Vector) -> Vector {
        if self.eps != 0.0 && !v.is_empty() {
            v[0] += self.eps;
        }
        v
    }
}

struct PrimalView<'a> {
    x: &'a Vector,
    y: &'a Vector,
    z: &'a Vector,
    ax: &'a Vector,
    by: &'a Vector,
}

fn layout_error(st: &SolverState, wanted: &str) -> Error {
    Error::Incompatible(format!("expected a {wanted} state, found {:?}", st.algorithm))
}

fn primal(st: &SolverState) -> Result<PrimalView<'_>> {
    match &st.iterates {
        Iterates::Primal { x, y, z, ax, by } => Ok(PrimalView { x, y, z, ax, by }),
        _ => Err(layout_error(st, "primal")),
    }
}

fn master(st: &SolverState) -> Result<(&Vector, &Vector, &Vector)> {
    match &st.iterates {
        Iterates::Master { s, t, z } => Ok((s, t, z)),
        _ => Err(layout_error(st, "master")),
    }
}

fn dual(st: &SolverState) -> Result<(&Vector, &Vector, &Vector)> {
    match &st.iterates {
        Iterates::Dual { u, v, z } => Ok((u, v, z)),
        _ => Err(layout_error(st, "dual")),
    }
}

fn primal_dual(st: &SolverState) -> Result<(&Vector, &Vector, &Vector)> {
    match &st.iterates {
        Iterates::PrimalDual { by, u, u_prev, .. } => Ok((by, u, u_prev)),
        _ => Err(layout_error(st, "primal-dual"),),
    }
}

/// Generic steppers on one ADM problem, with the TV closed forms standing in where they exist.
struct AdmSuite {
    base: AdmStepper,
    tv: Option<Arc<TvInstance>>,
}

impl AdmSuite {
    fn stepper(&self, alg: AdmAlgorithm) -> Box<dyn Stepper> {
        if let Some(tv) = &self.tv {
            let special = match alg {
                AdmAlgorithm::Alg1 => Some(TvAlgorithm::Primal),
                AdmAlgorithm::Alg3 => Some(TvAlgorithm::Dual),
                AdmAlgorithm::Alg4 => Some(TvAlgorithm::PrimalDual),
                AdmAlgorithm::Alg5 => Some(TvAlgorithm::Swapped),
                AdmAlgorithm::Alg2 => None,
            };
            if let Some(a) = special {
                return Box::new(TvStepper::new(tv.clone(), a, tv.preferred_solve()));
            }
        }
        Box::new(self.base.with_algorithm(alg))
    }

    fn b(&self) -> &Vector {
        &self.base.problem.b
    }

    /// Random `x, y, z` in the primal layout tagged `alg`.
    fn random_primal(&self, rng: &mut SeededRng, alg: AdmAlgorithm) -> SolverState {
        let p = &self.base.problem;
        let x = rng.normal_vector(p.a.cols());
        let y = rng.normal_vector(p.b_op.cols());
        let z = rng.normal_vector(p.constraint_dim());
        self.base.with_algorithm(alg).primal_init(x, y, z)
    }

    fn primal_state(&self, alg: AdmAlgorithm, x: Vector, y: Vector, z: Vector) -> SolverState {
        self.base.with_algorithm(alg).primal_init(x, y, z)
    }
}

/// BP and BPDN use the split whose first block is the dual variable, except that the
/// swapped-order maps on BPDN need a quadratic second block and use the primal split.
fn adm_suite(inst: &Instance, swapped: bool) -> Result<AdmSuite> {
    let (problem, tv) = match inst {
        Instance::Bp(bp) => (bp.dual_split()?, None),
        Instance::Bpdn(b) if swapped => (b.primal_split()?, None),
        Instance::Bpdn(b) => (b.dual_split()?, None),
        Instance::Tv(tv) => (tv.adm_problem()?, Some(tv.clone())),
        _ => return Err(inst.incompatible("the generic ADM maps")),
    };
    Ok(AdmSuite {
        base: AdmStepper::new(problem, AdmAlgorithm::Alg1)?,
        tv,
    })
}

fn alg1_alg2(s: &AdmSuite, ctx: &Ctx, rng: &mut SeededRng, rec: &mut Recorder) -> Result<()> {
    let a0 = s.random_primal(rng, AdmAlgorithm::Alg1);
    let p = primal(&a0)?;
    let b0 = SolverState::new(
        Algorithm::Alg2,
        Iterates::Master {
            s: p.ax.clone(),
            t: p.by - s.b(),
            z: ctx.nudge(p.z.clone()),
        },
    );
    let one = ctx.trajectory(s.stepper(AdmAlgorithm::Alg1).as_ref(), a0, ctx.n)?;
    let two = ctx.trajectory(s.stepper(AdmAlgorithm::Alg2).as_ref(), b0, ctx.n)?;
    for k in 0..=ctx.n {
        let p = primal(&one[k])?;
        let (s2, t2, z2) = master(&two[k])?;
        rec.record(k, "s", s2, p.ax);
        rec.record(k, "t", t2, &(p.by - s.b()));
        rec.record(k, "z", z2, p.z);
    }
    Ok(())
}

fn alg2_alg3(s: &AdmSuite, ctx: &Ctx, rng: &mut SeededRng, rec: &mut Recorder) -> Result<()> {
    let m = s.base.problem.constraint_dim();
    let (s0, t0, z0) = (rng.normal_vector(m), rng.normal_vector(m), rng.normal_vector(m));
    let v0 = rng.normal_vector(m);
    let b0 = SolverState::new(
        Algorithm::Alg3,
        Iterates::Dual {
            u: z0.clone(),
            v: v0,
            z: ctx.nudge(s0.clone()),
        },
    );
    let a0 = SolverState::new(Algorithm::Alg2, Iterates::Master { s: s0, t: t0, z: z0 });
    let two = ctx.trajectory(s.stepper(AdmAlgorithm::Alg2).as_ref(), a0, ctx.n)?;
    let three = ctx.trajectory(s.stepper(AdmAlgorithm::Alg3).as_ref(), b0, ctx.n)?;
    let lambda = ctx.lambda();
    for k in 0..=ctx.n {
        let (s2, t2, z2) = master(&two[k])?;
        let (u3, v3, z3) = dual(&three[k])?;
        rec.record(k, "u", u3, z2);
        rec.record(k, "z", z3, s2);
        if k >= 1 {
            let (s_prev, _, z_prev) = master(&two[k - 1])?;
            rec.record(k, "v", v3, &((s_prev + t2 + &(z_prev * lambda)) / lambda));
        }
    }
    Ok(())
}

fn alg1_alg4(s: &AdmSuite, ctx: &Ctx, rng: &mut SeededRng, rec: &mut Recorder) -> Result<()> {
    let lambda = ctx.lambda();
    let a0 = s.random_primal(rng, AdmAlgorithm::Alg1);
    let p = primal(&a0)?;
    let y4 = rng.normal_vector(s.base.problem.b_op.cols());
    let by4 = s.base.problem.b_op.apply(&y4);
    let u = p.z.clone();
    let u_prev = &u - &(s.base.problem.residual(p.ax, &by4) / lambda);
    let b0 = SolverState::new(
        Algorithm::Alg4,
        Iterates::PrimalDual {
            y: y4,
            by: by4,
            u: ctx.nudge(u),
            u_prev,
        },
    );
    let one = ctx.trajectory(s.stepper(AdmAlgorithm::Alg1).as_ref(), a0, ctx.n)?;
    let four = ctx.trajectory(s.stepper(AdmAlgorithm::Alg4).as_ref(), b0, ctx.n)?;
    for k in 0..=ctx.n {
        let p = primal(&one[k])?;
        let (by4, u, u_prev) = primal_dual(&four[k])?;
        rec.record(k, "ax", p.ax, &((u - u_prev) * lambda + s.b() - by4));
        rec.record(k, "z", p.z, u);
        if k >= 1 {
            rec.record(k, "by", p.by, by4);
        }
    }
    Ok(())
}

/// Guard of the swapped-order maps: the master `G` must have an affine prox.
fn require_affine(s: &AdmSuite) -> Result<()> {
    let g = s.base.master.big_g.as_ref();
    if !passes_midpoint_affinity(g, 0x6a11)? {
        return Err(Error::NotAffineProx(format!(
            "prox of the second-block master function ({}) failed the midpoint test",
            g.function().label()
        )));
    }
    Ok(())
}

/// `By − b = prox_G(By − b − z)`, the fixed-point form of `−z ∈ ∂G(By − b)`.
fn check_swapped_precondition(s: &AdmSuite, by: &Vector, z: &Vector) -> Result<()> {
    let t = by - s.b();
    let gap = max_abs_diff(&s.base.master.big_g.prox(&(&t - z), 1.0)?, &t);
    if !(gap <= PRECONDITION_TOL) {
        return Err(Error::InitUnsatisfiable(format!(
            "−z⁰ is not a subgradient of G at By⁰ − b (prox fixed-point gap {gap:e})"
        )));
    }
    Ok(())
}

fn alg5_alg1(s: &AdmSuite, ctx: &Ctx, rng: &mut SeededRng, rec: &mut Recorder, offset: bool) -> Result<()> {
    require_affine(s)?;
    let lambda = ctx.lambda();
    let p = &s.base.problem;
    let shift = usize::from(offset);
    let five0 = if offset {
        s.random_primal(rng, AdmAlgorithm::Alg5)
    } else {
        // t = prox_G(r) makes r − t a subgradient at t, so z⁰ = t − r satisfies the precondition
        let r = rng.normal_vector(p.constraint_dim());
        let ysol = s.base.master.y_update(&r, 1.0)?;
        let z = &ysol.image - s.b() - &r;
        check_swapped_precondition(s, &ysol.image, &z)?;
        s.primal_state(AdmAlgorithm::Alg5, rng.normal_vector(p.a.cols()), ysol.x, z)
    };
    let five = ctx.trajectory(s.stepper(AdmAlgorithm::Alg5).as_ref(), five0, ctx.n + 1 + shift)?;
    let next = primal(&five[1 + shift])?;
    let base = primal(&five[shift])?;
    let z1 = base.z + &(p.residual(next.ax, base.by) / lambda);
    let one0 = s.primal_state(AdmAlgorithm::Alg1, next.x.clone(), base.y.clone(), ctx.nudge(z1));
    let one = ctx.trajectory(s.stepper(AdmAlgorithm::Alg1).as_ref(), one0, ctx.n)?;
    for k in 0..=ctx.n {
        let a = primal(&one[k])?;
        let cur = primal(&five[k + shift])?;
        let nxt = primal(&five[k + 1 + shift])?;
        rec.record(k, "ax", a.ax, nxt.ax);
        rec.record(k, "z", a.z, &(cur.z + &(p.residual(nxt.ax, cur.by) / lambda)));
        if k >= 1 {
            let prev = primal(&five[k - 1 + shift])?;
            rec.record(k, "by", a.by, &(cur.by * 2.0 - prev.by));
        }
    }
    Ok(())
}

fn basis_pursuit(inst: &Arc<BasisPursuitInstance>, ctx: &Ctx, rng: &mut SeededRng, rec: &mut Recorder) -> Result<()> {
    let (m, n) = (inst.m(), inst.n());
    let dual_run = BpStepper::new(inst.clone(), BpForm::Dual);
    let primal_run = BpStepper::new(inst.clone(), BpForm::Primal);
    let memo_run = BpStepper::new(inst.clone(), BpForm::Memoized);
    let a0 = dual_run.dual_init(rng.normal_vector(m), rng.normal_vector(n), rng.normal_vector(n));
    let p = primal(&a0)?;
    let b0 = SolverState::new(
        Algorithm::Alg3,
        Iterates::Dual {
            u: ctx.nudge(p.z.clone()),
            v: rng.normal_vector(n),
            z: p.ax.clone(),
        },
    );
    let m0 = SolverState::new(
        Algorithm::Alg2,
        Iterates::Master {
            s: p.ax.clone(),
            t: p.y.clone(),
            z: p.z.clone(),
        },
    );
    let one = ctx.trajectory(&dual_run, a0, ctx.n)?;
    let three = ctx.trajectory(&primal_run, b0, ctx.n)?;
    let memo = ctx.trajectory(&memo_run, m0, ctx.n)?;
    for k in 0..=ctx.n {
        let p = primal(&one[k])?;
        let (u3, _, z3) = dual(&three[k])?;
        rec.record(k, "u", u3, p.z);
        rec.record(k, "z", z3, p.ax);
        rec.record(k, "x", p.x, &inst.gram_solve(&inst.op.apply(z3)));
        let (s2, t2, z2) = master(&memo[k])?;
        rec.record(k, "memoized", s2, p.ax);
        rec.record(k, "memoized", t2, p.y);
        rec.record(k, "memoized", z2, p.z);
    }
    Ok(())
}

fn bpdn(inst: &Arc<BpdnInstance>, ctx: &Ctx, rng: &mut SeededRng, rec: &mut Recorder) -> Result<()> {
    let (m, n) = (inst.m(), inst.n());
    let dual_run = BpdnStepper::new(inst.clone(), BpdnForm::Dual)?;
    let primal_run = BpdnStepper::new(inst.clone(), BpdnForm::Primal)?;
    let memo_run = BpdnStepper::new(
        inst.clone(),
        if inst.orthonormal {
            BpdnForm::Orthonormal
        } else {
            BpdnForm::Memoized
        },
    )?;
    let a0 = dual_run.dual_init(rng.normal_vector(m), rng.normal_vector(n), rng.normal_vector(n));
    let p = primal(&a0)?;
    let b0 = SolverState::new(
        Algorithm::Alg3,
        Iterates::Dual {
            u: ctx.nudge(p.z.clone()),
            v: rng.normal_vector(n),
            z: p.ax.clone(),
        },
    );
    let m0 = SolverState::new(
        Algorithm::Alg2,
        Iterates::Master {
            s: p.ax.clone(),
            t: p.y.clone(),
            z: p.z.clone(),
        },
    );
    let one = ctx.trajectory(&dual_run, a0, ctx.n)?;
    let three = ctx.trajectory(&primal_run, b0, ctx.n)?;
    let memo = ctx.trajectory(&memo_run, m0, ctx.n)?;
    for k in 0..=ctx.n {
        let p = primal(&one[k])?;
        let (u3, _, z3) = dual(&three[k])?;
        rec.record(k, "z", p.z, u3);
        rec.record(k, "s", p.ax, z3);
        if k >= 1 {
            let predicted = -(inst.op.apply(u3) - &inst.b) / inst.alpha;
            rec.record(k, "x", p.x, &predicted);
        }
        let (s2, t2, z2) = master(&memo[k])?;
        rec.record(k, "memoized", s2, p.ax);
        rec.record(k, "memoized", t2, p.y);
        rec.record(k, "memoized", z2, p.z);
    }
    Ok(())
}

fn three_block(
    problem: &crate::formulations::ThreeBlockProblem,
    ctx: &Ctx,
    rng: &mut SeededRng,
    rec: &mut Recorder,
) -> Result<()> {
    if problem.mu != 1.0 {
        return Err(Error::InitUnsatisfiable(format!(
            "the three-block map holds for coupling scalar 1, got {}",
            problem.mu
        )));
    }
    let (m, n) = (problem.c.rows(), problem.c.cols());
    let primal_run = ThreeBlockPrimalStepper::new(problem.clone());
    let dual_run = ThreeBlockDualStepper::new(problem.clone());
    let (x, s, y) = (rng.normal_vector(n), rng.normal_vector(n), rng.normal_vector(m));
    let (z_s, z_y) = (rng.normal_vector(n), rng.normal_vector(m));
    let b0 = dual_run.init(rng.normal_vector(m), ctx.nudge(z_s.clone()), z_y.clone(), -&s, y.clone());
    let a0 = primal_run.init(x, s, y, z_s, z_y);
    let one = ctx.trajectory(&primal_run, a0, ctx.n)?;
    let two = ctx.trajectory(&dual_run, b0, ctx.n)?;
    for k in 0..=ctx.n {
        let (Iterates::ThreeBlockPrimal { s, y, z_s, z_y, .. }, Iterates::ThreeBlockDual { u, t, z_u, z_t, .. }) =
            (&one[k].iterates, &two[k].iterates)
        else {
            return Err(layout_error(&one[k], "three-block"));
        };
        rec.record(k, "t", t, z_y);
        rec.record(k, "u", u, z_s);
        rec.record(k, "z_u", &-z_u, s);
        rec.record(k, "z_t", z_t, y);
    }
    Ok(())
}

fn rprs(inst: &Instance, ctx: &Ctx, rng: &mut SeededRng, rec: &mut Recorder) -> Result<()> {
    let comp = inst.composite()?;
    let lambda = ctx.lambda();
    let p = comp.primal_stepper()?;
    let d = comp.dual_stepper()?;
    let w = rng.normal_vector(comp.a.cols());
    let b0 = d.init(ctx.nudge(&w / lambda));
    let one = ctx.trajectory(&p, p.init(w), ctx.n)?;
    let two = ctx.trajectory(&d, b0, ctx.n)?;
    let rprs = |st: &SolverState| match &st.iterates {
        Iterates::Rprs { w, x, .. } => Ok((w.clone(), x.clone())),
        _ => Err(layout_error(st, "rprs")),
    };
    for k in 0..=ctx.n {
        let (w1, x1) = rprs(&one[k])?;
        let (w2, x2) = rprs(&two[k])?;
        rec.record(k, "w", &w2, &(&w1 / lambda));
        if k >= 1 {
            let (w_prev, _) = rprs(&one[k - 1])?;
            rec.record(k, "x + λv", &(&x1 + &(&x2 * lambda)), &w_prev);
        }
    }
    Ok(())
}

/// Swapped-order run from `x⁰ = b + div z⁰/α` and the other three matched to its first step.
fn total_variation(tv: &Arc<TvInstance>, ctx: &Ctx, rng: &mut SeededRng, rec: &mut Recorder) -> Result<()> {
    let s = AdmSuite {
        base: AdmStepper::new(tv.adm_problem()?, AdmAlgorithm::Alg1)?,
        tv: Some(tv.clone()),
    };
    let lambda = ctx.lambda();
    let m = 2 * tv.pixels();
    let z5 = rng.normal_vector(m);
    let image5 = &tv.image + &(tv.divergence(&z5) / tv.alpha);
    let five0 = s.primal_state(AdmAlgorithm::Alg5, rng.normal_vector(m), image5, z5);
    check_swapped_precondition(&s, primal(&five0)?.by, primal(&five0)?.z)?;
    let five = ctx.trajectory(s.stepper(AdmAlgorithm::Alg5).as_ref(), five0, ctx.n + 1)?;

    let (p0, p1) = (primal(&five[0])?, primal(&five[1])?);
    let field = p1.x.clone();
    let z1 = p0.z + &((p0.by - &field) / lambda);
    let one0 = s.primal_state(AdmAlgorithm::Alg1, field.clone(), p0.y.clone(), ctx.nudge(z1.clone()));
    let three0 = SolverState::new(
        Algorithm::Alg3,
        Iterates::Dual {
            u: z1.clone(),
            v: Vector::zeros(m),
            z: -&field,
        },
    );
    let u_prev = &z1 - &((p0.by - &field) / lambda);
    let four0 = SolverState::new(
        Algorithm::Alg4,
        Iterates::PrimalDual {
            y: p0.y.clone(),
            by: p0.by.clone(),
            u: z1,
            u_prev,
        },
    );
    let one = ctx.trajectory(s.stepper(AdmAlgorithm::Alg1).as_ref(), one0, ctx.n)?;
    let three = ctx.trajectory(s.stepper(AdmAlgorithm::Alg3).as_ref(), three0, ctx.n)?;
    let four = ctx.trajectory(s.stepper(AdmAlgorithm::Alg4).as_ref(), four0, ctx.n)?;
    for k in 0..=ctx.n {
        let a = primal(&one[k])?;
        let (u3, _, z3) = dual(&three[k])?;
        let (by4, u4, u4_prev) = primal_dual(&four[k])?;
        let (cur, nxt) = (primal(&five[k])?, primal(&five[k + 1])?);
        rec.record(k, "field: dual", &-z3, a.x);
        rec.record(k, "field: primal-dual", &(by4 - &((u4 - u4_prev) * lambda)), a.x);
        rec.record(k, "field: swapped", nxt.x, a.x);
        rec.record(k, "multiplier: dual", u3, a.z);
        rec.record(k, "multiplier: primal-dual", u4, a.z);
        rec.record(k, "multiplier: swapped", &(cur.z + &((cur.by - nxt.x) / lambda)), a.z);
    }
    Ok(())
}
