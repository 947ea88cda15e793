use std::sync::Arc;

use admeq::equivalence::{check_dual_solution_map, check_solution_maps, map_rprs, run_lockstep};
use admeq::instances::{
    make_bp, make_tight_frame_composite, two_block_image, BpForm, BpStepper, CompositeInstance, Family, Instance,
    InstanceSpec, TvAlgorithm, TvStepper, XSolve,
};
use admeq::prox::{L1Norm, QuadraticForm, ScaledIdentity};
use admeq::solvers::{run, Iterates, RprsStepper, SolverConfig, Stepper};
use admeq::Vector;
use ndarray::array;

fn cfg(iters: usize) -> SolverConfig {
    SolverConfig { record_trace: false, ..SolverConfig::default().with_max_iter(iters) }
}

fn rprs_solution(stepper: &RprsStepper, dim: usize, iters: usize) -> Vector {
    let trace = run(stepper, stepper.init(Vector::zeros(dim)), &cfg(iters)).unwrap();
    match &trace.last().state.iterates {
        Iterates::Rprs { x, .. } => x.clone(),
        _ => unreachable!(),
    }
}

#[test]
fn rprs_maps_hold_across_relaxation_and_lambda() {
    for family in [Family::Bpdn, Family::ThreeBlock, Family::Bp] {
        let inst = InstanceSpec::canonical(family).build().unwrap();
        for alpha in [0.5, 1.0] {
            for lambda in [0.5, 2.0] {
                let c = SolverConfig::default().with_alpha(alpha).with_lambda(lambda).with_max_iter(200);
                let report = run_lockstep(map_rprs(), &inst, &c, 1e-10).unwrap();
                assert!(
                    report.pass,
                    "{} alpha={alpha} lambda={lambda}: {:?}",
                    family.tag(),
                    report.per_quantity
                );
            }
        }
    }
}

#[test]
fn rprs_needs_a_prox_for_the_composition() {
    let tv = InstanceSpec::canonical(Family::Tv).build().unwrap();
    let err = run_lockstep(map_rprs(), &tv, &SolverConfig::default(), 1e-10).unwrap_err();
    assert!(matches!(err, admeq::Error::NoProxForComposition { .. }), "{err}");
}

#[test]
fn tv_primal_solution_maps_to_image_problem() {
    let spec = InstanceSpec::canonical(Family::Tv);
    let Instance::Tv(tv) = spec.build().unwrap() else { unreachable!() };
    let comp = Instance::Tv(tv.clone()).composite().unwrap();
    let s = TvStepper::new(tv, TvAlgorithm::Primal, XSolve::Fft);
    let trace = run(&s, s.zero_init(), &cfg(3000)).unwrap();
    let Iterates::Primal { y: x_star, .. } = &trace.last().state.iterates else { unreachable!() };
    let check = check_solution_maps(&comp, x_star, &cfg(3000), 1e-6).unwrap();
    assert!(check.pass, "{check:?}");
    assert_eq!(check.direction, "primal");
}

#[test]
fn bp_dual_solution_maps_to_conjugate_problem() {
    let inst = Arc::new(make_bp(5, 15, 3).unwrap());
    let comp = Instance::Bp(inst.clone()).composite().unwrap();
    let s = BpStepper::new(inst, BpForm::Dual);
    let trace = run(&s, s.zero_init(), &cfg(20000)).unwrap();
    let Iterates::Primal { x: v_star, .. } = &trace.last().state.iterates else { unreachable!() };
    let check = check_dual_solution_map(&comp, v_star, &cfg(20000), 1e-6).unwrap();
    assert!(check.pass, "{check:?}");
}

#[test]
fn identity_operator_maps_are_trivial() {
    let c = array![1.5, -0.2, 0.7, -3.0];
    let comp = CompositeInstance::new(
        Arc::new(QuadraticForm::squared_distance(1.0, &c)),
        Arc::new(L1Norm { dim: 4, weight: 0.5 }),
        ScaledIdentity::identity(4),
    )
    .unwrap();
    let x_star = rprs_solution(&comp.primal_stepper().unwrap(), 4, 500);
    // soft threshold of c by the ℓ₁ weight
    assert!(admeq::prox::max_abs_diff(&x_star, &array![1.0, 0.0, 0.2, -2.5]) < 1e-10);
    let check = check_solution_maps(&comp, &x_star, &cfg(500), 1e-6).unwrap();
    assert!(check.pass && check.deviation < 1e-10, "{check:?}");
}

#[test]
fn tight_frame_maps_in_both_directions() {
    let comp = make_tight_frame_composite(6, 10, 3, 0.3).unwrap();
    let x_star = rprs_solution(&comp.primal_stepper().unwrap(), 10, 2000);
    let primal = check_solution_maps(&comp, &x_star, &cfg(2000), 1e-6).unwrap();
    assert!(primal.pass, "{primal:?}");

    let v_star = rprs_solution(&comp.image_dual_stepper().unwrap(), 6, 2000);
    let dual = check_dual_solution_map(&comp, &v_star, &cfg(2000), 1e-6).unwrap();
    assert!(dual.pass, "{dual:?}");
}

#[test]
fn unconverged_input_fails_the_check() {
    let comp = make_tight_frame_composite(6, 10, 3, 0.3).unwrap();
    let x_star = rprs_solution(&comp.primal_stepper().unwrap(), 10, 2000);
    let off = &x_star + 0.1;
    let check = check_solution_maps(&comp, &off, &cfg(2000), 1e-6).unwrap();
    assert!(!check.pass);
}

#[test]
fn image_problem_is_reachable_from_composite_data() {
    let image = two_block_image(8, 8, 1);
    let mut spec = InstanceSpec::canonical(Family::Tv);
    spec.image = Some(image);
    let comp = spec.build().unwrap().composite().unwrap();
    let s = comp.image_stepper().unwrap();
    assert!(s.name().starts_with("rprs"));
}
