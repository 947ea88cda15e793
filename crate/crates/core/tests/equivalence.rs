use admeq::equivalence::{
    map_alg5_alg1, map_three_block, run_lockstep, run_lockstep_with, suite_entries, IterateMap, LockstepOptions,
    DEFAULT_TOLERANCE,
};
use admeq::instances::{Family, InstanceSpec};
use admeq::solvers::SolverConfig;
use admeq::Error;

fn cfg(lambda: f64, iters: usize) -> SolverConfig {
    SolverConfig::default().with_lambda(lambda).with_max_iter(iters)
}

#[test]
fn every_suite_entry_holds_across_lambdas() {
    for (pair, family) in suite_entries() {
        let inst = InstanceSpec::canonical(family).build().unwrap();
        for lambda in [0.1, 1.0, 10.0] {
            let report = run_lockstep(pair, &inst, &cfg(lambda, 100), DEFAULT_TOLERANCE).unwrap();
            assert!(
                report.pass,
                "{} on {} lambda={lambda}: {:e} {:?}",
                pair.name(),
                family.tag(),
                report.max_deviation,
                report.per_quantity
            );
            assert_eq!(report.per_iteration.len(), 101);
            assert!(report.per_iteration.iter().all(|d| *d >= 0.0));
        }
    }
}

#[test]
fn other_seeds_hold_too() {
    let inst = InstanceSpec::canonical(Family::Bpdn).build().unwrap();
    for seed in [2, 3, 40] {
        for pair in [IterateMap::Alg1Alg2, IterateMap::Alg2Alg3, IterateMap::Alg1Alg4, IterateMap::Bpdn] {
            let opts = LockstepOptions { seed, perturb: 0.0 };
            let report = run_lockstep_with(pair, &inst, &cfg(1.0, 50), DEFAULT_TOLERANCE, opts).unwrap();
            assert!(report.pass, "{} seed {seed}: {:e}", pair.name(), report.max_deviation);
        }
    }
}

#[test]
fn perturbed_init_breaks_every_map() {
    for (pair, family) in suite_entries() {
        let inst = InstanceSpec::canonical(family).build().unwrap();
        let opts = LockstepOptions { seed: 1, perturb: 1e-3 };
        let report = run_lockstep_with(pair, &inst, &cfg(1.0, 10), DEFAULT_TOLERANCE, opts).unwrap();
        assert!(!report.pass, "{} on {}", pair.name(), family.tag());
        let early = report.max_through(3);
        assert!(early >= 1e-4, "{} on {}: {early:e}", pair.name(), family.tag());
    }
}

#[test]
fn zero_iterations_compare_only_the_init() {
    for (pair, family) in suite_entries() {
        let inst = InstanceSpec::canonical(family).build().unwrap();
        let report = run_lockstep(pair, &inst, &cfg(1.0, 0), DEFAULT_TOLERANCE).unwrap();
        assert!(report.pass, "{}", pair.name());
        assert_eq!(report.iterations, 0);
        assert_eq!(report.per_iteration.len(), 1);
    }
}

#[test]
fn swapped_map_needs_affine_prox() {
    let bp = InstanceSpec::canonical(Family::Bp).build().unwrap();
    for offset in [false, true] {
        let err = run_lockstep(map_alg5_alg1(offset), &bp, &cfg(1.0, 10), DEFAULT_TOLERANCE).unwrap_err();
        assert!(matches!(err, Error::NotAffineProx(_)), "{err}");
    }
}

#[test]
fn three_block_map_needs_unit_coupling() {
    let mut spec = InstanceSpec::canonical(Family::ThreeBlock);
    spec.mu = 2.0;
    let inst = spec.build().unwrap();
    let err = run_lockstep(map_three_block(), &inst, &cfg(1.0, 10), DEFAULT_TOLERANCE).unwrap_err();
    assert!(matches!(err, Error::InitUnsatisfiable(_)), "{err}");
}

#[test]
fn family_mismatch_is_rejected() {
    let tv = InstanceSpec::canonical(Family::Tv).build().unwrap();
    assert!(run_lockstep(IterateMap::BasisPursuit, &tv, &cfg(1.0, 5), DEFAULT_TOLERANCE).is_err());
}

#[test]
fn invalid_lambda_is_rejected() {
    let inst = InstanceSpec::canonical(Family::Bpdn).build().unwrap();
    let err = run_lockstep(IterateMap::Alg1Alg2, &inst, &cfg(-1.0, 5), DEFAULT_TOLERANCE).unwrap_err();
    assert!(matches!(err, Error::InvalidParameter(_)));
}

#[test]
fn report_json_has_the_documented_keys() {
    let inst = InstanceSpec::canonical(Family::Bpdn).build().unwrap();
    let report = run_lockstep(IterateMap::Alg1Alg2, &inst, &cfg(1.0, 20), DEFAULT_TOLERANCE).unwrap();
    let json = serde_json::to_value(&report).unwrap();
    let obj = json.as_object().unwrap();
    for key in ["pair", "iterations", "tolerance", "max_deviation", "per_quantity", "pass"] {
        assert!(obj.contains_key(key), "{key}");
    }
    assert_eq!(obj["pair"], "alg1-alg2");
    assert_eq!(obj["iterations"], 20);
    let quantities = obj["per_quantity"].as_object().unwrap();
    assert!(!quantities.is_empty());
    assert!(quantities.values().all(|v| v.as_f64().unwrap() >= 0.0));
}

#[test]
fn lockstep_reports_are_deterministic() {
    let inst = InstanceSpec::canonical(Family::Tv).build().unwrap();
    let a = run_lockstep(IterateMap::TotalVariation, &inst, &cfg(1.0, 30), DEFAULT_TOLERANCE).unwrap();
    let b = run_lockstep(IterateMap::TotalVariation, &inst, &cfg(1.0, 30), DEFAULT_TOLERANCE).unwrap();
    assert_eq!(a, b);
}

#[test]
fn names_round_trip() {
    for pair in IterateMap::ALL {
        assert_eq!(IterateMap::parse(pair.name()), Some(pair));
    }
    assert_eq!(IterateMap::parse("alg9-alg1"), None);
}
