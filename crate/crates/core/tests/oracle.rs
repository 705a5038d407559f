mod common;

use common::*;
use momsos::conic::SolverSettings;
use momsos::oracle::{brute_force_min, OracleSettings, DEFAULT_SAMPLES};
use momsos::poly::Poly;
use momsos::relax::{solve_relaxation, Instance};
use momsos::Error;

fn run(inst: &Instance, samples: usize) -> momsos::OracleResult {
    let p = inst.preprocess().unwrap();
    brute_force_min(&p, &OracleSettings { samples, ..Default::default() }).unwrap()
}

fn check_result_invariants(inst: &Instance, r: &momsos::OracleResult) {
    assert_eq!(r.value, inst.objective().eval(&r.argmin).unwrap());
    let slack = inst.radius().powi(2) - r.argmin.iter().map(|v| v * v).sum::<f64>();
    assert!(slack >= -1e-9);
    for g in inst.constraints() {
        assert!(g.eval(&r.argmin).unwrap() >= -1e-9);
    }
}

#[test]
fn cubic_disk_optimum() {
    let inst = cubic_disk();
    let r = run(&inst, DEFAULT_SAMPLES);
    assert!((r.value + 2.0 / 3.0).abs() <= 1e-3, "{}", r.value);
    assert!((r.argmin[0] + 1.0).abs() < 1e-2 && r.argmin[1].abs() < 1e-2, "{:?}", r.argmin);
    check_result_invariants(&inst, &r);
}

#[test]
fn squared_norm_minimized_at_origin() {
    let f = Poly::unit_ball(3).scale(-1.0);
    let f = &f + &Poly::constant(3, 1.0);
    let inst = Instance::new(f, vec![], 1.0).unwrap();
    let r = run(&inst, 4000);
    assert!(r.value.abs() < 1e-10);
    assert!(r.argmin.iter().all(|v| v.abs() < 1e-5));
    check_result_invariants(&inst, &r);
}

#[test]
fn cubic_on_unit_interval() {
    let inst = cubic_interval();
    let r = run(&inst, 4000);
    assert!(r.value.abs() < 1e-6, "{}", r.value);
    assert!(r.argmin[0].abs() < 1e-2);
    check_result_invariants(&inst, &r);
}

#[test]
fn respects_radius_scaling() {
    // Motzkin minimum 0 at (±1, ±1), reachable only because R = 2
    let inst = motzkin();
    let r = run(&inst, 20_000);
    assert!(r.value.abs() < 1e-6);
    assert!(r.argmin.iter().all(|v| (v.abs() - 1.0).abs() < 1e-2));
    check_result_invariants(&inst, &r);
}

#[test]
fn halfplane_constraint_is_respected() {
    let inst = cubic_disk_halfplane();
    let r = run(&inst, 20_000);
    check_result_invariants(&inst, &r);
    assert!(r.feasible_samples < r.samples_used);
}

#[test]
fn guards() {
    let s = OracleSettings::default();
    assert_eq!(
        brute_force_min(&cubic_disk(), &s).unwrap_err(),
        Error::NotPreprocessed
    );
    let big = Instance::new(Poly::unit_ball(5), vec![], 1.0).unwrap().preprocess().unwrap();
    assert!(matches!(brute_force_min(&big, &s), Err(Error::InvalidArgument(_))));
    let p = cubic_disk().preprocess().unwrap();
    let few = OracleSettings { samples: 999, ..s };
    assert!(matches!(brute_force_min(&p, &few), Err(Error::InvalidArgument(_))));
}

#[test]
fn empty_feasible_set_is_reported() {
    let g = poly(2, &[(&[0, 0], -1.0), (&[2, 0], -1.0)]);
    let inst = Instance::new(cubic_disk_objective(), vec![g], 1.0).unwrap().preprocess().unwrap();
    assert_eq!(
        brute_force_min(&inst, &OracleSettings { samples: 2000, ..Default::default() }).unwrap_err(),
        Error::NoFeasibleSample { samples: 2000 }
    );
}

#[test]
fn never_below_relaxation_bounds() {
    let settings = SolverSettings::default();
    for (name, inst) in regression_suite() {
        let p = inst.preprocess().unwrap();
        let o = brute_force_min(&p, &OracleSettings { samples: 10_000, ..Default::default() }).unwrap();
        let n0 = p.n_min().unwrap().max(2);
        for n in n0..=n0 + 1 {
            let sol = solve_relaxation(&p, n, &settings).unwrap();
            assert!(o.value >= sol.bound - 1e-6, "{name} n={n}: {} < {}", o.value, sol.bound);
        }
    }
}

#[test]
fn doubling_samples_never_worsens() {
    for inst in [cubic_disk(), two_basin(), random_instance(3), random_instance(8)] {
        let p = inst.preprocess().unwrap();
        let mut prev = f64::INFINITY;
        for samples in [1000, 2000, 4000, 8000] {
            let v = brute_force_min(&p, &OracleSettings { samples, ..Default::default() })
                .unwrap()
                .value;
            assert!(v <= prev + 1e-9, "{samples}: {v} > {prev}");
            prev = v;
        }
    }
}

#[test]
fn seed_changes_samples_not_answer() {
    let p = cubic_disk().preprocess().unwrap();
    let a = brute_force_min(&p, &OracleSettings { samples: 5000, seed: 1, ..Default::default() }).unwrap();
    let b = brute_force_min(&p, &OracleSettings { samples: 5000, seed: 777, ..Default::default() }).unwrap();
    let again = brute_force_min(&p, &OracleSettings { samples: 5000, seed: 1, ..Default::default() }).unwrap();
    assert_eq!(a, again);
    assert!((a.value - b.value).abs() < 1e-3);
}
