use mdf_core::analytic::AnalyticFlow;
use mdf_core::assembly::Discretization;
use mdf_core::mesh::{PeriodicMesh, SpaceKind};
use mdf_core::run::{run, RunOutput};
use mdf_core::timestepping::{LinearSolver, Stepper};

fn shear_run(k: usize, degree: usize, dt: f64, steps: usize, reynolds: Option<f64>, solver: LinearSolver) -> RunOutput {
    let flow = AnalyticFlow::HelicalShear;
    let (lo, hi) = flow.box_bounds();
    let disc = Discretization::new(PeriodicMesh::new(k, lo, hi).unwrap(), degree).unwrap();
    let mut stepper = Stepper::new(&disc, dt, reynolds, None).unwrap().with_solver(solver);
    let u1 = disc.project_vector(SpaceKind::C, |x| flow.velocity(0.0, x), 0.0);
    let u2 = disc.project_vector(SpaceKind::D, |x| flow.velocity(0.0, x), 0.0);
    let init = stepper.initial_fields(u1, u2).unwrap();
    run(&disc, &mut stepper, init, steps, |_, _| Ok(())).unwrap()
}

#[test]
fn inviscid_shear_conserves_energy_and_helicity() {
    let out = shear_run(2, 2, 0.05, 20, None, LinearSolver::Direct);
    let first = &out.records[1];
    for r in &out.records[1..] {
        assert!(
            (r.k2 - first.k2).abs() <= 1e-11 * first.k2,
            "K2 at {}: {} vs {}",
            r.k,
            r.k2,
            first.k2
        );
        assert!((r.k1 - first.k1).abs() <= 1e-11 * first.k1, "K1 at {}", r.k);
        assert!((r.h1 - out.records[0].h1).abs() <= 1e-10, "H1 at {}: {}", r.k, r.h1);
        assert!((r.h2 - out.records[0].h2).abs() <= 1e-10, "H2 at {}: {}", r.k, r.h2);
        assert!(r.div_u2 <= 1e-10 && r.div_u2_coeffs <= 1e-11, "div at {}", r.k);
        assert_eq!(r.helicity_rate, 0.0);
    }
    assert_eq!(out.state.k, 20);
    assert!((out.state.time() - 1.0).abs() < 1e-12);
}

#[test]
fn viscous_shear_satisfies_energy_balance() {
    let out = shear_run(2, 2, 0.05, 20, Some(100.0), LinearSolver::Direct);
    for w in out.records.windows(2) {
        assert!(w[1].k2 < w[0].k2 || w[1].k == 1, "K2 not decreasing at {}", w[1].k);
        assert!(w[1].energy_residual_2.abs() <= 1e-10, "{:?}", w[1]);
        assert!(w[1].energy_residual_1.abs() <= 1e-10, "{:?}", w[1]);
        let rate = (w[1].h2 - w[0].h2) / 0.05;
        assert!(
            (rate - w[1].helicity_rate).abs() <= 1e-8 || w[1].k == 1,
            "helicity balance at {}",
            w[1].k
        );
    }
}

#[test]
fn krylov_and_direct_runs_agree() {
    let a = shear_run(2, 2, 0.1, 5, Some(10.0), LinearSolver::Direct);
    let b = shear_run(2, 2, 0.1, 5, Some(10.0), LinearSolver::Krylov);
    for (x, y) in a.records.iter().zip(&b.records) {
        assert!((x.k2 - y.k2).abs() < 1e-11);
        assert!((x.h1 - y.h1).abs() < 1e-10);
    }
    let diff = a
        .state
        .u2
        .coeffs
        .iter()
        .zip(&b.state.u2.coeffs)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max);
    assert!(diff < 1e-10, "{diff}");
}

#[test]
fn zero_steps_returns_initial_record_only() {
    let out = shear_run(1, 1, 0.1, 0, None, LinearSolver::Direct);
    assert_eq!(out.records.len(), 1);
    assert_eq!(out.records[0].k, 0);
    assert_eq!(out.records[0].energy_residual_2, 0.0);
}
