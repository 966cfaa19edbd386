mod common;

use std::sync::Arc;

use nlsh_core::grids::{origin_exponent, RadialGridSpec};
use nlsh_core::ground_state::{
    mass_sweep, sharp_constant, shooting_oracle, solve_ground_state, SolverOptions,
};
use nlsh_core::{Error, ExecPolicy};

use common::{ground_state, rel};

#[test]
fn converged_state_satisfies_pohozaev() {
    let gs = ground_state();
    assert!(gs.residual < 1e-8);
    let (a, b) = gs.pohozaev_defects();
    assert!(a < 1e-5 && b < 1e-5);
    assert!(gs
        .profile
        .values()
        .iter()
        .all(|z| z.re >= 0.0 && z.im == 0.0));
    assert_eq!(sharp_constant(gs), 5.0 / 3.0 * gs.mass_sq.powf(-2.0 / 3.0));
    assert_eq!(gs.sharp_constant, sharp_constant(gs));
}

#[test]
fn vanishing_coupling_approaches_classical_mass() {
    let grid = Arc::new(RadialGridSpec::desk(3, 1e-4).build().unwrap());
    let gs = solve_ground_state(&grid, SolverOptions::default()).unwrap();
    let classical = shooting_oracle(3, 0.0, 20.0).unwrap();
    assert!(rel(gs.mass_sq, classical.mass()) < 0.01);
}

#[test]
fn origin_exponent_limits() {
    assert!(origin_exponent(3, 0.0).abs() < 1e-15);
    assert!(rel(origin_exponent(3, 0.1), -0.5 + 0.15f64.sqrt()) < 1e-15);
}

#[test]
fn critical_coupling_fails_before_solving() {
    assert!(matches!(
        RadialGridSpec::desk(3, 0.25).build(),
        Err(Error::Parameter(_))
    ));
}

#[test]
fn sweep_matches_individual_solves_in_both_modes() {
    let base = RadialGridSpec::new(3, 0.1, 2048, 30.0);
    let cs = [0.05, 0.15];
    let par: Vec<_> = mass_sweep(base, &cs, SolverOptions::default(), ExecPolicy::Parallel)
        .into_iter()
        .map(|r| r.unwrap().mass_sq)
        .collect();
    let seq: Vec<_> = mass_sweep(base, &cs, SolverOptions::default(), ExecPolicy::Sequential)
        .into_iter()
        .map(|r| r.unwrap().mass_sq)
        .collect();
    assert_eq!(par, seq);
    // mass decreases as the attractive coupling strengthens
    assert!(par[1] < par[0]);
}

#[test]
fn iteration_cap_reports_nonconvergence() {
    let grid = Arc::new(RadialGridSpec::new(3, 0.1, 1024, 30.0).build().unwrap());
    let r = solve_ground_state(
        &grid,
        SolverOptions {
            tol: 1e-14,
            max_iters: 2,
        },
    );
    assert!(matches!(
        r,
        Err(Error::NonConvergence { iterations: 2, .. })
    ));
}
