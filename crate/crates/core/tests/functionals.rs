mod common;

use std::f64::consts::PI;

use nlsh_core::functionals::{
    diamagnetic_defect, energy, gn_ratio, hardy_functional, hardy_margin, lp_norm, mass,
    InvariantReport,
};
use nlsh_core::grids::{hardy_constant, Field, Grid};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{
    cartesian_grid, ground_state, radial_grid, random_cartesian_field, random_radial_field, rel,
};

fn half_gaussian(c: f64) -> Field {
    Field::radial(&radial_grid(c), |r| {
        Complex64::new((-r * r / 2.0).exp(), 0.0)
    })
}

#[test]
fn zero_field_gives_zero() {
    let f = Field::zeros(Grid::Radial(radial_grid(0.1)));
    assert_eq!(mass(&f), 0.0);
    assert_eq!(hardy_functional(&f), 0.0);
    assert_eq!(energy(&f), 0.0);
    assert_eq!(lp_norm(&f, 10.0 / 3.0).unwrap(), 0.0);
}

#[test]
fn gaussian_oracles() {
    let f = half_gaussian(0.1);
    let p32 = PI.powf(1.5);
    assert!(rel(mass(&f), p32) < 1e-6);
    assert!(rel(hardy_functional(&f), 1.3 * p32) < 1e-4);
    let p = 10.0 / 3.0;
    let expected = (3.0 * PI / 5.0).powf(1.5).powf(0.3);
    assert!((lp_norm(&f, p).unwrap() - expected).abs() < 1e-5);
    assert!(rel(hardy_margin(&f).unwrap().absolute, p32) < 1e-4);
    assert!(lp_norm(&f, 1.5).is_err());
}

#[test]
fn invariant_identities_hold_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let f = random_radial_field(&radial_grid(0.1), &mut rng);
    let r = InvariantReport::of(&f);
    let c = 0.1;
    assert_eq!(r.hardy, r.gradient_term - c * r.potential_term);
    assert_eq!(r.energy, r.hardy / 2.0 - 3.0 / 10.0 * r.lp_critical);
    assert!(hardy_constant(3) * r.potential_term <= r.gradient_term * (1.0 + 1e-8));
}

#[test]
fn ground_state_energy_and_amplification() {
    let gs = ground_state();
    assert!(energy(&gs.profile).abs() < 1e-5 * gs.hardy);
    assert_eq!(mass(&gs.profile), gs.mass_sq);
    let delta: f64 = 0.1;
    let a = 1.0 + delta;
    let expected = gs.hardy * (a * a - a.powf(10.0 / 3.0)) / 2.0;
    let e = energy(&gs.amplified(delta));
    assert!(e < 0.0);
    assert!(rel(e, expected) < 1e-5);
}

#[test]
fn gn_ratio_is_below_one_off_the_ground_state() {
    let gs = ground_state();
    assert!((gn_ratio(&gs.profile, gs).unwrap() - 1.0).abs() < 1e-4);
    let g = gn_ratio(&half_gaussian(0.1), gs).unwrap();
    assert!(g < 1.0);
    let f = half_gaussian(0.1);
    for lambda in [0.5, 2.0] {
        let scaled = f.rescale(lambda).unwrap().field;
        assert!((gn_ratio(&scaled, gs).unwrap() - g).abs() < 1e-3);
    }
}

#[test]
fn diamagnetic_trivial_cases() {
    let f = half_gaussian(0.1);
    assert!(diamagnetic_defect(&f).abs() < 1e-10);
    let phased = f
        .with_values(
            f.values()
                .iter()
                .map(|z| z * Complex64::from_polar(1.0, 0.7))
                .collect(),
        )
        .unwrap();
    assert!(diamagnetic_defect(&phased).abs() < 1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = random_cartesian_field(&cartesian_grid(16, 4.0, 0.1), 3, &mut rng);
    assert!(diamagnetic_defect(&g) >= -1e-8 * g.gradient_norm_sq());
}

#[test]
fn hardy_margin_on_random_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let grid = radial_grid(0.1);
    for _ in 0..100 {
        let f = random_radial_field(&grid, &mut rng);
        let m = hardy_margin(&f).unwrap();
        assert!(m.relative >= -1e-6, "{m:?}");
    }
}

#[test]
fn hardy_margin_away_from_origin() {
    let grid = radial_grid(0.1);
    let r0 = 10.0;
    let f = Field::radial(&grid, |r| Complex64::new((-(r - r0) * (r - r0)).exp(), 0.0));
    let m = hardy_margin(&f).unwrap();
    let grad = f.gradient_norm_sq();
    let gap = grad - m.absolute;
    assert!(gap > 0.0 && gap <= hardy_constant(3) * mass(&f) / ((r0 - 4.0) * (r0 - 4.0)) * 1.01);
}
