#![allow(dead_code)]

use std::sync::{Arc, OnceLock};

use nlsh_core::grids::{CartesianGrid, CartesianGridSpec, Field, RadialGrid, RadialGridSpec};
use nlsh_core::ground_state::{solve_ground_state, GroundState, SolverOptions};
use num_complex::Complex64;
use rand::Rng;

pub fn radial_grid(c: f64) -> Arc<RadialGrid> {
    Arc::new(RadialGridSpec::desk(3, c).build().unwrap())
}

pub fn cartesian_grid(m: usize, l: f64, c: f64) -> Arc<CartesianGrid> {
    Arc::new(CartesianGridSpec { d: 3, m, l, c }.build().unwrap())
}

/// Desk-scale ground state at `c = 0.1`, solved once per test binary.
pub fn ground_state() -> &'static GroundState {
    static GS: OnceLock<GroundState> = OnceLock::new();
    GS.get_or_init(|| solve_ground_state(&radial_grid(0.1), SolverOptions::default()).unwrap())
}

pub fn gaussian(r2: f64, width: f64) -> f64 {
    (-r2 / (2.0 * width * width)).exp()
}

/// Sum of three Gaussian shells with random centers, widths, amplitudes and
/// phases.
pub fn random_radial_field<R: Rng>(grid: &Arc<RadialGrid>, rng: &mut R) -> Field {
    let terms: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(0.2..2.0),
                rng.gen_range(0.0..3.0),
                rng.gen_range(0.4..2.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    Field::radial(grid, |r| {
        terms
            .iter()
            .map(|&(a, r0, w, phase)| {
                Complex64::from_polar(a * gaussian((r - r0) * (r - r0), w), phase)
            })
            .sum()
    })
}

/// Random complex field with a Gaussian envelope, band-limited to
/// wavenumbers with `|k_i| ≤ kmax` grid modes.
pub fn random_cartesian_field<R: Rng>(grid: &Arc<CartesianGrid>, kmax: i64, rng: &mut R) -> Field {
    let l = grid.half_width();
    let modes: Vec<([f64; 3], Complex64)> = (0..6)
        .map(|_| {
            let k =
                [0, 1, 2].map(|_| rng.gen_range(-kmax..=kmax) as f64 * std::f64::consts::PI / l);
            (
                k,
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            )
        })
        .collect();
    let width = rng.gen_range(0.15..0.35) * l;
    Field::cartesian(grid, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let wave: Complex64 = modes
            .iter()
            .map(|(k, a)| {
                let phase: f64 = k.iter().zip(x).map(|(ki, xi)| ki * xi).sum();
                a * Complex64::from_polar(1.0, phase)
            })
            .sum();
        wave * gaussian(r2, width)
    })
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
