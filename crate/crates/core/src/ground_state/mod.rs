//! Radial ground states `ΔQ + c/|x|² Q − Q + |Q|^{4/d} Q = 0`.
//!
//! The solver is a Petviashvili fixed-point iteration on the regular part
//! `g = Q / r^σ`:
//!
//! ```text
//! g ← s^γ · (K + W)⁻¹ W N(g),   s = ⟨g, (K+W) g⟩ / ⟨g, W N(g)⟩,   γ = (d+4)/4,
//! ```
//!
//! where `K` is the radial stiffness matrix, `W` the mass matrix and
//! `N(g) = |Q|^{4/d} g`. At a fixed point `s = 1`, and the stabilizing factor
//! `s^γ` removes the one unstable direction of the plain iteration (the
//! linearization along `g` has eigenvalue `1 + 4/d − γ·4/d = 0`).

mod shooting;

use std::sync::Arc;

use num_complex::Complex64;

pub use shooting::{shooting_oracle, OracleProfile};

use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::functionals::{critical_exponent, hardy_functional, lp_power, mass};
use crate::grids::{Field, Grid, RadialGrid, RadialGridSpec};
use crate::linalg::BandLu;

/// Default cap on fixed-point iterations.
pub const DEFAULT_MAX_ITERS: usize = 10_000;

/// A converged ground state with its cached invariants.
#[derive(Debug, Clone)]
pub struct GroundState {
    /// Real, nonnegative radial profile.
    pub profile: Field,
    pub d: usize,
    pub c: f64,
    /// `‖Q‖²_{L²}`.
    pub mass_sq: f64,
    /// `H(Q)`.
    pub hardy: f64,
    /// `‖Q‖^{4/d+2}_{L^{4/d+2}}`.
    pub critical_lp: f64,
    /// `C_d = (d+2)/d · ‖Q‖^{−4/d}`.
    pub sharp_constant: f64,
    /// Discrete residual of the profile equation, relative to the
    /// H¹-surrogate norm of `Q` (see [`equation_residual`]).
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

/// `C_d = (d+2)/d · ‖Q‖^{−4/d}`.
pub fn sharp_constant(gs: &GroundState) -> f64 {
    sharp_constant_from_mass(gs.d, gs.mass_sq)
}

fn sharp_constant_from_mass(d: usize, mass_sq: f64) -> f64 {
    let df = d as f64;
    (df + 2.0) / df * mass_sq.powf(-2.0 / df)
}

struct Operator<'a> {
    grid: &'a RadialGrid,
    lu: BandLu<f64>,
    /// `r^{σ·4/d}` at the nodes.
    phi_q: Vec<f64>,
    q: f64,
}

impl<'a> Operator<'a> {
    fn new(grid: &'a RadialGrid) -> Result<Self> {
        let lu = grid
            .stiffness()
            .combine(grid.g_weights(), |v| v)
            .factor()
            .ok_or_else(|| Error::Structural("singular ground-state operator".into()))?;
        let q = 4.0 / grid.dimension() as f64;
        let phi_q = grid.origin_weights().iter().map(|p| p.powf(q)).collect();
        Ok(Self { grid, lu, phi_q, q })
    }

    fn apply(&self, g: &[f64]) -> Vec<f64> {
        let mut out = self.grid.stiffness().mul_vec(g);
        for ((o, w), gi) in out.iter_mut().zip(self.grid.g_weights()).zip(g) {
            *o += w * gi;
        }
        out
    }

    /// `W N(g)`.
    fn nonlinear(&self, g: &[f64]) -> Vec<f64> {
        g.iter()
            .zip(&self.phi_q)
            .zip(self.grid.g_weights())
            .map(|((gi, pq), w)| w * pq * gi.abs().powf(self.q) * gi)
            .collect()
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn energy_norm(&self, g: &[f64]) -> f64 {
        Self::dot(g, &self.apply(g)).sqrt()
    }

    /// `‖L g − W N(g)‖_{H⁻¹} / ‖g‖_{H¹}` with `L = K + W`.
    fn residual(&self, g: &[f64]) -> f64 {
        let lg = self.apply(g);
        let ng = self.nonlinear(g);
        let mut r: Vec<f64> = lg.iter().zip(&ng).map(|(a, b)| a - b).collect();
        let r0 = r.clone();
        self.lu.solve_in_place(&mut r);
        Self::dot(&r0, &r).max(0.0).sqrt() / self.energy_norm(g)
    }
}

/// Relative residual of the discrete profile equation at a radial field,
/// measured in the dual of the H¹-surrogate norm `‖g‖² = gᵀ(K + W)g`.
pub fn equation_residual(profile: &Field) -> Result<f64> {
    let grid = profile.grid().as_radial()?;
    let op = Operator::new(grid)?;
    let g: Vec<f64> = grid
        .regular_part(profile.values())
        .iter()
        .map(|z| z.re)
        .collect();
    Ok(op.residual(&g))
}

/// Computes a ground state on `grid` from the Gaussian seed `e^{−r²/2}`.
pub fn solve_ground_state(grid: &Arc<RadialGrid>, opts: SolverOptions) -> Result<GroundState> {
    if !(opts.tol > 0.0) {
        return Err(Error::Parameter(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let d = grid.dimension();
    let op = Operator::new(grid)?;
    let gamma = (d as f64 + 4.0) / 4.0;
    let sigma = grid.sigma();
    let mut g: Vec<f64> = grid
        .radii()
        .iter()
        .map(|&r| r.powf(-sigma) * (-r * r / 2.0).exp())
        .collect();
    let mut last_step = f64::INFINITY;
    for it in 1..=opts.max_iters {
        let rhs = op.nonlinear(&g);
        let s = Operator::dot(&g, &op.apply(&g)) / Operator::dot(&g, &rhs);
        if !(s.is_finite() && s > 0.0 && s < 1e12) {
            return Err(Error::NonConvergence {
                iterations: it,
                last_step,
                residual: f64::NAN,
            });
        }
        let mut next = rhs;
        op.lu.solve_in_place(&mut next);
        let factor = s.powf(gamma);
        for v in next.iter_mut() {
            *v *= factor;
        }
        let diff: Vec<f64> = next.iter().zip(&g).map(|(a, b)| a - b).collect();
        last_step = op.energy_norm(&diff) / op.energy_norm(&next);
        g = next;
        if last_step < opts.tol {
            let residual = op.residual(&g);
            return GroundState::assemble(grid, &g, residual, it);
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iters,
        last_step,
        residual: op.residual(&g),
    })
}

impl GroundState {
    fn assemble(
        grid: &Arc<RadialGrid>,
        g: &[f64],
        residual: f64,
        iterations: usize,
    ) -> Result<Self> {
        let gz: Vec<Complex64> = g.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let profile = Field::new(Grid::Radial(grid.clone()), grid.from_regular_part(&gz))?;
        let mut gs = Self::from_profile(profile)?;
        gs.residual = residual;
        gs.iterations = iterations;
        Ok(gs)
    }

    /// Wraps an already computed profile (e.g. loaded from a checkpoint),
    /// recomputing every cached invariant.
    pub fn from_profile(profile: Field) -> Result<Self> {
        let grid = profile.grid().as_radial()?.clone();
        let (d, c) = (grid.dimension(), grid.coupling());
        let mass_sq = mass(&profile);
        let hardy = hardy_functional(&profile);
        let critical_lp = lp_power(&profile, critical_exponent(d));
        let residual = equation_residual(&profile)?;
        Ok(Self {
            profile,
            d,
            c,
            mass_sq,
            hardy,
            critical_lp,
            sharp_constant: sharp_constant_from_mass(d, mass_sq),
            residual,
            iterations: 0,
        })
    }

    /// `‖Q‖_{L²}`.
    pub fn norm(&self) -> f64 {
        self.mass_sq.sqrt()
    }

    /// Relative defects of the Pohozaev identities
    /// `H(Q) = (d/2)‖Q‖²` and `‖Q‖^{4/d+2}_{4/d+2} = ((d+2)/d) H(Q)`.
    pub fn pohozaev_defects(&self) -> (f64, f64) {
        let df = self.d as f64;
        let first = (self.hardy - df / 2.0 * self.mass_sq).abs() / self.hardy;
        let second = (self.critical_lp - (df + 2.0) / df * self.hardy).abs() / self.critical_lp;
        (first, second)
    }

    /// `(1+δ)·Q` as initial data.
    pub fn amplified(&self, delta: f64) -> Field {
        self.profile.scaled(1.0 + delta)
    }
}

/// Solves for a list of couplings concurrently, one grid per coupling.
pub fn mass_sweep(
    base: RadialGridSpec,
    couplings: &[f64],
    opts: SolverOptions,
    policy: ExecPolicy,
) -> Vec<Result<GroundState>> {
    policy.map(couplings, |&c| {
        let grid = Arc::new(RadialGridSpec { c, ..base }.build()?);
        solve_ground_state(&grid, opts)
    })
}
