//! Radial time integration of `i∂ₜu + Δu + c/|x|² u + |u|^{4/d} u = 0`.
//!
//! One step is a Strang splitting: half a nonlinear phase rotation,
//! a Crank–Nicolson step of the linear flow, and another half rotation.
//! Crank–Nicolson acts on the regular part `g = u/r^σ`, where it reads
//! `(W + i·dt/2·K) g⁺ = (W − i·dt/2·K) g`; since `W⁻¹K` is self-adjoint in
//! the `W` inner product this is a Cayley transform and conserves the
//! discrete mass exactly. The phase rotation leaves `|u|` untouched.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::InvariantReport;
use crate::grids::{Field, Grid, RadialGrid};
use crate::linalg::BandLu;

/// Snapshot of a run.
#[derive(Debug, Clone)]
pub struct EvolutionState {
    pub t: f64,
    pub field: Field,
    pub dt: f64,
    pub step_count: usize,
}

impl EvolutionState {
    pub fn initial(field: Field) -> Self {
        Self {
            t: 0.0,
            field,
            dt: 0.0,
            step_count: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    TEndReached,
    BlowupResolvedLimit,
    InstabilityDetected,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::TEndReached => "t_end_reached",
            Termination::BlowupResolvedLimit => "blowup_resolved_limit",
            Termination::InstabilityDetected => "instability_detected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub hardy: f64,
    pub gradient_term: f64,
    pub lp_critical: f64,
    pub dt: f64,
}

impl TraceRow {
    fn new(t: f64, dt: f64, rep: &InvariantReport) -> Self {
        Self {
            t,
            mass: rep.mass,
            energy: rep.energy,
            hardy: rep.hardy,
            gradient_term: rep.gradient_term,
            lp_critical: rep.lp_critical,
            dt,
        }
    }
}

/// Field saved along a run.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub t: f64,
    /// `field.hardy_form()`, so a checkpoint reloaded from disk carries the same value.
    pub hardy: f64,
    pub field: Field,
}

#[derive(Debug, Clone)]
pub struct EvolutionTrace {
    pub rows: Vec<TraceRow>,
    pub checkpoints: Vec<Checkpoint>,
    pub termination: Termination,
    /// Why the run stopped, in words.
    pub note: String,
    pub final_state: Option<EvolutionState>,
}

impl EvolutionTrace {
    pub const CSV_HEADER: &'static str = "t,mass,energy,hardy,gradient_term,lp_critical,dt";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.t, r.mass, r.energy, r.hardy, r.gradient_term, r.lp_critical, r.dt
            ));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Vec<TraceRow>> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == Self::CSV_HEADER => {}
            other => {
                return Err(Error::Format(format!("unexpected trace header {other:?}")));
            }
        }
        lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let v: Vec<f64> = l
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::Format(format!("bad trace row `{l}`: {e}")))?;
                if v.len() != 7 {
                    return Err(Error::Format(format!("trace row has {} columns", v.len())));
                }
                Ok(TraceRow {
                    t: v[0],
                    mass: v[1],
                    energy: v[2],
                    hardy: v[3],
                    gradient_term: v[4],
                    lp_critical: v[5],
                    dt: v[6],
                })
            })
            .collect()
    }

    /// `max_t |M(t) − M(0)| / M(0)`.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.rows.first().map_or(0.0, |r| r.mass);
        if m0 == 0.0 {
            return 0.0;
        }
        self.rows
            .iter()
            .map(|r| (r.mass - m0).abs() / m0)
            .fold(0.0, f64::max)
    }

    /// `max |E(t) − E(0)|` over rows whose Hardy functional stays below
    /// `growth · H(0)`.
    pub fn energy_drift_below(&self, growth: f64) -> f64 {
        let Some(first) = self.rows.first() else {
            return 0.0;
        };
        self.rows
            .iter()
            .filter(|r| r.hardy < growth * first.hardy)
            .map(|r| (r.energy - first.energy).abs())
            .fold(0.0, f64::max)
    }

    /// `max_t H(u(t)) / H(u(0))`.
    pub fn hardy_growth(&self) -> f64 {
        let Some(first) = self.rows.first() else {
            return 0.0;
        };
        self.rows.iter().map(|r| r.hardy).fold(0.0, f64::max) / first.hardy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    /// `δ` in `dt = δ / max(1, H(u))`.
    pub dt_factor: f64,
    /// Runs stop with [`Termination::BlowupResolvedLimit`] once the adaptive
    /// step would drop below this.
    pub dt_min: f64,
    pub t_end: f64,
    /// Diagnostics row every this many steps.
    pub record_every: usize,
    /// A checkpoint is saved each time `H(u)` grows by this factor.
    pub checkpoint_growth: f64,
    /// Additional checkpoints every this much time (0 disables).
    pub checkpoint_interval: f64,
    /// Disable the nonlinearity (linear Schrödinger flow).
    pub linear_only: bool,
    /// Outer-shell monitor: `|u| < boundary_tolerance · max|u|` on `r > 0.9 r_max`.
    pub boundary_tolerance: f64,
    pub max_steps: usize,
    pub scheme: Scheme,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt_factor: 0.01,
            dt_min: 1e-9,
            t_end: 10.0,
            record_every: 20,
            checkpoint_growth: 10f64.powf(0.1),
            checkpoint_interval: 0.0,
            linear_only: false,
            boundary_tolerance: 1e-8,
            max_steps: 5_000_000,
            scheme: Scheme::Strang,
        }
    }
}

/// `dt = δ / max(1, H(u))`.
pub fn adaptive_dt(field: &Field, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!(
            "dt factor must lie in (0, 1), got {delta}"
        )));
    }
    Ok(dt_for_hardy(field.hardy_form(), delta))
}

pub fn dt_for_hardy(hardy: f64, delta: f64) -> f64 {
    delta / hardy.max(1.0)
}

/// Reusable split-step propagator on one radial grid.
/// Time integrator for one adaptive step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Strang splitting around a Crank–Nicolson linear step.
    #[default]
    Strang,
    /// Yoshida triple-jump composition of three Strang steps.
    Yoshida4,
}

pub struct Stepper {
    grid: Arc<RadialGrid>,
    nonlinear: bool,
    scheme: Scheme,
    cached: Option<(f64, BandLu<Complex64>)>,
    q: f64,
    phi_q: Vec<f64>,
}

impl Stepper {
    pub fn new(grid: Arc<RadialGrid>, nonlinear: bool) -> Self {
        let q = 4.0 / grid.dimension() as f64;
        let phi_q = grid.origin_weights().iter().map(|p| p.powf(q)).collect();
        Self {
            grid,
            nonlinear,
            scheme: Scheme::Strang,
            cached: None,
            q,
            phi_q,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    fn factor(&mut self, dt: f64) -> Result<&BandLu<Complex64>> {
        if self.cached.as_ref().map(|(h, _)| *h) != Some(dt) {
            let diag: Vec<Complex64> = self
                .grid
                .g_weights()
                .iter()
                .map(|&w| Complex64::new(w, 0.0))
                .collect();
            let lu = self
                .grid
                .stiffness()
                .combine(&diag, |k| Complex64::new(0.0, 0.5 * dt * k))
                .factor()
                .ok_or_else(|| Error::Structural("Crank–Nicolson matrix is singular".into()))?;
            self.cached = Some((dt, lu));
        }
        Ok(&self.cached.as_ref().expect("factor cached above").1)
    }

    fn rotate(&self, g: &mut [Complex64], tau: f64) {
        if !self.nonlinear {
            return;
        }
        for (v, pq) in g.iter_mut().zip(&self.phi_q) {
            let phase = tau * pq * v.norm_sqr().powf(0.5 * self.q);
            *v *= Complex64::from_polar(1.0, phase);
        }
    }

    fn linear(&mut self, g: &mut [Complex64], dt: f64) -> Result<()> {
        let kg = self.grid.stiffness().mul_vec(g);
        let mut rhs: Vec<Complex64> = g
            .iter()
            .zip(&kg)
            .zip(self.grid.g_weights())
            .map(|((gi, ki), w)| gi * *w - Complex64::new(0.0, 0.5 * dt) * ki)
            .collect();
        self.factor(dt)?.solve_in_place(&mut rhs);
        if rhs.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Degenerate(
                "non-finite values after linear solve".into(),
            ));
        }
        g.copy_from_slice(&rhs);
        Ok(())
    }

    fn strang(&mut self, g: &mut [Complex64], dt: f64) -> Result<()> {
        self.rotate(g, 0.5 * dt);
        self.linear(g, dt)?;
        self.rotate(g, 0.5 * dt);
        Ok(())
    }

    /// Advances the regular part by one step of the configured scheme.
    pub fn advance_regular(&mut self, g: &mut [Complex64], dt: f64) -> Result<()> {
        match self.scheme {
            Scheme::Strang => self.strang(g, dt),
            Scheme::Yoshida4 => {
                // Strang is symmetric, so the triple jump is fourth order
                let cbrt2 = 2f64.cbrt();
                let w1 = 1.0 / (2.0 - cbrt2);
                let w0 = -cbrt2 * w1;
                self.strang(g, w1 * dt)?;
                self.strang(g, w0 * dt)?;
                self.strang(g, w1 * dt)
            }
        }
    }

    pub fn step(&mut self, state: &EvolutionState, dt: f64) -> Result<EvolutionState> {
        if !(dt > 0.0) {
            return Err(Error::Parameter(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let mut g = self.grid.regular_part(state.field.values());
        self.advance_regular(&mut g, dt)?;
        Ok(EvolutionState {
            t: state.t + dt,
            field: Field::new(
                Grid::Radial(self.grid.clone()),
                self.grid.from_regular_part(&g),
            )?,
            dt,
            step_count: state.step_count + 1,
        })
    }
}

/// One Strang step from `state` (nonlinear flow).
pub fn step(state: &EvolutionState, dt: f64) -> Result<EvolutionState> {
    let grid = state.field.grid().as_radial()?.clone();
    Stepper::new(grid, true).step(state, dt)
}

fn boundary_ok(grid: &RadialGrid, u: &[Complex64], tol: f64) -> bool {
    let cut = 0.9 * grid.r_max();
    let max_all = u.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let max_outer = grid
        .radii()
        .iter()
        .zip(u)
        .filter(|(r, _)| **r > cut)
        .map(|(_, z)| z.norm())
        .fold(0.0, f64::max);
    max_outer <= tol * max_all
}

/// Evolves radial data until `t_end`, the `dt_min` floor, or a failure.
pub fn evolve(u0: &Field, config: &EvolutionConfig) -> Result<EvolutionTrace> {
    let grid = u0.grid().as_radial()?.clone();
    if !u0.is_finite() {
        return Err(Error::Degenerate("initial data is not finite".into()));
    }
    if !(config.dt_factor > 0.0 && config.dt_factor < 1.0) {
        return Err(Error::Parameter(format!(
            "dt factor must lie in (0, 1), got {}",
            config.dt_factor
        )));
    }
    let mut stepper = Stepper::new(grid.clone(), !config.linear_only).with_scheme(config.scheme);
    let mut g = grid.regular_part(u0.values());
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut rows = Vec::new();
    let mut checkpoints = Vec::new();

    let report = |g: &[Complex64]| -> Result<(Field, InvariantReport)> {
        let f = Field::new(Grid::Radial(grid.clone()), grid.from_regular_part(g))?;
        let rep = InvariantReport::of(&f);
        Ok((f, rep))
    };

    let (f0, rep0) = report(&g)?;
    let h0 = rep0.hardy;
    rows.push(TraceRow::new(0.0, 0.0, &rep0));
    checkpoints.push(Checkpoint {
        t: 0.0,
        hardy: f0.hardy_form(),
        field: f0,
    });
    let mut next_growth = h0.abs().max(f64::MIN_POSITIVE) * config.checkpoint_growth;
    let mut next_time = if config.checkpoint_interval > 0.0 {
        config.checkpoint_interval
    } else {
        f64::INFINITY
    };
    let mut hardy = h0;
    let mut last_dt = 0.0;

    let (termination, note) = loop {
        if t >= config.t_end {
            break (
                Termination::TEndReached,
                format!("reached t_end = {}", config.t_end),
            );
        }
        if steps >= config.max_steps {
            break (
                Termination::InstabilityDetected,
                format!("step budget of {} exhausted", config.max_steps),
            );
        }
        let mut dt = dt_for_hardy(hardy, config.dt_factor);
        if dt < config.dt_min {
            break (
                Termination::BlowupResolvedLimit,
                format!("adaptive dt {dt:e} fell below dt_min {:e}", config.dt_min),
            );
        }
        let remaining = config.t_end - t;
        if dt >= remaining {
            dt = remaining;
        }
        if let Err(e) = stepper.advance_regular(&mut g, dt) {
            break (Termination::InstabilityDetected, e.to_string());
        }
        t = if dt == remaining {
            config.t_end
        } else {
            t + dt
        };
        steps += 1;
        last_dt = dt;
        hardy = grid.dirichlet_form(&g);
        if !hardy.is_finite() {
            break (
                Termination::InstabilityDetected,
                "non-finite Hardy functional".into(),
            );
        }

        let growth_hit = hardy >= next_growth;
        let time_hit = t >= next_time;
        if steps.is_multiple_of(config.record_every.max(1))
            || growth_hit
            || time_hit
            || t >= config.t_end
        {
            let (f, rep) = report(&g)?;
            rows.push(TraceRow::new(t, dt, &rep));
            if !boundary_ok(&grid, f.values(), config.boundary_tolerance) {
                break (
                    Termination::InstabilityDetected,
                    format!("outer-shell monitor tripped at t = {t}: radiation reached r_max"),
                );
            }
            if growth_hit || time_hit {
                checkpoints.push(Checkpoint {
                    t,
                    hardy: f.hardy_form(),
                    field: f,
                });
                while next_growth <= hardy {
                    next_growth *= config.checkpoint_growth;
                }
                while next_time <= t {
                    next_time += config.checkpoint_interval;
                }
            }
        }
    };

    let (ff, rep) = report(&g)?;
    if rows.last().map(|r| r.t) != Some(t) {
        rows.push(TraceRow::new(t, last_dt, &rep));
    }
    if checkpoints.last().map(|c| c.t) != Some(t) && termination != Termination::InstabilityDetected
    {
        checkpoints.push(Checkpoint {
            t,
            hardy: ff.hardy_form(),
            field: ff.clone(),
        });
    }
    Ok(EvolutionTrace {
        rows,
        checkpoints,
        termination,
        note,
        final_state: Some(EvolutionState {
            t,
            field: ff,
            dt: last_dt,
            step_count: steps,
        }),
    })
}

/// Blow-up time fit and the rate diagnostic `inf ‖∇u(t)‖·√(T* − t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupEstimate {
    pub t_star: f64,
    pub fit_window: [f64; 2],
    /// RMS misfit of the linear model for `1/‖∇u‖²`, relative to the RMS of
    /// the data in the window.
    pub fit_residual: f64,
    pub rate_infimum: f64,
    /// Slope `α` in `1/‖∇u‖² ≈ α (T* − t)`.
    pub slope: f64,
    pub points: usize,
}

/// Fit residual above which the `(T* − t)^{−1/2}` model is flagged.
pub const MODEL_MISMATCH_THRESHOLD: f64 = 1e-2;

impl BlowupEstimate {
    pub fn model_mismatch(&self) -> bool {
        self.fit_residual > MODEL_MISMATCH_THRESHOLD
    }
}

/// Least-squares fit of `1/‖∇u‖² ≈ α (T* − t)` over the rows where the Hardy
/// functional exceeds `threshold · H(u(0))`.
pub fn estimate_t_star_with(rows: &[TraceRow], threshold: f64) -> Result<BlowupEstimate> {
    let Some(first) = rows.first() else {
        return Err(Error::NotABlowup("empty trace".into()));
    };
    let h0 = first.hardy;
    let peak = rows.iter().map(|r| r.hardy).fold(0.0, f64::max);
    if !(h0 > 0.0) || peak < 100.0 * h0 {
        return Err(Error::NotABlowup(format!(
            "Hardy functional grew by {:.3}×, need at least 100×",
            peak / h0
        )));
    }
    let window: Vec<&TraceRow> = rows.iter().filter(|r| r.hardy >= threshold * h0).collect();
    if window.len() < 3 {
        return Err(Error::NotABlowup(format!(
            "only {} rows above {threshold}× growth",
            window.len()
        )));
    }
    let n = window.len() as f64;
    let ts: Vec<f64> = window.iter().map(|r| r.t).collect();
    let ys: Vec<f64> = window.iter().map(|r| 1.0 / r.gradient_term).collect();
    let tm = ts.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let stt: f64 = ts.iter().map(|t| (t - tm) * (t - tm)).sum();
    let sty: f64 = ts.iter().zip(&ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
    let b = sty / stt;
    let a = ym - b * tm;
    if !(b < 0.0) {
        return Err(Error::NotABlowup(format!(
            "1/‖∇u‖² is not decreasing (slope {b:e})"
        )));
    }
    let t_star = -a / b;
    let misfit = (ts
        .iter()
        .zip(&ys)
        .map(|(t, y)| (y - (a + b * t)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let scale = (ys.iter().map(|y| y * y).sum::<f64>() / n).sqrt();
    let t_b = *ts.last().expect("window is nonempty");
    if !(t_star > t_b) {
        return Err(Error::InconsistentEstimate(format!(
            "fitted T* = {t_star} does not exceed the last fitted time {t_b}"
        )));
    }
    let rate_infimum = window
        .iter()
        .map(|r| r.gradient_term.sqrt() * (t_star - r.t).sqrt())
        .fold(f64::INFINITY, f64::min);
    Ok(BlowupEstimate {
        t_star,
        fit_window: [ts[0], t_b],
        fit_residual: misfit / scale,
        rate_infimum,
        slope: -b,
        points: window.len(),
    })
}

/// [`estimate_t_star_with`] on the default window (growth ≥ 100×).
pub fn estimate_t_star(trace: &EvolutionTrace) -> Result<BlowupEstimate> {
    estimate_t_star_with(&trace.rows, 100.0)
}
