//! Scalar functionals: mass, Hardy functional, energy, Lebesgue norms, the
//! sharp Gagliardo–Nirenberg ratio, the Hardy-inequality margin and the
//! diamagnetic defect.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grids::{hardy_constant, Field};
use crate::ground_state::GroundState;

/// `2 + 4/d`, the mass-critical power.
pub fn critical_exponent(d: usize) -> f64 {
    2.0 + 4.0 / d as f64
}

/// `d/(4 + 2d)`, the coefficient of the potential energy.
pub fn energy_coefficient(d: usize) -> f64 {
    d as f64 / (4.0 + 2.0 * d as f64)
}

/// `M(f) = ∫|f|²`.
pub fn mass(f: &Field) -> f64 {
    f.norm_sq()
}

/// `∫ |∇f|²`.
pub fn gradient_norm_sq(f: &Field) -> f64 {
    f.gradient_norm_sq()
}

/// `∫ |f|²/|x|²`.
pub fn potential_term(f: &Field) -> f64 {
    f.inverse_square_moment()
}

/// `H(f) = ∫|∇f|² − c∫|f|²/|x|²`.
pub fn hardy_functional(f: &Field) -> f64 {
    f.hardy_form()
}

/// `∫ |f|^p`.
pub fn lp_power(f: &Field, p: f64) -> f64 {
    let v: Vec<f64> = f.values().iter().map(|z| z.norm().powf(p)).collect();
    f.grid().integrate(&v)
}

/// `‖f‖_{L^p}` for `p ≥ 2`.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::Parameter(format!("L^p norm needs p ≥ 2, got {p}")));
    }
    Ok(lp_power(f, p).powf(1.0 / p))
}

/// `E(f) = H(f)/2 − d/(4+2d) ∫|f|^{4/d+2}`.
pub fn energy(f: &Field) -> f64 {
    let d = f.grid().dimension();
    0.5 * hardy_functional(f) - energy_coefficient(d) * lp_power(f, critical_exponent(d))
}

/// `‖f‖^{4/d+2}_{4/d+2} / (C_d · H(f) · ‖f‖^{4/d}_2)`; at most one for every
/// field, with equality at ground states.
pub fn gn_ratio(f: &Field, gs: &GroundState) -> Result<f64> {
    gn_ratio_with_constant(f, gs.sharp_constant)
}

pub fn gn_ratio_with_constant(f: &Field, sharp_constant: f64) -> Result<f64> {
    let d = f.grid().dimension();
    let h = hardy_functional(f);
    if !(h > 0.0) {
        return Err(Error::Degenerate(format!(
            "Hardy functional H(f) = {h:e} is not positive"
        )));
    }
    let m = mass(f);
    let p = critical_exponent(d);
    Ok(lp_power(f, p) / (sharp_constant * h * m.powf(2.0 / d as f64)))
}

/// `∫|∇f|² − ∫|∇|f||²`; nonnegative up to discretization error.
pub fn diamagnetic_defect(f: &Field) -> f64 {
    gradient_norm_sq(f) - gradient_norm_sq(&f.modulus())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyMargin {
    /// `∫|∇f|² − c* ∫|f|²/|x|²`.
    pub absolute: f64,
    /// `absolute / ∫|∇f|²`.
    pub relative: f64,
}

pub fn hardy_margin(f: &Field) -> Result<HardyMargin> {
    let grad = gradient_norm_sq(f);
    if grad == 0.0 {
        return Err(Error::Degenerate("zero field has no Hardy margin".into()));
    }
    let cstar = hardy_constant(f.grid().dimension());
    let absolute = grad - cstar * potential_term(f);
    Ok(HardyMargin {
        absolute,
        relative: absolute / grad,
    })
}

/// All conserved and derived scalars of one field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub mass: f64,
    pub hardy: f64,
    pub energy: f64,
    /// `‖u‖^{4/d+2}_{L^{4/d+2}}`.
    pub lp_critical: f64,
    /// `∫|u|²/|x|²`.
    pub potential_term: f64,
    /// `‖∇u‖²`.
    pub gradient_term: f64,
}

impl InvariantReport {
    /// The identities `hardy = gradient_term − c·potential_term` and
    /// `energy = hardy/2 − d/(4+2d)·lp_critical` hold bit-for-bit.
    pub fn of(f: &Field) -> Self {
        let d = f.grid().dimension();
        let c = f.grid().coupling();
        let potential_term = potential_term(f);
        let gradient_term = hardy_functional(f) + c * potential_term;
        let hardy = gradient_term - c * potential_term;
        let lp_critical = lp_power(f, critical_exponent(d));
        let energy = hardy / 2.0 - energy_coefficient(d) * lp_critical;
        Self {
            mass: mass(f),
            hardy,
            energy,
            lp_critical,
            potential_term,
            gradient_term,
        }
    }
}
