//! Independent ODE shooting for the radial profile equation.
//!
//! With `x = ln r` and `Q = r^σ g`, the profile equation becomes
//! `g'' + 2ν g' = r² (g − r^{σ·4/d} |g|^{4/d} g)`, `ν = √(c* − c)`, whose
//! solutions regular at the origin start from `g → A`. We bisect on `A`:
//! too large and `g` crosses zero, too small and `g` turns back up.

use crate::error::{Error, Result};
use crate::grids::{hardy_constant, origin_exponent, sphere_area};

/// Ground-state profile produced by shooting, on a uniform grid in `ln r`.
#[derive(Debug, Clone)]
pub struct OracleProfile {
    pub d: usize,
    pub c: f64,
    pub sigma: f64,
    /// Shooting parameter `A = lim_{r→0} Q(r)/r^σ`.
    pub amplitude: f64,
    x0: f64,
    hx: f64,
    /// Regular part `g` at `x0 + k·hx`; zero past the last trusted point.
    g: Vec<f64>,
}

const X_START: f64 = -23.0; // r ≈ 1e-10
const STEP: f64 = 1e-3;

enum Outcome {
    Overshoot,
    Undershoot,
    Reached,
}

struct Shooter {
    nu: f64,
    q: f64,
    qsigma: f64,
}

impl Shooter {
    fn rhs(&self, x: f64, g: f64, gp: f64) -> (f64, f64) {
        let r = x.exp();
        let r2 = r * r;
        let nl = (self.qsigma * x).exp() * g.abs().powf(self.q) * g;
        (gp, r2 * (g - nl) - 2.0 * self.nu * gp)
    }

    /// Integrates from `X_START` to `x_end`; records `g` when `trace` is set.
    fn shoot(&self, a: f64, x_end: f64, mut trace: Option<&mut Vec<f64>>) -> Outcome {
        let mut x = X_START;
        let r0 = x.exp();
        let mut g = a * (1.0 + r0 * r0 / (4.0 + 4.0 * self.nu));
        let mut gp = a * r0 * r0 / (2.0 + 2.0 * self.nu);
        let h = STEP;
        let steps = ((x_end - X_START) / h).ceil() as usize;
        let mut descended = false;
        if let Some(t) = trace.as_deref_mut() {
            t.push(g);
        }
        for _ in 0..steps {
            let (k1g, k1p) = self.rhs(x, g, gp);
            let (k2g, k2p) = self.rhs(x + h / 2.0, g + h / 2.0 * k1g, gp + h / 2.0 * k1p);
            let (k3g, k3p) = self.rhs(x + h / 2.0, g + h / 2.0 * k2g, gp + h / 2.0 * k2p);
            let (k4g, k4p) = self.rhs(x + h, g + h * k3g, gp + h * k3p);
            g += h / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g);
            gp += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            x += h;
            if let Some(t) = trace.as_deref_mut() {
                t.push(g);
            }
            if g < 0.0 {
                return Outcome::Overshoot;
            }
            if gp < 0.0 {
                descended = true;
            } else if descended && gp > 0.0 {
                return Outcome::Undershoot;
            } else if !descended && x > 0.0 {
                // never started to decay: far too small
                return Outcome::Undershoot;
            }
        }
        Outcome::Reached
    }
}

/// Shoots for the ground state of the radial profile equation with
/// `0 ≤ c < c*`, integrating out to `r_max`.
pub fn shooting_oracle(d: usize, c: f64, r_max: f64) -> Result<OracleProfile> {
    if d < 3 || !(c >= 0.0 && c < hardy_constant(d)) {
        return Err(Error::Parameter(format!(
            "shooting needs d ≥ 3 and 0 ≤ c < c* (got d={d}, c={c})"
        )));
    }
    let sigma = origin_exponent(d, c);
    let shooter = Shooter {
        nu: (hardy_constant(d) - c).sqrt(),
        q: 4.0 / d as f64,
        qsigma: sigma * 4.0 / d as f64,
    };
    let x_end = r_max.ln();

    let (mut lo, mut hi) = (1.0, 1.0);
    let mut found = false;
    for _ in 0..80 {
        match shooter.shoot(lo, x_end, None) {
            Outcome::Undershoot => {
                found = true;
                break;
            }
            _ => lo /= 2.0,
        }
    }
    if !found {
        return Err(Error::OracleFailure(
            "no undershooting amplitude found".into(),
        ));
    }
    found = false;
    for _ in 0..80 {
        match shooter.shoot(hi, x_end, None) {
            Outcome::Overshoot => {
                found = true;
                break;
            }
            _ => hi *= 2.0,
        }
    }
    if !found {
        return Err(Error::OracleFailure(
            "no overshooting amplitude found".into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shooter.shoot(mid, x_end, None) {
            Outcome::Overshoot => hi = mid,
            Outcome::Undershoot => lo = mid,
            Outcome::Reached => {
                lo = mid;
                hi = mid;
                break;
            }
        }
    }
    let amplitude = 0.5 * (lo + hi);
    let mut g = Vec::new();
    shooter.shoot(amplitude, x_end, Some(&mut g));
    // Trust the trajectory up to its smallest value; the rest is the
    // exponentially growing shooting error.
    let cut = g
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(g.len());
    for v in g.iter_mut().skip(cut) {
        *v = 0.0;
    }
    Ok(OracleProfile {
        d,
        c,
        sigma,
        amplitude,
        x0: X_START,
        hx: STEP,
        g,
    })
}

impl OracleProfile {
    /// `Q(r)`, by cubic interpolation of the regular part in `ln r`.
    pub fn evaluate(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return if self.sigma < 0.0 {
                f64::INFINITY
            } else {
                self.amplitude
            };
        }
        let s = (r.ln() - self.x0) / self.hx;
        let n = self.g.len() as isize;
        let g = if s <= 0.0 {
            self.g[0]
        } else if s >= (n - 1) as f64 {
            0.0
        } else {
            let j = s.floor() as isize;
            let t = s - j as f64;
            let at = |k: isize| self.g[k.clamp(0, n - 1) as usize];
            let w = [
                -t * (t - 1.0) * (t - 2.0) / 6.0,
                (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
                -(t + 1.0) * t * (t - 2.0) / 2.0,
                (t + 1.0) * t * (t - 1.0) / 6.0,
            ];
            (0..4).map(|k| at(j - 1 + k as isize) * w[k]).sum()
        };
        r.powf(self.sigma) * g
    }

    /// `‖Q‖²_{L²}` by the trapezoid rule in `ln r`.
    pub fn mass(&self) -> f64 {
        let df = self.d as f64;
        let area = sphere_area(self.d);
        let n = self.g.len();
        let sum: f64 = self
            .g
            .iter()
            .enumerate()
            .map(|(k, g)| {
                let x = self.x0 + k as f64 * self.hx;
                let w = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
                w * g * g * ((2.0 * self.sigma + df) * x).exp()
            })
            .sum();
        area * sum * self.hx
    }
}
