//! Radial half-line grid for radially symmetric fields in `d ≥ 3`.
//!
//! Nodes are uniform in a computational coordinate `x` with
//! `r(x) = ℓ·ln(1 + eˣ)`: logarithmic spacing near the origin, where
//! focusing solutions concentrate, and uniform spacing `ℓ·Δx` at large `r`.
//!
//! Fields are stored as nodal values of `u`, but all differential work is
//! done on the regular part `g = u / r^σ`, where `σ = −(d−2)/2 + √(c* − c)`
//! is the admissible exponent at the origin. Because `r^σ` solves
//! `Δφ + c φ/|x|² = 0`, the Hardy functional becomes the weighted Dirichlet
//! form `H(u) = |S^{d−1}| ∫ r^{2σ+d−1} |∂_r g|² dr`, which is discretized by a
//! fourth-order staggered difference in `x`. Quadratures are rectangle rules
//! in `x` and converge spectrally for integrands that are smooth in `x`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::BandMatrix;

/// Half-width of the stiffness band (the staggered stencil spans four nodes).
pub const STIFFNESS_BANDWIDTH: usize = 3;

/// Construction parameters; also the grid block of the checkpoint header.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGridSpec {
    pub d: usize,
    pub c: f64,
    pub n: usize,
    pub r_min: f64,
    pub r_max: f64,
    /// Length scale `ℓ` of the coordinate map.
    pub scale: f64,
}

impl RadialGridSpec {
    pub fn new(d: usize, c: f64, n: usize, r_max: f64) -> Self {
        Self {
            d,
            c,
            n,
            r_min: 1e-12,
            r_max,
            scale: 1.0,
        }
    }

    /// Desk-scale default: `N = 8192`, `r_max = 50`.
    pub fn desk(d: usize, c: f64) -> Self {
        Self::new(d, c, 8192, 50.0)
    }

    /// Same computational nodes with every radius multiplied by `factor`.
    pub fn dilated(&self, factor: f64) -> Self {
        Self {
            r_min: self.r_min * factor,
            r_max: self.r_max * factor,
            scale: self.scale * factor,
            ..*self
        }
    }

    pub fn build(self) -> Result<RadialGrid> {
        RadialGrid::new(self)
    }
}

/// `c* = (d−2)²/4`, the sharp Hardy constant.
pub fn hardy_constant(d: usize) -> f64 {
    let k = d as f64 - 2.0;
    k * k / 4.0
}

/// Surface measure of the unit sphere `S^{d−1}`.
pub fn sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / gamma(h)
}

// Half-integer and integer arguments only.
fn gamma(x: f64) -> f64 {
    if (x - 0.5).abs() < 1e-12 {
        std::f64::consts::PI.sqrt()
    } else if (x - 1.0).abs() < 1e-12 {
        1.0
    } else {
        (x - 1.0) * gamma(x - 1.0)
    }
}

/// Admissible origin exponent `σ = −(d−2)/2 + √(c* − c)`.
pub fn origin_exponent(d: usize, c: f64) -> f64 {
    -(d as f64 - 2.0) / 2.0 + (hardy_constant(d) - c).sqrt()
}

pub fn check_coupling(d: usize, c: f64) -> Result<()> {
    let cstar = hardy_constant(d);
    if !(c > 0.0 && c < cstar) {
        return Err(Error::Parameter(format!(
            "coupling c = {c} outside the open interval (0, {cstar}) for d = {d}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RadialGrid {
    spec: RadialGridSpec,
    sigma: f64,
    nu: f64,
    x_lo: f64,
    dx: f64,
    x: Vec<f64>,
    r: Vec<f64>,
    /// `r^σ` at the nodes.
    phi: Vec<f64>,
    /// Quadrature weights for `∫ f dx` over ℝᵈ.
    weights: Vec<f64>,
    /// `weights · r^{2σ}`: mass matrix of the regular part `g`.
    g_weights: Vec<f64>,
    /// Symmetric positive definite stiffness matrix: `H = gᴴ K g`.
    stiffness: BandMatrix<f64>,
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln(eʸ − 1)`, without overflow for large `y`.
fn softplus_inverse(y: f64) -> f64 {
    if y > 30.0 {
        y + (-(-y).exp()).ln_1p()
    } else {
        y.exp_m1().ln()
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl RadialGrid {
    pub fn new(spec: RadialGridSpec) -> Result<Self> {
        let RadialGridSpec {
            d,
            c,
            n,
            r_min,
            r_max,
            scale,
        } = spec;
        if d < 3 {
            return Err(Error::Parameter(format!(
                "radial grids need d ≥ 3, got {d}"
            )));
        }
        check_coupling(d, c)?;
        if n < 16 {
            return Err(Error::Parameter(format!("too few radial nodes: {n}")));
        }
        if !(r_min > 0.0 && r_max > r_min && scale > 0.0) {
            return Err(Error::Parameter(format!(
                "need 0 < r_min < r_max and scale > 0 (got {r_min}, {r_max}, {scale})"
            )));
        }
        let sigma = origin_exponent(d, c);
        let nu = (hardy_constant(d) - c).sqrt();
        let x_of = |r: f64| softplus_inverse(r / scale);
        let x_lo = x_of(r_min);
        let x_hi = x_of(r_max);
        let dx = (x_hi - x_lo) / n as f64;
        let area = sphere_area(d);
        let df = d as f64;

        let x: Vec<f64> = (0..n).map(|i| x_lo + (i as f64 + 0.5) * dx).collect();
        let r: Vec<f64> = x.iter().map(|&x| scale * softplus(x)).collect();
        let rp: Vec<f64> = x.iter().map(|&x| scale * sigmoid(x)).collect();
        let phi: Vec<f64> = r.iter().map(|&r| r.powf(sigma)).collect();
        let weights: Vec<f64> = r
            .iter()
            .zip(&rp)
            .map(|(&r, &rp)| area * r.powf(df - 1.0) * rp * dx)
            .collect();
        let g_weights: Vec<f64> = weights.iter().zip(&phi).map(|(w, p)| w * p * p).collect();

        // Staggered derivative at x_{i+1/2}: (g_{i-1} − 27 g_i + 27 g_{i+1} − g_{i+2}) / 24Δx,
        // with even reflection at the inner end and odd reflection at r_max.
        let mut stiffness = BandMatrix::zeros(n, STIFFNESS_BANDWIDTH);
        let fold = |j: isize| -> Option<(usize, f64)> {
            let ni = n as isize;
            if j < 0 {
                Some(((-j - 1) as usize, 1.0))
            } else if j >= ni {
                let m = 2 * ni - 1 - j;
                (m >= 0).then_some((m as usize, -1.0))
            } else {
                Some((j as usize, 1.0))
            }
        };
        for i in 0..n {
            let xs = x_lo + (i as f64 + 1.0) * dx;
            let rs = scale * softplus(xs);
            let rps = scale * sigmoid(xs);
            let a = area * rs.powf(2.0 * sigma + df - 1.0) / rps * dx;
            let mut coef: [(usize, f64); 4] = [(0, 0.0); 4];
            let mut len = 0;
            for (off, w) in [(-1isize, 1.0), (0, -27.0), (1, 27.0), (2, -1.0)] {
                if let Some((j, s)) = fold(i as isize + off) {
                    let v = s * w / (24.0 * dx);
                    match coef[..len].iter_mut().find(|(k, _)| *k == j) {
                        Some(e) => e.1 += v,
                        None => {
                            coef[len] = (j, v);
                            len += 1;
                        }
                    }
                }
            }
            for &(j, cj) in &coef[..len] {
                for &(k, ck) in &coef[..len] {
                    stiffness.add(j, k, a * cj * ck);
                }
            }
        }

        Ok(Self {
            spec,
            sigma,
            nu,
            x_lo,
            dx,
            x,
            r,
            phi,
            weights,
            g_weights,
            stiffness,
        })
    }

    pub fn spec(&self) -> &RadialGridSpec {
        &self.spec
    }
    pub fn dimension(&self) -> usize {
        self.spec.d
    }
    pub fn coupling(&self) -> f64 {
        self.spec.c
    }
    pub fn hardy_constant(&self) -> f64 {
        hardy_constant(self.spec.d)
    }
    pub fn len(&self) -> usize {
        self.r.len()
    }
    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
    pub fn radii(&self) -> &[f64] {
        &self.r
    }
    pub fn r_max(&self) -> f64 {
        self.spec.r_max
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn g_weights(&self) -> &[f64] {
        &self.g_weights
    }
    pub fn stiffness(&self) -> &BandMatrix<f64> {
        &self.stiffness
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn origin_weights(&self) -> &[f64] {
        &self.phi
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Computational coordinate of radius `r`.
    pub fn coordinate(&self, r: f64) -> f64 {
        (r / self.spec.scale).exp_m1().ln()
    }

    /// Samples a radial profile `r ↦ f(r)` at the nodes.
    pub fn sample<F: Fn(f64) -> Complex64>(&self, f: F) -> Vec<Complex64> {
        self.r.iter().map(|&r| f(r)).collect()
    }

    /// Regular part `g = u / r^σ`.
    pub fn regular_part(&self, u: &[Complex64]) -> Vec<Complex64> {
        u.iter().zip(&self.phi).map(|(u, p)| u / p).collect()
    }

    /// Inverse of [`regular_part`](Self::regular_part).
    pub fn from_regular_part(&self, g: &[Complex64]) -> Vec<Complex64> {
        g.iter().zip(&self.phi).map(|(g, p)| g * p).collect()
    }

    /// `gᴴ K g`.
    pub fn dirichlet_form(&self, g: &[Complex64]) -> f64 {
        let kg = self.stiffness.mul_vec(g);
        g.iter().zip(&kg).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// `∫ |u|²/|x|² dx`, including the analytic contribution of the ball
    /// `|x| < r(x_lo)` under the assumption `g ≈ g₀` there.
    pub fn inverse_square_moment(&self, g: &[Complex64]) -> f64 {
        let bulk: f64 = g
            .iter()
            .zip(&self.g_weights)
            .zip(&self.r)
            .map(|((g, w), r)| w * g.norm_sqr() / (r * r))
            .sum();
        let r_b = self.spec.scale * softplus(self.x_lo);
        let tail =
            sphere_area(self.spec.d) * g[0].norm_sqr() * r_b.powf(2.0 * self.nu) / (2.0 * self.nu);
        bulk + tail
    }

    /// Cubic (four-point Lagrange) interpolation of nodal data in the
    /// computational coordinate. Left of the first node the data is held
    /// constant; beyond `r_max` it is zero, with the odd reflection used by
    /// the stiffness matrix in between.
    pub fn interpolate(&self, data: &[Complex64], r: f64) -> Complex64 {
        let n = self.len() as isize;
        if r >= self.spec.r_max {
            return Complex64::new(0.0, 0.0);
        }
        let xq = if r <= 0.0 {
            f64::NEG_INFINITY
        } else {
            self.coordinate(r)
        };
        let s = (xq - self.x[0]) / self.dx;
        if s <= 0.0 || !s.is_finite() {
            return data[0];
        }
        let at = |j: isize| -> Complex64 {
            if j < 0 {
                data[(-j - 1) as usize]
            } else if j >= n {
                let m = 2 * n - 1 - j;
                if m >= 0 {
                    -data[m as usize]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            } else {
                data[j as usize]
            }
        };
        let j = s.floor() as isize;
        let t = s - j as f64;
        let w = [
            -t * (t - 1.0) * (t - 2.0) / 6.0,
            (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
            -(t + 1.0) * t * (t - 2.0) / 2.0,
            (t + 1.0) * t * (t - 1.0) / 6.0,
        ];
        (0..4)
            .map(|k| at(j - 1 + k as isize) * w[k])
            .fold(Complex64::new(0.0, 0.0), |a, b| a + b)
    }
}
