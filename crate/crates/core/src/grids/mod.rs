//! Discretizations of ℝᵈ and the sampled fields living on them.

mod cartesian;
mod radial;

use std::sync::Arc;

use num_complex::Complex64;

pub use cartesian::{CartesianGrid, CartesianGridSpec, LatticePoint};
pub use radial::{
    check_coupling, hardy_constant, origin_exponent, sphere_area, RadialGrid, RadialGridSpec,
    STIFFNESS_BANDWIDTH,
};

use crate::error::{Error, Result};
use crate::spectral;

/// Shared handle to one of the two grid kinds.
#[derive(Debug, Clone)]
pub enum Grid {
    Radial(Arc<RadialGrid>),
    Cartesian(Arc<CartesianGrid>),
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::Radial(g) => g.len(),
            Grid::Cartesian(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dimension(&self) -> usize {
        match self {
            Grid::Radial(g) => g.dimension(),
            Grid::Cartesian(g) => g.dimension(),
        }
    }

    pub fn coupling(&self) -> f64 {
        match self {
            Grid::Radial(g) => g.coupling(),
            Grid::Cartesian(g) => g.coupling(),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Grid::Radial(_) => "radial",
            Grid::Cartesian(_) => "cartesian",
        }
    }

    /// `∫ f dx` of a real nodal function.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        match self {
            Grid::Radial(g) => f.iter().zip(g.weights()).map(|(a, w)| a * w).sum(),
            Grid::Cartesian(g) => g.cell_volume() * f.iter().sum::<f64>(),
        }
    }

    /// Same underlying grid object.
    pub fn same_as(&self, other: &Grid) -> bool {
        match (self, other) {
            (Grid::Radial(a), Grid::Radial(b)) => Arc::ptr_eq(a, b) || a.spec() == b.spec(),
            (Grid::Cartesian(a), Grid::Cartesian(b)) => Arc::ptr_eq(a, b) || a.spec() == b.spec(),
            _ => false,
        }
    }

    pub fn as_radial(&self) -> Result<&Arc<RadialGrid>> {
        match self {
            Grid::Radial(g) => Ok(g),
            Grid::Cartesian(_) => Err(Error::Unsupported("expected a radial field".into())),
        }
    }

    pub fn as_cartesian(&self) -> Result<&Arc<CartesianGrid>> {
        match self {
            Grid::Cartesian(g) => Ok(g),
            Grid::Radial(_) => Err(Error::Unsupported("expected a cartesian field".into())),
        }
    }
}

impl From<RadialGrid> for Grid {
    fn from(g: RadialGrid) -> Self {
        Grid::Radial(Arc::new(g))
    }
}

impl From<CartesianGrid> for Grid {
    fn from(g: CartesianGrid) -> Self {
        Grid::Cartesian(Arc::new(g))
    }
}

/// Complex samples of a function on a grid.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
}

/// Output of [`Field::rescale`].
#[derive(Debug, Clone)]
pub struct Rescaled {
    pub field: Field,
    /// Set when part of the input's mass falls outside the represented
    /// domain after scaling.
    pub under_resolved: bool,
}

const RESCALE_LOSS_TOLERANCE: f64 = 1e-10;

impl Field {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Structural(format!(
                "{} samples for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Radial field from a profile `r ↦ f(r)`.
    pub fn radial<F: Fn(f64) -> Complex64>(grid: &Arc<RadialGrid>, f: F) -> Self {
        Self {
            values: grid.sample(f),
            grid: Grid::Radial(grid.clone()),
        }
    }

    /// Cartesian field from a function of position.
    pub fn cartesian<F: Fn(&[f64]) -> Complex64>(grid: &Arc<CartesianGrid>, f: F) -> Self {
        let values = (0..grid.len())
            .map(|k| f(&grid.position(&grid.multi_index(k))))
            .collect();
        Self {
            values,
            grid: Grid::Cartesian(grid.clone()),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }
    pub fn tag(&self) -> &'static str {
        self.grid.tag()
    }
    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Same grid, new samples.
    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self> {
        Field::new(self.grid.clone(), values)
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|z| z * a).collect(),
        }
    }

    pub fn modulus(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .map(|z| Complex64::new(z.norm(), 0.0))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub(crate) fn check_same_grid(&self, other: &Field) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::Structural("fields live on different grids".into()));
        }
        Ok(())
    }

    /// `∫ f dx`.
    pub fn quadrature(&self) -> Complex64 {
        let re: Vec<f64> = self.values.iter().map(|z| z.re).collect();
        let im: Vec<f64> = self.values.iter().map(|z| z.im).collect();
        Complex64::new(self.grid.integrate(&re), self.grid.integrate(&im))
    }

    /// `∫ |f|² dx`.
    pub fn norm_sq(&self) -> f64 {
        let m: Vec<f64> = self.values.iter().map(|z| z.norm_sqr()).collect();
        self.grid.integrate(&m)
    }

    /// `∫ |f|²/|x|² dx`.
    pub fn inverse_square_moment(&self) -> f64 {
        match &self.grid {
            Grid::Radial(g) => g.inverse_square_moment(&g.regular_part(&self.values)),
            Grid::Cartesian(g) => {
                g.cell_volume()
                    * self
                        .values
                        .iter()
                        .zip(g.radius_sq())
                        .map(|(z, r2)| z.norm_sqr() / r2)
                        .sum::<f64>()
            }
        }
    }

    /// `H(f) = ∫|∇f|² − c ∫|f|²/|x|²` evaluated natively: the weighted
    /// Dirichlet form of the regular part on radial grids, forward
    /// differences on Cartesian lattices.
    pub fn hardy_form(&self) -> f64 {
        match &self.grid {
            Grid::Radial(g) => g.dirichlet_form(&g.regular_part(&self.values)),
            Grid::Cartesian(g) => {
                self.gradient_norm_sq() - g.coupling() * self.inverse_square_moment()
            }
        }
    }

    /// Discrete `∫ |∇f|² dx`.
    pub fn gradient_norm_sq(&self) -> f64 {
        match &self.grid {
            Grid::Radial(g) => {
                let gv = g.regular_part(&self.values);
                g.dirichlet_form(&gv) + g.coupling() * g.inverse_square_moment(&gv)
            }
            Grid::Cartesian(g) => {
                let m = g.points_per_axis();
                let h = g.spacing();
                let mut total = 0.0;
                for &s in g.strides() {
                    for k in 0..g.len() {
                        let j = (k / s) % m;
                        let next = if j + 1 == m { k + s - m * s } else { k + s };
                        total += (self.values[next] - self.values[k]).norm_sqr();
                    }
                }
                total * h.powi(g.dimension() as i32 - 2)
            }
        }
    }

    /// Fourier-side evaluation of the same periodic forward-difference
    /// energy (multiplier `(4/h²) sin²(k h/2)` per axis). Cartesian only.
    pub fn gradient_norm_sq_spectral(&self) -> Result<f64> {
        let g = self.grid.as_cartesian()?;
        let (m, d, h) = (g.points_per_axis(), g.dimension(), g.spacing());
        let mut hat = self.values.clone();
        spectral::fft_nd(&mut hat, m, d, false);
        let sym: Vec<f64> = (0..m)
            .map(|k| {
                let s = (std::f64::consts::PI * k as f64 / m as f64).sin();
                4.0 * s * s / (h * h)
            })
            .collect();
        let total: f64 = hat
            .iter()
            .enumerate()
            .map(|(flat, z)| {
                let mut rest = flat;
                let mut mult = 0.0;
                for _ in 0..d {
                    mult += sym[rest % m];
                    rest /= m;
                }
                mult * z.norm_sqr()
            })
            .sum();
        Ok(total * g.cell_volume() / g.len() as f64)
    }

    /// Periodic translation `x ↦ f(x − shift·h)`. Cartesian only.
    pub fn translate(&self, shift: &[i64]) -> Result<Field> {
        let g = match &self.grid {
            Grid::Cartesian(g) => g,
            Grid::Radial(_) => {
                return Err(Error::Unsupported(
                    "translation of a radial field breaks radial symmetry".into(),
                ))
            }
        };
        if shift.len() != g.dimension() {
            return Err(Error::Structural(format!(
                "shift has {} components on a {}-dimensional lattice",
                shift.len(),
                g.dimension()
            )));
        }
        let perm = g.shifted_indices(shift);
        let mut out = vec![Complex64::new(0.0, 0.0); self.values.len()];
        for (k, &p) in perm.iter().enumerate() {
            out[p] = self.values[k];
        }
        Field::new(self.grid.clone(), out)
    }

    /// `λ^{d/2} f(λx)` for a radial field, sampled without interpolation on
    /// the grid dilated by `1/λ`. Mass and the Hardy form transform exactly.
    pub fn dilate(&self, lambda: f64) -> Result<Field> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Parameter(format!(
                "scale factor must be positive, got {lambda}"
            )));
        }
        let g = self.grid.as_radial()?;
        let grid = Arc::new(g.spec().dilated(1.0 / lambda).build()?);
        let amp = lambda.powf(g.dimension() as f64 / 2.0);
        Field::new(
            Grid::Radial(grid),
            self.values.iter().map(|z| z * amp).collect(),
        )
    }

    /// Mass-critical scaling `x ↦ λ^{d/2} f(λx)`.
    pub fn rescale(&self, lambda: f64) -> Result<Rescaled> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Parameter(format!(
                "scale factor must be positive, got {lambda}"
            )));
        }
        let d = self.grid.dimension() as f64;
        match &self.grid {
            Grid::Radial(g) => {
                let gv = g.regular_part(&self.values);
                let amp = lambda.powf(d / 2.0 + g.sigma());
                let out: Vec<Complex64> = g
                    .radii()
                    .iter()
                    .map(|&r| g.interpolate(&gv, lambda * r) * amp)
                    .collect();
                let lost = self.mass_beyond(lambda * g.r_max());
                Ok(Rescaled {
                    field: Field::new(self.grid.clone(), g.from_regular_part(&out))?,
                    under_resolved: lost,
                })
            }
            Grid::Cartesian(g) => {
                let (m, dim, h, l) = (
                    g.points_per_axis(),
                    g.dimension(),
                    g.spacing(),
                    g.half_width(),
                );
                let mut matrix = vec![0.0; m * m];
                for (j, &xj) in g.axis().iter().enumerate() {
                    let y = lambda * xj;
                    if y.abs() >= l {
                        continue;
                    }
                    for (k, &xk) in g.axis().iter().enumerate() {
                        matrix[j * m + k] = spectral::periodic_cardinal(y - xk, m, h);
                    }
                }
                let mut data = self.values.clone();
                let mut line = vec![Complex64::new(0.0, 0.0); m];
                for axis in 0..dim {
                    let stride = g.strides()[axis];
                    let block = stride * m;
                    for base in (0..data.len()).step_by(block) {
                        for off in 0..stride {
                            let start = base + off;
                            for (j, out) in line.iter_mut().enumerate() {
                                let row = &matrix[j * m..(j + 1) * m];
                                *out = row
                                    .iter()
                                    .enumerate()
                                    .map(|(k, w)| data[start + k * stride] * *w)
                                    .sum();
                            }
                            for (j, v) in line.iter().enumerate() {
                                data[start + j * stride] = *v;
                            }
                        }
                    }
                }
                let amp = lambda.powf(d / 2.0);
                for v in data.iter_mut() {
                    *v *= amp;
                }
                let lost = if lambda < 1.0 {
                    let cut = lambda * l;
                    let total = self.norm_sq();
                    let outside: f64 = (0..g.len())
                        .filter(|&k| g.position(&g.multi_index(k)).iter().any(|x| x.abs() >= cut))
                        .map(|k| self.values[k].norm_sqr())
                        .sum::<f64>()
                        * g.cell_volume();
                    total > 0.0 && outside > RESCALE_LOSS_TOLERANCE * total
                } else {
                    false
                };
                Ok(Rescaled {
                    field: Field::new(self.grid.clone(), data)?,
                    under_resolved: lost,
                })
            }
        }
    }

    fn mass_beyond(&self, radius: f64) -> bool {
        let Grid::Radial(g) = &self.grid else {
            return false;
        };
        let total = self.norm_sq();
        if total == 0.0 {
            return false;
        }
        let outside: f64 = g
            .radii()
            .iter()
            .zip(g.weights())
            .zip(&self.values)
            .filter(|((r, _), _)| **r > radius)
            .map(|((_, w), z)| w * z.norm_sqr())
            .sum();
        outside > RESCALE_LOSS_TOLERANCE * total
    }
}
