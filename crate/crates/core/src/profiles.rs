//! Translation-only profile decomposition of Cartesian field sequences, its
//! defect measurements, and the lower bound on the extracted profile.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::concentration::best_center;
use crate::exec::ExecPolicy;
use crate::functionals::{critical_exponent, hardy_functional, lp_norm, lp_power};
use crate::grids::{CartesianGrid, Grid, LatticePoint, RadialGrid};
use crate::ground_state::GroundState;
use crate::spectral::low_pass;
use crate::{Error, Field, Result};

/// `(‖f‖² + ‖∇f‖²)^{1/2}` with the lattice gradient.
pub fn h1_norm(f: &Field) -> f64 {
    (f.norm_sq() + f.gradient_norm_sq()).sqrt()
}

fn same_grid(grid: &Arc<CartesianGrid>, f: &Field) -> Result<()> {
    match f.grid() {
        Grid::Cartesian(g) if Arc::ptr_eq(g, grid) || g.spec() == grid.spec() => Ok(()),
        _ => Err(Error::Structural(
            "field is not on the sequence's grid".into(),
        )),
    }
}

/// A bubble and its lattice displacements `x_n` (relative to the box center
/// node), one per sequence index.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub profile: Field,
    pub centers: Vec<LatticePoint>,
}

#[derive(Debug, Clone)]
pub struct FieldSequence {
    grid: Arc<CartesianGrid>,
    entries: Vec<Field>,
    ground_truth: Option<Vec<GroundTruth>>,
    max_norm: f64,
}

impl FieldSequence {
    pub fn new(entries: Vec<Field>) -> Result<Self> {
        let first = entries
            .first()
            .ok_or_else(|| Error::Structural("empty field sequence".into()))?;
        let grid = first.grid().as_cartesian()?.clone();
        let mut max_norm: f64 = 0.0;
        for f in &entries {
            same_grid(&grid, f)?;
            let n = h1_norm(f);
            if !n.is_finite() {
                return Err(Error::Degenerate(
                    "sequence entry has unbounded norm".into(),
                ));
            }
            max_norm = max_norm.max(n);
        }
        Ok(Self {
            grid,
            entries,
            ground_truth: None,
            max_norm,
        })
    }

    pub fn grid(&self) -> &Arc<CartesianGrid> {
        &self.grid
    }
    pub fn entries(&self) -> &[Field] {
        &self.entries
    }
    pub fn len(&self) -> usize {
        self.entries.len()
    }
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
    pub fn ground_truth(&self) -> Option<&[GroundTruth]> {
        self.ground_truth.as_deref()
    }
    /// Largest H¹-surrogate norm over the sequence.
    pub fn max_norm(&self) -> f64 {
        self.max_norm
    }
}

/// A synthetic bubble, centered on the box center node, with the radius of
/// the region it is considered to occupy.
#[derive(Debug, Clone)]
pub struct SyntheticProfile {
    pub field: Field,
    pub support_radius: f64,
}

/// `v_n = Σ_j V^j(· − x_n^j) + w`, one entry per index of the center laws.
pub fn generate_synthetic(
    profiles: &[SyntheticProfile],
    center_laws: &[Vec<LatticePoint>],
    noise: Option<&Field>,
    n_seq: usize,
) -> Result<FieldSequence> {
    if profiles.is_empty() || profiles.len() != center_laws.len() {
        return Err(Error::Structural(format!(
            "{} profiles for {} center laws",
            profiles.len(),
            center_laws.len()
        )));
    }
    let grid = profiles[0].field.grid().as_cartesian()?.clone();
    for p in profiles {
        same_grid(&grid, &p.field)?;
    }
    if let Some(w) = noise {
        same_grid(&grid, w)?;
    }
    if center_laws.iter().any(|law| law.len() < n_seq) {
        return Err(Error::Structural(format!(
            "every center law needs {n_seq} entries"
        )));
    }
    for j in 0..profiles.len() {
        for k in (j + 1)..profiles.len() {
            let reach = profiles[j].support_radius + profiles[k].support_radius;
            let pairs = center_laws[j].iter().zip(&center_laws[k]).take(n_seq);
            for (n, (a, b)) in pairs.enumerate() {
                let sep = grid.periodic_distance(a, b);
                if sep < reach {
                    return Err(Error::Collision(format!(
                        "profiles {j} and {k} are {sep} apart at index {n}, closer than {reach}"
                    )));
                }
            }
        }
    }
    let entries = (0..n_seq)
        .map(|n| {
            let mut acc = noise
                .cloned()
                .unwrap_or_else(|| Field::zeros(Grid::Cartesian(grid.clone())));
            for (p, law) in profiles.iter().zip(center_laws) {
                acc = acc.add(&p.field.translate(&law[n])?)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut seq = FieldSequence::new(entries)?;
    seq.ground_truth = Some(
        profiles
            .iter()
            .zip(center_laws)
            .map(|(p, law)| GroundTruth {
                profile: p.field.clone(),
                centers: law[..n_seq].to_vec(),
            })
            .collect(),
    );
    Ok(seq)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractOptions {
    pub max_profiles: usize,
    /// Stop threshold on the H¹-surrogate norm of a candidate profile. When
    /// `None`, one hundredth of the sequence's largest norm.
    pub eta_min: Option<f64>,
    /// Radius of the window used to locate a bubble.
    pub probe_radius: f64,
    /// Radius of the window cut around the recentered bubble.
    pub window_radius: f64,
}

impl ExtractOptions {
    pub fn for_grid(grid: &CartesianGrid) -> Self {
        Self {
            max_profiles: 4,
            eta_min: None,
            probe_radius: 2.0 * grid.spacing(),
            window_radius: grid.half_width(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub profiles: Vec<Field>,
    /// `centers[j][n]`: displacement of profile `j` in entry `n`.
    pub centers: Vec<Vec<LatticePoint>>,
    pub residuals: Vec<Field>,
    pub entries: Vec<Field>,
    /// Extraction stopped at `max_profiles` with a candidate still above
    /// threshold.
    pub truncated: bool,
    pub eta_min: f64,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.profiles.len()
    }
    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// `V^j(· − x_n^j)`.
    pub fn placed(&self, j: usize, n: usize) -> Result<Field> {
        self.profiles[j].translate(&self.centers[j][n])
    }

    /// `v_n − Σ_j V^j(· − x_n^j) − v_n^ℓ`, with the same operation order the
    /// extraction used.
    pub fn reconstruction_error(&self, n: usize) -> Result<Field> {
        let mut r = self.entries[n].clone();
        for j in 0..self.len() {
            r = r.sub(&self.placed(j, n)?)?;
        }
        r.sub(&self.residuals[n])
    }

    /// Index of the profile with the largest mass.
    pub fn dominant(&self) -> Option<usize> {
        (0..self.len()).max_by(|&a, &b| {
            self.profiles[a]
                .norm_sq()
                .total_cmp(&self.profiles[b].norm_sq())
                .then(b.cmp(&a))
        })
    }
}

fn window_and_smooth(grid: &CartesianGrid, f: &Field, radius: f64) -> Result<Field> {
    let center = grid.center_index();
    let mut data: Vec<Complex64> = f.values().to_vec();
    for (k, v) in data.iter_mut().enumerate() {
        let dist = grid.periodic_distance(&grid.multi_index(k), &center);
        if dist > radius {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    low_pass(&mut data, grid.points_per_axis(), grid.dimension());
    f.with_values(data)
}

fn displacement(grid: &CartesianGrid, node: &[i64]) -> LatticePoint {
    let c = grid.center_index();
    let v: Vec<i64> = node.iter().zip(&c).map(|(a, b)| a - b).collect();
    grid.minimal_image(&v)
}

/// Greedy extraction: locate the heaviest window in every residual, cut the
/// last entry's bubble out as the next profile, subtract it everywhere.
pub fn extract_profiles(
    seq: &FieldSequence,
    opts: &ExtractOptions,
    policy: ExecPolicy,
) -> Result<Decomposition> {
    let grid = seq.grid().clone();
    let eta_min = opts.eta_min.unwrap_or(1e-2 * seq.max_norm());
    if !(eta_min > 0.0) {
        return Err(Error::Parameter(format!(
            "η_min must be positive, got {eta_min}"
        )));
    }
    let last = seq.len() - 1;
    let mut residuals: Vec<Field> = seq.entries().to_vec();
    let mut profiles = Vec::new();
    let mut centers: Vec<Vec<LatticePoint>> = Vec::new();
    let mut truncated = false;
    loop {
        let nodes = residuals
            .iter()
            .map(|r| best_center(r, opts.probe_radius, policy))
            .collect::<Result<Vec<_>>>()?;
        let shifts: Vec<LatticePoint> = nodes.iter().map(|p| displacement(&grid, p)).collect();
        let back: Vec<i64> = shifts[last].iter().map(|s| -s).collect();
        let candidate = window_and_smooth(
            &grid,
            &residuals[last].translate(&back)?,
            opts.window_radius,
        )?;
        if h1_norm(&candidate) < eta_min {
            break;
        }
        if profiles.len() == opts.max_profiles {
            truncated = true;
            break;
        }
        residuals = policy
            .map_range(residuals.len(), |n| {
                residuals[n].sub(&candidate.translate(&shifts[n])?)
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        profiles.push(candidate);
        centers.push(shifts);
    }
    Ok(Decomposition {
        profiles,
        centers,
        residuals,
        entries: seq.entries().to_vec(),
        truncated,
        eta_min,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectRow {
    pub n: usize,
    /// Smallest pairwise distance between profile centers; infinite with
    /// fewer than two profiles.
    pub min_separation: f64,
    pub pythagorean_defect: f64,
    pub hardy_defect: f64,
    pub residual_lp: f64,
    pub mass: f64,
    pub hardy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    pub p: f64,
    pub rows: Vec<DefectRow>,
}

impl DefectReport {
    pub const CSV_HEADER: &'static str =
        "n,min_separation,pythagorean_defect,hardy_defect,residual_lp";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.n, r.min_separation, r.pythagorean_defect, r.hardy_defect, r.residual_lp
            ));
        }
        s
    }
}

/// Mass, Hardy and `L^p` defects of a decomposition, one row per entry
/// (`n` counts from 1).
pub fn defect_report(dec: &Decomposition, p: f64, policy: ExecPolicy) -> Result<DefectReport> {
    let Some(first) = dec.entries.first() else {
        return Err(Error::Structural("empty decomposition".into()));
    };
    let grid = first.grid().as_cartesian()?.clone();
    let d = grid.dimension() as f64;
    let p_max = if d > 2.0 {
        2.0 * d / (d - 2.0)
    } else {
        f64::INFINITY
    };
    if !(p > 2.0 && p < p_max) {
        return Err(Error::Parameter(format!(
            "p must lie in (2, {p_max}), got {p}"
        )));
    }
    let rows = policy
        .map_range(dec.entries.len(), |n| -> Result<DefectRow> {
            let v = &dec.entries[n];
            let r = &dec.residuals[n];
            let mut mass_parts = 0.0;
            let mut hardy_parts = 0.0;
            for j in 0..dec.len() {
                let placed = dec.placed(j, n)?;
                mass_parts += placed.norm_sq();
                hardy_parts += hardy_functional(&placed);
            }
            let mut min_sep = f64::INFINITY;
            for j in 0..dec.len() {
                for k in (j + 1)..dec.len() {
                    let s = grid.periodic_distance(&dec.centers[j][n], &dec.centers[k][n]);
                    min_sep = min_sep.min(s);
                }
            }
            let mass = v.norm_sq();
            let hardy = hardy_functional(v);
            Ok(DefectRow {
                n: n + 1,
                min_separation: min_sep,
                pythagorean_defect: (mass - mass_parts - r.norm_sq()).abs(),
                hardy_defect: (hardy - hardy_parts - hardy_functional(r)).abs(),
                residual_lp: lp_norm(r, p)?,
                mass,
                hardy,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(DefectReport { p, rows })
}

/// `Re ∫ V(x − x_n) conj(w(x)) / |x|² dx` on the lattice.
pub fn cross_term(v: &Field, w: &Field, x_n: &[i64]) -> Result<f64> {
    let grid = v.grid().as_cartesian()?;
    same_grid(grid, w)?;
    let placed = v.translate(x_n)?;
    let sum: f64 = placed
        .values()
        .iter()
        .zip(w.values())
        .zip(grid.radius_sq())
        .map(|((a, b), r2)| (a * b.conj()).re / r2)
        .sum();
    Ok(sum * grid.cell_volume())
}

/// `(1/R²) ∫ |V(x − x_n)| |w(x)| dx`, the domination bound for
/// [`cross_term`] when `V` vanishes outside a ball of radius `R` and
/// `|x_n| ≥ 2R`.
pub fn cross_term_bound(v: &Field, w: &Field, x_n: &[i64], support_radius: f64) -> Result<f64> {
    let grid = v.grid().as_cartesian()?;
    same_grid(grid, w)?;
    let placed = v.translate(x_n)?;
    let sum: f64 = placed
        .values()
        .iter()
        .zip(w.values())
        .map(|(a, b)| a.norm() * b.norm())
        .sum();
    Ok(sum * grid.cell_volume() / (support_radius * support_radius))
}

/// `(d/(d+2))^{d/4} m^{d/2+1} M^{−d/4} ‖Q‖`.
pub fn lemma22_bound(d: usize, m: f64, big_m: f64, q_norm: f64) -> f64 {
    let df = d as f64;
    (df / (df + 2.0)).powf(df / 4.0) * m.powf(df / 2.0 + 1.0) * big_m.powf(-df / 4.0) * q_norm
}

pub const LEMMA22_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma22Report {
    /// `max_n ‖v_n‖_{L^{4/d+2}}`.
    pub m: f64,
    /// `max_n H(v_n)`.
    pub big_m: f64,
    pub bound: f64,
    pub extracted_norm: f64,
    pub q_norm: f64,
    pub profiles: usize,
    pub truncated: bool,
    pub pass: bool,
    /// `Σ_j ‖V^j‖^p_p` and `C_d · max_j ‖V^j‖^{4/d} · (M + ε)`.
    pub summed_gn: (f64, f64),
}

/// Both sides of `Σ_j ‖V^j‖^{4/d+2}_{4/d+2} ≤ C_d · max_j ‖V^j‖^{4/d} · (M + ε)`
/// for the profiles of `dec`, with `ε = LEMMA22_TOLERANCE · M`.
pub fn summed_gn(dec: &Decomposition, sharp_constant: f64, big_m: f64) -> (f64, f64) {
    let Some(first) = dec.profiles.first() else {
        return (0.0, 0.0);
    };
    let d = first.grid().dimension();
    let p = critical_exponent(d);
    let lhs: f64 = dec.profiles.iter().map(|v| lp_power(v, p)).sum();
    let max_mass = dec.profiles.iter().map(Field::norm_sq).fold(0.0, f64::max);
    let rhs = sharp_constant * max_mass.powf(2.0 / d as f64) * big_m * (1.0 + LEMMA22_TOLERANCE);
    (lhs, rhs)
}

/// Extracts profiles and checks that the heaviest one carries at least the
/// lower bound on its `L²` norm, up to [`LEMMA22_TOLERANCE`].
pub fn lemma22_harness(
    seq: &FieldSequence,
    gs: &GroundState,
    opts: &ExtractOptions,
    policy: ExecPolicy,
) -> Result<(Decomposition, Lemma22Report)> {
    let d = seq.grid().dimension();
    let p = critical_exponent(d);
    let m = seq
        .entries()
        .iter()
        .map(|f| lp_power(f, p).powf(1.0 / p))
        .fold(0.0, f64::max);
    let big_m = seq
        .entries()
        .iter()
        .map(hardy_functional)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(big_m > 0.0) {
        return Err(Error::Degenerate(format!(
            "max Hardy functional {big_m:e} is not positive"
        )));
    }
    let dec = extract_profiles(seq, opts, policy)?;
    if dec.truncated {
        return Err(Error::NonConvergence {
            iterations: dec.len(),
            last_step: f64::NAN,
            residual: dec.eta_min,
        });
    }
    let q_norm = gs.norm();
    let bound = lemma22_bound(d, m, big_m, q_norm);
    let extracted_norm = dec
        .dominant()
        .map_or(0.0, |j| dec.profiles[j].norm_sq().sqrt());
    let pass = extracted_norm >= (1.0 - LEMMA22_TOLERANCE) * bound;
    let summed_gn = summed_gn(&dec, gs.sharp_constant, big_m);
    Ok((
        dec.clone(),
        Lemma22Report {
            m,
            big_m,
            bound,
            extracted_norm,
            q_norm,
            profiles: dec.len(),
            truncated: dec.truncated,
            pass,
            summed_gn,
        },
    ))
}

/// Radial field interpolated onto the box lattice, with the relative mass
/// error of the mapping.
pub fn radial_to_cartesian(f: &Field, grid: &Arc<CartesianGrid>) -> Result<(Field, f64)> {
    let rg: &Arc<RadialGrid> = f.grid().as_radial()?;
    if rg.dimension() != grid.dimension() || rg.coupling() != grid.coupling() {
        return Err(Error::Structural(
            "radial and Cartesian grids differ in dimension or coupling".into(),
        ));
    }
    let g = rg.regular_part(f.values());
    let sigma = rg.sigma();
    let out = Field::cartesian(grid, |x| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        rg.interpolate(&g, r) * r.powf(sigma)
    });
    let m0 = f.norm_sq();
    let err = if m0 > 0.0 {
        (out.norm_sq() - m0).abs() / m0
    } else {
        0.0
    };
    Ok((out, err))
}
