//! Scaling `ρ(t)`, rescaled snapshots, windowed mass and its center search.

use serde::{Deserialize, Serialize};

use crate::evolution::{estimate_t_star, BlowupEstimate, EvolutionTrace};
use crate::exec::ExecPolicy;
use crate::functionals::hardy_functional;
use crate::grids::{Grid, LatticePoint, Rescaled};
use crate::ground_state::GroundState;
use crate::{Error, Field, Result};

/// Allowed overshoot of the concentrated fraction caused by noise.
pub const FRACTION_NOISE: f64 = 0.02;

/// `√(H(Q)/H(f))`.
pub fn rho(gs: &GroundState, f: &Field) -> Result<f64> {
    let h = hardy_functional(f);
    if !(h > 1e-12 * gs.hardy) {
        return Err(Error::Degenerate(format!(
            "Hardy functional {h:e} is too small to normalize against"
        )));
    }
    Ok((gs.hardy / h).sqrt())
}

/// `ρ^{d/2} f(ρx)`, normalized so that the Hardy functional equals `H(Q)`.
/// Radial fields are carried to the dilated grid, which keeps the whole
/// profile; Cartesian fields are interpolated on their own box.
pub fn rescaled_snapshot(gs: &GroundState, f: &Field) -> Result<Rescaled> {
    let rho = rho(gs, f)?;
    match f.grid() {
        Grid::Radial(_) => Ok(Rescaled {
            field: f.dilate(rho)?,
            under_resolved: false,
        }),
        Grid::Cartesian(_) => f.rescale(rho),
    }
}

fn check_center(grid: &Grid, center: &[f64]) -> Result<()> {
    if center.len() != grid.dimension() {
        return Err(Error::Structural(format!(
            "center has {} coordinates in dimension {}",
            center.len(),
            grid.dimension()
        )));
    }
    if matches!(grid, Grid::Radial(_)) && center.iter().any(|&x| x != 0.0) {
        return Err(Error::Unsupported(
            "radial fields can only be windowed around the origin".into(),
        ));
    }
    Ok(())
}

/// `∫_{|x − center| ≤ radius} |f|²`, summed over the nodes inside the ball.
/// Distances on the Cartesian box are periodic.
pub fn windowed_mass(f: &Field, center: &[f64], radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::Parameter(format!(
            "window radius must be positive, got {radius}"
        )));
    }
    check_center(f.grid(), center)?;
    let dens: Vec<f64> = f.values().iter().map(|z| z.norm_sqr()).collect();
    match f.grid() {
        Grid::Radial(g) => Ok(g
            .radii()
            .iter()
            .zip(g.weights())
            .zip(&dens)
            .filter(|((r, _), _)| **r <= radius)
            .map(|((_, w), p)| w * p)
            .sum()),
        Grid::Cartesian(g) => {
            let period = 2.0 * g.half_width();
            let r2 = radius * radius;
            let sum: f64 = (0..g.len())
                .filter(|&k| {
                    let x = g.position(&g.multi_index(k));
                    let dist2: f64 = x
                        .iter()
                        .zip(center)
                        .map(|(a, b)| {
                            let s = a - b;
                            let s = s - period * (s / period).round();
                            s * s
                        })
                        .sum();
                    dist2 <= r2
                })
                .map(|k| dens[k])
                .sum();
            Ok(sum * g.cell_volume())
        }
    }
}

/// True when `windowed_mass` does not decrease along an increasing ladder of
/// radii.
pub fn monotone_in_radius(f: &Field, center: &[f64], radii: &[f64]) -> Result<bool> {
    let mut sorted = radii.to_vec();
    sorted.sort_by(f64::total_cmp);
    let masses = sorted
        .iter()
        .map(|&r| windowed_mass(f, center, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(masses.windows(2).all(|w| w[1] >= w[0]))
}

/// Lattice offsets `o` with `|o|·h ≤ radius`, in lexicographic order.
fn ball_offsets(d: usize, h: f64, radius: f64) -> Vec<Vec<i64>> {
    let k = (radius / h).floor() as i64;
    let r2 = radius * radius;
    let mut out = Vec::new();
    let mut cur = vec![-k; d];
    loop {
        let dist2: f64 = cur.iter().map(|&o| (o as f64 * h).powi(2)).sum();
        if dist2 <= r2 {
            out.push(cur.clone());
        }
        let mut axis = d;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            if cur[axis] < k {
                cur[axis] += 1;
                break;
            }
            cur[axis] = -k;
        }
    }
}

/// Node maximizing the windowed mass of radius `radius`. Every node's window
/// sum is accumulated in the same offset order, so equal windows compare
/// equal and the smallest flat index wins ties.
pub fn best_center(f: &Field, radius: f64, policy: ExecPolicy) -> Result<LatticePoint> {
    let g = f.grid().as_cartesian()?;
    if !(radius >= 0.0) {
        return Err(Error::Parameter(format!(
            "probe radius must be nonnegative, got {radius}"
        )));
    }
    let dens: Vec<f64> = f.values().iter().map(|z| z.norm_sqr()).collect();
    let offsets = ball_offsets(g.dimension(), g.spacing(), radius);
    let (m, d) = (g.points_per_axis(), g.dimension());
    if d > 8 {
        return Err(Error::Unsupported(format!(
            "center search in dimension {d}"
        )));
    }
    let reach = offsets
        .iter()
        .flatten()
        .map(|o| o.unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    // wrapped[a][(o + reach) * m + i] = ((i + o) mod m) * stride_a
    let wrapped: Vec<Vec<usize>> = g
        .strides()
        .iter()
        .map(|&st| {
            let mut t = Vec::with_capacity((2 * reach + 1) * m);
            for o in -(reach as i64)..=reach as i64 {
                for i in 0..m as i64 {
                    t.push((i + o).rem_euclid(m as i64) as usize * st);
                }
            }
            t
        })
        .collect();
    let rows: Vec<Vec<usize>> = offsets
        .iter()
        .map(|o| o.iter().map(|&v| (v + reach as i64) as usize * m).collect())
        .collect();
    let sums = policy.map_range(g.len(), |k| {
        let mut idx = [0usize; 8];
        let mut rest = k;
        for a in (0..d).rev() {
            idx[a] = rest % m;
            rest /= m;
        }
        let mut acc = 0.0;
        for row in &rows {
            let mut flat = 0;
            for a in 0..d {
                flat += wrapped[a][row[a] + idx[a]];
            }
            acc += dens[flat];
        }
        acc
    });
    let mut best = 0;
    for (k, s) in sums.iter().enumerate() {
        if *s > sums[best] {
            best = k;
        }
    }
    Ok(g.multi_index(best))
}

/// Window family `a(t) = κ (T* − t)^β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub kappa: f64,
    pub beta: f64,
    pub t_star: f64,
}

impl WindowSpec {
    pub fn new(kappa: f64, beta: f64, t_star: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::Parameter(format!("κ must be positive, got {kappa}")));
        }
        if !(beta > 0.0 && beta < 0.5) {
            return Err(Error::Parameter(format!(
                "β must lie in (0, 1/2), got {beta}"
            )));
        }
        if !t_star.is_finite() {
            return Err(Error::Parameter("T* must be finite".into()));
        }
        Ok(Self {
            kappa,
            beta,
            t_star,
        })
    }

    /// Anchored at a fitted blow-up time.
    pub fn anchored(kappa: f64, beta: f64, estimate: &BlowupEstimate) -> Result<Self> {
        Self::new(kappa, beta, estimate.t_star)
    }

    pub fn radius(&self, t: f64) -> f64 {
        self.kappa * (self.t_star - t).powf(self.beta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub t: f64,
    pub rho: f64,
    pub a_t: f64,
    pub center: Vec<f64>,
    pub windowed_mass: f64,
    /// `windowed_mass / ‖Q‖²`.
    pub fraction: f64,
    pub hardy: f64,
}

#[derive(Debug, Clone)]
pub struct ConcentrationCurve {
    pub rows: Vec<ConcentrationRow>,
    pub estimate: BlowupEstimate,
    /// `a(t)·√H(u(t))` strictly increases along the run.
    pub admissible: bool,
}

impl ConcentrationCurve {
    pub fn csv_header(d: usize) -> String {
        let centers: Vec<String> = (1..=d).map(|i| format!("center_x{i}")).collect();
        format!(
            "t,rho,a_t,{},windowed_mass,fraction,hardy",
            centers.join(",")
        )
    }

    pub fn to_csv(&self) -> String {
        let d = self.rows.first().map_or(0, |r| r.center.len());
        let mut s = Self::csv_header(d);
        s.push('\n');
        for r in &self.rows {
            let centers: Vec<String> = r.center.iter().map(|x| x.to_string()).collect();
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.t,
                r.rho,
                r.a_t,
                centers.join(","),
                r.windowed_mass,
                r.fraction,
                r.hardy
            ));
        }
        s
    }

    /// Rows in the last decade of Hardy growth.
    pub fn last_decade(&self) -> &[ConcentrationRow] {
        let Some(last) = self.rows.last() else {
            return &[];
        };
        let start = self
            .rows
            .iter()
            .position(|r| r.hardy >= last.hardy / 10.0)
            .unwrap_or(self.rows.len());
        &self.rows[start..]
    }

    /// The fraction never drops by more than `noise` below its running
    /// maximum over the last decade.
    pub fn fraction_nondecreasing(&self, noise: f64) -> bool {
        let mut peak = f64::NEG_INFINITY;
        self.last_decade().iter().all(|r| {
            peak = peak.max(r.fraction);
            r.fraction >= peak - noise
        })
    }

    pub fn final_fraction(&self) -> Option<f64> {
        self.rows.last().map(|r| r.fraction)
    }
}

/// Windowed mass around the origin for every checkpoint of a radial blow-up
/// run. Refuses traces that do not blow up.
pub fn concentration_curve(
    trace: &EvolutionTrace,
    gs: &GroundState,
    window: &WindowSpec,
    policy: ExecPolicy,
) -> Result<ConcentrationCurve> {
    let estimate = estimate_t_star(trace)?;
    let last = trace
        .checkpoints
        .last()
        .ok_or_else(|| Error::Structural("trace has no checkpoints".into()))?;
    if !(window.t_star > last.t) {
        return Err(Error::InconsistentEstimate(format!(
            "T* = {} does not exceed the last checkpoint time {}",
            window.t_star, last.t
        )));
    }
    let rows = policy
        .map(&trace.checkpoints, |cp| -> Result<ConcentrationRow> {
            let d = cp.field.grid().dimension();
            let center = vec![0.0; d];
            let a_t = window.radius(cp.t);
            let wm = windowed_mass(&cp.field, &center, a_t)?;
            Ok(ConcentrationRow {
                t: cp.t,
                rho: rho(gs, &cp.field)?,
                a_t,
                center,
                windowed_mass: wm,
                fraction: wm / gs.mass_sq,
                hardy: cp.hardy,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let proxy: Vec<f64> = rows.iter().map(|r| r.a_t * r.hardy.sqrt()).collect();
    let admissible = proxy.windows(2).all(|w| w[1] > w[0]);
    Ok(ConcentrationCurve {
        rows,
        estimate,
        admissible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::{CartesianGridSpec, RadialGridSpec};
    use num_complex::Complex64;
    use std::sync::Arc;

    fn cart() -> Arc<crate::CartesianGrid> {
        Arc::new(
            CartesianGridSpec {
                d: 2,
                m: 16,
                l: 4.0,
                c: 0.0,
            }
            .build()
            .unwrap(),
        )
    }

    #[test]
    fn snapshot_of_scaled_profile() {
        let g = Arc::new(RadialGridSpec::new(3, 0.1, 2048, 30.0).build().unwrap());
        let gs = crate::ground_state::solve_ground_state(&g, Default::default()).unwrap();
        let q = &gs.profile;
        let v = rescaled_snapshot(&gs, q).unwrap().field;
        assert!((hardy_functional(&v) / gs.hardy - 1.0).abs() < 1e-9);
        let u = q.dilate(3.0).unwrap();
        let r = rho(&gs, &u).unwrap();
        assert!((r - 1.0 / 3.0).abs() < 1e-9);
        let v = rescaled_snapshot(&gs, &u).unwrap().field;
        assert!((hardy_functional(&v) / gs.hardy - 1.0).abs() < 1e-9);
        assert!((v.norm_sq() / gs.mass_sq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn window_spec_validation() {
        assert!(WindowSpec::new(1.0, 0.5, 1.0).is_err());
        assert!(WindowSpec::new(0.0, 0.25, 1.0).is_err());
        let w = WindowSpec::new(2.0, 0.25, 1.0).unwrap();
        assert!((w.radius(1.0 - 16.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn radial_window_limits() {
        let g = Arc::new(RadialGridSpec::new(3, 0.1, 512, 20.0).build().unwrap());
        let f = Field::radial(&g, |r| Complex64::new((-r * r).exp(), 0.0));
        let o = [0.0; 3];
        let full = windowed_mass(&f, &o, 100.0).unwrap();
        assert_eq!(full, f.norm_sq());
        assert!(windowed_mass(&f, &o, 1e-13).unwrap() == 0.0);
        assert!(windowed_mass(&f, &[1.0, 0.0, 0.0], 1.0).is_err());
        assert!(monotone_in_radius(&f, &o, &[0.1, 0.5, 1.0, 2.0]).unwrap());
    }

    #[test]
    fn constant_field_picks_first_node() {
        let g = cart();
        let f = Field::cartesian(&g, |_| Complex64::new(1.0, 0.0));
        assert_eq!(
            best_center(&f, 1.2, ExecPolicy::Sequential).unwrap(),
            vec![0, 0]
        );
    }

    #[test]
    fn bubble_center_found() {
        let g = cart();
        let p = g.position(&[11, 5]);
        let f = Field::cartesian(&g, |x| {
            let r2: f64 = x.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum();
            Complex64::new((-r2).exp(), 0.0)
        });
        for policy in [ExecPolicy::Sequential, ExecPolicy::Parallel] {
            assert_eq!(best_center(&f, 1.0, policy).unwrap(), vec![11, 5]);
        }
    }

    #[test]
    fn ball_offsets_count() {
        assert_eq!(ball_offsets(2, 1.0, 1.0).len(), 5);
        assert_eq!(ball_offsets(3, 1.0, 0.5).len(), 1);
    }
}
