//! Periodic box lattice `[−L, L)ᵈ` with `M` points per axis.
//!
//! Nodes sit at `−L + (j + ½)h`, `h = 2L/M`, so no node is the origin and
//! `1/|x|²` is finite everywhere. Flat indices are row-major (axis 0
//! slowest).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianGridSpec {
    pub d: usize,
    /// Points per axis.
    pub m: usize,
    /// Box half-width.
    pub l: f64,
    /// Coupling of the inverse-square potential.
    pub c: f64,
}

impl CartesianGridSpec {
    /// Desk-scale default: `d = 3`, `M = 64`, `L = 16`.
    pub fn desk(c: f64) -> Self {
        Self {
            d: 3,
            m: 64,
            l: 16.0,
            c,
        }
    }

    pub fn build(self) -> Result<CartesianGrid> {
        CartesianGrid::new(self)
    }
}

/// Integer lattice vector (a node index or a shift), one entry per axis.
pub type LatticePoint = Vec<i64>;

#[derive(Debug, Clone)]
pub struct CartesianGrid {
    spec: CartesianGridSpec,
    h: f64,
    len: usize,
    strides: Vec<usize>,
    /// Axis coordinates of the nodes.
    axis: Vec<f64>,
    /// `|x|²` at every node.
    radius_sq: Vec<f64>,
}

impl CartesianGrid {
    pub fn new(spec: CartesianGridSpec) -> Result<Self> {
        let CartesianGridSpec { d, m, l, c } = spec;
        if d == 0 || m < 2 || m % 2 != 0 || l <= 0.0 {
            return Err(Error::Parameter(format!(
                "cartesian grid needs d ≥ 1, even M ≥ 2, L > 0 (got d={d}, M={m}, L={l})"
            )));
        }
        if d >= 3 {
            super::radial::check_coupling(d, c)?;
        } else if c != 0.0 {
            return Err(Error::Parameter(format!(
                "inverse-square coupling requires d ≥ 3 (got d = {d}, c = {c})"
            )));
        }
        let h = 2.0 * l / m as f64;
        let len = m.pow(d as u32);
        let mut strides = vec![1usize; d];
        for a in (0..d.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * m;
        }
        let axis: Vec<f64> = (0..m).map(|j| -l + (j as f64 + 0.5) * h).collect();
        let radius_sq = (0..len)
            .map(|k| {
                strides
                    .iter()
                    .map(|&s| {
                        let x = axis[(k / s) % m];
                        x * x
                    })
                    .sum()
            })
            .collect();
        Ok(Self {
            spec,
            h,
            len,
            strides,
            axis,
            radius_sq,
        })
    }

    pub fn spec(&self) -> &CartesianGridSpec {
        &self.spec
    }
    pub fn dimension(&self) -> usize {
        self.spec.d
    }
    pub fn points_per_axis(&self) -> usize {
        self.spec.m
    }
    pub fn coupling(&self) -> f64 {
        self.spec.c
    }
    pub fn spacing(&self) -> f64 {
        self.h
    }
    pub fn half_width(&self) -> f64 {
        self.spec.l
    }
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
    pub fn strides(&self) -> &[usize] {
        &self.strides
    }
    pub fn axis(&self) -> &[f64] {
        &self.axis
    }
    /// Volume element `hᵈ`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.spec.d as i32)
    }
    pub fn radius_sq(&self) -> &[f64] {
        &self.radius_sq
    }

    /// Node closest to the origin from above: index `M/2` on every axis.
    pub fn center_index(&self) -> LatticePoint {
        vec![(self.spec.m / 2) as i64; self.spec.d]
    }

    pub fn multi_index(&self, flat: usize) -> LatticePoint {
        self.strides
            .iter()
            .map(|&s| ((flat / s) % self.spec.m) as i64)
            .collect()
    }

    /// Flat index of a lattice point, wrapped periodically.
    pub fn flat_index(&self, p: &[i64]) -> usize {
        let m = self.spec.m as i64;
        p.iter()
            .zip(&self.strides)
            .map(|(&j, &s)| (j.rem_euclid(m) as usize) * s)
            .sum()
    }

    pub fn position(&self, p: &[i64]) -> Vec<f64> {
        let m = self.spec.m as i64;
        p.iter()
            .map(|&j| self.axis[j.rem_euclid(m) as usize])
            .collect()
    }

    /// Shortest periodic representative of a lattice displacement.
    pub fn minimal_image(&self, v: &[i64]) -> LatticePoint {
        let m = self.spec.m as i64;
        v.iter()
            .map(|&k| {
                let r = k.rem_euclid(m);
                if r > m / 2 {
                    r - m
                } else {
                    r
                }
            })
            .collect()
    }

    /// Euclidean length of the minimal image of `a − b`, in box units.
    pub fn periodic_distance(&self, a: &[i64], b: &[i64]) -> f64 {
        let diff: Vec<i64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.minimal_image(&diff)
            .iter()
            .map(|&k| (k as f64 * self.h).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Flat-index permutation `k ↦ k + shift` (periodic).
    pub fn shifted_indices(&self, shift: &[i64]) -> Vec<usize> {
        let m = self.spec.m as i64;
        let d = self.spec.d;
        let mut out = Vec::with_capacity(self.len);
        let mut idx = vec![0i64; d];
        for _ in 0..self.len {
            let flat = idx
                .iter()
                .zip(shift)
                .zip(&self.strides)
                .map(|((&j, &s), &st)| ((j + s).rem_euclid(m) as usize) * st)
                .sum();
            out.push(flat);
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < m {
                    break;
                }
                idx[a] = 0;
            }
        }
        out
    }
}
