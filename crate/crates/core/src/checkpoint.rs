//! Field checkpoint files.
//!
//! A checkpoint is one line of JSON (the header) terminated by `\n`,
//! followed by `count` complex samples as interleaved little-endian IEEE-754
//! doubles `re₀ im₀ re₁ im₁ …`. Header keys:
//!
//! | key              | meaning                                              |
//! |------------------|------------------------------------------------------|
//! | `format_version` | must equal [`FORMAT_VERSION`]; anything else is rejected |
//! | `tag`            | `"radial"` or `"cartesian"`                          |
//! | `d`, `c`         | dimension and inverse-square coupling                |
//! | `grid`           | radial: `{d, c, n, r_min, r_max, scale}`; cartesian: `{d, m, l, c}` |
//! | `count`          | number of complex samples                            |
//! | `t`              | optional time stamp                                  |
//! | `profile_index`  | optional index of an extracted profile               |
//! | `label`          | optional free-form label                             |

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grids::{CartesianGridSpec, Field, Grid, RadialGridSpec};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridParams {
    Radial(RadialGridSpec),
    Cartesian(CartesianGridSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub tag: String,
    pub d: usize,
    pub c: f64,
    pub grid: GridParams,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Optional metadata stored alongside a field.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckpointMeta {
    pub t: Option<f64>,
    pub profile_index: Option<usize>,
    pub label: Option<String>,
}

impl CheckpointHeader {
    pub fn for_field(field: &Field, meta: &CheckpointMeta) -> Self {
        let grid = match field.grid() {
            Grid::Radial(g) => GridParams::Radial(*g.spec()),
            Grid::Cartesian(g) => GridParams::Cartesian(*g.spec()),
        };
        Self {
            format_version: FORMAT_VERSION,
            tag: field.tag().to_string(),
            d: field.grid().dimension(),
            c: field.grid().coupling(),
            grid,
            count: field.values().len(),
            t: meta.t,
            profile_index: meta.profile_index,
            label: meta.label.clone(),
        }
    }

    pub fn meta(&self) -> CheckpointMeta {
        CheckpointMeta {
            t: self.t,
            profile_index: self.profile_index,
            label: self.label.clone(),
        }
    }
}

pub fn encode(field: &Field, meta: &CheckpointMeta) -> Vec<u8> {
    let header = CheckpointHeader::for_field(field, meta);
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    out.reserve(16 * field.values().len());
    for z in field.values() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

/// Decodes a checkpoint, rebuilding its grid.
pub fn decode(bytes: &[u8]) -> Result<(CheckpointHeader, Field)> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("missing header line".into()))?;
    let header: CheckpointHeader = serde_json::from_slice(&bytes[..nl])
        .map_err(|e| Error::Format(format!("unreadable header: {e}")))?;
    decode_with_grid(&header, &bytes[nl + 1..], None)
}

/// Like [`decode`], but reuses `grid` when it matches the header.
pub fn decode_on(bytes: &[u8], grid: &Grid) -> Result<(CheckpointHeader, Field)> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("missing header line".into()))?;
    let header: CheckpointHeader = serde_json::from_slice(&bytes[..nl])
        .map_err(|e| Error::Format(format!("unreadable header: {e}")))?;
    decode_with_grid(&header, &bytes[nl + 1..], Some(grid))
}

fn decode_with_grid(
    header: &CheckpointHeader,
    body: &[u8],
    reuse: Option<&Grid>,
) -> Result<(CheckpointHeader, Field)> {
    if header.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format_version {} (expected {FORMAT_VERSION})",
            header.format_version
        )));
    }
    let grid: Grid = match (header.tag.as_str(), header.grid) {
        ("radial", GridParams::Radial(spec)) => match reuse {
            Some(Grid::Radial(g)) if *g.spec() == spec => Grid::Radial(g.clone()),
            _ => Grid::Radial(Arc::new(spec.build()?)),
        },
        ("cartesian", GridParams::Cartesian(spec)) => match reuse {
            Some(Grid::Cartesian(g)) if *g.spec() == spec => Grid::Cartesian(g.clone()),
            _ => Grid::Cartesian(Arc::new(spec.build()?)),
        },
        (tag, _) => {
            return Err(Error::Format(format!(
                "tag `{tag}` does not match grid parameters"
            )));
        }
    };
    if grid.dimension() != header.d || grid.coupling() != header.c {
        return Err(Error::Format(
            "header d/c disagree with grid parameters".into(),
        ));
    }
    if header.count != grid.len() {
        return Err(Error::Format(format!(
            "header count {} but grid has {} nodes",
            header.count,
            grid.len()
        )));
    }
    if body.len() != 16 * header.count {
        return Err(Error::Format(format!(
            "payload is {} bytes, expected {}",
            body.len(),
            16 * header.count
        )));
    }
    let values = body
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    Ok((header.clone(), Field::new(grid, values)?))
}

pub fn write(path: &Path, field: &Field, meta: &CheckpointMeta) -> Result<()> {
    let bytes = encode(field, meta);
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read(path: &Path) -> Result<(CheckpointHeader, Field)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub fn read_on(path: &Path, grid: &Grid) -> Result<(CheckpointHeader, Field)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_on(&bytes, grid)
}
