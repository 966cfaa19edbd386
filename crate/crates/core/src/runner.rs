//! Experiment runner: flat TOML configuration, per-directory manifests with
//! content hashes, and the end-to-end pipelines.
//!
//! Every run owns its output directory through a `.lock` file for the
//! duration of the run. The manifest (`manifest.json`) is written last,
//! through a temporary file and a rename, so a directory without a manifest
//! holds a partial run.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checkpoint::{self, CheckpointMeta};
use crate::concentration::{
    concentration_curve, monotone_in_radius, rescaled_snapshot, ConcentrationCurve,
    ConcentrationRow, WindowSpec, FRACTION_NOISE,
};
use crate::evolution::{
    estimate_t_star_with, evolve, BlowupEstimate, Checkpoint, EvolutionConfig, EvolutionTrace,
    Scheme, Termination,
};
use crate::exec::ExecPolicy;
use crate::functionals::{
    critical_exponent, diamagnetic_defect, gn_ratio, hardy_functional, hardy_margin, lp_power,
    InvariantReport,
};
use crate::grids::{
    check_coupling, hardy_constant, CartesianGrid, CartesianGridSpec, Grid, LatticePoint,
    RadialGrid, RadialGridSpec,
};
use crate::ground_state::{solve_ground_state, GroundState, SolverOptions};
use crate::profiles::{
    defect_report, extract_profiles, generate_synthetic, lemma22_harness, radial_to_cartesian,
    Decomposition, DefectReport, ExtractOptions, FieldSequence, Lemma22Report, SyntheticProfile,
};
use crate::{Error, Field, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LOCK_FILE: &str = ".lock";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    GroundState,
    Evolve,
    Concentrate,
    Profiles,
    VerifyFunctionals,
    PipelineTheorem11,
    PipelineLemma22,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    /// `(1 + amplification)·Q`.
    Amplified,
    /// `gaussian_amplitude · exp(−r²/(2·gaussian_width²))`.
    Gaussian,
    /// A radial checkpoint at `initial_path`.
    Checkpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMode {
    Generate,
    Extract,
    Report,
    All,
}

/// Flat run configuration. Every key has a default except `experiment` and
/// `output_dir`; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub output_dir: PathBuf,
    pub rng_seed: u64,
    pub sequential: bool,

    pub d: usize,
    pub c: f64,
    pub radial_n: usize,
    pub r_max: f64,
    pub r_min: f64,
    pub gs_tol: f64,
    pub gs_max_iters: usize,
    /// Couplings for the ground-state experiment; empty means `[c]`.
    pub couplings: Vec<f64>,

    pub initial: InitialData,
    pub amplification: f64,
    pub gaussian_amplitude: f64,
    pub gaussian_width: f64,
    pub initial_path: Option<PathBuf>,
    pub integrator: Scheme,
    pub dt_factor: f64,
    /// Zero means `dt_factor / (growth_target · H(u₀))`.
    pub dt_min: f64,
    pub growth_target: f64,
    pub t_end: f64,
    pub checkpoint_growth: f64,
    pub checkpoint_interval: f64,
    pub record_every: usize,
    pub max_steps: usize,

    pub kappa: f64,
    pub beta: f64,
    pub radius_ladder: Vec<f64>,
    /// Growth thresholds of the two fit windows compared for rate stability.
    pub fit_thresholds: [f64; 2],

    pub cart_m: usize,
    pub cart_l: f64,

    pub profile_mode: ProfileMode,
    pub n_seq: usize,
    pub seq_m: usize,
    pub seq_l: f64,
    pub bubble_width: f64,
    pub amplitudes: Vec<f64>,
    pub separation_step: i64,
    pub support_radius: f64,
    pub noise_amplitude: f64,
    pub probe_radius: f64,
    pub window_radius: f64,
    /// Zero means one hundredth of the sequence's largest norm.
    pub eta_min: f64,
    pub max_profiles: usize,
    pub lp_exponent: f64,

    pub source_dir: Option<PathBuf>,
    pub gs_path: Option<PathBuf>,
    pub inputs: Vec<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::PipelineTheorem11,
            output_dir: PathBuf::new(),
            rng_seed: 0,
            sequential: false,
            d: 3,
            c: 0.1,
            radial_n: 8192,
            r_max: 50.0,
            r_min: 1e-12,
            gs_tol: 1e-12,
            gs_max_iters: 10_000,
            couplings: Vec::new(),
            initial: InitialData::Amplified,
            amplification: 0.1,
            gaussian_amplitude: 1.0,
            gaussian_width: 1.0,
            initial_path: None,
            integrator: Scheme::Yoshida4,
            dt_factor: 0.02,
            dt_min: 0.0,
            growth_target: 2000.0,
            t_end: 50.0,
            checkpoint_growth: 10f64.powf(0.1),
            checkpoint_interval: 0.0,
            record_every: 20,
            max_steps: 5_000_000,
            kappa: 1.0,
            beta: 0.25,
            radius_ladder: vec![0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0],
            fit_thresholds: [100.0, 300.0],
            cart_m: 64,
            cart_l: 8.0,
            profile_mode: ProfileMode::All,
            n_seq: 16,
            seq_m: 64,
            seq_l: 16.0,
            bubble_width: 2.0,
            amplitudes: vec![1.0, 0.7],
            separation_step: 4,
            support_radius: 0.5,
            noise_amplitude: 0.0,
            probe_radius: 1.0,
            window_radius: 9.0,
            eta_min: 0.0,
            max_profiles: 4,
            lp_exponent: 10.0 / 3.0,
            source_dir: None,
            gs_path: None,
            inputs: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if !table.contains_key("experiment") {
            return Err(Error::Config("experiment is required".into()));
        }
        table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn policy(&self) -> ExecPolicy {
        if self.sequential {
            ExecPolicy::Sequential
        } else {
            ExecPolicy::Parallel
        }
    }

    /// Checks the keys each experiment needs before any computation.
    pub fn validate(&self) -> Result<()> {
        if self.output_dir.as_os_str().is_empty() {
            return Err(Error::Config("output_dir is required".into()));
        }
        let couplings = if self.couplings.is_empty() {
            vec![self.c]
        } else {
            self.couplings.clone()
        };
        if self.d < 3 {
            return Err(Error::Parameter(format!(
                "d must be at least 3, got {}",
                self.d
            )));
        }
        for c in couplings {
            check_coupling(self.d, c)?;
        }
        let need_source = match self.experiment {
            Experiment::Concentrate | Experiment::PipelineLemma22 => true,
            Experiment::Profiles => {
                matches!(
                    self.profile_mode,
                    ProfileMode::Extract | ProfileMode::Report
                )
            }
            Experiment::VerifyFunctionals => self.inputs.is_empty(),
            _ => false,
        };
        if need_source && self.source_dir.is_none() {
            return Err(Error::Config(format!(
                "{:?} needs source_dir",
                self.experiment
            )));
        }
        if self.experiment == Experiment::Evolve
            && self.initial == InitialData::Checkpoint
            && self.initial_path.is_none()
        {
            return Err(Error::Config(
                "initial = \"checkpoint\" needs initial_path".into(),
            ));
        }
        if !(self.dt_factor > 0.0 && self.dt_factor < 1.0) {
            return Err(Error::Parameter(format!(
                "dt_factor must lie in (0, 1), got {}",
                self.dt_factor
            )));
        }
        if !(self.beta > 0.0 && self.beta < 0.5) || !(self.kappa > 0.0) {
            return Err(Error::Parameter(format!(
                "window needs κ > 0 and β ∈ (0, 1/2), got κ = {}, β = {}",
                self.kappa, self.beta
            )));
        }
        Ok(())
    }

    fn radial_spec(&self, c: f64) -> RadialGridSpec {
        RadialGridSpec {
            r_min: self.r_min,
            ..RadialGridSpec::new(self.d, c, self.radial_n, self.r_max)
        }
    }

    fn solver(&self) -> SolverOptions {
        SolverOptions {
            tol: self.gs_tol,
            max_iters: self.gs_max_iters,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory, with `/` separators.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Assertion {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: Experiment,
    pub config: RunConfig,
    pub artifacts: Vec<Artifact>,
    pub assertions: Vec<Assertion>,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }
}

/// SHA-256 over `blob <len>\0<content>`, the object framing git uses.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn write_checkpoint(path: &Path, field: &Field, meta: &CheckpointMeta) -> Result<()> {
    write_file(path, &checkpoint::encode(field, meta))
}

fn list_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_dir() {
            list_files(root, &path, out)?;
        } else {
            let rel = path
                .strip_prefix(root)
                .expect("walk stays below root")
                .to_path_buf();
            if rel != Path::new(MANIFEST_FILE) && rel != Path::new(LOCK_FILE) {
                out.push(rel);
            }
        }
    }
    Ok(())
}

fn collect_artifacts(root: &Path) -> Result<Vec<Artifact>> {
    let mut files = Vec::new();
    list_files(root, root, &mut files)?;
    let mut artifacts = files
        .into_iter()
        .map(|rel| {
            let full = root.join(&rel);
            let bytes = fs::read(&full).map_err(|e| Error::io(&full, e))?;
            let path = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/");
            Ok(Artifact {
                path,
                bytes: bytes.len() as u64,
                sha256: content_hash(&bytes),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    artifacts.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(artifacts)
}

/// Reads a run directory's manifest and checks every listed file against
/// its hash.
pub fn verify_manifest(dir: &Path) -> Result<RunManifest> {
    let manifest: RunManifest = read_json(&dir.join(MANIFEST_FILE))?;
    for a in &manifest.artifacts {
        let path = dir.join(&a.path);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if content_hash(&bytes) != a.sha256 {
            return Err(Error::HashMismatch { path });
        }
    }
    Ok(manifest)
}

struct DirLock {
    path: PathBuf,
}

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(LOCK_FILE);
        let mut f = fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::AlreadyExists => Error::Config(format!(
                    "{} is locked by another run (remove {} if stale)",
                    dir.display(),
                    path.display()
                )),
                _ => Error::io(&path, e),
            })?;
        let _ = writeln!(f, "{}", std::process::id());
        Ok(Self { path })
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Runs the configured experiment and writes its manifest.
pub fn run(config: &RunConfig) -> Result<RunManifest> {
    config.validate()?;
    let start = Instant::now();
    let out = config.output_dir.clone();
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let lock = DirLock::acquire(&out)?;
    let stale = out.join(MANIFEST_FILE);
    if stale.exists() {
        fs::remove_file(&stale).map_err(|e| Error::io(&stale, e))?;
    }
    write_file(&out.join("config.toml"), config.to_toml().as_bytes())?;
    let assertions = match config.experiment {
        Experiment::GroundState => run_ground_state(config, &out)?,
        Experiment::Evolve => run_evolve(config, &out)?.assertions,
        Experiment::Concentrate => run_concentrate(config, &out)?,
        Experiment::Profiles => run_profiles(config, &out)?,
        Experiment::VerifyFunctionals => run_verify_functionals(config, &out)?,
        Experiment::PipelineTheorem11 => pipeline_theorem11(config, &out)?.assertions,
        Experiment::PipelineLemma22 => pipeline_lemma22(config, &out)?.assertions,
    };
    let manifest = RunManifest {
        experiment: config.experiment,
        config: config.clone(),
        artifacts: collect_artifacts(&out)?,
        assertions,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let tmp = out.join(format!("{MANIFEST_FILE}.tmp"));
    write_json(&tmp, &manifest)?;
    fs::rename(&tmp, &stale).map_err(|e| Error::io(&stale, e))?;
    drop(lock);
    Ok(manifest)
}

// ---------------------------------------------------------------- ground state

pub const GROUND_STATE_CSV_HEADER: &str = "d,c,mass_sq,hardy,critical_lp,sharp_constant,residual";

fn ground_state_row(gs: &GroundState) -> String {
    format!(
        "{},{},{},{},{},{},{}\n",
        gs.d, gs.c, gs.mass_sq, gs.hardy, gs.critical_lp, gs.sharp_constant, gs.residual
    )
}

fn gs_meta() -> CheckpointMeta {
    CheckpointMeta {
        label: Some("ground_state".into()),
        ..Default::default()
    }
}

fn run_ground_state(config: &RunConfig, out: &Path) -> Result<Vec<Assertion>> {
    let couplings = if config.couplings.is_empty() {
        vec![config.c]
    } else {
        config.couplings.clone()
    };
    let states = config
        .policy()
        .map(&couplings, |&c| -> Result<GroundState> {
            let grid = Arc::new(config.radial_spec(c).build()?);
            solve_ground_state(&grid, config.solver())
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut csv = format!("{GROUND_STATE_CSV_HEADER}\n");
    let mut assertions = Vec::new();
    for (i, gs) in states.iter().enumerate() {
        csv.push_str(&ground_state_row(gs));
        let name = if states.len() == 1 {
            "ground_state.ckpt".to_string()
        } else {
            format!("ground_state_{i:02}.ckpt")
        };
        write_checkpoint(&out.join(name), &gs.profile, &gs_meta())?;
        let (a, b) = gs.pohozaev_defects();
        assertions.push(Assertion::new(
            "pohozaev",
            a < 1e-5 && b < 1e-5,
            format!("c = {}: defects {a:e}, {b:e}", gs.c),
        ));
    }
    write_file(&out.join("ground_state.csv"), csv.as_bytes())?;
    Ok(assertions)
}

fn load_ground_state(path: &Path) -> Result<GroundState> {
    let (_, field) = checkpoint::read(path)?;
    GroundState::from_profile(field)
}

// ------------------------------------------------------------------- evolution

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSummary {
    pub termination: Termination,
    pub note: String,
    pub steps: usize,
    pub final_t: f64,
    pub hardy_growth: f64,
    pub mass_drift: f64,
    /// Largest `|E(t) − E(0)| / max(1, |E(0)|)` while `H < 10³·H(u₀)`.
    pub energy_drift: f64,
    pub estimate: Option<BlowupEstimate>,
    pub estimate_alt: Option<BlowupEstimate>,
    pub estimate_error: Option<String>,
    pub checkpoints: Vec<String>,
}

pub struct EvolveOutcome {
    pub trace: EvolutionTrace,
    pub summary: EvolutionSummary,
    pub assertions: Vec<Assertion>,
}

fn initial_data(config: &RunConfig, gs: Option<&GroundState>) -> Result<Field> {
    match config.initial {
        InitialData::Amplified => {
            let gs = gs.ok_or_else(|| Error::Config("amplified initial data needs Q".into()))?;
            Ok(gs.amplified(config.amplification))
        }
        InitialData::Gaussian => {
            let grid = Arc::new(config.radial_spec(config.c).build()?);
            let (a, s) = (config.gaussian_amplitude, config.gaussian_width);
            Ok(Field::radial(&grid, |r| {
                Complex64::new(a * (-r * r / (2.0 * s * s)).exp(), 0.0)
            }))
        }
        InitialData::Checkpoint => {
            let path = config.initial_path.as_ref().expect("validated");
            let (_, f) = checkpoint::read(path)?;
            f.grid().as_radial()?;
            Ok(f)
        }
    }
}

fn evolve_and_write(config: &RunConfig, u0: &Field, out: &Path) -> Result<EvolveOutcome> {
    let h0 = hardy_functional(u0);
    let dt_min = if config.dt_min > 0.0 {
        config.dt_min
    } else {
        config.dt_factor / (config.growth_target * h0.max(1.0))
    };
    let ec = EvolutionConfig {
        dt_factor: config.dt_factor,
        dt_min,
        t_end: config.t_end,
        record_every: config.record_every,
        checkpoint_growth: config.checkpoint_growth,
        checkpoint_interval: config.checkpoint_interval,
        max_steps: config.max_steps,
        scheme: config.integrator,
        ..EvolutionConfig::default()
    };
    let trace = evolve(u0, &ec)?;
    write_file(&out.join("trace.csv"), trace.to_csv().as_bytes())?;
    let mut names = Vec::new();
    for (i, cp) in trace.checkpoints.iter().enumerate() {
        let name = format!("checkpoints/cp_{i:04}.ckpt");
        write_checkpoint(
            &out.join(&name),
            &cp.field,
            &CheckpointMeta {
                t: Some(cp.t),
                label: Some("evolution".into()),
                ..Default::default()
            },
        )?;
        names.push(name);
    }
    let [th_a, th_b] = config.fit_thresholds;
    let (estimate, estimate_error) = match estimate_t_star_with(&trace.rows, th_a) {
        Ok(e) => (Some(e), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let estimate_alt = estimate_t_star_with(&trace.rows, th_b).ok();
    let e0 = trace.rows[0].energy;
    let energy_drift = trace.energy_drift_below(1e3) / e0.abs().max(1.0);
    let summary = EvolutionSummary {
        termination: trace.termination,
        note: trace.note.clone(),
        steps: trace.final_state.as_ref().map_or(0, |s| s.step_count),
        final_t: trace.rows.last().map_or(0.0, |r| r.t),
        hardy_growth: trace.hardy_growth(),
        mass_drift: trace.mass_drift(),
        energy_drift,
        estimate,
        estimate_alt,
        estimate_error,
        checkpoints: names,
    };
    write_json(&out.join("evolution.json"), &summary)?;
    let mut assertions = vec![
        Assertion::new(
            "mass_conservation",
            summary.mass_drift < 1e-8,
            format!("relative mass drift {:e}", summary.mass_drift),
        ),
        Assertion::new(
            "energy_conservation",
            energy_drift < 1e-5,
            format!(
                "|E(t) − E(0)| / max(1, |E(0)|) = {energy_drift:e} while H < 10³·H(u₀) ({:?})",
                config.integrator
            ),
        ),
    ];
    if trace.termination == Termination::InstabilityDetected {
        assertions.push(Assertion::new("stable", false, trace.note.clone()));
    }
    Ok(EvolveOutcome {
        trace,
        summary,
        assertions,
    })
}

fn run_evolve(config: &RunConfig, out: &Path) -> Result<EvolveOutcome> {
    let gs = if config.initial == InitialData::Amplified {
        let gs = match &config.gs_path {
            Some(p) => load_ground_state(p)?,
            None => {
                let grid = Arc::new(config.radial_spec(config.c).build()?);
                solve_ground_state(&grid, config.solver())?
            }
        };
        write_checkpoint(&out.join("ground_state.ckpt"), &gs.profile, &gs_meta())?;
        Some(gs)
    } else {
        None
    };
    let u0 = initial_data(config, gs.as_ref())?;
    evolve_and_write(config, &u0, out)
}

/// Rows of `trace.csv` and the checkpoint fields of an evolution directory.
pub fn load_trace(dir: &Path) -> Result<EvolutionTrace> {
    let csv_path = dir.join("trace.csv");
    let text = fs::read_to_string(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    let rows = EvolutionTrace::from_csv(&text)?;
    let summary: EvolutionSummary = read_json(&dir.join("evolution.json"))?;
    let mut grid: Option<Grid> = None;
    let mut checkpoints = Vec::new();
    for name in &summary.checkpoints {
        let path = dir.join(name);
        let (header, field) = match &grid {
            Some(g) => checkpoint::read_on(&path, g)?,
            None => checkpoint::read(&path)?,
        };
        grid.get_or_insert_with(|| field.grid().clone());
        let t = header
            .t
            .ok_or_else(|| Error::Format(format!("{} has no time stamp", path.display())))?;
        checkpoints.push(Checkpoint {
            t,
            hardy: hardy_functional(&field),
            field,
        });
    }
    Ok(EvolutionTrace {
        rows,
        checkpoints,
        termination: summary.termination,
        note: summary.note,
        final_state: None,
    })
}

// --------------------------------------------------------------- concentration

pub struct ConcentrationOutcome {
    pub curve: ConcentrationCurve,
    pub assertions: Vec<Assertion>,
}

fn concentrate_and_write(
    config: &RunConfig,
    trace: &EvolutionTrace,
    gs: &GroundState,
    out: &Path,
) -> Result<ConcentrationOutcome> {
    let estimate = estimate_t_star_with(&trace.rows, config.fit_thresholds[0])?;
    let window = WindowSpec::anchored(config.kappa, config.beta, &estimate)?;
    let curve = concentration_curve(trace, gs, &window, config.policy())?;
    write_file(&out.join("concentration.csv"), curve.to_csv().as_bytes())?;

    let mut assertions = Vec::new();
    let final_fraction = curve.final_fraction().unwrap_or(0.0);
    assertions.push(Assertion::new(
        "final_fraction",
        final_fraction >= 0.9,
        format!("windowed mass / ‖Q‖² = {final_fraction} at the last checkpoint"),
    ));
    assertions.push(Assertion::new(
        "fraction_trend",
        curve.fraction_nondecreasing(FRACTION_NOISE),
        format!("nondecreasing over the last decade within {FRACTION_NOISE}"),
    ));
    assertions.push(Assertion::new(
        "admissibility",
        curve.admissible,
        "a(t)·√H(u(t)) increasing".into(),
    ));
    let m0 = trace.rows[0].mass;
    let bounded = curve
        .rows
        .iter()
        .all(|r| r.windowed_mass >= 0.0 && r.windowed_mass <= m0 * (1.0 + 1e-8));
    assertions.push(Assertion::new(
        "window_bounds",
        bounded,
        "0 ≤ windowed mass ≤ M(u₀)".into(),
    ));
    let mut monotone = true;
    for cp in &trace.checkpoints {
        let origin = vec![0.0; cp.field.grid().dimension()];
        monotone &= monotone_in_radius(&cp.field, &origin, &config.radius_ladder)?;
    }
    assertions.push(Assertion::new(
        "radius_monotone",
        monotone,
        format!(
            "windowed mass monotone over radii {:?}",
            config.radius_ladder
        ),
    ));

    let mut worst_mass: f64 = 0.0;
    let mut worst_hardy: f64 = 0.0;
    let mut last_lp = f64::NAN;
    for cp in &trace.checkpoints {
        let v = rescaled_snapshot(gs, &cp.field)?.field;
        worst_mass = worst_mass.max((v.norm_sq() - m0).abs() / m0);
        worst_hardy = worst_hardy.max((hardy_functional(&v) - gs.hardy).abs() / gs.hardy);
        last_lp = lp_power(&v, critical_exponent(gs.d));
    }
    let df = gs.d as f64;
    let lp_target = (df + 2.0) / df * gs.hardy;
    assertions.push(Assertion::new(
        "snapshot_mass",
        worst_mass < 1e-4,
        format!("max relative mass change of v(t): {worst_mass:e}"),
    ));
    assertions.push(Assertion::new(
        "snapshot_hardy",
        worst_hardy < 1e-3,
        format!("max |H(v)/H(Q) − 1|: {worst_hardy:e}"),
    ));
    let lp_err = (last_lp / lp_target - 1.0).abs();
    assertions.push(Assertion::new(
        "snapshot_lp",
        lp_err < 0.05,
        format!("final ‖v‖^p_p / ((d+2)/d·H(Q)) − 1 = {lp_err:e}"),
    ));
    Ok(ConcentrationOutcome { curve, assertions })
}

fn source_dir(config: &RunConfig) -> Result<&Path> {
    config
        .source_dir
        .as_deref()
        .ok_or_else(|| Error::Config("source_dir is required".into()))
}

/// `source_dir`, with its artifact hashes checked when it carries a manifest.
fn checked_source_dir(config: &RunConfig) -> Result<&Path> {
    let src = source_dir(config)?;
    if src.join(MANIFEST_FILE).is_file() {
        verify_manifest(src).map_err(|e| e.in_stage("verify_source"))?;
    }
    Ok(src)
}

fn run_concentrate(config: &RunConfig, out: &Path) -> Result<Vec<Assertion>> {
    let src = checked_source_dir(config)?;
    let trace = load_trace(src)?;
    let gs_path = config
        .gs_path
        .clone()
        .unwrap_or_else(|| src.join("ground_state.ckpt"));
    let gs = load_ground_state(&gs_path)?;
    Ok(concentrate_and_write(config, &trace, &gs, out)?.assertions)
}

// -------------------------------------------------------------------- profiles

fn sequence_grid(config: &RunConfig) -> Result<Arc<CartesianGrid>> {
    Ok(Arc::new(
        CartesianGridSpec {
            d: config.d,
            m: config.seq_m,
            l: config.seq_l,
            c: config.c,
        }
        .build()?,
    ))
}

/// Splits a taxicab length as evenly as possible over `d` axes, larger
/// parts first.
pub fn taxicab_split(total: i64, d: usize) -> LatticePoint {
    let base = total / d as i64;
    let extra = (total % d as i64) as usize;
    (0..d).map(|a| base + i64::from(a < extra)).collect()
}

fn gaussian_bubble(grid: &Arc<CartesianGrid>, amplitude: f64, width: f64) -> Field {
    let c = grid.position(&grid.center_index());
    Field::cartesian(grid, |x| {
        let r2: f64 = x.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum();
        Complex64::new(amplitude * (-r2 / (2.0 * width * width)).exp(), 0.0)
    })
}

/// Synthetic sequence: the first bubble stays at the box center, bubble `j`
/// sits at taxicab distance `j·separation_step·n` cells in entry `n`.
pub fn synthetic_sequence(config: &RunConfig) -> Result<FieldSequence> {
    let grid = sequence_grid(config)?;
    let profiles: Vec<SyntheticProfile> = config
        .amplitudes
        .iter()
        .map(|&a| SyntheticProfile {
            field: gaussian_bubble(&grid, a, config.bubble_width),
            support_radius: config.support_radius,
        })
        .collect();
    let laws: Vec<Vec<LatticePoint>> = (0..profiles.len())
        .map(|j| {
            (1..=config.n_seq as i64)
                .map(|n| taxicab_split(j as i64 * config.separation_step * n, config.d))
                .collect()
        })
        .collect();
    let noise = if config.noise_amplitude > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let a = config.noise_amplitude;
        let values = (0..grid.len())
            .map(|_| Complex64::new(rng.gen_range(-a..a), rng.gen_range(-a..a)))
            .collect();
        Some(Field::new(Grid::Cartesian(grid.clone()), values)?)
    } else {
        None
    };
    generate_synthetic(&profiles, &laws, noise.as_ref(), config.n_seq)
}

fn extract_options(config: &RunConfig) -> ExtractOptions {
    ExtractOptions {
        max_profiles: config.max_profiles,
        eta_min: (config.eta_min > 0.0).then_some(config.eta_min),
        probe_radius: config.probe_radius,
        window_radius: config.window_radius,
    }
}

fn write_sequence(seq: &FieldSequence, out: &Path) -> Result<()> {
    for (n, f) in seq.entries().iter().enumerate() {
        write_checkpoint(
            &out.join(format!("sequence/entry_{:03}.ckpt", n + 1)),
            f,
            &CheckpointMeta {
                label: Some("sequence".into()),
                ..Default::default()
            },
        )?;
    }
    if let Some(truth) = seq.ground_truth() {
        let centers: Vec<&Vec<LatticePoint>> = truth.iter().map(|t| &t.centers).collect();
        write_json(&out.join("sequence/truth.json"), &centers)?;
    }
    Ok(())
}

fn sorted_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == ext))
        .collect();
    v.sort();
    Ok(v)
}

fn read_sequence(dir: &Path) -> Result<FieldSequence> {
    let files = sorted_files(&dir.join("sequence"), "ckpt")?;
    let mut entries = Vec::new();
    let mut grid: Option<Grid> = None;
    for p in files {
        let (_, f) = match &grid {
            Some(g) => checkpoint::read_on(&p, g)?,
            None => checkpoint::read(&p)?,
        };
        grid.get_or_insert_with(|| f.grid().clone());
        entries.push(f);
    }
    FieldSequence::new(entries)
}

pub const CENTERS_CSV_HEADER_PREFIX: &str = "profile,n";

fn centers_csv(dec: &Decomposition, d: usize) -> String {
    let cols: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    let mut s = format!("{CENTERS_CSV_HEADER_PREFIX},{}\n", cols.join(","));
    for (j, law) in dec.centers.iter().enumerate() {
        for (n, x) in law.iter().enumerate() {
            let xs: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            s.push_str(&format!("{},{},{}\n", j + 1, n + 1, xs.join(",")));
        }
    }
    s
}

fn write_decomposition(dec: &Decomposition, out: &Path) -> Result<()> {
    for (j, p) in dec.profiles.iter().enumerate() {
        write_checkpoint(
            &out.join(format!("decomposition/profile_{:02}.ckpt", j + 1)),
            p,
            &CheckpointMeta {
                profile_index: Some(j + 1),
                label: Some("profile".into()),
                ..Default::default()
            },
        )?;
    }
    let d = dec.entries.first().map_or(0, |f| f.grid().dimension());
    write_file(
        &out.join("decomposition/centers.csv"),
        centers_csv(dec, d).as_bytes(),
    )
}

fn read_decomposition(dir: &Path, seq: &FieldSequence) -> Result<Decomposition> {
    let grid = Grid::Cartesian(seq.grid().clone());
    let mut profiles = Vec::new();
    for p in sorted_files(&dir.join("decomposition"), "ckpt")? {
        profiles.push(checkpoint::read_on(&p, &grid)?.1);
    }
    let path = dir.join("decomposition/centers.csv");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut centers: Vec<Vec<LatticePoint>> = vec![vec![Vec::new(); seq.len()]; profiles.len()];
    for line in text.lines().skip(1).filter(|l| !l.is_empty()) {
        let parts: Vec<i64> = line
            .split(',')
            .map(|x| {
                x.parse::<i64>()
                    .map_err(|e| Error::Format(format!("{path:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        let (j, n) = (parts[0] as usize - 1, parts[1] as usize - 1);
        if j >= profiles.len() || n >= seq.len() {
            return Err(Error::Format(format!("center row out of range: {line}")));
        }
        centers[j][n] = parts[2..].to_vec();
    }
    let residuals = (0..seq.len())
        .map(|n| {
            let mut r = seq.entries()[n].clone();
            for (p, law) in profiles.iter().zip(&centers) {
                r = r.sub(&p.translate(&law[n])?)?;
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Decomposition {
        profiles,
        centers,
        residuals,
        entries: seq.entries().to_vec(),
        truncated: false,
        eta_min: f64::NAN,
    })
}

/// Checks a decomposition of a synthetic sequence against its ground truth.
pub fn profile_assertions(
    seq: &FieldSequence,
    dec: &Decomposition,
    report: &DefectReport,
    noise_floor: Option<f64>,
) -> Vec<Assertion> {
    let mut out = Vec::new();
    let Some(truth) = seq.ground_truth() else {
        return out;
    };
    let n_seq = seq.len();
    let tail = n_seq / 2..n_seq;
    let grid = seq.grid();
    out.push(Assertion::new(
        "profile_count",
        dec.len() == truth.len() && !dec.truncated,
        format!(
            "{} profiles extracted for {} bubbles",
            dec.len(),
            truth.len()
        ),
    ));
    for (j, t) in truth.iter().enumerate() {
        let target = t.profile.norm_sq();
        let best = dec.profiles.iter().enumerate().min_by(|a, b| {
            (a.1.norm_sq() - target)
                .abs()
                .total_cmp(&(b.1.norm_sq() - target).abs())
        });
        let Some((k, p)) = best else { continue };
        let mass_err = (p.norm_sq() - target).abs() / target;
        out.push(Assertion::new(
            "profile_mass",
            mass_err < 0.01,
            format!("bubble {}: relative mass error {mass_err:e}", j + 1),
        ));
        let worst = tail
            .clone()
            .map(|n| grid.periodic_distance(&dec.centers[k][n], &t.centers[n]) / grid.spacing())
            .fold(0.0, f64::max);
        out.push(Assertion::new(
            "center_recovery",
            worst <= 1.0 + 1e-12,
            format!(
                "bubble {}: worst center error {worst} cells over n ≥ {}",
                j + 1,
                n_seq / 2 + 1
            ),
        ));
    }
    let last = &report.rows[n_seq - 1];
    let pyth = last.pythagorean_defect / last.mass;
    let hardy = last.hardy_defect / last.hardy.abs();
    out.push(Assertion::new(
        "pythagorean_defect",
        pyth < 1e-3,
        format!("relative defect {pyth:e} at n = {n_seq}"),
    ));
    out.push(Assertion::new(
        "hardy_defect",
        hardy < 1e-3,
        format!("relative defect {hardy:e} at n = {n_seq}"),
    ));
    // Noise cross terms do not decay, so the trend is only checked on clean data.
    let rows = &report.rows[tail.start.saturating_sub(1)..];
    if noise_floor.is_none() {
        out.push(Assertion::new(
            "defects_decreasing",
            rows.windows(2).all(|w| {
                w[1].pythagorean_defect < w[0].pythagorean_defect
                    && w[1].hardy_defect < w[0].hardy_defect
            }),
            format!("strictly decreasing for n ≥ {}", n_seq / 2),
        ));
    }
    if let Some(floor) = noise_floor {
        out.push(Assertion::new(
            "residual_below_noise",
            last.residual_lp < floor,
            format!(
                "‖v_N^ℓ‖_p = {} against noise floor {floor}",
                last.residual_lp
            ),
        ));
    }
    out
}

/// `‖w‖_{L^p}` of the configured noise field, if any.
pub fn noise_floor(config: &RunConfig) -> Result<Option<f64>> {
    if config.noise_amplitude <= 0.0 {
        return Ok(None);
    }
    let quiet = RunConfig {
        amplitudes: vec![0.0],
        ..config.clone()
    };
    let seq = synthetic_sequence(&quiet)?;
    Ok(Some(crate::functionals::lp_norm(
        &seq.entries()[0],
        config.lp_exponent,
    )?))
}

fn run_profiles(config: &RunConfig, out: &Path) -> Result<Vec<Assertion>> {
    let policy = config.policy();
    let mode = config.profile_mode;
    let seq = match mode {
        ProfileMode::Generate | ProfileMode::All => {
            let seq = synthetic_sequence(config)?;
            write_sequence(&seq, out)?;
            seq
        }
        _ => read_sequence(checked_source_dir(config)?)?,
    };
    if mode == ProfileMode::Generate {
        return Ok(Vec::new());
    }
    let dec = match mode {
        ProfileMode::Report => read_decomposition(source_dir(config)?, &seq)?,
        _ => {
            let dec = extract_profiles(&seq, &extract_options(config), policy)?;
            write_decomposition(&dec, out)?;
            dec
        }
    };
    if mode == ProfileMode::Extract {
        return Ok(vec![Assertion::new(
            "not_truncated",
            !dec.truncated,
            format!("{} profiles", dec.len()),
        )]);
    }
    let report = defect_report(&dec, config.lp_exponent, policy)?;
    write_file(&out.join("defects.csv"), report.to_csv().as_bytes())?;
    Ok(profile_assertions(
        &seq,
        &dec,
        &report,
        noise_floor(config)?,
    ))
}

// ----------------------------------------------------------- verify functionals

pub const FUNCTIONALS_CSV_HEADER: &str = "tag,d,c,mass,gradient_term,potential_term,hardy,lp_critical,energy,gn_ratio,hardy_margin,diamagnetic_defect";

/// One CSV row of invariants for `f`; the sharp constant comes from `gs`.
pub fn functionals_row(f: &Field, gs: &GroundState) -> Result<String> {
    let rep = InvariantReport::of(f);
    let gn = gn_ratio(f, gs)?;
    let margin = hardy_margin(f)?;
    Ok(format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}\n",
        f.tag(),
        f.grid().dimension(),
        f.grid().coupling(),
        rep.mass,
        rep.gradient_term,
        rep.potential_term,
        rep.hardy,
        rep.lp_critical,
        rep.energy,
        gn,
        margin.relative,
        diamagnetic_defect(f)
    ))
}

fn run_verify_functionals(config: &RunConfig, out: &Path) -> Result<Vec<Assertion>> {
    let inputs = if config.inputs.is_empty() {
        let src = checked_source_dir(config)?;
        let mut v = sorted_files(src, "ckpt")?;
        let cps = src.join("checkpoints");
        if cps.is_dir() {
            v.extend(sorted_files(&cps, "ckpt")?);
        }
        v
    } else {
        config.inputs.clone()
    };
    let gs = match &config.gs_path {
        Some(p) => load_ground_state(p)?,
        None => {
            let grid = Arc::new(config.radial_spec(config.c).build()?);
            solve_ground_state(&grid, config.solver())?
        }
    };
    let rows = config
        .policy()
        .map(&inputs, |p| -> Result<(String, f64, f64)> {
            let (_, f) = checkpoint::read(p)?;
            let row = functionals_row(&f, &gs)?;
            Ok((row, diamagnetic_defect(&f), f.gradient_norm_sq()))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut csv = format!("{FUNCTIONALS_CSV_HEADER}\n");
    let mut ok = true;
    for (row, defect, grad) in &rows {
        csv.push_str(row);
        ok &= *defect >= -1e-8 * grad;
    }
    write_file(&out.join("functionals.csv"), csv.as_bytes())?;
    Ok(vec![Assertion::new(
        "diamagnetic",
        ok,
        format!("{} inputs", rows.len()),
    )])
}

// ------------------------------------------------------------------- pipelines

pub struct Theorem11Outcome {
    pub ground_state: GroundState,
    pub evolution: EvolveOutcome,
    pub concentration: ConcentrationCurve,
    pub rows: Vec<ConcentrationRow>,
    pub assertions: Vec<Assertion>,
}

/// Ground state, blow-up run from `(1+δ)Q`, blow-up fit and concentration
/// curve, with every artifact written to `out`.
pub fn pipeline_theorem11(config: &RunConfig, out: &Path) -> Result<Theorem11Outcome> {
    let grid = Arc::new(
        config
            .radial_spec(config.c)
            .build()
            .map_err(|e| e.in_stage("grid"))?,
    );
    let gs = solve_ground_state(&grid, config.solver()).map_err(|e| e.in_stage("ground_state"))?;
    write_checkpoint(&out.join("ground_state.ckpt"), &gs.profile, &gs_meta())?;
    write_file(
        &out.join("ground_state.csv"),
        format!("{GROUND_STATE_CSV_HEADER}\n{}", ground_state_row(&gs)).as_bytes(),
    )?;
    let mut assertions = vec![Assertion::new(
        "ground_state_residual",
        gs.residual < 1e-8,
        format!("residual {:e}", gs.residual),
    )];
    let u0 = gs.amplified(config.amplification);
    let evolution = evolve_and_write(config, &u0, out).map_err(|e| e.in_stage("evolve"))?;
    assertions.extend(evolution.assertions.iter().cloned());
    let s = &evolution.summary;
    assertions.push(Assertion::new(
        "hardy_growth",
        s.hardy_growth >= 1e3,
        format!("H grew by {:.1}×", s.hardy_growth),
    ));
    let estimate = match (&s.estimate, &s.estimate_error) {
        (Some(e), _) => *e,
        (None, err) => {
            return Err(
                Error::NotABlowup(err.clone().unwrap_or_default()).in_stage("estimate_t_star")
            )
        }
    };
    assertions.push(Assertion::new(
        "rate_positive",
        estimate.rate_infimum > 0.0,
        format!(
            "inf ‖∇u‖·√(T*−t) = {}, T* = {}, fit residual {:e}",
            estimate.rate_infimum, estimate.t_star, estimate.fit_residual
        ),
    ));
    let stable = s
        .estimate_alt
        .map(|alt| (alt.rate_infimum / estimate.rate_infimum - 1.0).abs() <= 0.2);
    assertions.push(Assertion::new(
        "rate_stable",
        stable == Some(true),
        format!(
            "rate infimum {} vs {:?} on the second window",
            estimate.rate_infimum,
            s.estimate_alt.map(|a| a.rate_infimum)
        ),
    ));
    let conc = concentrate_and_write(config, &evolution.trace, &gs, out)
        .map_err(|e| e.in_stage("concentration"))?;
    assertions.extend(conc.assertions);
    Ok(Theorem11Outcome {
        rows: conc.curve.rows.clone(),
        ground_state: gs,
        evolution,
        concentration: conc.curve,
        assertions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma22Summary {
    pub constant_q: Lemma22Report,
    pub constant_q_mapping_error: f64,
    pub snapshots: Lemma22Report,
    pub snapshot_times: Vec<f64>,
    /// Largest relative mass error of the radial-to-box mapping over the
    /// snapshots, measured inside the ball inscribed in the box.
    pub snapshot_mapping_error: f64,
}

pub struct Lemma22Outcome {
    pub summary: Lemma22Summary,
    pub assertions: Vec<Assertion>,
}

/// Mass of `f` within `|x| ≤ radius`, with the node-wise cut used on both
/// grid kinds.
fn ball_mass(f: &Field, radius: f64) -> Result<f64> {
    crate::concentration::windowed_mass(f, &vec![0.0; f.grid().dimension()], radius)
}

/// Rescaled snapshots of the last decade of Hardy growth of a completed
/// blow-up run, mapped to the box, fed to the lower-bound harness; plus the
/// constant-`Q` sequence as a control.
pub fn pipeline_lemma22(config: &RunConfig, out: &Path) -> Result<Lemma22Outcome> {
    let src = source_dir(config)?;
    verify_manifest(src).map_err(|e| e.in_stage("verify_source"))?;
    let gs = load_ground_state(&src.join("ground_state.ckpt")).map_err(|e| e.in_stage("load"))?;
    let trace = load_trace(src).map_err(|e| e.in_stage("load"))?;
    estimate_t_star_with(&trace.rows, config.fit_thresholds[0])
        .map_err(|e| e.in_stage("estimate_t_star"))?;

    let box_grid = Arc::new(
        CartesianGridSpec {
            d: gs.d,
            m: config.cart_m,
            l: config.cart_l,
            c: gs.c,
        }
        .build()?,
    );
    let policy = config.policy();
    let opts = ExtractOptions::for_grid(&box_grid);

    let (q_box, q_err) =
        radial_to_cartesian(&gs.profile, &box_grid).map_err(|e| e.in_stage("export"))?;
    let q_seq = FieldSequence::new(vec![q_box; 4])?;
    let (_, q_report) =
        lemma22_harness(&q_seq, &gs, &opts, policy).map_err(|e| e.in_stage("lemma22_constant"))?;

    let last_h = trace.checkpoints.last().map_or(0.0, |c| c.hardy);
    let chosen: Vec<&Checkpoint> = trace
        .checkpoints
        .iter()
        .filter(|c| c.hardy >= last_h / 10.0)
        .collect();
    let exported = policy
        .map(&chosen, |cp| -> Result<(f64, Field, f64)> {
            let v = rescaled_snapshot(&gs, &cp.field)?.field;
            let (w, _) = radial_to_cartesian(&v, &box_grid)?;
            let inside = ball_mass(&v, config.cart_l)?;
            let err = (ball_mass(&w, config.cart_l)? - inside).abs() / inside;
            Ok((cp.t, w, err))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("export"))?;
    let snapshot_mapping_error = exported.iter().map(|e| e.2).fold(0.0, f64::max);
    let snapshot_times: Vec<f64> = exported.iter().map(|e| e.0).collect();
    let seq = FieldSequence::new(exported.into_iter().map(|e| e.1).collect())?;
    let (dec, s_report) =
        lemma22_harness(&seq, &gs, &opts, policy).map_err(|e| e.in_stage("lemma22_snapshots"))?;
    write_decomposition(&dec, out)?;

    let summary = Lemma22Summary {
        constant_q: q_report,
        constant_q_mapping_error: q_err,
        snapshots: s_report,
        snapshot_times,
        snapshot_mapping_error,
    };
    write_json(&out.join("lemma22.json"), &summary)?;
    let mut csv = String::from("sequence,m,big_m,bound,extracted_norm,q_norm,profiles,pass\n");
    for (name, r) in [("constant_q", &q_report), ("snapshots", &s_report)] {
        csv.push_str(&format!(
            "{name},{},{},{},{},{},{},{}\n",
            r.m, r.big_m, r.bound, r.extracted_norm, r.q_norm, r.profiles, r.pass
        ));
    }
    write_file(&out.join("lemma22.csv"), csv.as_bytes())?;

    let eq = (q_report.extracted_norm / q_report.bound - 1.0).abs();
    let assertions = vec![
        Assertion::new(
            "mapping_mass",
            q_err < 1e-3 && snapshot_mapping_error < 1e-3,
            format!("Q: {q_err:e}, snapshots: {snapshot_mapping_error:e}"),
        ),
        Assertion::new(
            "constant_q_pass",
            q_report.pass && eq <= 0.05,
            format!("‖V‖/bound − 1 = {eq:e}"),
        ),
        Assertion::new(
            "snapshots_pass",
            s_report.pass,
            format!(
                "‖V‖ = {}, bound = {}",
                s_report.extracted_norm, s_report.bound
            ),
        ),
        Assertion::new(
            "snapshots_mass",
            s_report.extracted_norm >= 0.95 * gs.norm(),
            format!("‖V‖/‖Q‖ = {}", s_report.extracted_norm / gs.norm()),
        ),
        Assertion::new(
            "summed_gn",
            q_report.summed_gn.0 <= q_report.summed_gn.1
                && s_report.summed_gn.0 <= s_report.summed_gn.1,
            format!(
                "Q: {:?}, snapshots: {:?}",
                q_report.summed_gn, s_report.summed_gn
            ),
        ),
    ];
    Ok(Lemma22Outcome {
        summary,
        assertions,
    })
}

/// `c*` for dimension `d`, re-exported for configuration docs.
pub fn coupling_limit(d: usize) -> f64 {
    hardy_constant(d)
}

/// A radial grid as configured, for callers assembling their own runs.
pub fn radial_grid(config: &RunConfig) -> Result<Arc<RadialGrid>> {
    Ok(Arc::new(config.radial_spec(config.c).build()?))
}
