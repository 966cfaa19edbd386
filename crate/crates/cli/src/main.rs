//! `nlsh`: command-line front end for the experiment runner.
//!
//! Every subcommand maps to one experiment. Settings are read from an
//! optional TOML file, then overridden by flags; `--set key=value` reaches
//! any configuration key without a dedicated flag.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nlsh_core::runner::{run, RunConfig};

#[derive(Parser)]
#[command(name = "nlsh", version, about = "Inverse-square NLS numerical lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the ground state at one or more couplings.
    GroundState(Common),
    /// Evolve radial initial data until blow-up or t_end.
    Evolve(Common),
    /// Concentration curve of a finished evolution directory.
    Concentrate(Common),
    /// Generate, decompose and report on a synthetic bubble sequence.
    Profiles(Common),
    /// Tabulate invariants of checkpoint files.
    VerifyFunctionals(Common),
    /// Ground state, blow-up run and concentration in one directory.
    PipelineTheorem11(Common),
    /// Lower-bound harness on rescaled snapshots of a blow-up run.
    PipelineLemma22(Common),
}

#[derive(Args)]
struct Common {
    /// TOML file with configuration keys; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, short = 'o')]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    rng_seed: Option<u64>,
    /// Run every data-parallel loop on one thread.
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    d: Option<i64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    radial_n: Option<i64>,
    #[arg(long)]
    r_max: Option<f64>,
    /// Couplings for the ground-state sweep.
    #[arg(long, value_delimiter = ',')]
    couplings: Vec<f64>,
    /// amplified | gaussian | checkpoint
    #[arg(long)]
    initial: Option<String>,
    #[arg(long)]
    initial_path: Option<PathBuf>,
    #[arg(long)]
    amplification: Option<f64>,
    /// strang | yoshida4
    #[arg(long)]
    integrator: Option<String>,
    #[arg(long)]
    dt_factor: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    growth_target: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    cart_m: Option<i64>,
    #[arg(long)]
    cart_l: Option<f64>,
    /// generate | extract | report | all
    #[arg(long)]
    profile_mode: Option<String>,
    #[arg(long)]
    n_seq: Option<i64>,
    #[arg(long)]
    noise_amplitude: Option<f64>,
    #[arg(long)]
    source_dir: Option<PathBuf>,
    #[arg(long)]
    gs_path: Option<PathBuf>,
    /// Checkpoint files for verify-functionals.
    #[arg(long, value_delimiter = ',')]
    inputs: Vec<PathBuf>,
    /// Any other configuration key, as `key=value` with a TOML value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn path_value(p: &std::path::Path) -> toml::Value {
    toml::Value::String(p.to_string_lossy().into_owned())
}

fn parse_value(text: &str) -> toml::Value {
    let probe = format!("v = {text}");
    match probe.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(text.to_string()),
    }
}

impl Common {
    fn overrides(&self) -> Result<toml::Table> {
        use toml::Value as V;
        let mut t = toml::Table::new();
        let mut put = |k: &str, v: Option<V>| {
            if let Some(v) = v {
                t.insert(k.to_string(), v);
            }
        };
        put("output_dir", self.output_dir.as_deref().map(path_value));
        put("rng_seed", self.rng_seed.map(|s| V::Integer(s as i64)));
        put("sequential", self.sequential.then_some(V::Boolean(true)));
        put("d", self.d.map(V::Integer));
        put("c", self.c.map(V::Float));
        put("radial_n", self.radial_n.map(V::Integer));
        put("r_max", self.r_max.map(V::Float));
        put(
            "couplings",
            (!self.couplings.is_empty())
                .then(|| V::Array(self.couplings.iter().map(|&c| V::Float(c)).collect())),
        );
        put("initial", self.initial.clone().map(V::String));
        put("initial_path", self.initial_path.as_deref().map(path_value));
        put("amplification", self.amplification.map(V::Float));
        put("integrator", self.integrator.clone().map(V::String));
        put("dt_factor", self.dt_factor.map(V::Float));
        put("t_end", self.t_end.map(V::Float));
        put("growth_target", self.growth_target.map(V::Float));
        put("kappa", self.kappa.map(V::Float));
        put("beta", self.beta.map(V::Float));
        put("cart_m", self.cart_m.map(V::Integer));
        put("cart_l", self.cart_l.map(V::Float));
        put("profile_mode", self.profile_mode.clone().map(V::String));
        put("n_seq", self.n_seq.map(V::Integer));
        put("noise_amplitude", self.noise_amplitude.map(V::Float));
        put("source_dir", self.source_dir.as_deref().map(path_value));
        put("gs_path", self.gs_path.as_deref().map(path_value));
        put(
            "inputs",
            (!self.inputs.is_empty())
                .then(|| V::Array(self.inputs.iter().map(|p| path_value(p)).collect())),
        );
        for kv in &self.set {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--set expects KEY=VALUE, got {kv:?}");
            };
            t.insert(k.trim().to_string(), parse_value(v.trim()));
        }
        Ok(t)
    }

    fn resolve(&self, experiment: &str) -> Result<RunConfig> {
        let mut table = match &self.config {
            Some(p) => std::fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))?
                .parse::<toml::Table>()
                .with_context(|| format!("parsing {}", p.display()))?,
            None => toml::Table::new(),
        };
        table.extend(self.overrides()?);
        table.insert("experiment".into(), toml::Value::String(experiment.into()));
        Ok(RunConfig::from_toml(&toml::to_string(&table)?)?)
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<bool> {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::GroundState(c) => ("ground_state", c),
        Command::Evolve(c) => ("evolve", c),
        Command::Concentrate(c) => ("concentrate", c),
        Command::Profiles(c) => ("profiles", c),
        Command::VerifyFunctionals(c) => ("verify_functionals", c),
        Command::PipelineTheorem11(c) => ("pipeline_theorem11", c),
        Command::PipelineLemma22(c) => ("pipeline_lemma22", c),
    };
    let config = common.resolve(name)?;
    let manifest = run(&config).with_context(|| format!("{name} failed"))?;
    for a in &manifest.assertions {
        println!(
            "{} {}: {}",
            if a.pass { "PASS" } else { "FAIL" },
            a.name,
            a.detail
        );
    }
    println!(
        "{} artifacts in {} ({:.1} s)",
        manifest.artifacts.len(),
        config.output_dir.display(),
        manifest.wall_time_s
    );
    Ok(manifest.passed())
}
