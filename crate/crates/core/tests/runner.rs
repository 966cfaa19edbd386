use std::fs;
use std::path::Path;

use nlsh_core::runner::{
    self, verify_manifest, Experiment, InitialData, ProfileMode, RunConfig, LOCK_FILE,
    MANIFEST_FILE,
};
use nlsh_core::Error;

fn config(experiment: Experiment, out: &Path) -> RunConfig {
    RunConfig {
        experiment,
        output_dir: out.to_path_buf(),
        radial_n: 2048,
        r_max: 30.0,
        ..RunConfig::default()
    }
}

fn root_cause(e: &Error) -> &Error {
    match e {
        Error::Stage { source, .. } => root_cause(source),
        other => other,
    }
}

#[test]
fn critical_coupling_fails_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let r = runner::run(&RunConfig {
        c: 0.25,
        ..config(Experiment::PipelineTheorem11, &out)
    });
    assert!(matches!(r, Err(Error::Parameter(_))));
    assert!(!out.exists());
}

#[test]
fn config_text_is_validated() {
    assert!(matches!(
        RunConfig::from_toml("output_dir = \"x\"\n"),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        RunConfig::from_toml("experiment = \"evolve\"\noutput_dir = \"x\"\nfoo = 3\n"),
        Err(Error::Config(_))
    ));
    let c = RunConfig::from_toml("experiment = \"concentrate\"\noutput_dir = \"x\"\n").unwrap();
    assert!(matches!(c.validate(), Err(Error::Config(_))));
}

#[test]
fn manifest_lists_and_hashes_every_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gs");
    let m = runner::run(&RunConfig {
        couplings: vec![0.05, 0.1],
        ..config(Experiment::GroundState, &out)
    })
    .unwrap();
    assert!(m.passed());
    let names: Vec<&str> = m.artifacts.iter().map(|a| a.path.as_str()).collect();
    assert_eq!(
        names,
        [
            "config.toml",
            "ground_state.csv",
            "ground_state_00.ckpt",
            "ground_state_01.ckpt"
        ]
    );
    assert!(!out.join(LOCK_FILE).exists());
    let csv = fs::read_to_string(out.join("ground_state.csv")).unwrap();
    assert!(csv.starts_with("d,c,mass_sq,hardy,critical_lp,sharp_constant,residual\n"));
    assert_eq!(csv.lines().count(), 3);
    verify_manifest(&out).unwrap();

    let victim = out.join("ground_state_01.ckpt");
    let mut bytes = fs::read(&victim).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    fs::write(&victim, bytes).unwrap();
    assert!(matches!(
        verify_manifest(&out),
        Err(Error::HashMismatch { .. })
    ));
}

#[test]
fn locked_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join(LOCK_FILE), "1").unwrap();
    let r = runner::run(&config(Experiment::GroundState, dir.path()));
    assert!(matches!(r, Err(Error::Config(_))));
    assert!(!dir.path().join(MANIFEST_FILE).exists());
}

fn small_profiles(out: &Path, mode: ProfileMode, source: Option<&Path>) -> RunConfig {
    RunConfig {
        profile_mode: mode,
        source_dir: source.map(Path::to_path_buf),
        n_seq: 6,
        seq_m: 32,
        seq_l: 8.0,
        bubble_width: 1.0,
        separation_step: 6,
        window_radius: 4.0,
        ..config(Experiment::Profiles, out)
    }
}

#[test]
fn profile_modes_compose() {
    let dir = tempfile::tempdir().unwrap();
    let p = |s: &str| dir.path().join(s);
    runner::run(&small_profiles(&p("all"), ProfileMode::All, None)).unwrap();
    runner::run(&small_profiles(&p("gen"), ProfileMode::Generate, None)).unwrap();
    runner::run(&small_profiles(
        &p("ext"),
        ProfileMode::Extract,
        Some(&p("gen")),
    ))
    .unwrap();
    // report reads the sequence and the decomposition from one directory
    fs::create_dir_all(p("both")).unwrap();
    for sub in ["sequence", "decomposition"] {
        let from = if sub == "sequence" {
            p("gen")
        } else {
            p("ext")
        };
        copy_dir(&from.join(sub), &p("both").join(sub));
    }
    runner::run(&small_profiles(
        &p("rep"),
        ProfileMode::Report,
        Some(&p("both")),
    ))
    .unwrap();
    assert_eq!(
        fs::read(p("all/defects.csv")).unwrap(),
        fs::read(p("rep/defects.csv")).unwrap()
    );
    assert_eq!(
        fs::read(p("all/decomposition/centers.csv")).unwrap(),
        fs::read(p("ext/decomposition/centers.csv")).unwrap()
    );
    let header = fs::read_to_string(p("all/defects.csv")).unwrap();
    assert!(header.starts_with("n,min_separation,pythagorean_defect,hardy_defect,residual_lp\n"));
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for e in fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        if e.path().is_dir() {
            copy_dir(&e.path(), &to.join(e.file_name()));
        } else {
            fs::copy(e.path(), to.join(e.file_name())).unwrap();
        }
    }
}

#[test]
fn sequential_and_parallel_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("par");
    let b = dir.path().join("seq");
    let ma = runner::run(&RunConfig {
        noise_amplitude: 1e-3,
        ..small_profiles(&a, ProfileMode::All, None)
    })
    .unwrap();
    let mb = runner::run(&RunConfig {
        noise_amplitude: 1e-3,
        sequential: true,
        ..small_profiles(&b, ProfileMode::All, None)
    })
    .unwrap();
    let strip = |m: &runner::RunManifest| {
        m.artifacts
            .iter()
            .filter(|x| x.path != "config.toml")
            .map(|x| (x.path.clone(), x.sha256.clone()))
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&ma), strip(&mb));
}

#[test]
fn evolve_then_concentrate() {
    let dir = tempfile::tempdir().unwrap();
    let ev = dir.path().join("evolve");
    let m = runner::run(&RunConfig {
        growth_target: 300.0,
        fit_thresholds: [30.0, 100.0],
        ..config(Experiment::Evolve, &ev)
    })
    .unwrap();
    assert!(m.passed());
    let summary = fs::read_to_string(ev.join("evolution.json")).unwrap();
    assert!(summary.contains("blowup_resolved_limit"));
    let header = fs::read_to_string(ev.join("trace.csv")).unwrap();
    assert!(header.starts_with("t,mass,energy,hardy,gradient_term,lp_critical,dt\n"));

    let co = dir.path().join("conc");
    runner::run(&RunConfig {
        source_dir: Some(ev.clone()),
        fit_thresholds: [30.0, 100.0],
        ..config(Experiment::Concentrate, &co)
    })
    .unwrap();
    let csv = fs::read_to_string(co.join("concentration.csv")).unwrap();
    assert!(csv.lines().count() > 10);

    // the source is hash-checked: a modified trace is refused
    let tampered = dir.path().join("tampered");
    copy_dir(&ev, &tampered);
    let mut trace = fs::read_to_string(tampered.join("trace.csv")).unwrap();
    trace.push('\n');
    fs::write(tampered.join("trace.csv"), trace).unwrap();
    let e = runner::run(&RunConfig {
        source_dir: Some(tampered),
        fit_thresholds: [30.0, 100.0],
        ..config(Experiment::Concentrate, &dir.path().join("co2"))
    })
    .unwrap_err();
    assert!(e.to_string().contains("verify_source"), "{e}");

    let vf = dir.path().join("vf");
    let m = runner::run(&RunConfig {
        source_dir: Some(ev.clone()),
        gs_path: Some(ev.join("ground_state.ckpt")),
        ..config(Experiment::VerifyFunctionals, &vf)
    })
    .unwrap();
    assert!(m.passed());
    let rows = fs::read_to_string(vf.join("functionals.csv")).unwrap();
    assert!(rows.starts_with(runner::FUNCTIONALS_CSV_HEADER));
}

#[test]
fn lemma22_needs_an_intact_blowup_run() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("sub");
    runner::run(&RunConfig {
        initial: InitialData::Amplified,
        amplification: -0.5,
        t_end: 0.3,
        ..config(Experiment::Evolve, &sub)
    })
    .unwrap();
    let lower_bound = |out: &str| {
        runner::run(&RunConfig {
            source_dir: Some(sub.clone()),
            ..config(Experiment::PipelineLemma22, &dir.path().join(out))
        })
    };
    let e = lower_bound("a").unwrap_err();
    assert!(matches!(root_cause(&e), Error::NotABlowup(_)), "{e}");
    assert!(e.to_string().contains("estimate_t_star"));

    fs::write(sub.join("checkpoints/cp_0000.ckpt"), b"garbage").unwrap();
    let e = lower_bound("b").unwrap_err();
    assert!(matches!(root_cause(&e), Error::HashMismatch { .. }), "{e}");

    let e = runner::run(&RunConfig {
        source_dir: Some(dir.path().join("missing")),
        ..config(Experiment::PipelineLemma22, &dir.path().join("c"))
    })
    .unwrap_err();
    assert!(matches!(root_cause(&e), Error::Io { .. }), "{e}");
}
