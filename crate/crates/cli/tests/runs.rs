use std::path::Path;
use std::process::Command;

use rproj_cli::config::ExperimentConfig;
use rproj_cli::error::CliError;
use rproj_cli::reports::ReportFile;
use rproj_cli::run::{output_root, run};

const SEGMENT: &str = r#"{
  "generator": { "kind": "uniform_segment", "direction": [1.0, 1.25, 1.5, 1.75], "count": 1024 },
  "family": { "type": "standard", "n": 4 },
  "alpha": 1.0,
  "delta0": 0.0009765625,
  "epsilon": 0.005,
  "t_sample_count": 20,
  "energy_t_sample_count": 4,
  "delta_ladder": [0.00390625, 0.015625],
  "seed": 3
}"#;

fn segment() -> ExperimentConfig {
    serde_json::from_str(SEGMENT).unwrap()
}

fn rproj(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rproj"))
        .args(args)
        .output()
        .unwrap()
}

fn sweeps(dir: &Path) -> Vec<rproj_core::analysis::SweepReport> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            p.file_name()
                .unwrap()
                .to_string_lossy()
                .starts_with("sweep_")
        })
        .collect();
    files.sort();
    files
        .iter()
        .map(|p| match ReportFile::read(p).unwrap() {
            ReportFile::SweepReport(s) => s,
            other => panic!("unexpected report {other:?}"),
        })
        .collect()
}

#[test]
fn same_config_gives_identical_outputs() {
    let roots = [(); 3].map(|_| tempfile::tempdir().unwrap());
    let mut cfg = segment();
    let first = run(&cfg, Some(roots[0].path())).unwrap();
    let second = run(&cfg, Some(roots[1].path())).unwrap();
    assert_eq!(first.manifest.config_hash, second.manifest.config_hash);
    assert_eq!(first.dir.file_name(), second.dir.file_name());
    assert!(!first.manifest.files.is_empty());
    assert_eq!(first.manifest.files, second.manifest.files);

    // Thread count is excluded from the hash and changes only the echoed config.
    cfg.threads = Some(1);
    let third = run(&cfg, Some(roots[2].path())).unwrap();
    assert_eq!(first.manifest.config_hash, third.manifest.config_hash);
    let results = |m: &rproj_cli::run::RunManifest| {
        m.files
            .iter()
            .filter(|f| f.path != "config.json")
            .cloned()
            .collect::<Vec<_>>()
    };
    assert_eq!(results(&first.manifest), results(&third.manifest));
}

#[test]
fn segment_run_passes_with_no_exceptional_parameters() {
    let root = tempfile::tempdir().unwrap();
    let out = run(&segment(), Some(root.path())).unwrap();
    assert!(out.manifest.passed, "{:?}", out.manifest.checks);
    assert!(out.manifest.errors.is_empty());
    let reports = sweeps(&out.dir);
    assert_eq!(reports.len(), 2);
    for r in &reports {
        assert_eq!(r.exceptional_fraction, 0.0);
    }
    for f in &out.manifest.files {
        let bytes = std::fs::read(out.dir.join(&f.path)).unwrap();
        assert_eq!(bytes.len() as u64, f.bytes, "{}", f.path);
    }
}

#[test]
fn epsilon_at_alpha_over_hundred_is_rejected() {
    let mut cfg = segment();
    cfg.epsilon = cfg.alpha / 100.0;
    let root = tempfile::tempdir().unwrap();
    match run(&cfg, Some(root.path())) {
        Err(CliError::InvalidConfig(problems)) => {
            assert!(
                problems.iter().any(|p| p.contains("epsilon")),
                "{problems:?}"
            );
        }
        other => panic!("expected rejection, got {:?}", other.map(|o| o.dir)),
    }
    assert_eq!(std::fs::read_dir(root.path()).unwrap().count(), 0);

    let path = root.path().join("bad.json");
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = rproj(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--out-root",
        root.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon"));
}

#[test]
fn flag_beats_config_output_dir() {
    let mut cfg = segment();
    cfg.output_dir = Some("from-config".into());
    assert_eq!(
        output_root(Some(Path::new("flag")), &cfg),
        Path::new("flag")
    );
    assert_eq!(output_root(None, &cfg), Path::new("from-config"));
}

#[test]
fn plotdata_of_nothing_is_empty() {
    let out = rproj(&["plotdata"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
}

#[test]
fn plotdata_single_scale_gives_one_row() {
    let root = tempfile::tempdir().unwrap();
    let mut cfg = segment();
    cfg.delta_ladder = vec![0.015625];
    let run_out = run(&cfg, Some(root.path())).unwrap();
    let sweep = run_out.dir.join("sweep_00.json");
    let out = rproj(&["plotdata", sweep.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    assert_eq!(lines[0], "series,source,x,y");
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "exceptional_scaling");
    let x: f64 = fields[2].parse().unwrap();
    let y: f64 = fields[3].parse().unwrap();
    assert_eq!(x, 0.015625f64.ln());
    // No exceptional t: y = ln(1/T).
    assert!((y - (1.0 / 20.0f64).ln()).abs() < 1e-12);
}

#[test]
fn schema_lists_every_config_field() {
    let schema: serde_json::Value =
        serde_json::from_str(include_str!("../schema/config.schema.json")).unwrap();
    let props = schema["properties"].as_object().unwrap();
    let cfg = serde_json::to_value(segment()).unwrap();
    let mut fields: Vec<&String> = cfg.as_object().unwrap().keys().collect();
    let mut listed: Vec<&String> = props.keys().collect();
    fields.sort();
    listed.sort();
    assert_eq!(fields, listed);
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap();
        cfg.validate()
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 2);
}

#[test]
fn lie_check_exits_zero() {
    let out = rproj(&["lie-check", "--n", "3,5", "--samples", "5"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 3);
}

#[test]
fn generate_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"delta0": 0.001953125, "kind": "finite_grid", "n": 3, "axes": [0, 1], "per_axis": 16}"#,
    )
    .unwrap();
    let cloud = dir.path().join("cloud.txt");
    let out = rproj(&[
        "generate",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        cloud.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = rproj(&["verify-regularity", "--cloud", cloud.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    // A planar grid has far more than C delta^2.5 N points in small balls.
    let out = rproj(&[
        "verify-regularity",
        "--cloud",
        cloud.to_str().unwrap(),
        "--alpha",
        "2.5",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn analysis_subcommands_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    std::fs::write(
        p("spec.json"),
        r#"{"delta0": 0.0009765625, "kind": "uniform_segment", "direction": [1, 2, 3], "count": 512}"#,
    )
    .unwrap();
    let ok = |args: &[&str]| {
        let out = rproj(args);
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    };
    ok(&[
        "generate",
        "--spec",
        &p("spec.json"),
        "--seed",
        "1",
        "--out",
        &p("cloud.txt"),
    ]);

    let energy: serde_json::Value = serde_json::from_str(&ok(&[
        "energy",
        "--cloud",
        &p("cloud.txt"),
        "--alpha",
        "1",
        "--t-samples",
        "4",
        "--epsilon",
        "0.005",
        "--profile-dir",
        &p("profiles"),
        "--annuli-index",
        "0",
        "--annuli-out",
        &p("annuli.csv"),
    ]))
    .unwrap();
    assert!(energy["averaged"]["integral"].as_f64().unwrap() > 0.0);
    assert_eq!(std::fs::read_dir(p("profiles")).unwrap().count(), 4);
    assert!(std::fs::read_to_string(p("annuli.csv"))
        .unwrap()
        .starts_with("k,mass,weighted"));

    ok(&[
        "sweep",
        "--cloud",
        &p("cloud.txt"),
        "--delta",
        "0.00390625,0.015625",
        "--epsilon",
        "0.005",
        "--t-samples",
        "10",
        "--out-dir",
        &p("sweep"),
    ]);
    let csv = std::fs::read_to_string(dir.path().join("sweep/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 10);

    let moment = ok(&[
        "moment",
        "--cloud",
        &p("cloud.txt"),
        "--t",
        "0.3",
        "--delta",
        "0.0078125",
        "--epsilon",
        "0.005",
    ]);
    match serde_json::from_str::<ReportFile>(&moment).unwrap() {
        ReportFile::MomentSummary(m) => assert_eq!(m.s.len(), 101),
        other => panic!("unexpected {other:?}"),
    }

    ok(&[
        "dims",
        "--cloud",
        &p("cloud.txt"),
        "--t-samples",
        "5",
        "--t0",
        "1",
        "--include-t0",
        "--out",
        &p("dims.json"),
    ]);
    match ReportFile::read(Path::new(&p("dims.json"))).unwrap() {
        ReportFile::DimsReport(d) => {
            assert_eq!(d.projections.len(), 6);
            assert_eq!(d.projections[0].distance_to_reference, Some(0.0));
        }
        other => panic!("unexpected {other:?}"),
    }
    let rows = ok(&["plotdata", &p("dims.json")]);
    assert!(rows.lines().any(|l| l.starts_with("projected_dimension,")));
    assert!(rows.lines().any(|l| l.starts_with("box_counts,")));
}
