//! `generate -> verify_regularity -> select_good_sets -> finitary_check (per delta)
//! -> dims -> lie check`, with every artifact hashed into a manifest.
//!
//! Seeds: the generator and the regularity subsample use `seed`, the sweep's
//! parameter samples `seed + 1`, the energy stage's `seed + 2` and the Lie
//! check `seed + 3`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rproj_core::analysis::{finitary_check, FinitaryOptions, SweepReport};
use rproj_core::energy::{
    projected_energies, select_from_energies, AveragedEnergy, TruncatedEnergyParams,
};
use rproj_core::geometry::{ParamVector, ProjectionFamily};
use rproj_core::numeric::mean;
use rproj_core::pointcloud::{
    default_fit_range, generate, verify_regularity_with_alpha, write_cloud,
};
use rproj_core::sampling::sample_annulus;
use rproj_core::PointCloud;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::reports::{dims_report, ReportFile};
use crate::structural::{format_table, lie_row};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const OUTPUT_ENV: &str = "RPROJ_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub code_version: String,
    pub timings: Vec<StageTiming>,
    pub files: Vec<FileEntry>,
    pub checks: Vec<CheckResult>,
    pub errors: Vec<String>,
    pub passed: bool,
}

/// Output root: explicit flag, then the config's `output_dir`, then
/// `$RPROJ_OUT`, then `runs`.
pub fn output_root(flag: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

struct RunDir {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl RunDir {
    fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.files.push(FileEntry {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyStage {
    pub alpha: f64,
    pub delta0: f64,
    pub epsilon: f64,
    pub averaged: AveragedEnergy,
    pub c_prime: f64,
    pub t_threshold: f64,
    pub x_threshold: f64,
    pub t_samples: Vec<ParamVector>,
    pub good_t: Vec<bool>,
    pub surviving_fraction: Vec<f64>,
    pub rejected_t_fraction: f64,
    pub max_removed_fraction: f64,
}

struct Runner<'a> {
    config: &'a ExperimentConfig,
    out: RunDir,
    timings: Vec<StageTiming>,
    checks: Vec<CheckResult>,
}

impl Runner<'_> {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> CliResult<T>) -> CliResult<T> {
        let start = Instant::now();
        let r = f(self);
        self.timings.push(StageTiming {
            stage: name.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        r.map_err(|e| CliError::Usage(format!("stage {name}: {e}")))
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(CheckResult {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        self.out.write(name, text.as_bytes())
    }

    fn execute(&mut self, summary: &mut String) -> CliResult<()> {
        let cfg = self.config;
        let fam = cfg.family.build()?;
        let m = fam.param_dim();

        let cloud: PointCloud = self.stage("generate", |r| {
            let cloud = generate(&cfg.generator_spec(), cfg.seed)?;
            let mut buf = Vec::new();
            write_cloud(&cloud, &mut buf)?;
            r.out.write("cloud.txt", &buf)?;
            Ok(cloud)
        })?;
        let _ = writeln!(
            summary,
            "points {}  dim {}  delta0 {}",
            cloud.len(),
            cloud.dim(),
            cloud.delta0()
        );

        let c_measured = self.stage("verify_regularity", |r| {
            let rep = verify_regularity_with_alpha(&cloud, cfg.alpha, cfg.seed);
            r.json("regularity.json", &rep)?;
            if cfg.check_regularity {
                r.check(
                    "regularity",
                    rep.passes,
                    format!(
                        "measured C {} vs claimed {}",
                        rep.worst_ratio, rep.claimed_c
                    ),
                );
            }
            Ok(rep.measured_c())
        })?;
        let _ = writeln!(summary, "alpha {}  measured C {c_measured}", cfg.alpha);

        if cfg.energy_t_sample_count > 0 {
            self.stage("select_good_sets", |r| {
                let params = TruncatedEnergyParams::new(cfg.alpha, cfg.delta0)?;
                let ts = sample_annulus(m, cfg.energy_t_sample_count, cfg.seed.wrapping_add(2));
                let energies = ts
                    .iter()
                    .map(|t| projected_energies(&cloud, &fam, &params, t))
                    .collect::<rproj_core::Result<Vec<_>>>()?;
                let averaged = AveragedEnergy::from_means(energies.iter().map(|e| mean(e)).collect(), m)?;
                let sel = select_from_energies(&energies, cfg.delta0, cfg.epsilon, &ts)?;
                for (i, p) in sel.profiles.iter().enumerate() {
                    let mut buf = Vec::new();
                    p.write_csv(&mut buf)?;
                    r.out.write(&format!("energy_t{i:03}.csv"), &buf)?;
                }
                let stage = EnergyStage {
                    alpha: params.alpha,
                    delta0: params.delta0,
                    epsilon: cfg.epsilon,
                    c_prime: sel.c_prime,
                    t_threshold: sel.t_threshold,
                    x_threshold: sel.x_threshold,
                    good_t: sel.good_t.clone(),
                    surviving_fraction: sel.profiles.iter().map(|p| p.surviving_fraction()).collect(),
                    rejected_t_fraction: sel.rejected_t_fraction,
                    max_removed_fraction: sel.max_removed_fraction,
                    t_samples: ts,
                    averaged,
                };
                r.json("energy.json", &stage)?;
                let _ = writeln!(
                    summary,
                    "energy: integral {:.6} +- {:.6}  C' {:.6}  rejected t {:.4}  max removed X {:.4}",
                    stage.averaged.integral,
                    stage.averaged.standard_error,
                    stage.c_prime,
                    stage.rejected_t_fraction,
                    stage.max_removed_fraction
                );
                Ok(())
            })?;
        }

        let ts = sample_annulus(m, cfg.t_sample_count, cfg.seed.wrapping_add(1));
        let sweeps: Vec<SweepReport> = self.stage("finitary_check", |r| {
            let options = FinitaryOptions {
                alpha: cfg.alpha,
                c: c_measured,
                a_emp: cfg.a_emp,
                bound_form: cfg.bound_form,
                seed: Some(cfg.seed.wrapping_add(1)),
            };
            let mut csv = Vec::new();
            let mut reports = Vec::new();
            for (i, &delta) in cfg.delta_ladder.iter().enumerate() {
                let rep = finitary_check(&cloud, &fam, delta, cfg.epsilon, &ts, &options)?;
                rep.write_csv(&mut csv, i == 0)?;
                let file = ReportFile::SweepReport(rep.clone());
                r.out
                    .write(&format!("sweep_{i:02}.json"), file.to_json().as_bytes())?;
                reports.push(rep);
            }
            r.out.write("sweep.csv", &csv)?;
            Ok(reports)
        })?;
        let _ = writeln!(
            summary,
            "\n{:>12} {:>12} {:>12} {:>12} {:>12}",
            "delta", "exceptional", "literal", "max_removed", "t_over"
        );
        for s in &sweeps {
            let removed = s
                .t_samples
                .iter()
                .map(|t| t.removed_fraction)
                .fold(0.0, f64::max);
            let over = s.t_samples.iter().filter(|t| t.bad_fraction > 0.0).count();
            let _ = writeln!(
                summary,
                "{:>12.6e} {:>12.4} {:>12.4} {:>12.4} {:>12}",
                s.delta, s.exceptional_fraction, s.literal_exceptional_fraction, removed, over
            );
        }
        if let Some(limit) = cfg.max_exceptional_fraction {
            let worst = sweeps
                .iter()
                .map(|s| s.exceptional_fraction)
                .fold(0.0, f64::max);
            self.check(
                "exceptional_fraction",
                worst <= limit,
                format!("largest exceptional fraction {worst} vs limit {limit}"),
            );
        }

        self.stage("dims", |r| {
            let take = ts.len().min(32);
            match dims_report(
                &cloud,
                &fam,
                &ts[..take],
                None,
                default_fit_range(cfg.delta0),
            ) {
                Ok(rep) => {
                    let _ = writeln!(
                        summary,
                        "\ncloud box dimension {:.4}  median projected {:.4}",
                        rep.cloud.slope, rep.median_slope
                    );
                    r.out.write(
                        "dims.json",
                        ReportFile::DimsReport(rep).to_json().as_bytes(),
                    )
                }
                Err(rproj_core::Error::TooFewScales { found }) => {
                    let _ = writeln!(
                        summary,
                        "\nbox dimension skipped: {found} dyadic scales in the fit range"
                    );
                    Ok(())
                }
                Err(e) => Err(e.into()),
            }
        })?;

        if cfg.lie_check {
            self.stage("lie_check", |r| {
                let row = lie_row(fam.ambient_dim(), 100, cfg.seed.wrapping_add(3))?;
                r.out.write(
                    "lie.txt",
                    format_table(std::slice::from_ref(&row)).as_bytes(),
                )?;
                let worst = row.structural_max().max(row.xi_vs_pi);
                r.check(
                    "lie",
                    worst < 1e-12,
                    format!("largest residual {worst:.3e}"),
                );
                Ok(())
            })?;
        }
        Ok(())
    }
}

pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
}

/// Executes a validated config; stage failures are recorded in the manifest.
pub fn run(config: &ExperimentConfig, out_root: Option<&Path>) -> CliResult<RunOutcome> {
    config.validate()?;
    let hash = config.content_hash();
    let dir = output_root(out_root, config).join(&hash[..16]);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;

    let body = || -> CliResult<RunOutcome> {
        let mut runner = Runner {
            config,
            out: RunDir {
                dir: dir.clone(),
                files: Vec::new(),
            },
            timings: Vec::new(),
            checks: Vec::new(),
        };
        runner.json("config.json", config)?;
        let mut summary = String::new();
        let mut errors = Vec::new();
        if let Err(e) = runner.execute(&mut summary) {
            errors.push(e.to_string());
        }
        let passed = errors.is_empty() && runner.checks.iter().all(|c| c.passed);
        let _ = writeln!(summary, "\nchecks:");
        for c in &runner.checks {
            let _ = writeln!(
                summary,
                "  {} {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        for e in &errors {
            let _ = writeln!(summary, "  ERROR {e}");
        }
        runner.out.write("summary.txt", summary.as_bytes())?;
        let manifest = RunManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            config: config.clone(),
            config_hash: hash.clone(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            timings: runner.timings,
            files: runner.out.files,
            checks: runner.checks,
            errors,
            passed,
        };
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        let path = dir.join("manifest.json");
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(RunOutcome {
            dir: dir.clone(),
            manifest,
        })
    };
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(body),
        None => body(),
    }
}

/// Projection family matching a cloud: the given spec, else the standard one.
pub fn family_for(
    spec: Option<&rproj_core::FamilySpec>,
    cloud: &PointCloud,
) -> CliResult<ProjectionFamily> {
    let fam = match spec {
        Some(s) => s.build()?,
        None => ProjectionFamily::standard(cloud.dim() - 2),
    };
    if fam.ambient_dim() != cloud.dim() {
        return Err(CliError::Usage(format!(
            "family acts on R^{} but the cloud lives in R^{}",
            fam.ambient_dim(),
            cloud.dim()
        )));
    }
    Ok(fam)
}
