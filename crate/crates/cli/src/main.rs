use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rproj_cli::acceptance;
use rproj_cli::config::ExperimentConfig;
use rproj_cli::error::{CliError, CliResult};
use rproj_cli::plotdata::{plotdata, to_csv};
use rproj_cli::reports::{dims_report, MomentSummary, ReportFile};
use rproj_cli::run::{family_for, run};
use rproj_cli::structural::{format_table, lie_table};
use rproj_core::analysis::{
    finitary_check, moment_curve_concentration, BoundForm, FinitaryOptions,
};
use rproj_core::energy::{
    annuli_profile, average_projected_energy, select_good_sets, TruncatedEnergyParams,
};
use rproj_core::geometry::ParamVector;
use rproj_core::pointcloud::{
    default_fit_range, generate, read_cloud, verify_regularity, verify_regularity_with_alpha,
    write_cloud, GeneratorSpec,
};
use rproj_core::sampling::sample_annulus;
use rproj_core::{FamilySpec, PointCloud};

/// Numerical experiments on restricted projections
/// `pi_t(r1, w, r2) = r1 + w . L(t) + r2 q(t)`.
#[derive(Parser)]
#[command(name = "rproj", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a point cloud from a JSON generator spec.
    Generate {
        /// JSON file with `delta0`, `kind` and the kind's parameters.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cloud file to write; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the regularity hypothesis `#(F cap B(X, delta)) <= C delta^alpha N`.
    VerifyRegularity {
        #[arg(long)]
        cloud: PathBuf,
        /// Exponent to test; the cloud's claimed alpha when absent.
        #[arg(long)]
        alpha: Option<f64>,
        /// Seed for the query subsample of very large clouds.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Averaged projected truncated energy over the parameter annulus.
    Energy(EnergyArgs),
    /// Finitary concentration sweep over a dyadic ladder of scales.
    Sweep(SweepArgs),
    /// Concentration of f_t(F) under the moment-curve projections (1, s, s^2).
    Moment(MomentArgs),
    /// Residual table for the SO(n,1) realization.
    LieCheck {
        /// Dimensions n to check.
        #[arg(long, value_delimiter = ',', default_value = "3,4,5,6,7,8")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Box dimension of the cloud and of its projections.
    Dims(DimsArgs),
    /// Flatten report JSON files into `series,source,x,y` CSV rows.
    Plotdata {
        files: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance criteria and print one line per criterion.
    ReplicateAcceptance {
        /// Criterion ids to run; all when absent.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        /// Also write the outcomes as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Execute an experiment config and write its reports and manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output root; defaults to the config's output_dir, then $RPROJ_OUT, then ./runs.
        #[arg(long)]
        out_root: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CloudArgs {
    #[arg(long)]
    cloud: PathBuf,
    /// JSON projection family; the standard family for the cloud's dimension when absent.
    #[arg(long)]
    family: Option<PathBuf>,
}

#[derive(Args)]
struct EnergyArgs {
    #[command(flatten)]
    input: CloudArgs,
    #[arg(long)]
    alpha: f64,
    /// Truncation floor; the cloud's delta0 when absent.
    #[arg(long)]
    delta0: Option<f64>,
    #[arg(long, default_value_t = 16)]
    t_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also run the Chebyshev good-set selection with this epsilon.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Directory for per-t `index,energy` CSVs (needs --epsilon).
    #[arg(long)]
    profile_dir: Option<PathBuf>,
    /// Write the dyadic-annuli profile of this point as `k,mass,weighted` CSV.
    #[arg(long)]
    annuli_index: Option<usize>,
    #[arg(long)]
    annuli_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundArg {
    EpsilonScaled,
    Literal,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    input: CloudArgs,
    /// Comma-separated dyadic scales.
    #[arg(long, value_delimiter = ',', required = true)]
    delta: Vec<f64>,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 100)]
    t_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    a_emp: f64,
    #[arg(long, value_enum, default_value = "epsilon-scaled")]
    bound_form: BoundArg,
    /// Regularity exponent; the cloud's claimed alpha when absent.
    #[arg(long)]
    alpha: Option<f64>,
    /// Regularity constant; measured from the cloud when absent.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct MomentArgs {
    #[command(flatten)]
    input: CloudArgs,
    /// Parameter t, comma-separated.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    t: Vec<f64>,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    epsilon: f64,
    /// Number of evenly spaced s values in [0, 2].
    #[arg(long, default_value_t = 101)]
    s_count: usize,
    #[arg(long)]
    alpha: Option<f64>,
    /// Constant in the bound; the cloud's measured regularity constant when absent.
    #[arg(long)]
    c_hat: Option<f64>,
}

#[derive(Args)]
struct DimsArgs {
    #[command(flatten)]
    input: CloudArgs,
    #[arg(long, default_value_t = 100)]
    t_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reference parameter; distances to it are reported.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    t0: Vec<f64>,
    /// Include the reference parameter itself as the first projection.
    #[arg(long)]
    include_t0: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_cloud(path: &Path) -> CliResult<PointCloud> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_cloud(BufReader::new(f)).map_err(|e| CliError::Schema {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Schema {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

fn open_input(args: &CloudArgs) -> CliResult<(PointCloud, rproj_core::ProjectionFamily)> {
    let cloud = load_cloud(&args.cloud)?;
    let spec: Option<FamilySpec> = args.family.as_deref().map(load_json).transpose()?;
    let fam = family_for(spec.as_ref(), &cloud)?;
    Ok((cloud, fam))
}

fn write_out(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn execute(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Generate { spec, seed, out } => {
            let spec: GeneratorSpec = load_json(&spec)?;
            let cloud = generate(&spec, seed)?;
            let mut buf = Vec::new();
            write_cloud(&cloud, &mut buf)?;
            write_out(out.as_deref(), &String::from_utf8_lossy(&buf))?;
            eprintln!(
                "{} points, alpha {}, claimed C {}",
                cloud.len(),
                cloud.claimed_alpha(),
                cloud.claimed_c()
            );
            Ok(true)
        }
        Command::VerifyRegularity { cloud, alpha, seed } => {
            let cloud = load_cloud(&cloud)?;
            let rep = match alpha {
                Some(a) => verify_regularity_with_alpha(&cloud, a, seed),
                None => verify_regularity(&cloud, seed),
            };
            print!("{}", to_json(&rep)?);
            Ok(rep.passes)
        }
        Command::Energy(a) => {
            let (cloud, fam) = open_input(&a.input)?;
            let params = TruncatedEnergyParams::new(a.alpha, a.delta0.unwrap_or(cloud.delta0()))?;
            let ts = sample_annulus(fam.param_dim(), a.t_samples, a.seed);
            match a.epsilon {
                Some(eps) => {
                    let sel = select_good_sets(&cloud, &fam, &params, eps, &ts)?;
                    if let Some(dir) = &a.profile_dir {
                        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
                        for (i, p) in sel.profiles.iter().enumerate() {
                            let path = dir.join(format!("energy_t{i:03}.csv"));
                            let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
                            p.write_csv(f)?;
                        }
                    }
                    let means: Vec<f64> = sel.profiles.iter().map(|p| p.mean).collect();
                    let avg =
                        rproj_core::energy::AveragedEnergy::from_means(means, fam.param_dim())?;
                    print!(
                        "{}",
                        to_json(&serde_json::json!({
                            "averaged": avg,
                            "c_prime": sel.c_prime,
                            "t_threshold": sel.t_threshold,
                            "x_threshold": sel.x_threshold,
                            "good_t": sel.good_t,
                            "rejected_t_fraction": sel.rejected_t_fraction,
                            "max_removed_fraction": sel.max_removed_fraction,
                        }))?
                    );
                }
                None => {
                    let avg = average_projected_energy(&cloud, &fam, &params, &ts)?;
                    print!("{}", to_json(&avg)?);
                }
            }
            if let Some(i) = a.annuli_index {
                let prof = annuli_profile(&cloud, i, params.alpha)?;
                let mut buf = Vec::new();
                prof.write_csv(&mut buf)?;
                match &a.annuli_out {
                    Some(p) => std::fs::write(p, &buf).map_err(|e| CliError::io(p, e))?,
                    None => std::io::stderr()
                        .write_all(&buf)
                        .map_err(|e| CliError::io(Path::new("<stderr>"), e))?,
                }
            }
            Ok(true)
        }
        Command::Sweep(a) => {
            let (cloud, fam) = open_input(&a.input)?;
            let alpha = a.alpha.unwrap_or(cloud.claimed_alpha());
            let c = match a.c {
                Some(c) => c,
                None => verify_regularity_with_alpha(&cloud, alpha, a.seed).measured_c(),
            };
            let options = FinitaryOptions {
                alpha,
                c,
                a_emp: a.a_emp,
                bound_form: match a.bound_form {
                    BoundArg::EpsilonScaled => BoundForm::EpsilonScaled,
                    BoundArg::Literal => BoundForm::Literal,
                },
                seed: Some(a.seed),
            };
            let ts = sample_annulus(fam.param_dim(), a.t_samples, a.seed);
            std::fs::create_dir_all(&a.out_dir).map_err(|e| CliError::io(&a.out_dir, e))?;
            let mut csv = Vec::new();
            println!(
                "{:>14} {:>12} {:>12} {:>12}",
                "delta", "exceptional", "literal", "bound"
            );
            for (i, &delta) in a.delta.iter().enumerate() {
                let rep = finitary_check(&cloud, &fam, delta, a.epsilon, &ts, &options)?;
                rep.write_csv(&mut csv, i == 0)?;
                println!(
                    "{:>14.6e} {:>12.4} {:>12.4} {:>12.4e}",
                    delta,
                    rep.exceptional_fraction,
                    rep.literal_exceptional_fraction,
                    rep.bound_used
                );
                let path = a.out_dir.join(format!("sweep_{i:02}.json"));
                std::fs::write(&path, ReportFile::SweepReport(rep).to_json())
                    .map_err(|e| CliError::io(&path, e))?;
            }
            let path = a.out_dir.join("sweep.csv");
            std::fs::write(&path, csv).map_err(|e| CliError::io(&path, e))?;
            Ok(true)
        }
        Command::Moment(a) => {
            let (cloud, fam) = open_input(&a.input)?;
            let t = ParamVector(a.t.clone());
            let proj = fam.at(&t)?;
            let triples: Vec<[f64; 3]> = cloud
                .points()
                .iter()
                .map(|p| proj.factor_coords(p.coords()))
                .collect();
            let alpha = a.alpha.unwrap_or(cloud.claimed_alpha());
            let c_hat = match a.c_hat {
                Some(c) => c,
                None => verify_regularity_with_alpha(&cloud, alpha, 0).measured_c(),
            };
            let k = a.s_count.max(1);
            let s_grid: Vec<f64> = (0..k)
                .map(|i| {
                    if k == 1 {
                        0.0
                    } else {
                        2.0 * i as f64 / (k - 1) as f64
                    }
                })
                .collect();
            let rep =
                moment_curve_concentration(&triples, a.delta, a.epsilon, &s_grid, alpha, c_hat)?;
            print!(
                "{}",
                ReportFile::MomentSummary(MomentSummary::new(t, &rep)).to_json()
            );
            Ok(true)
        }
        Command::LieCheck { n, samples, seed } => {
            if let Some(bad) = n.iter().find(|&&k| k < 3) {
                return Err(CliError::Usage(format!("n = {bad} must be >= 3")));
            }
            let rows = lie_table(&n, samples, seed)?;
            print!("{}", format_table(&rows));
            Ok(rows
                .iter()
                .all(|r| r.structural_max().max(r.xi_vs_pi) < 1e-12))
        }
        Command::Dims(a) => {
            let (cloud, fam) = open_input(&a.input)?;
            let reference = (!a.t0.is_empty()).then(|| ParamVector(a.t0.clone()));
            let mut ts = Vec::new();
            if let (true, Some(r)) = (a.include_t0, &reference) {
                ts.push(r.clone());
            }
            ts.extend(sample_annulus(fam.param_dim(), a.t_samples, a.seed));
            let rep = dims_report(
                &cloud,
                &fam,
                &ts,
                reference.as_ref(),
                default_fit_range(cloud.delta0()),
            )?;
            write_out(a.out.as_deref(), &ReportFile::DimsReport(rep).to_json())?;
            Ok(true)
        }
        Command::Plotdata { files, out } => {
            let rows = plotdata(&files)?;
            write_out(out.as_deref(), &to_csv(&rows))?;
            Ok(true)
        }
        Command::ReplicateAcceptance { only, json } => {
            let ids = if only.is_empty() {
                acceptance::ids()
            } else {
                only
            };
            let mut outcomes = Vec::new();
            for id in ids {
                let o = acceptance::run(id)
                    .ok_or_else(|| CliError::Usage(format!("no criterion {id}")))?;
                println!("{}", o.line());
                outcomes.push(o);
            }
            if let Some(p) = json {
                std::fs::write(&p, to_json(&outcomes)?).map_err(|e| CliError::io(&p, e))?;
            }
            Ok(outcomes.iter().all(|o| o.passed))
        }
        Command::Run { config, out_root } => {
            let cfg = ExperimentConfig::load(&config)?;
            let outcome = run(&cfg, out_root.as_deref())?;
            let summary = outcome.dir.join("summary.txt");
            if let Ok(text) = std::fs::read_to_string(&summary) {
                print!("{text}");
            }
            println!("\nreports in {}", outcome.dir.display());
            Ok(outcome.manifest.passed)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
