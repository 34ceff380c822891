use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rproj_core::analysis::BoundForm;
use rproj_core::numeric::is_dyadic_unit;
use rproj_core::pointcloud::{GeneratorKind, GeneratorSpec};
use rproj_core::FamilySpec;

use crate::error::{CliError, CliResult};

fn default_energy_t() -> usize {
    8
}
fn default_a_emp() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}
fn default_max_exceptional() -> Option<f64> {
    Some(0.1)
}

/// One experiment: a generated cloud swept over a dyadic ladder of scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub generator: GeneratorKind,
    pub family: FamilySpec,
    pub alpha: f64,
    pub delta0: f64,
    pub epsilon: f64,
    /// Parameter samples shared by every scale of the sweep.
    pub t_sample_count: usize,
    /// Parameter samples for the energy stage; 0 skips it.
    #[serde(default = "default_energy_t")]
    pub energy_t_sample_count: usize,
    pub delta_ladder: Vec<f64>,
    pub seed: u64,
    #[serde(default = "default_a_emp")]
    pub a_emp: f64,
    #[serde(default)]
    pub bound_form: BoundForm,
    #[serde(default = "default_true")]
    pub check_regularity: bool,
    /// Fail the run when any scale exceeds this exceptional fraction.
    #[serde(default = "default_max_exceptional")]
    pub max_exceptional_fraction: Option<f64>,
    #[serde(default = "default_true")]
    pub lie_check: bool,
    /// Worker threads; machine parallelism when absent. Results do not depend on it.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Schema {
            path: path.display().to_string(),
            msg: e.to_string(),
        })
    }

    pub fn generator_spec(&self) -> GeneratorSpec {
        GeneratorSpec {
            delta0: self.delta0,
            kind: self.generator.clone(),
        }
    }

    /// Every violated constraint, so one edit can fix them all.
    pub fn problems(&self) -> Vec<String> {
        let mut p = self.generator_spec().problems();
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            p.push(format!("alpha = {} not in (0,1]", self.alpha));
        }
        if !(self.epsilon > 0.0 && self.epsilon < self.alpha / 100.0) {
            p.push(format!(
                "epsilon = {} must satisfy 0 < epsilon < alpha/100 = {}",
                self.epsilon,
                self.alpha / 100.0
            ));
        }
        if self.t_sample_count == 0 {
            p.push("t_sample_count must be positive".into());
        }
        if self.delta_ladder.is_empty() {
            p.push("delta_ladder is empty".into());
        }
        for (i, &d) in self.delta_ladder.iter().enumerate() {
            if !is_dyadic_unit(d) {
                p.push(format!("delta_ladder[{i}] = {d} is not of the form 2^-k"));
            } else if d < self.delta0 {
                p.push(format!(
                    "delta_ladder[{i}] = {d} is below delta0 = {}",
                    self.delta0
                ));
            }
            if self.delta_ladder[..i].contains(&d) {
                p.push(format!("delta_ladder[{i}] = {d} is repeated"));
            }
        }
        if !(self.a_emp >= 0.0) {
            p.push(format!("a_emp = {} must be non-negative", self.a_emp));
        }
        if let Some(f) = self.max_exceptional_fraction {
            if !(0.0..=1.0).contains(&f) {
                p.push(format!("max_exceptional_fraction = {f} not in [0,1]"));
            }
        }
        if self.threads == Some(0) {
            p.push("threads must be positive".into());
        }
        match self.family.build() {
            Ok(fam) => {
                if let Some(n) = self.generator.ambient_dim() {
                    if n != fam.ambient_dim() {
                        p.push(format!(
                            "family acts on R^{} but the generator produces points in R^{n}",
                            fam.ambient_dim()
                        ));
                    }
                }
            }
            Err(e) => p.push(format!("family: {e}")),
        }
        p
    }

    pub fn validate(&self) -> CliResult<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(CliError::InvalidConfig(p))
        }
    }

    /// Hash of the experiment content; thread count and output location are excluded.
    pub fn content_hash(&self) -> String {
        let mut c = self.clone();
        c.threads = None;
        c.output_dir = None;
        let text = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}
