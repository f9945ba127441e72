//! Experiment configuration: TOML or JSON, chosen by file extension.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub regularizer: RegularizerSpec,
    pub lambda2: Lambda2,
    pub algorithms: Vec<AlgorithmSpec>,
    pub seeds: Vec<u64>,
    pub max_iters: usize,
    pub output_dir: PathBuf,
    /// Also write one median-aggregated CSV per algorithm across seeds.
    #[serde(default)]
    pub median: bool,
    #[serde(default = "default_reference_max_iters")]
    pub reference_max_iters: usize,
    /// Gradient-mapping tolerance of the reference solve that defines `F*`.
    #[serde(default = "default_reference_tol")]
    pub reference_tol: f64,
}

fn default_reference_max_iters() -> usize {
    300_000
}

fn default_reference_tol() -> f64 {
    1e-12
}

/// Ridge weight: a number, or `"inv-m"` for `1/num_samples`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Lambda2 {
    Value(f64),
    Rule(Lambda2Rule),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lambda2Rule {
    InvM,
}

impl Lambda2 {
    pub fn resolve(&self, num_samples: usize) -> f64 {
        match self {
            Lambda2::Value(v) => *v,
            Lambda2::Rule(Lambda2Rule::InvM) => 1.0 / num_samples as f64,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// LibSVM text file (optionally gzip-compressed).
    Libsvm {
        path: PathBuf,
        #[serde(default)]
        n_features: Option<usize>,
    },
    /// Seeded classification data with a planted weight vector.
    SyntheticClassification {
        num_samples: usize,
        dim: usize,
        seed: u64,
        noise: f64,
        /// Rank-one feature correlation strength (0 = independent rows).
        #[serde(default)]
        spike: f64,
        weights: WeightSpec,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightSpec {
    /// Piecewise-constant vector with the given number of segments.
    Blocky {
        blocks: usize,
        amplitude: f64,
        seed: u64,
    },
    /// Sparse vector with the given number of nonzero entries.
    Spikes {
        count: usize,
        amplitude: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RegularizerSpec {
    L1 { lambda1: f64 },
    GroupL1l2 { lambda1: f64, group_size: usize },
    Tv1d { lambda1: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmName {
    Pgd,
    Rpsd,
    Arpsd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionOptionKind {
    /// Bernoulli probabilities.
    One,
    /// Fixed sample size.
    #[default]
    Two,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub name: AlgorithmName,
    /// Selection size as a percentage of the family size (randomized
    /// algorithms only).
    #[serde(default)]
    pub percent: Option<f64>,
    #[serde(default)]
    pub option: SelectionOptionKind,
    /// Fixed adaptation cadence; default is the identification-driven rule.
    #[serde(default)]
    pub cadence: Option<usize>,
}

impl AlgorithmSpec {
    /// File-name label, e.g. `pgd`, `rpsd10`, `arpsd2.5`.
    pub fn label(&self) -> String {
        let name = match self.name {
            AlgorithmName::Pgd => "pgd",
            AlgorithmName::Rpsd => "rpsd",
            AlgorithmName::Arpsd => "arpsd",
        };
        match self.percent {
            Some(p) if p.fract() == 0.0 => format!("{name}{:.0}", p),
            Some(p) => format!("{name}{p}"),
            None => name.to_string(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.seeds.is_empty() {
            return Err(CliError::config("at least one seed is required"));
        }
        if self.algorithms.is_empty() {
            return Err(CliError::config("at least one algorithm is required"));
        }
        for algo in &self.algorithms {
            match algo.name {
                AlgorithmName::Pgd => {
                    if algo.percent.is_some() {
                        return Err(CliError::config("pgd takes no percentage"));
                    }
                }
                AlgorithmName::Rpsd | AlgorithmName::Arpsd => {
                    let p = algo.percent.ok_or_else(|| {
                        CliError::config("randomized algorithms need a percentage")
                    })?;
                    if !(p > 0.0 && p <= 100.0) {
                        return Err(CliError::config(format!("percentage {p} outside (0, 100]")));
                    }
                }
            }
            if algo.cadence == Some(0) {
                return Err(CliError::config("cadence must be at least 1"));
            }
        }
        match &self.regularizer {
            RegularizerSpec::L1 { lambda1 }
            | RegularizerSpec::GroupL1l2 { lambda1, .. }
            | RegularizerSpec::Tv1d { lambda1 } => {
                if *lambda1 < 0.0 {
                    return Err(CliError::config("lambda1 must be nonnegative"));
                }
            }
        }
        if let RegularizerSpec::GroupL1l2 { group_size, .. } = &self.regularizer {
            if *group_size == 0 {
                return Err(CliError::config("group size must be at least 1"));
            }
        }
        if let DatasetSpec::SyntheticClassification {
            num_samples,
            dim,
            noise,
            spike,
            ..
        } = &self.dataset
        {
            if *num_samples == 0 || *dim == 0 {
                return Err(CliError::config(
                    "synthetic dataset needs samples and dimensions",
                ));
            }
            if *noise < 0.0 || *spike < 0.0 {
                return Err(CliError::config("noise and spike must be nonnegative"));
            }
        }
        Ok(())
    }

    /// Hash of the canonical JSON serialization; changes iff a field changes.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        let mut hex = String::with_capacity(64);
        for b in digest {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }
}

/// Load a configuration from TOML (default) or JSON (`.json` extension).
pub fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let config: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
    } else {
        toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
    };
    config.validate()?;
    Ok(config)
}
