//! Experiment runner: build the problem, solve the reference, run every
//! (algorithm, seed) pair, and emit CSV metrics plus a manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rpsd::model::{
    blocky_weights, parse_libsvm_with_dim, spike_weights, synthetic_classification_spiked, Dataset,
    SmoothObjective,
};
use rpsd::prox::Regularizer;
use rpsd::solver::{
    arpsd_run, pgd_run, reference_minimizer, Adaptation, RunMetrics, SelectionOption, SolverConfig,
};
use rpsd::subspace::{FamilyKind, SubspaceFamily};

use crate::config::{
    AlgorithmName, AlgorithmSpec, DatasetSpec, ExperimentConfig, RegularizerSpec,
    SelectionOptionKind, WeightSpec,
};
use crate::error::{CliError, CliResult};

/// CSV column header shared by every metrics file.
pub const CSV_HEADER: &str =
    "iter,objective,suboptimality,pattern_size,subspaces_explored,cycle,adaptation_flag";

/// Environment variable overriding the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "RPSD_OUTPUT_DIR";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunEntry {
    pub algorithm: String,
    pub seed: u64,
    pub file: String,
    pub rate_uncontrolled: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config_hash: String,
    pub f_star: f64,
    pub gamma: f64,
    pub runs: Vec<RunEntry>,
    pub median_files: Vec<String>,
}

/// The problem assembled from a configuration.
pub struct Problem {
    pub objective: SmoothObjective,
    pub regularizer: Regularizer,
    pub family: SubspaceFamily,
    pub gamma: f64,
}

pub fn build_dataset(spec: &DatasetSpec) -> CliResult<Dataset> {
    match spec {
        DatasetSpec::Libsvm { path, n_features } => parse_libsvm_with_dim(path, *n_features)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display()))),
        DatasetSpec::SyntheticClassification {
            num_samples,
            dim,
            seed,
            noise,
            spike,
            weights,
        } => {
            let w = match weights {
                WeightSpec::Blocky {
                    blocks,
                    amplitude,
                    seed,
                } => blocky_weights(*dim, *blocks, *amplitude, *seed),
                WeightSpec::Spikes {
                    count,
                    amplitude,
                    seed,
                } => spike_weights(*dim, *count, *amplitude, *seed),
            };
            Ok(synthetic_classification_spiked(
                *num_samples,
                &w,
                *noise,
                *spike,
                *seed,
            ))
        }
    }
}

pub fn build_problem(config: &ExperimentConfig) -> CliResult<Problem> {
    let data = build_dataset(&config.dataset)?;
    let n = data.dim();
    let m = data.num_samples();
    let lambda2 = config.lambda2.resolve(m);
    let objective = SmoothObjective::logistic_ridge(data, lambda2).map_err(CliError::config)?;
    let regularizer = match &config.regularizer {
        RegularizerSpec::L1 { lambda1 } => Regularizer::l1(*lambda1),
        RegularizerSpec::Tv1d { lambda1 } => Regularizer::tv1d(*lambda1),
        RegularizerSpec::GroupL1l2 {
            lambda1,
            group_size,
        } => {
            let groups: Vec<Vec<usize>> = (0..n)
                .collect::<Vec<_>>()
                .chunks(*group_size)
                .map(|c| c.to_vec())
                .collect();
            Regularizer::group_l1l2(*lambda1, groups, n)
        }
    }
    .map_err(CliError::config)?;
    let family = match regularizer.natural_family() {
        FamilyKind::Axes => SubspaceFamily::axes(n),
        FamilyKind::Jumps => SubspaceFamily::jumps(n),
    }
    .map_err(CliError::config)?;
    let (l, mu) = objective.lipschitz_constants();
    let gamma = if mu > 0.0 { 2.0 / (mu + l) } else { 1.0 / l };
    Ok(Problem {
        objective,
        regularizer,
        family,
        gamma,
    })
}

fn metrics_to_rows(metrics: &RunMetrics, f_star: f64) -> Vec<String> {
    metrics
        .records
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{}",
                r.iter,
                r.objective,
                r.objective - f_star,
                r.pattern_size,
                r.subspaces_explored,
                r.cycle,
                u8::from(r.adaptation)
            )
        })
        .collect()
}

fn run_one(
    problem: &Problem,
    spec: &AlgorithmSpec,
    seed: u64,
    max_iters: usize,
) -> CliResult<(RunMetrics, bool)> {
    match spec.name {
        AlgorithmName::Pgd => {
            let tol = match problem.family.kind() {
                FamilyKind::Axes => 0.0,
                FamilyKind::Jumps => rpsd::prox::DEFAULT_JUMP_TOL,
            };
            let (_, metrics) = pgd_run(
                &problem.objective,
                &problem.regularizer,
                &problem.family,
                problem.gamma,
                max_iters,
                tol,
            )
            .map_err(CliError::config)?;
            Ok((metrics, false))
        }
        AlgorithmName::Rpsd | AlgorithmName::Arpsd => {
            let m = problem.family.size();
            let percent = spec.percent.expect("validated");
            let selection = match spec.option {
                SelectionOptionKind::Two => {
                    let s = ((percent / 100.0 * m as f64).round() as usize).clamp(1, m);
                    SelectionOption::Option2 { s }
                }
                SelectionOptionKind::One => SelectionOption::Option1 { p: percent / 100.0 },
            };
            let adaptation = match (spec.name, spec.cadence) {
                (AlgorithmName::Rpsd, _) => Adaptation::None,
                (AlgorithmName::Arpsd, Some(period)) => Adaptation::FixedCadence { period },
                (AlgorithmName::Arpsd, None) => Adaptation::IdentificationDriven,
                _ => unreachable!(),
            };
            let config = SolverConfig::new(
                &problem.objective,
                &problem.family,
                selection,
                adaptation,
                max_iters,
                seed,
            );
            let (_, metrics) = arpsd_run(
                &config,
                &problem.objective,
                &problem.regularizer,
                &problem.family,
            )
            .map_err(CliError::config)?;
            let flagged = metrics.rate_uncontrolled;
            Ok((metrics, flagged))
        }
    }
}

/// Resolve the output directory, honoring the environment override.
pub fn output_dir(config: &ExperimentConfig) -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| config.output_dir.clone())
}

/// Run every (algorithm, seed) pair, write one CSV per run plus optional
/// per-algorithm median CSVs, and finish with `manifest.json`.
pub fn run_experiment(config: &ExperimentConfig) -> CliResult<Manifest> {
    config.validate()?;
    let dir = output_dir(config);
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))?;

    let problem = build_problem(config)?;
    let (_, f_star) = reference_minimizer(
        &problem.objective,
        &problem.regularizer,
        problem.gamma,
        config.reference_tol,
        config.reference_max_iters,
    )
    .map_err(CliError::config)?;

    struct RunOutput {
        label: String,
        seed: u64,
        file: String,
        rate_uncontrolled: bool,
        rows: Vec<String>,
    }

    let mut jobs = Vec::new();
    for spec in &config.algorithms {
        for &seed in &config.seeds {
            jobs.push((spec.clone(), seed));
        }
    }
    let outputs: Vec<CliResult<RunOutput>> = jobs
        .par_iter()
        .map(|(spec, seed)| {
            let (metrics, flagged) = run_one(&problem, spec, *seed, config.max_iters)?;
            let label = spec.label();
            let file = format!("{label}_seed{seed}.csv");
            Ok(RunOutput {
                label,
                seed: *seed,
                file,
                rate_uncontrolled: flagged,
                rows: metrics_to_rows(&metrics, f_star),
            })
        })
        .collect();

    let mut runs = Vec::new();
    let mut by_label: Vec<(String, Vec<Vec<String>>)> = Vec::new();
    for out in outputs {
        let out = out?;
        write_csv(&dir.join(&out.file), &out.rows)?;
        match by_label.iter_mut().find(|(l, _)| *l == out.label) {
            Some((_, group)) => group.push(out.rows),
            None => by_label.push((out.label.clone(), vec![out.rows])),
        }
        runs.push(RunEntry {
            algorithm: out.label,
            seed: out.seed,
            file: out.file,
            rate_uncontrolled: out.rate_uncontrolled,
        });
    }

    let mut median_files = Vec::new();
    if config.median && config.seeds.len() > 1 {
        for (label, groups) in &by_label {
            if groups.len() < 2 {
                continue;
            }
            let rows = median_rows(groups);
            let file = format!("{label}_median.csv");
            write_csv(&dir.join(&file), &rows)?;
            median_files.push(file);
        }
    }

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config.hash(),
        f_star,
        gamma: problem.gamma,
        runs,
        median_files,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(dir.join("manifest.json"), text)
        .map_err(|e| CliError::data(format!("cannot write manifest: {e}")))?;
    Ok(manifest)
}

fn write_csv(path: &Path, rows: &[String]) -> CliResult<()> {
    let mut out = Vec::with_capacity(rows.len() * 48 + CSV_HEADER.len() + 1);
    writeln!(out, "{CSV_HEADER}").expect("in-memory write");
    for row in rows {
        writeln!(out, "{row}").expect("in-memory write");
    }
    fs::write(path, out)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

/// Columnwise medians across runs, row by row (truncated to the shortest
/// run). Cycle and adaptation columns are zeroed: medians only make sense
/// for the numeric curves.
fn median_rows(groups: &[Vec<String>]) -> Vec<String> {
    let len = groups.iter().map(|g| g.len()).min().unwrap_or(0);
    let mut rows = Vec::with_capacity(len);
    for i in 0..len {
        let parsed: Vec<Vec<f64>> = groups
            .iter()
            .map(|g| {
                g[i].split(',')
                    .map(|v| v.parse::<f64>().unwrap_or(f64::NAN))
                    .collect()
            })
            .collect();
        let median_of = |col: usize| -> f64 {
            let mut vals: Vec<f64> = parsed.iter().map(|r| r[col]).collect();
            vals.sort_by(f64::total_cmp);
            let mid = vals.len() / 2;
            if vals.len() % 2 == 1 {
                vals[mid]
            } else {
                0.5 * (vals[mid - 1] + vals[mid])
            }
        };
        rows.push(format!(
            "{},{},{},{},{},0,0",
            parsed[0][0],
            median_of(1),
            median_of(2),
            median_of(3),
            median_of(4),
        ));
    }
    rows
}
