//! Replicated runs, baseline comparisons and grid sweeps.

use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use moeliga_core::baselines::{self, generate_synthetic};
use moeliga_core::evolution::run_with;
use moeliga_core::frontier::{representative_r1hat, summarize_runs, RunSummary};
use moeliga_core::seed::derive_seed;
use moeliga_core::{
    load_csv, stratified_split, Chromosome, DataView, Dataset, Evaluator, ObjectiveConfig,
    ParetoFront, ReplicationSummary, RunResult, SplitSpec,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{DatasetSource, ExperimentConfig, ReportFront};
use crate::output::{front_csv, json, table, trace_csv, write_atomic};
use crate::CliError;

/// Seed tag of the held-out test split.
const TEST_SPLIT: u64 = 0x5445_5354;

/// Loads or generates the data; synthetic sources also report the planted
/// feature indices.
pub fn load_dataset(source: &DatasetSource) -> Result<(Dataset, Option<Vec<usize>>), CliError> {
    match source {
        DatasetSource::Csv { path, label } => {
            let d = load_csv(path, label).map_err(|e| CliError::from_core("dataset", e))?;
            if d.dropped_rows() > 0 {
                log::warn!("dropped {} rows with missing values", d.dropped_rows());
            }
            Ok((d, None))
        }
        DatasetSource::Synthetic(spec) => {
            let (d, planted) = generate_synthetic(spec).map_err(|e| CliError::from_core("dataset", e))?;
            Ok((d, Some(planted)))
        }
    }
}

/// `(search, test)`: the stratified held-out split, fixed by the experiment
/// seed alone.
pub fn split_dataset<'a>(
    dataset: &'a Dataset,
    cfg: &ExperimentConfig,
) -> Result<(DataView<'a>, DataView<'a>), CliError> {
    let spec = SplitSpec::new(cfg.test_fraction, derive_seed(cfg.seed, &[TEST_SPLIT]));
    Ok(stratified_split(&dataset.view(), &spec)?)
}

pub fn replication_seed(experiment_seed: u64, index: usize) -> u64 {
    derive_seed(experiment_seed, &[index as u64])
}

pub fn run_id(index: usize) -> String {
    format!("rep_{index:03}")
}

/// Evaluator for one replication, seeded from the experiment seed.
pub fn replication_evaluator<'a>(
    search: &DataView<'a>,
    cfg: &ExperimentConfig,
    index: usize,
    objectives: ObjectiveConfig,
) -> Result<Evaluator<'a>, CliError> {
    let objectives = ObjectiveConfig {
        base_seed: replication_seed(cfg.seed, index),
        ..objectives
    };
    Ok(Evaluator::new(search.clone(), objectives)?)
}

fn annotate(front: &mut ParetoFront, evaluator: &Evaluator<'_>, test: &DataView<'_>, run_id: &str) -> Result<(), CliError> {
    front.run_id = run_id.to_string();
    for m in &mut front.members {
        m.uar_test = Some(evaluator.holdout_uar(&m.chromosome, test)?);
    }
    Ok(())
}

/// Finished replication with test-annotated fronts.
#[derive(Debug, Clone)]
pub struct Replication {
    pub index: usize,
    pub result: RunResult,
    pub summary: RunSummary,
    pub wall_seconds: f64,
}

pub fn run_replication(
    search: &DataView<'_>,
    test: &DataView<'_>,
    cfg: &ExperimentConfig,
    index: usize,
) -> Result<Replication, CliError> {
    let started = Instant::now();
    let seed = replication_seed(cfg.seed, index);
    let evaluator = replication_evaluator(search, cfg, index, cfg.objectives.clone())?;
    let ga = moeliga_core::GaConfig { seed, ..cfg.ga.clone() };
    let mut result = run_with(&evaluator, &ga, &cfg.sharing)?;
    let id = run_id(index);
    annotate(&mut result.front, &evaluator, test, &id)?;
    annotate(&mut result.archive, &evaluator, test, &id)?;
    let front = match cfg.report_front {
        ReportFront::Population => &result.front,
        ReportFront::Archive => &result.archive,
    };
    let (best, r1hat) = representative_r1hat(front)?;
    let m = &front.members[best];
    let summary = RunSummary {
        run_id: id,
        r1hat,
        uar_test: m.uar_test.unwrap_or(f64::NAN),
        uar_validation: m.objectives.uar,
        n_selected: m.objectives.n_selected,
        bitmask: m.chromosome.to_hex(),
    };
    Ok(Replication {
        index,
        result,
        summary,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

fn write_replication(out_dir: &Path, rep: &Replication) -> anyhow::Result<()> {
    let dir = out_dir.join(run_id(rep.index));
    write_atomic(&dir.join("front.csv"), &front_csv(&rep.result.front)?)?;
    write_atomic(&dir.join("front.json"), rep.result.front.to_json()?.as_bytes())?;
    write_atomic(&dir.join("archive.csv"), &front_csv(&rep.result.archive)?)?;
    write_atomic(&dir.join("archive.json"), rep.result.archive.to_json()?.as_bytes())?;
    write_atomic(&dir.join("trace.csv"), &trace_csv(&rep.result.trace)?)?;
    Ok(())
}

/// Runs every replication (in parallel), writing each one's artifacts as it
/// finishes and the summary at the end.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<(ReplicationSummary, Vec<Replication>), CliError> {
    cfg.validate()?;
    let (dataset, _) = load_dataset(&cfg.dataset)?;
    let (search, test) = split_dataset(&dataset, cfg)?;
    log::info!(
        "{} search / {} test rows, {} features",
        search.n_rows(),
        test.n_rows(),
        dataset.n_features()
    );
    let reps = (0..cfg.replications)
        .into_par_iter()
        .map(|i| {
            let rep = run_replication(&search, &test, cfg, i)?;
            log::info!(
                "{}: r1hat {:.4}, test uar {:.4}, {} features",
                rep.summary.run_id,
                rep.summary.r1hat,
                rep.summary.uar_test,
                rep.summary.n_selected
            );
            if let Some(dir) = out_dir {
                write_replication(dir, &rep)?;
            }
            Ok(rep)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let summary = summarize_runs(reps.iter().map(|r| r.summary.clone()).collect());
    if let Some(dir) = out_dir {
        write_atomic(&dir.join("summary.json"), &json(&summary)?)?;
    }
    Ok((summary, reps))
}

pub fn cmd_run(cfg: &ExperimentConfig) -> Result<ReplicationSummary, CliError> {
    Ok(run_experiment(cfg, Some(&cfg.out_dir))?.0)
}

/// One method's outcome on one replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub method: String,
    pub replication: usize,
    pub uar_test: f64,
    pub uar_validation: f64,
    pub n_selected: usize,
    pub wall_seconds: f64,
    pub bitmask: String,
}

/// Per-method medians over replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSummaryRow {
    pub method: String,
    pub median_uar_test: f64,
    pub median_n_selected: f64,
    pub median_wall_seconds: f64,
}

pub const COMPARE_COLUMNS: [&str; 7] = [
    "method",
    "replication",
    "uar_test",
    "uar_validation",
    "n_selected",
    "wall_seconds",
    "bitmask",
];

pub const COMPARE_SUMMARY_COLUMNS: [&str; 4] =
    ["method", "median_uar_test", "median_n_selected", "median_wall_seconds"];

fn size_swept_row(
    method: &str,
    index: usize,
    prefixes: &[Chromosome],
    evaluator: &Evaluator<'_>,
    test: &DataView<'_>,
    started: Instant,
) -> Result<CompareRow, CliError> {
    let scores: Vec<f64> = evaluator.evaluate_batch(prefixes)?.iter().map(|o| o.uar).collect();
    let (k, uar_validation) = baselines::optimal_size_sweep(&scores)?;
    let subset = &prefixes[k - 1];
    Ok(CompareRow {
        method: method.into(),
        replication: index,
        uar_test: evaluator.holdout_uar(subset, test)?,
        uar_validation,
        n_selected: k,
        wall_seconds: started.elapsed().as_secs_f64(),
        bitmask: subset.to_hex(),
    })
}

/// MOELIGA, mutual-information ranking and forward selection on the same
/// data and splits, one row per method and replication.
pub fn compare_rows(cfg: &ExperimentConfig) -> Result<Vec<CompareRow>, CliError> {
    cfg.validate()?;
    let (dataset, _) = load_dataset(&cfg.dataset)?;
    let (search, test) = split_dataset(&dataset, cfg)?;
    let n = dataset.n_features();
    let max_k = cfg.compare.max_k.unwrap_or(20).min(n);
    let per_rep = (0..cfg.replications)
        .into_par_iter()
        .map(|i| -> Result<Vec<CompareRow>, CliError> {
            let rep = run_replication(&search, &test, cfg, i)?;
            let moeliga = CompareRow {
                method: "moeliga".into(),
                replication: i,
                uar_test: rep.summary.uar_test,
                uar_validation: rep.summary.uar_validation,
                n_selected: rep.summary.n_selected,
                wall_seconds: rep.wall_seconds,
                bitmask: rep.summary.bitmask.clone(),
            };
            let accuracy_only = ObjectiveConfig {
                use_objective3: false,
                ..cfg.objectives.clone()
            };
            let evaluator = replication_evaluator(&search, cfg, i, accuracy_only)?;

            let started = Instant::now();
            let order: Vec<usize> = baselines::mi_rank(&search, cfg.compare.bins)
                .map_err(|e| CliError::from_core("compare", e))?
                .into_iter()
                .map(|(j, _)| j)
                .collect();
            let prefixes: Vec<Chromosome> =
                (1..=max_k).map(|k| Chromosome::from_indices(n, &order[..k])).collect();
            let mi = size_swept_row("mi", i, &prefixes, &evaluator, &test, started)?;

            let started = Instant::now();
            let steps = baselines::sfs_with(&evaluator, max_k).map_err(|e| CliError::from_core("compare", e))?;
            let prefixes: Vec<Chromosome> = steps.into_iter().map(|s| s.subset).collect();
            let sfs = size_swept_row("sfs", i, &prefixes, &evaluator, &test, started)?;
            Ok(vec![moeliga, mi, sfs])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(per_rep.into_iter().flatten().collect())
}

pub fn summarize_compare(rows: &[CompareRow]) -> Vec<CompareSummaryRow> {
    ["moeliga", "mi", "sfs"]
        .iter()
        .map(|&method| {
            let pick = |f: fn(&CompareRow) -> f64| -> Vec<f64> {
                rows.iter().filter(|r| r.method == method).map(f).collect()
            };
            CompareSummaryRow {
                method: method.into(),
                median_uar_test: moeliga_core::frontier::median(&pick(|r| r.uar_test)),
                median_n_selected: moeliga_core::frontier::median(&pick(|r| r.n_selected as f64)),
                median_wall_seconds: moeliga_core::frontier::median(&pick(|r| r.wall_seconds)),
            }
        })
        .collect()
}

pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<Vec<CompareSummaryRow>, CliError> {
    let rows = compare_rows(cfg)?;
    let summary = summarize_compare(&rows);
    write_atomic(&cfg.out_dir.join("compare.csv"), &table(&COMPARE_COLUMNS, &rows)?)?;
    write_atomic(
        &cfg.out_dir.join("compare_summary.csv"),
        &table(&COMPARE_SUMMARY_COLUMNS, &summary)?,
    )?;
    Ok(summary)
}

/// One grid cell's summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub cell: usize,
    pub values: Vec<(&'static str, String)>,
    pub summary: ReplicationSummary,
}

pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>, CliError> {
    cfg.validate()?;
    let grid = cfg
        .grid
        .as_ref()
        .ok_or_else(|| CliError::Config("grid: section missing".into()))?;
    let cells = grid.cells(cfg)?;
    for cell in &cells {
        cell.config
            .validate()
            .map_err(|e| CliError::Config(format!("grid cell {:?}: {e}", cell.values)))?;
    }
    let rows = cells
        .into_par_iter()
        .enumerate()
        .map(|(i, cell)| {
            let dir = cfg.out_dir.join(format!("cell_{i:03}"));
            let (summary, _) = run_experiment(&cell.config, Some(&dir))?;
            Ok(SweepRow {
                cell: i,
                values: cell.values,
                summary,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut header: Vec<String> = vec!["cell".into()];
    header.extend(rows[0].values.iter().map(|(k, _)| k.to_string()));
    header.extend(
        ["median_r1hat", "std_r1hat", "median_uar", "median_n_selected"].map(String::from),
    );
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(&header).context("grid header")?;
    for r in &rows {
        let mut rec = vec![r.cell.to_string()];
        rec.extend(r.values.iter().map(|(_, v)| v.clone()));
        rec.extend([
            r.summary.median_r1hat.to_string(),
            r.summary.std_r1hat.to_string(),
            r.summary.median_uar.to_string(),
            r.summary.median_n_selected.to_string(),
        ]);
        w.write_record(&rec).context("grid row")?;
    }
    let bytes = w.into_inner().context("grid table")?;
    write_atomic(&cfg.out_dir.join("grid.csv"), &bytes)?;
    Ok(rows)
}
