//! Deterministic batch augmentation over a dataset tree.
//!
//! A run expands into one task per `(base scan, multiplier slot)`. Each task
//! seeds its own rng from `(global seed, base index, slot)`, reads its inputs,
//! applies the operator and writes to a path nobody else writes to, so the
//! output tree depends only on the dataset and the config, never on the
//! worker count or scheduling order.

mod config;
mod dataset;
mod pairing;

pub use config::{Operator, Pairing, RecipeConfig, RecipeFile};
pub use dataset::{default_label_path, enumerate_dataset, output_paths, Dataset, DatasetEntry};
pub use pairing::{pair_cross, pair_scans, task_seed};

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::augment::{
    filter_by_confidence, polarmix_traced, rotate_paste, sample_angles, sample_sector, scene_swap,
    simple_paste, MixTrace,
};
use crate::baseline::{global_aug, mix3d_concat};
use crate::error::{Error, Result};
use crate::io::{read_confidences, read_scan, write_scan};
use crate::scan::Scan;
use crate::stats::ClassHistogram;

/// One unit of work: base scan, optional donor, multiplier slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskSpec {
    pub a_index: usize,
    pub b_index: Option<usize>,
    pub k: u32,
}

/// Resolved inputs of a run, before anything is executed.
#[derive(Clone, Debug)]
pub struct RunPlan {
    pub dataset: Dataset,
    /// Donor dataset for `uda_mix`; otherwise donors come from `dataset`.
    pub target: Option<Dataset>,
    pub pairs: Vec<(usize, Option<usize>)>,
}

impl RunPlan {
    pub fn donor(&self, b_index: usize) -> &DatasetEntry {
        match &self.target {
            Some(t) => &t.entries[b_index],
            None => &self.dataset.entries[b_index],
        }
    }

    pub fn tasks(&self, multiplier: u32) -> Vec<TaskSpec> {
        self.pairs
            .iter()
            .flat_map(|&(a_index, b_index)| {
                (0..multiplier).map(move |k| TaskSpec { a_index, b_index, k })
            })
            .collect()
    }
}

/// Enumerates the inputs and pairs them, without reading any scan.
pub fn plan(config: &RecipeConfig) -> Result<RunPlan> {
    config.validate()?;
    let dataset = enumerate_dataset(&config.input_root)?;
    let seed = config.augment.seed;
    let (target, pairs) = match config.operator {
        Operator::Cga => (None, (0..dataset.len()).map(|a| (a, None)).collect()),
        Operator::UdaMix => {
            let root = config.target_root.as_ref().expect("validated");
            let target = enumerate_dataset(root)?;
            let pairs = pair_cross(dataset.len(), target.len(), config.pairing, seed)?
                .into_iter()
                .map(|(a, b)| (a, Some(b)))
                .collect();
            (Some(target), pairs)
        }
        _ => {
            let pairs = pair_scans(dataset.len(), config.pairing, seed)?
                .into_iter()
                .map(|(a, b)| (a, Some(b)))
                .collect();
            (None, pairs)
        }
    };
    Ok(RunPlan {
        dataset,
        target,
        pairs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Ok,
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct TaskRecord {
    pub a_index: usize,
    pub b_index: Option<usize>,
    pub k: u32,
    pub seed: u64,
    pub base: PathBuf,
    pub donor: Option<PathBuf>,
    pub output_scan: PathBuf,
    pub output_label: PathBuf,
    pub status: TaskStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub base_points: Option<usize>,
    pub donor_points: Option<usize>,
    pub output_points: Option<usize>,
    /// `[alpha, beta]` in radians when a sector swap was applied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sector: Option<[f64; 2]>,
    /// Rotation angles in radians when a rotate-paste was applied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angles: Option<Vec<f64>>,
    #[serde(skip)]
    output_histogram: ClassHistogram,
}

/// Summary of a run, written as JSON beside the output tree.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub version: &'static str,
    pub operator: Operator,
    pub global_seed: u64,
    pub workers: usize,
    pub multiplier: u32,
    pub pairing: Pairing,
    pub input_root: PathBuf,
    pub output_root: PathBuf,
    pub input_scans: usize,
    pub outputs_written: usize,
    pub failures: usize,
    pub warnings: Vec<String>,
    /// Class counts over the base scans, each counted once.
    pub histogram_before: ClassHistogram,
    /// Class counts over every output written.
    pub histogram_after: ClassHistogram,
    pub wall_time_secs: f64,
    pub tasks: Vec<TaskRecord>,
}

impl RunReport {
    pub fn succeeded(&self) -> bool {
        self.failures == 0
    }
}

struct TaskOutput {
    base: usize,
    donor: Option<usize>,
    scan: Scan,
    trace: MixTrace,
}

fn read_entry(entry: &DatasetEntry) -> Result<Scan> {
    read_scan(&entry.scan_path, entry.label_path.as_deref())
}

fn read_target_confidences(entry: &DatasetEntry, n: usize) -> Result<Vec<f32>> {
    let conf_path = entry.scan_path.with_extension("conf");
    let conf_path = match &entry.label_path {
        Some(label) if label.with_extension("conf").is_file() => label.with_extension("conf"),
        _ => conf_path,
    };
    if !conf_path.is_file() {
        return Ok(vec![1.0; n]);
    }
    let conf = read_confidences(&conf_path)?;
    if conf.len() != n {
        return Err(Error::CountMismatch {
            scan: entry.scan_path.clone(),
            label: conf_path,
            points: n,
            labels: conf.len(),
        });
    }
    Ok(conf)
}

fn apply(config: &RecipeConfig, plan: &RunPlan, task: &TaskSpec, seed: u64) -> Result<TaskOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = read_entry(&plan.dataset.entries[task.a_index])?;
    let b = match task.b_index {
        Some(b) => Some(read_entry(plan.donor(b))?),
        None => None,
    };
    let aug = &config.augment;
    let mut trace = MixTrace::default();
    let donor_len = b.as_ref().map(Scan::len);
    let scan = match (config.operator, b) {
        (Operator::Cga, _) => global_aug(&a, aug.scale_range, &mut rng)?,
        (Operator::Polarmix, Some(b)) => {
            let (scan, t) = polarmix_traced(&a, &b, aug, &mut rng)?;
            trace = t;
            scan
        }
        (Operator::SceneSwap, Some(b)) => {
            let sector = sample_sector(aug.sector_width, &mut rng)?;
            trace.sector = Some(sector);
            scene_swap(&a, &b, &sector)
        }
        (Operator::RotatePaste, Some(b)) => {
            let angles = sample_angles(&aug.angle_preset, &mut rng);
            let out = rotate_paste(&a, &b, &aug.classes, &angles);
            trace.angles = Some(angles);
            out
        }
        (Operator::SimplePaste, Some(b)) => simple_paste(&a, &b, &aug.classes),
        (Operator::Mix3d, Some(b)) => mix3d_concat(&a, &b),
        (Operator::UdaMix, Some(b)) => {
            let entry = plan.donor(task.b_index.expect("uda task has a donor"));
            let conf = read_target_confidences(entry, b.len())?;
            let donor = filter_by_confidence(&b, &conf, config.conf_threshold)?;
            let (scan, t) = polarmix_traced(&a, &donor, aug, &mut rng)?;
            trace = t;
            scan
        }
        (op, None) => unreachable!("operator {op} planned without a donor"),
    };
    Ok(TaskOutput {
        base: a.len(),
        donor: donor_len,
        scan,
        trace,
    })
}

fn run_task(config: &RecipeConfig, plan: &RunPlan, task: &TaskSpec) -> TaskRecord {
    let seed = task_seed(config.augment.seed, task.a_index, task.k);
    let entry = &plan.dataset.entries[task.a_index];
    let (output_scan, output_label) =
        output_paths(entry, &plan.dataset.root, &config.output_root, task.k);
    let mut record = TaskRecord {
        a_index: task.a_index,
        b_index: task.b_index,
        k: task.k,
        seed,
        base: entry.scan_path.clone(),
        donor: task.b_index.map(|b| plan.donor(b).scan_path.clone()),
        output_scan,
        output_label,
        status: TaskStatus::Failed,
        error: None,
        base_points: None,
        donor_points: None,
        output_points: None,
        sector: None,
        angles: None,
        output_histogram: ClassHistogram::new(),
    };
    let result = apply(config, plan, task, seed).and_then(|out| {
        write_scan(&out.scan, &record.output_scan, &record.output_label)?;
        Ok(out)
    });
    match result {
        Ok(out) => {
            record.status = TaskStatus::Ok;
            record.base_points = Some(out.base);
            record.donor_points = out.donor;
            record.output_points = Some(out.scan.len());
            record.sector = out.trace.sector.map(|s| [s.alpha(), s.beta()]);
            record.angles = out.trace.angles;
            record.output_histogram = ClassHistogram::from_scan(&out.scan);
            record
        }
        Err(e) => {
            warn!("task {}:{} failed: {e}", task.a_index, task.k);
            record.error = Some(e.to_string());
            record
        }
    }
}

/// Executes every task of the plan and aggregates the report. Does not write
/// the report file; see [`run_recipe`].
pub fn execute(config: &RecipeConfig, plan: &RunPlan) -> Result<RunReport> {
    let started = Instant::now();
    let tasks = plan.tasks(config.multiplier);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", config.workers)))?;
    info!(
        "{} tasks over {} scans with {} workers",
        tasks.len(),
        plan.dataset.len(),
        config.workers
    );

    let records: Vec<TaskRecord> =
        pool.install(|| tasks.par_iter().map(|t| run_task(config, plan, t)).collect());

    // Base histograms: each base scan once, re-read so a failed task does not
    // hide its input from the "before" counts.
    let mut histogram_before = ClassHistogram::new();
    let base_hists: Vec<Option<ClassHistogram>> = pool.install(|| {
        plan.pairs
            .par_iter()
            .map(|&(a, _)| read_entry(&plan.dataset.entries[a]).ok().map(|s| ClassHistogram::from_scan(&s)))
            .collect()
    });
    for h in base_hists.iter().flatten() {
        histogram_before.merge(h);
    }

    let mut histogram_after = ClassHistogram::new();
    for r in &records {
        histogram_after.merge(&r.output_histogram);
    }
    let failures = records.iter().filter(|r| r.status == TaskStatus::Failed).count();
    let mut warnings = plan.dataset.warnings.clone();
    if let Some(t) = &plan.target {
        warnings.extend(t.warnings.iter().cloned());
    }

    Ok(RunReport {
        version: env!("CARGO_PKG_VERSION"),
        operator: config.operator,
        global_seed: config.augment.seed,
        workers: config.workers,
        multiplier: config.multiplier,
        pairing: config.pairing,
        input_root: config.input_root.clone(),
        output_root: config.output_root.clone(),
        input_scans: plan.dataset.len(),
        outputs_written: records.len() - failures,
        failures,
        warnings,
        histogram_before,
        histogram_after,
        wall_time_secs: started.elapsed().as_secs_f64(),
        tasks: records,
    })
}

/// Plans, executes and writes the JSON report to `config.report_path()`.
///
/// Task failures do not abort the run; they are listed in the report and
/// reflected by [`RunReport::succeeded`]. Errors returned here are problems
/// with the configuration or the input roots.
pub fn run_recipe(config: &RecipeConfig) -> Result<RunReport> {
    let plan = plan(config)?;
    let report = execute(config, &plan)?;
    write_report(&report, &config.report_path())?;
    Ok(report)
}

pub fn write_report(report: &RunReport, path: &Path) -> Result<()> {
    let json = serde_json::to_vec_pretty(report).expect("report serializes");
    crate::io::write_atomic(path, &json)
}
