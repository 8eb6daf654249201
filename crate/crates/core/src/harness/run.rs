use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::{Cell, RunManifest};
use super::report::{aggregate, ExperimentReport, SweepPoint, SweepReport, SweepTrialRow};
use crate::classifier::PosteriorModel;
use crate::datagen::{make_mpe_pair, LabeledDataset, MpePair, SplitSpec};
use crate::error::{MpeError, Result};
use crate::estimators::{Estimate, EstimatorKind};
use crate::regrouping::{
    estimate_regrouped, estimate_with_scorer, fit_scorer, h_tilde_from_posteriors, EstimatorSpec, RegroupConfig,
};
use crate::seed::derive_seed;

pub const WORKERS_ENV: &str = "MPE_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Plain,
    Regrouped,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::Regrouped => "regrouped",
        }
    }
}

/// One estimate in one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub dataset: String,
    pub side: crate::datagen::ComponentSide,
    pub component_fraction: f64,
    pub sample_size: usize,
    pub repeat: usize,
    pub estimator: EstimatorKind,
    pub variant: Variant,
    pub copy_fraction: f64,
    pub kappa_star: f64,
    pub kappa_hat: f64,
    pub abs_error: f64,
    /// Grid points where the kernel QP hit its iteration cap.
    pub qp_unconverged: usize,
    pub seed: u64,
}

impl TrialRow {
    pub fn cell(&self) -> Cell {
        Cell {
            side: self.side,
            component_fraction: self.component_fraction,
            sample_size: self.sample_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub cell: Cell,
    pub repeat: usize,
    /// `None` when the whole trial failed before any estimator ran.
    pub estimator: Option<EstimatorKind>,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialTiming {
    pub trial: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl RunOptions {
    /// Reads the worker count from the environment.
    pub fn from_env() -> Result<Self> {
        match std::env::var(WORKERS_ENV) {
            Ok(v) => {
                let n: usize = v.trim().parse().map_err(|_| {
                    MpeError::InvalidArgument(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))
                })?;
                if n == 0 {
                    return Err(MpeError::InvalidArgument(format!("{WORKERS_ENV} must be >= 1")));
                }
                Ok(Self { workers: Some(n) })
            }
            Err(_) => Ok(Self::default()),
        }
    }

    fn install<T: Send>(&self, job: impl FnOnce() -> T + Send) -> Result<T> {
        match self.workers {
            None => Ok(job()),
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| MpeError::InvalidArgument(format!("cannot build worker pool: {e}")))?;
                Ok(pool.install(job))
            }
        }
    }
}

/// Per-trial seeds: split, classifier and kernel subsampling streams.
#[derive(Debug, Clone, Copy)]
struct TrialSeeds {
    trial: u64,
    split: u64,
    classifier: u64,
    kernel: u64,
}

impl TrialSeeds {
    fn new(master: u64, trial_index: usize) -> Self {
        let trial = derive_seed(master, trial_index as u64);
        Self {
            trial,
            split: derive_seed(trial, 0),
            classifier: derive_seed(trial, 1),
            kernel: derive_seed(trial, 2),
        }
    }
}

struct Trial {
    index: usize,
    cell: Cell,
    repeat: usize,
    seeds: TrialSeeds,
}

fn trials(manifest: &RunManifest) -> Vec<Trial> {
    let mut out = Vec::new();
    for cell in manifest.splits.cells() {
        for repeat in 0..manifest.repeats {
            let index = out.len();
            out.push(Trial {
                index,
                cell,
                repeat,
                seeds: TrialSeeds::new(manifest.seed, index),
            });
        }
    }
    out
}

/// Shared per-trial state: the sampled pair and the single ranking model.
struct Prepared {
    pair: MpePair,
    model: PosteriorModel,
    posteriors: Vec<f64>,
    regroup: RegroupConfig,
}

fn prepare(ds: &LabeledDataset, manifest: &RunManifest, trial: &Trial) -> Result<Prepared> {
    let split = SplitSpec {
        component_side: trial.cell.side,
        component_fraction: trial.cell.component_fraction,
        sample_size: trial.cell.sample_size,
        repeat: trial.repeat,
        seed: trial.seeds.split,
    };
    let pair = make_mpe_pair(ds, &split)?;
    let mut regroup = manifest.regroup.clone();
    regroup.classifier = regroup.classifier.with_seed(trial.seeds.classifier);
    let model = fit_scorer(&pair.x_f, &pair.x_h, &regroup.classifier)?;
    let posteriors = model.predict_posterior(pair.x_f.points())?;
    Ok(Prepared {
        pair,
        model,
        posteriors,
        regroup,
    })
}

fn seeded_spec(spec: &EstimatorSpec, seeds: &TrialSeeds) -> EstimatorSpec {
    match spec {
        EstimatorSpec::Km(cfg) => {
            let mut cfg = cfg.clone();
            cfg.seed = seeds.kernel;
            EstimatorSpec::Km(cfg)
        }
        other => other.clone(),
    }
}

fn usable(estimate: Result<Estimate>, manifest: &RunManifest) -> Result<Estimate> {
    let estimate = estimate?;
    if manifest.exclude_unconverged && estimate.has_unconverged_qp() {
        return Err(MpeError::InvalidArgument(
            "kernel QP did not converge at some lambda".into(),
        ));
    }
    Ok(estimate)
}

struct TrialOutcome {
    rows: Vec<TrialRow>,
    failures: Vec<TrialFailure>,
    seconds: f64,
}

impl TrialOutcome {
    fn failed(trial: &Trial, estimator: Option<EstimatorKind>, err: &MpeError) -> TrialFailure {
        TrialFailure {
            cell: trial.cell,
            repeat: trial.repeat,
            estimator,
            seed: trial.seeds.trial,
            message: err.to_string(),
        }
    }
}

fn run_trial(ds: &LabeledDataset, manifest: &RunManifest, trial: &Trial) -> TrialOutcome {
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let prepared = prepare(ds, manifest, trial).and_then(|prep| {
        let regrouped = h_tilde_from_posteriors(
            &prep.pair.x_f,
            &prep.pair.x_h,
            prep.posteriors.clone(),
            prep.regroup.copy_fraction,
        )?;
        Ok((prep, regrouped))
    });
    match prepared {
        Err(e) => failures.push(TrialOutcome::failed(trial, None, &e)),
        Ok((prep, rg)) => {
            let pair = &prep.pair;
            for spec in &manifest.estimators {
                let spec = seeded_spec(spec, &trial.seeds);
                let result = usable(
                    estimate_with_scorer(&pair.x_f, &pair.x_h, &spec, Some(&prep.model)),
                    manifest,
                )
                .and_then(|plain| {
                    let regrouped = usable(
                        estimate_regrouped(&pair.x_f, &rg, &spec, &prep.model, &prep.regroup),
                        manifest,
                    )?;
                    Ok((plain, regrouped))
                });
                match result {
                    Err(e) => failures.push(TrialOutcome::failed(trial, Some(spec.kind()), &e)),
                    Ok((plain, regrouped)) => {
                        for (variant, est, p) in [
                            (Variant::Plain, plain, 0.0),
                            (Variant::Regrouped, regrouped, prep.regroup.copy_fraction),
                        ] {
                            rows.push(TrialRow {
                                dataset: ds.name.clone(),
                                side: trial.cell.side,
                                component_fraction: trial.cell.component_fraction,
                                sample_size: trial.cell.sample_size,
                                repeat: trial.repeat,
                                estimator: spec.kind(),
                                variant,
                                copy_fraction: p,
                                kappa_star: pair.kappa_star,
                                kappa_hat: est.kappa_hat,
                                abs_error: (est.kappa_hat - pair.kappa_star).abs(),
                                qp_unconverged: est.unconverged_points(),
                                seed: trial.seeds.trial,
                            });
                        }
                    }
                }
            }
        }
    }
    TrialOutcome {
        rows,
        failures,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_grid(manifest: &RunManifest) -> Result<ExperimentReport> {
    run_grid_with(manifest, &RunOptions::default())
}

/// Runs every (cell, repeat) trial, each estimator plain and regrouped on the
/// same pair and the same ranking model.
pub fn run_grid_with(manifest: &RunManifest, options: &RunOptions) -> Result<ExperimentReport> {
    manifest.validate()?;
    let ds = manifest.dataset.load()?;
    let trials = trials(manifest);
    let outcomes: Vec<TrialOutcome> =
        options.install(|| trials.par_iter().map(|t| run_trial(&ds, manifest, t)).collect())?;

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut timings = Vec::new();
    for (trial, outcome) in trials.iter().zip(outcomes) {
        rows.extend(outcome.rows);
        failures.extend(outcome.failures);
        timings.push(TrialTiming {
            trial: trial.index,
            seconds: outcome.seconds,
        });
    }
    let (cells, estimators) = aggregate(&rows);
    Ok(ExperimentReport {
        dataset: ds.name.clone(),
        seed: manifest.seed,
        rows,
        failures,
        cells,
        estimators,
        timings,
    })
}

/// Parses `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_p_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || MpeError::InvalidArgument(format!("cannot parse p grid {text:?}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let grid: Vec<f64> = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=count).map(|k| start + k as f64 * step).collect()
    } else {
        text.split(',').map(num).collect::<Result<_>>()?
    };
    check_p_grid(&grid)?;
    Ok(grid)
}

fn check_p_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|p| !(0.0..=0.5).contains(p)) {
        return Err(MpeError::InvalidArgument("copy fractions must lie in [0, 0.5]".into()));
    }
    Ok(())
}

struct SweepOutcome {
    rows: Vec<SweepTrialRow>,
    failures: Vec<TrialFailure>,
}

fn sweep_trial(ds: &LabeledDataset, manifest: &RunManifest, trial: &Trial, p_grid: &[f64]) -> SweepOutcome {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let prep = match prepare(ds, manifest, trial) {
        Ok(p) => p,
        Err(e) => {
            failures.push(TrialOutcome::failed(trial, None, &e));
            return SweepOutcome { rows, failures };
        }
    };
    let pair = &prep.pair;
    for spec in &manifest.estimators {
        let spec = seeded_spec(spec, &trial.seeds);
        let result = (|| -> Result<Vec<SweepTrialRow>> {
            let plain = usable(
                estimate_with_scorer(&pair.x_f, &pair.x_h, &spec, Some(&prep.model)),
                manifest,
            )?;
            let mut out = Vec::with_capacity(p_grid.len());
            for &p in p_grid {
                let regrouped = h_tilde_from_posteriors(&pair.x_f, &pair.x_h, prep.posteriors.clone(), p)?;
                let cfg = RegroupConfig {
                    copy_fraction: p,
                    ..prep.regroup.clone()
                };
                let est = usable(
                    estimate_regrouped(&pair.x_f, &regrouped, &spec, &prep.model, &cfg),
                    manifest,
                )?;
                out.push(SweepTrialRow {
                    side: trial.cell.side,
                    component_fraction: trial.cell.component_fraction,
                    sample_size: trial.cell.sample_size,
                    repeat: trial.repeat,
                    estimator: spec.kind(),
                    p,
                    copied: regrouped.copied_ids.len(),
                    kappa_star: pair.kappa_star,
                    kappa_plain: plain.kappa_hat,
                    kappa_regrouped: est.kappa_hat,
                    seed: trial.seeds.trial,
                });
            }
            Ok(out)
        })();
        match result {
            Ok(r) => rows.extend(r),
            Err(e) => failures.push(TrialOutcome::failed(trial, Some(spec.kind()), &e)),
        }
    }
    SweepOutcome { rows, failures }
}

pub fn sweep_copy_fraction(manifest: &RunManifest, p_grid: &[f64]) -> Result<SweepReport> {
    sweep_copy_fraction_with(manifest, p_grid, &RunOptions::default())
}

/// Regrouped-versus-plain differences over a grid of copy fractions. Each
/// trial fits one ranking model and reuses it for every `p`, so the copied
/// sets are nested in `p`.
pub fn sweep_copy_fraction_with(manifest: &RunManifest, p_grid: &[f64], options: &RunOptions) -> Result<SweepReport> {
    manifest.validate()?;
    check_p_grid(p_grid)?;
    let ds = manifest.dataset.load()?;
    let trials = trials(manifest);
    let outcomes: Vec<SweepOutcome> = options.install(|| {
        trials
            .par_iter()
            .map(|t| sweep_trial(&ds, manifest, t, p_grid))
            .collect()
    })?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        rows.extend(o.rows);
        failures.extend(o.failures);
    }
    let points = SweepPoint::aggregate(&rows);
    Ok(SweepReport {
        dataset: ds.name.clone(),
        seed: manifest.seed,
        points,
        rows,
        failures,
    })
}
