use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::manifest::{Cell, SCHEMA_VERSION};
use super::run::{TrialFailure, TrialRow, TrialTiming, Variant};
use super::wilcoxon::{wilcoxon_signed_rank, WilcoxonResult};
use crate::datagen::ComponentSide;
use crate::error::{MpeError, Result};
use crate::estimators::EstimatorKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantStats {
    pub n: usize,
    pub mean_abs_error: f64,
    /// Unbiased (`n - 1`) variance; absent for a single trial.
    pub var_abs_error: Option<f64>,
    pub mean_kappa_hat: f64,
}

impl VariantStats {
    fn from_pairs(errors: &[f64], estimates: &[f64]) -> Self {
        let n = errors.len();
        let mean = errors.iter().sum::<f64>() / n as f64;
        let var_abs_error =
            (n > 1).then(|| errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1) as f64);
        Self {
            n,
            mean_abs_error: mean,
            var_abs_error,
            mean_kappa_hat: estimates.iter().sum::<f64>() / n as f64,
        }
    }
}

/// Plain-versus-regrouped comparison for one estimator, over one cell or
/// pooled over all cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub estimator: EstimatorKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell: Option<Cell>,
    pub pairs: usize,
    pub mean_kappa_star: f64,
    pub plain: VariantStats,
    pub regrouped: VariantStats,
    /// One-sided test that plain errors exceed regrouped errors; absent below five pairs.
    pub wilcoxon: Option<WilcoxonResult>,
}

#[derive(Debug, Default)]
struct PairAccumulator {
    kappa_star: Vec<f64>,
    plain_err: Vec<f64>,
    plain_hat: Vec<f64>,
    regrouped_err: Vec<f64>,
    regrouped_hat: Vec<f64>,
}

impl PairAccumulator {
    fn comparison(&self, estimator: EstimatorKind, cell: Option<Cell>) -> Comparison {
        let pairs = self.kappa_star.len();
        Comparison {
            estimator,
            cell,
            pairs,
            mean_kappa_star: self.kappa_star.iter().sum::<f64>() / pairs as f64,
            plain: VariantStats::from_pairs(&self.plain_err, &self.plain_hat),
            regrouped: VariantStats::from_pairs(&self.regrouped_err, &self.regrouped_hat),
            wilcoxon: wilcoxon_signed_rank(&self.plain_err, &self.regrouped_err).ok(),
        }
    }
}

type CellKey = (EstimatorKind, ComponentSide, u64, usize);

fn cell_key(row: &TrialRow) -> CellKey {
    (
        row.estimator,
        row.side,
        row.component_fraction.to_bits(),
        row.sample_size,
    )
}

/// Per-cell and per-estimator comparisons built from paired rows. A row
/// without its partner (same estimator, cell and repeat) is ignored.
pub fn aggregate(rows: &[TrialRow]) -> (Vec<Comparison>, Vec<Comparison>) {
    let mut paired: BTreeMap<(CellKey, usize), [Option<&TrialRow>; 2]> = BTreeMap::new();
    for row in rows {
        let slot = match row.variant {
            Variant::Plain => 0,
            Variant::Regrouped => 1,
        };
        paired.entry((cell_key(row), row.repeat)).or_default()[slot] = Some(row);
    }
    let mut by_cell: BTreeMap<CellKey, (Cell, PairAccumulator)> = BTreeMap::new();
    let mut by_estimator: BTreeMap<EstimatorKind, PairAccumulator> = BTreeMap::new();
    for ((key, _), pair) in &paired {
        let [Some(plain), Some(regrouped)] = pair else { continue };
        let cell_acc = &mut by_cell
            .entry(*key)
            .or_insert_with(|| (plain.cell(), PairAccumulator::default()))
            .1;
        for acc in [cell_acc, by_estimator.entry(key.0).or_default()] {
            acc.kappa_star.push(plain.kappa_star);
            acc.plain_err.push(plain.abs_error);
            acc.plain_hat.push(plain.kappa_hat);
            acc.regrouped_err.push(regrouped.abs_error);
            acc.regrouped_hat.push(regrouped.kappa_hat);
        }
    }
    let cells = by_cell
        .iter()
        .map(|(key, (cell, acc))| acc.comparison(key.0, Some(*cell)))
        .collect();
    let estimators = by_estimator
        .iter()
        .map(|(kind, acc)| acc.comparison(*kind, None))
        .collect();
    (cells, estimators)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub dataset: String,
    pub seed: u64,
    pub rows: Vec<TrialRow>,
    pub failures: Vec<TrialFailure>,
    pub cells: Vec<Comparison>,
    pub estimators: Vec<Comparison>,
    /// Wallclock per trial; written separately so the other files stay reproducible.
    pub timings: Vec<TrialTiming>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateFile {
    pub schema: u32,
    pub dataset: String,
    pub seed: u64,
    pub trial_rows: usize,
    pub failure_count: usize,
    pub failures: Vec<TrialFailure>,
    pub cells: Vec<Comparison>,
    pub estimators: Vec<Comparison>,
}

impl ExperimentReport {
    pub fn failure_count(&self) -> usize {
        self.failures.len()
    }

    pub fn aggregate_file(&self) -> AggregateFile {
        AggregateFile {
            schema: SCHEMA_VERSION,
            dataset: self.dataset.clone(),
            seed: self.seed,
            trial_rows: self.rows.len(),
            failure_count: self.failures.len(),
            failures: self.failures.clone(),
            cells: self.cells.clone(),
            estimators: self.estimators.clone(),
        }
    }

    pub fn comparison(&self, estimator: EstimatorKind) -> Option<&Comparison> {
        self.estimators.iter().find(|c| c.estimator == estimator)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// `trials.csv`, one row per estimate.
    TrialsCsv,
    /// `aggregate.json`.
    AggregateJson,
    /// `timings.csv`.
    Timings,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [
        ReportFormat::TrialsCsv,
        ReportFormat::AggregateJson,
        ReportFormat::Timings,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            ReportFormat::TrialsCsv => "trials.csv",
            ReportFormat::AggregateJson => "aggregate.json",
            ReportFormat::Timings => "timings.csv",
        }
    }
}

fn output_error(path: &Path) -> impl FnOnce(std::io::Error) -> MpeError + '_ {
    move |source| MpeError::Output {
        path: path.to_path_buf(),
        source,
    }
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(output_error(dir))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(output_error(path))
}

fn csv_bytes<T: Serialize>(records: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| MpeError::Io(e.into_error()))
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn trials_csv(rows: &[TrialRow]) -> Result<Vec<u8>> {
    csv_bytes(rows)
}

pub fn read_trials_csv(path: &Path) -> Result<Vec<TrialRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    Ok(reader.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Writes the requested files into `dir` and returns their paths.
pub fn emit_report(report: &ExperimentReport, dir: &Path, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    prepare_dir(dir)?;
    let mut written = Vec::new();
    for &format in formats {
        let path = dir.join(format.file_name());
        let bytes = match format {
            ReportFormat::TrialsCsv => trials_csv(&report.rows)?,
            ReportFormat::AggregateJson => json_bytes(&report.aggregate_file())?,
            ReportFormat::Timings => csv_bytes(&report.timings)?,
        };
        write_file(&path, &bytes)?;
        written.push(path);
    }
    Ok(written)
}

/// One trial of a copy-fraction sweep at one `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTrialRow {
    pub side: ComponentSide,
    pub component_fraction: f64,
    pub sample_size: usize,
    pub repeat: usize,
    pub estimator: EstimatorKind,
    pub p: f64,
    pub copied: usize,
    pub kappa_star: f64,
    pub kappa_plain: f64,
    pub kappa_regrouped: f64,
    pub seed: u64,
}

/// Mean differences at one `p` for one estimator and cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub estimator: EstimatorKind,
    pub side: ComponentSide,
    pub component_fraction: f64,
    pub sample_size: usize,
    pub p: f64,
    pub trials: usize,
    /// Mean of `kappa_hat - kappa_hat'`.
    pub mean_kappa_diff: f64,
    /// Mean of `|err| - |err'|`.
    pub mean_abs_error_diff: f64,
    pub mean_kappa_plain: f64,
    pub mean_kappa_regrouped: f64,
}

impl SweepPoint {
    pub fn aggregate(rows: &[SweepTrialRow]) -> Vec<SweepPoint> {
        let mut groups: BTreeMap<(EstimatorKind, ComponentSide, u64, usize, u64), Vec<&SweepTrialRow>> =
            BTreeMap::new();
        for r in rows {
            groups
                .entry((
                    r.estimator,
                    r.side,
                    r.component_fraction.to_bits(),
                    r.sample_size,
                    r.p.to_bits(),
                ))
                .or_default()
                .push(r);
        }
        groups
            .values()
            .map(|g| {
                let n = g.len() as f64;
                let mean = |f: &dyn Fn(&SweepTrialRow) -> f64| g.iter().map(|r| f(r)).sum::<f64>() / n;
                let first = g[0];
                SweepPoint {
                    estimator: first.estimator,
                    side: first.side,
                    component_fraction: first.component_fraction,
                    sample_size: first.sample_size,
                    p: first.p,
                    trials: g.len(),
                    mean_kappa_diff: mean(&|r| r.kappa_plain - r.kappa_regrouped),
                    mean_abs_error_diff: mean(&|r| {
                        (r.kappa_plain - r.kappa_star).abs() - (r.kappa_regrouped - r.kappa_star).abs()
                    }),
                    mean_kappa_plain: mean(&|r| r.kappa_plain),
                    mean_kappa_regrouped: mean(&|r| r.kappa_regrouped),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub dataset: String,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
    pub rows: Vec<SweepTrialRow>,
    pub failures: Vec<TrialFailure>,
}

impl SweepReport {
    pub fn point(&self, estimator: EstimatorKind, p: f64) -> Option<&SweepPoint> {
        self.points
            .iter()
            .find(|pt| pt.estimator == estimator && (pt.p - p).abs() < 1e-12)
    }
}

/// Writes `sweep.csv` (curve data), `sweep_trials.csv` and `sweep_failures.json`.
pub fn emit_sweep(report: &SweepReport, dir: &Path) -> Result<Vec<PathBuf>> {
    prepare_dir(dir)?;
    let files = [
        ("sweep.csv", csv_bytes(&report.points)?),
        ("sweep_trials.csv", csv_bytes(&report.rows)?),
        ("sweep_failures.json", json_bytes(&report.failures)?),
    ];
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        write_file(&path, &bytes)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(repeat: usize, variant: Variant, err: f64) -> TrialRow {
        TrialRow {
            dataset: "d".into(),
            side: ComponentSide::Positive,
            component_fraction: 0.5,
            sample_size: 100,
            repeat,
            estimator: EstimatorKind::Roc,
            variant,
            copy_fraction: if variant == Variant::Plain { 0.0 } else { 0.1 },
            kappa_star: 0.3,
            kappa_hat: 0.3 + err,
            abs_error: err,
            qp_unconverged: 0,
            seed: repeat as u64,
        }
    }

    #[test]
    fn aggregates_paired_rows() {
        let mut rows = Vec::new();
        for r in 0..6 {
            rows.push(row(r, Variant::Plain, 0.2 + r as f64 * 0.01));
            rows.push(row(r, Variant::Regrouped, 0.1));
        }
        rows.push(row(9, Variant::Plain, 0.5));
        let (cells, est) = aggregate(&rows);
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].pairs, 6);
        assert!((cells[0].plain.mean_abs_error - 0.225).abs() < 1e-12);
        assert!(cells[0].regrouped.var_abs_error.unwrap() < 1e-30);
        assert_eq!(cells[0].wilcoxon.as_ref().unwrap().p_value, 1.0 / 64.0);
        assert_eq!(est[0].pairs, 6);
    }

    #[test]
    fn unwritable_directory() {
        let file = tempfile::NamedTempFile::new().unwrap();
        let report = ExperimentReport {
            dataset: "d".into(),
            seed: 0,
            rows: vec![],
            failures: vec![],
            cells: vec![],
            estimators: vec![],
            timings: vec![],
        };
        let dir = file.path().join("sub");
        assert!(matches!(
            emit_report(&report, &dir, &ReportFormat::ALL),
            Err(MpeError::Output { .. })
        ));
    }
}
