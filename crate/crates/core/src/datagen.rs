//! Datasets: synthetic Gaussian generators, the mixture/component split
//! protocol and CSV ingestion.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::classifier::{fit, PosteriorModel, TrainConfig};
use crate::error::{MpeError, Result};
use crate::sample::{Provenance, Sample};
use crate::seed::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyntheticKind {
    /// `N(10 * 1, I)` against `N(0, I)`: every region of one class is nearly
    /// empty under the other.
    Irreducible,
    /// `N(1 * 1, I)` against `N(0, I)` with posterior-extreme points removed,
    /// so both densities stay bounded away from zero relative to each other.
    Reducible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Rows per class.
    pub n: usize,
    pub seed: u64,
    #[serde(default = "default_low")]
    pub filter_low: f64,
    #[serde(default = "default_high")]
    pub filter_high: f64,
    /// Rows per class used to train the reducible filter model.
    #[serde(default = "default_filter_train")]
    pub filter_train_size: usize,
    #[serde(default)]
    pub filter_classifier: TrainConfig,
}

fn default_dim() -> usize {
    10
}
fn default_low() -> f64 {
    0.02
}
fn default_high() -> f64 {
    0.98
}
fn default_filter_train() -> usize {
    1000
}

impl SyntheticSpec {
    pub fn new(kind: SyntheticKind, n: usize, seed: u64) -> Self {
        Self {
            kind,
            dim: default_dim(),
            n,
            seed,
            filter_low: default_low(),
            filter_high: default_high(),
            filter_train_size: default_filter_train(),
            filter_classifier: TrainConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 50 || self.dim == 0 {
            return Err(MpeError::InvalidArgument(
                "synthetic spec needs n >= 50 and dim >= 1".into(),
            ));
        }
        if !(0.0 < self.filter_low && self.filter_low < self.filter_high && self.filter_high < 1.0) {
            return Err(MpeError::InvalidArgument(
                "filter bounds must satisfy 0 < low < high < 1".into(),
            ));
        }
        Ok(())
    }

    /// Mean of the positive class along every coordinate.
    pub fn positive_mean(&self) -> f64 {
        match self.kind {
            SyntheticKind::Irreducible => 10.0,
            SyntheticKind::Reducible => 1.0,
        }
    }
}

/// Recorded per-column standardization `z = (x - mean) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub columns: Vec<String>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardization {
    /// Maps standardized features back to raw units.
    pub fn invert(&self, features: &Array2<f64>) -> Array2<f64> {
        let mut raw = features.clone();
        for (mut col, (m, s)) in raw.axis_iter_mut(Axis(1)).zip(self.mean.iter().zip(&self.scale)) {
            col.mapv_inplace(|z| z * s + m);
        }
        raw
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DatasetProvenance {
    Synthetic {
        spec: SyntheticSpec,
        /// Rows drawn before filtering, per class.
        drawn: usize,
    },
    Csv {
        path: String,
        label_column: String,
        positive_labels: Vec<String>,
        dropped_columns: Vec<String>,
        dropped_rows: usize,
        standardization: Standardization,
    },
}

/// A binary labeled dataset. Row identifiers are row positions.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub features: Array2<f64>,
    pub labels: Vec<bool>,
    pub name: String,
    pub provenance: DatasetProvenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub positive: usize,
    pub negative: usize,
}

/// Summary written next to generated or ingested data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub n: usize,
    pub d: usize,
    pub class_counts: ClassCounts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standardization: Option<Standardization>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub provenance: DatasetProvenance,
}

impl LabeledDataset {
    pub fn new(
        features: Array2<f64>,
        labels: Vec<bool>,
        name: impl Into<String>,
        provenance: DatasetProvenance,
    ) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(MpeError::Dataset(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(MpeError::Dataset("features contain non-finite values".into()));
        }
        let ds = Self {
            features,
            labels,
            name: name.into(),
            provenance,
        };
        let counts = ds.class_counts();
        if counts.positive == 0 || counts.negative == 0 {
            return Err(MpeError::Dataset("both classes must be present".into()));
        }
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn class_counts(&self) -> ClassCounts {
        let positive = self.labels.iter().filter(|l| **l).count();
        ClassCounts {
            positive,
            negative: self.labels.len() - positive,
        }
    }

    /// Rows of one class as a sample, with dataset row positions as ids.
    pub fn class_sample(&self, positive: bool, provenance: Provenance) -> Sample {
        let rows: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == positive).collect();
        self.rows_sample(&rows, provenance)
    }

    fn rows_sample(&self, rows: &[usize], provenance: Provenance) -> Sample {
        Sample::with_ids(
            self.features.select(Axis(0), rows),
            rows.iter().map(|&r| r as u64).collect(),
            provenance,
        )
        .expect("dataset features are finite")
    }

    pub fn manifest(&self) -> DatasetManifest {
        let (standardization, seed) = match &self.provenance {
            DatasetProvenance::Synthetic { spec, .. } => (None, Some(spec.seed)),
            DatasetProvenance::Csv { standardization, .. } => (Some(standardization.clone()), None),
        };
        DatasetManifest {
            name: self.name.clone(),
            n: self.len(),
            d: self.dim(),
            class_counts: self.class_counts(),
            standardization,
            seed,
            provenance: self.provenance.clone(),
        }
    }

    /// Writes `x0..x{d-1},label` rows with labels as 1/0.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.dim()).map(|j| format!("x{j}")).collect();
        header.push("label".into());
        w.write_record(&header)?;
        for (row, label) in self.features.rows().into_iter().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(if *label { "1".into() } else { "0".into() });
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn gaussian_rows(n: usize, dim: usize, mean: f64, rng: &mut impl rand::Rng) -> Array2<f64> {
    Array2::from_shape_fn((n, dim), |_| {
        let z: f64 = StandardNormal.sample(rng);
        mean + z
    })
}

fn stack_classes(pos: &Array2<f64>, neg: &Array2<f64>) -> (Array2<f64>, Vec<bool>) {
    let features = ndarray::concatenate(Axis(0), &[pos.view(), neg.view()]).expect("same dimension");
    let labels = std::iter::repeat_n(true, pos.nrows())
        .chain(std::iter::repeat_n(false, neg.nrows()))
        .collect();
    (features, labels)
}

/// Two well-separated Gaussians, positives first.
pub fn gen_irreducible(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    if spec.kind != SyntheticKind::Irreducible {
        return Err(MpeError::InvalidArgument("spec kind must be irreducible".into()));
    }
    let mut rng = rng_from_seed(derive_seed(spec.seed, 0));
    let pos = gaussian_rows(spec.n, spec.dim, spec.positive_mean(), &mut rng);
    let neg = gaussian_rows(spec.n, spec.dim, 0.0, &mut rng);
    let (features, labels) = stack_classes(&pos, &neg);
    LabeledDataset::new(
        features,
        labels,
        "synthetic-irreducible",
        DatasetProvenance::Synthetic {
            spec: spec.clone(),
            drawn: spec.n,
        },
    )
}

const MAX_FILTER_ROUNDS: usize = 50;

/// Overlapping Gaussians with posterior-extreme points filtered out. Returns
/// the filter model alongside the data.
///
/// The filter model is trained once, on the first draw, and then screens every
/// later draw until each class has `n` survivors.
pub fn gen_reducible_with_model(spec: &SyntheticSpec) -> Result<(LabeledDataset, PosteriorModel)> {
    spec.validate()?;
    if spec.kind != SyntheticKind::Reducible {
        return Err(MpeError::InvalidArgument("spec kind must be reducible".into()));
    }
    let mut rng = rng_from_seed(derive_seed(spec.seed, 0));
    let train_n = spec.filter_train_size.clamp(10, spec.n.max(10));
    let pos = gaussian_rows(train_n, spec.dim, spec.positive_mean(), &mut rng);
    let neg = gaussian_rows(train_n, spec.dim, 0.0, &mut rng);
    let filter_cfg = spec.filter_classifier.with_seed(derive_seed(spec.seed, 1));
    let model = fit(
        &Sample::new(pos, Provenance::Mixture)?,
        &Sample::new(neg, Provenance::Component)?,
        &filter_cfg,
    )?;

    let keep = |rows: &Array2<f64>| -> Result<Vec<usize>> {
        let post = model.predict_posterior(rows.view())?;
        Ok((0..rows.nrows())
            .filter(|&i| post[i] > spec.filter_low && post[i] < spec.filter_high)
            .collect())
    };
    let mut kept_pos: Vec<Array2<f64>> = Vec::new();
    let mut kept_neg: Vec<Array2<f64>> = Vec::new();
    let (mut n_pos, mut n_neg, mut drawn) = (0usize, 0usize, 0usize);
    for _ in 0..MAX_FILTER_ROUNDS {
        let pos = gaussian_rows(spec.n, spec.dim, spec.positive_mean(), &mut rng);
        let neg = gaussian_rows(spec.n, spec.dim, 0.0, &mut rng);
        drawn += spec.n;
        let kp = keep(&pos)?;
        let kn = keep(&neg)?;
        n_pos += kp.len();
        n_neg += kn.len();
        kept_pos.push(pos.select(Axis(0), &kp));
        kept_neg.push(neg.select(Axis(0), &kn));
        if n_pos >= spec.n && n_neg >= spec.n {
            let take = |parts: &[Array2<f64>]| {
                let views: Vec<_> = parts.iter().map(|a| a.view()).collect();
                let all = ndarray::concatenate(Axis(0), &views).expect("same dimension");
                all.slice(ndarray::s![..spec.n, ..]).to_owned()
            };
            let (features, labels) = stack_classes(&take(&kept_pos), &take(&kept_neg));
            let ds = LabeledDataset::new(
                features,
                labels,
                "synthetic-reducible",
                DatasetProvenance::Synthetic {
                    spec: spec.clone(),
                    drawn,
                },
            )?;
            return Ok((ds, model));
        }
    }
    Err(MpeError::FilterTooAggressive {
        yield_fraction: n_pos.min(n_neg) as f64 / drawn as f64,
        rounds: MAX_FILTER_ROUNDS,
    })
}

pub fn gen_reducible(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    gen_reducible_with_model(spec).map(|(ds, _)| ds)
}

pub fn generate(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    match spec.kind {
        SyntheticKind::Irreducible => gen_irreducible(spec),
        SyntheticKind::Reducible => gen_reducible(spec),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentSide {
    Positive,
    Negative,
}

impl ComponentSide {
    fn label(self) -> bool {
        self == ComponentSide::Positive
    }

    pub fn name(self) -> &'static str {
        match self {
            ComponentSide::Positive => "positive",
            ComponentSide::Negative => "negative",
        }
    }
}

/// One mixture/component split of a labeled dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub component_side: ComponentSide,
    pub component_fraction: f64,
    pub sample_size: usize,
    pub repeat: usize,
    pub seed: u64,
}

/// A mixture sample, a component sample and the realized proportion of
/// component-class rows in the mixture sample.
#[derive(Debug, Clone, PartialEq)]
pub struct MpePair {
    pub x_f: Sample,
    pub x_h: Sample,
    pub kappa_star: f64,
}

/// The component pool is a seeded `component_fraction` of the chosen class;
/// everything else (both classes) forms the mixture pool. Each pool is then
/// subsampled without replacement to `sample_size` rows.
pub fn make_mpe_pair(ds: &LabeledDataset, split: &SplitSpec) -> Result<MpePair> {
    if !(split.component_fraction > 0.0 && split.component_fraction < 1.0) || split.sample_size == 0 {
        return Err(MpeError::InvalidArgument(
            "component fraction must lie in (0, 1) and sample size must be positive".into(),
        ));
    }
    let side = split.component_side.label();
    let mut rng = rng_from_seed(split.seed);
    let mut side_rows: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == side).collect();
    side_rows.shuffle(&mut rng);
    let n_component = (side_rows.len() as f64 * split.component_fraction).round() as usize;
    let (component_pool, rest) = side_rows.split_at(n_component);
    let mut mixture_pool: Vec<usize> = rest
        .iter()
        .copied()
        .chain((0..ds.len()).filter(|&i| ds.labels[i] != side))
        .collect();
    mixture_pool.sort_unstable();

    for (what, pool) in [
        ("component pool", component_pool.len()),
        ("mixture pool", mixture_pool.len()),
    ] {
        if pool < split.sample_size {
            return Err(MpeError::InsufficientRows {
                what: what.into(),
                needed: split.sample_size,
                available: pool,
            });
        }
    }
    let mut component: Vec<usize> = component_pool.to_vec();
    component.shuffle(&mut rng);
    component.truncate(split.sample_size);
    mixture_pool.shuffle(&mut rng);
    mixture_pool.truncate(split.sample_size);

    let in_component_class = mixture_pool.iter().filter(|&&i| ds.labels[i] == side).count();
    Ok(MpePair {
        x_f: ds.rows_sample(&mixture_pool, Provenance::Mixture),
        x_h: ds.rows_sample(&component, Provenance::Component),
        kappa_star: in_component_class as f64 / split.sample_size as f64,
    })
}

fn is_missing(value: &str) -> bool {
    matches!(value, "" | "?" | "NA" | "na" | "N/A" | "NaN" | "nan" | "null" | "NULL")
}

enum ColumnKind {
    Numeric,
    Categorical(Vec<String>),
}

/// Reads a headered CSV into a standardized binary dataset.
///
/// Numeric columns are kept as is, other columns are one-hot encoded,
/// columns with no values at all are dropped, rows with any missing value
/// are dropped, and every output column is standardized to mean 0 and
/// variance 1 (constant columns keep scale 1).
pub fn load_csv(path: &Path, label_column: &str, positive_labels: &[String]) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| MpeError::MissingLabelColumn {
            column: label_column.into(),
            available: headers.clone(),
        })?;
    let mut records: Vec<Vec<String>> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { .. } => MpeError::Dataset(format!("non-rectangular file: {e}")),
            _ => MpeError::Csv(e),
        })?;
        records.push(rec.iter().map(str::to_string).collect());
    }
    if records.is_empty() {
        return Err(MpeError::Dataset("file has no data rows".into()));
    }

    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&j| j != label_idx).collect();
    let (kept_cols, dropped_cols): (Vec<usize>, Vec<usize>) = feature_cols
        .into_iter()
        .partition(|&j| records.iter().any(|r| !is_missing(&r[j])));
    let dropped_columns: Vec<String> = dropped_cols.iter().map(|&j| headers[j].clone()).collect();

    let complete: Vec<&Vec<String>> = records
        .iter()
        .filter(|r| !is_missing(&r[label_idx]) && kept_cols.iter().all(|&j| !is_missing(&r[j])))
        .collect();
    let dropped_rows = records.len() - complete.len();

    let seen_labels: BTreeSet<&str> = complete.iter().map(|r| r[label_idx].as_str()).collect();
    if let Some(unknown) = positive_labels.iter().find(|l| !seen_labels.contains(l.as_str())) {
        return Err(MpeError::Dataset(format!(
            "positive label {unknown:?} does not occur; labels present: {seen_labels:?}"
        )));
    }

    let kinds: Vec<ColumnKind> = kept_cols
        .iter()
        .map(|&j| {
            let numeric = complete.iter().all(|r| r[j].parse::<f64>().is_ok_and(f64::is_finite));
            if numeric {
                ColumnKind::Numeric
            } else {
                let cats: BTreeSet<String> = complete.iter().map(|r| r[j].clone()).collect();
                ColumnKind::Categorical(cats.into_iter().collect())
            }
        })
        .collect();
    let mut columns = Vec::new();
    for (&j, kind) in kept_cols.iter().zip(&kinds) {
        match kind {
            ColumnKind::Numeric => columns.push(headers[j].clone()),
            ColumnKind::Categorical(cats) => columns.extend(cats.iter().map(|c| format!("{}={c}", headers[j]))),
        }
    }
    let mut raw = Array2::zeros((complete.len(), columns.len()));
    for (i, r) in complete.iter().enumerate() {
        let mut out = 0;
        for (&j, kind) in kept_cols.iter().zip(&kinds) {
            match kind {
                ColumnKind::Numeric => {
                    raw[[i, out]] = r[j].parse::<f64>().expect("checked numeric");
                    out += 1;
                }
                ColumnKind::Categorical(cats) => {
                    let hit = cats.binary_search(&r[j]).expect("category seen");
                    raw[[i, out + hit]] = 1.0;
                    out += cats.len();
                }
            }
        }
    }
    let (features, standardization) = standardize(raw, columns);
    let positives: BTreeSet<&str> = positive_labels.iter().map(String::as_str).collect();
    let labels: Vec<bool> = complete
        .iter()
        .map(|r| positives.contains(r[label_idx].as_str()))
        .collect();
    if labels.iter().all(|l| *l) || labels.iter().all(|l| !*l) {
        return Err(MpeError::Dataset("a class is empty after binarization".into()));
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    LabeledDataset::new(
        features,
        labels,
        name,
        DatasetProvenance::Csv {
            path: path.display().to_string(),
            label_column: label_column.into(),
            positive_labels: positive_labels.to_vec(),
            dropped_columns,
            dropped_rows,
            standardization,
        },
    )
}

fn standardize(mut raw: Array2<f64>, columns: Vec<String>) -> (Array2<f64>, Standardization) {
    let n = raw.nrows() as f64;
    let mut mean = Vec::with_capacity(raw.ncols());
    let mut scale = Vec::with_capacity(raw.ncols());
    for mut col in raw.axis_iter_mut(Axis(1)) {
        let m = col.sum() / n;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        let s = if var > 0.0 { var.sqrt() } else { 1.0 };
        col.mapv_inplace(|v| (v - m) / s);
        mean.push(m);
        scale.push(s);
    }
    (raw, Standardization { columns, mean, scale })
}

/// Class-wise feature means, positives first.
pub fn class_means(ds: &LabeledDataset) -> (Vec<f64>, Vec<f64>) {
    let mut sums: BTreeMap<bool, (Vec<f64>, usize)> = BTreeMap::new();
    for (row, label) in ds.features.rows().into_iter().zip(&ds.labels) {
        let entry = sums.entry(*label).or_insert_with(|| (vec![0.0; ds.dim()], 0));
        for (s, v) in entry.0.iter_mut().zip(row) {
            *s += v;
        }
        entry.1 += 1;
    }
    let mean = |label: bool| {
        let (s, n) = &sums[&label];
        s.iter().map(|v| v / *n as f64).collect::<Vec<f64>>()
    };
    (mean(true), mean(false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn balanced(n: usize) -> LabeledDataset {
        let features = Array2::from_shape_fn((2 * n, 1), |(i, _)| i as f64);
        let labels = (0..2 * n).map(|i| i < n).collect();
        LabeledDataset::new(
            features,
            labels,
            "toy",
            DatasetProvenance::Synthetic {
                spec: SyntheticSpec::new(SyntheticKind::Irreducible, n, 0),
                drawn: n,
            },
        )
        .unwrap()
    }

    #[test]
    fn irreducible_means_and_determinism() {
        let spec = SyntheticSpec::new(SyntheticKind::Irreducible, 1000, 7);
        let ds = gen_irreducible(&spec).unwrap();
        let (pos, neg) = class_means(&ds);
        assert!(pos.iter().all(|m| (m - 10.0).abs() < 0.15));
        assert!(neg.iter().all(|m| m.abs() < 0.15));
        assert_eq!(ds, gen_irreducible(&spec).unwrap());
    }

    #[test]
    fn split_proportions() {
        let ds = balanced(1000);
        let split = SplitSpec {
            component_side: ComponentSide::Positive,
            component_fraction: 0.5,
            sample_size: 500,
            repeat: 0,
            seed: 11,
        };
        let pair = make_mpe_pair(&ds, &split).unwrap();
        assert_eq!(pair.x_f.len(), 500);
        assert_eq!(pair.x_h.len(), 500);
        // mixture pool is 500 positives + 1000 negatives
        assert!((pair.kappa_star - 1.0 / 3.0).abs() < 0.07);
        let realized = pair.x_f.ids().iter().filter(|&&id| id < 1000).count() as f64 / 500.0;
        assert_eq!(pair.kappa_star, realized);
        assert!(pair.x_h.ids().iter().all(|&id| id < 1000));
        assert_eq!(pair, make_mpe_pair(&ds, &split).unwrap());

        let split = SplitSpec {
            component_fraction: 0.25,
            sample_size: 250,
            ..split
        };
        let pair = make_mpe_pair(&ds, &split).unwrap();
        assert!((pair.kappa_star - 750.0 / 1750.0).abs() < 0.08);
    }

    #[test]
    fn split_reports_limiting_count() {
        let ds = balanced(100);
        let split = SplitSpec {
            component_side: ComponentSide::Negative,
            component_fraction: 0.25,
            sample_size: 40,
            repeat: 0,
            seed: 1,
        };
        match make_mpe_pair(&ds, &split) {
            Err(MpeError::InsufficientRows {
                needed: 40,
                available: 25,
                ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn csv_toy() {
        let f = write_tmp("x,color,y\n1.0,red,a\n2.0,blue,b\n3.0,red,a\n");
        let ds = load_csv(f.path(), "y", &["a".into()]).unwrap();
        assert_eq!(
            ds.class_counts(),
            ClassCounts {
                positive: 2,
                negative: 1
            }
        );
        assert_eq!(ds.dim(), 3);
        for col in ds.features.axis_iter(Axis(1)) {
            assert!(col.mean().unwrap().abs() < 1e-12);
        }
        let DatasetProvenance::Csv { standardization, .. } = &ds.provenance else {
            panic!("csv provenance expected")
        };
        assert_eq!(standardization.columns, vec!["x", "color=blue", "color=red"]);
        let raw = standardization.invert(&ds.features);
        assert!((raw[[1, 0]] - 2.0).abs() < 1e-9);
        assert!((raw[[1, 1]] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn csv_drops_empty_column_and_missing_rows() {
        let f = write_tmp("x,empty,z,y\n1,,5,a\n2,,?,b\n3,,7,b\n4,,8,a\n");
        let ds = load_csv(f.path(), "y", &["a".into()]).unwrap();
        assert_eq!(ds.len(), 3);
        let DatasetProvenance::Csv {
            dropped_columns,
            dropped_rows,
            ..
        } = &ds.provenance
        else {
            panic!("csv provenance expected")
        };
        assert_eq!(dropped_columns, &vec!["empty".to_string()]);
        assert_eq!(*dropped_rows, 1);
    }

    #[test]
    fn csv_errors() {
        let f = write_tmp("x,y\n1,a\n2,b\n");
        match load_csv(f.path(), "label", &["a".into()]) {
            Err(MpeError::MissingLabelColumn { available, .. }) => assert_eq!(available, vec!["x", "y"]),
            other => panic!("unexpected {other:?}"),
        }
        assert!(load_csv(f.path(), "y", &["zzz".into()]).is_err());
        let f2 = write_tmp("x,y\n1,a\n2,a\n");
        assert!(load_csv(f2.path(), "y", &["a".into()]).is_err());
        let f3 = write_tmp("x,y\n1,a\n2,b,3\n");
        assert!(matches!(
            load_csv(f3.path(), "y", &["a".into()]),
            Err(MpeError::Dataset(_))
        ));
    }
}
