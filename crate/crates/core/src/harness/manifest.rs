use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::{generate, load_csv, ComponentSide, LabeledDataset, SyntheticSpec};
use crate::error::{MpeError, Result};
use crate::regrouping::{EstimatorSpec, RegroupConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DatasetRef {
    Synthetic(SyntheticSpec),
    Csv {
        path: PathBuf,
        label_column: String,
        positive_labels: Vec<String>,
    },
}

impl DatasetRef {
    pub fn load(&self) -> Result<LabeledDataset> {
        match self {
            DatasetRef::Synthetic(spec) => generate(spec),
            DatasetRef::Csv {
                path,
                label_column,
                positive_labels,
            } => load_csv(path, label_column, positive_labels),
        }
    }
}

/// Cartesian grid of split cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitGrid {
    pub sides: Vec<ComponentSide>,
    pub component_fractions: Vec<f64>,
    pub sample_sizes: Vec<usize>,
}

impl Default for SplitGrid {
    fn default() -> Self {
        Self {
            sides: vec![ComponentSide::Positive, ComponentSide::Negative],
            component_fractions: vec![0.25, 0.5, 0.75],
            sample_sizes: vec![800, 1600, 3200],
        }
    }
}

/// One cell of the split grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub side: ComponentSide,
    pub component_fraction: f64,
    pub sample_size: usize,
}

impl SplitGrid {
    /// Cells in side-major, then fraction, then sample-size order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &side in &self.sides {
            for &component_fraction in &self.component_fractions {
                for &sample_size in &self.sample_sizes {
                    cells.push(Cell {
                        side,
                        component_fraction,
                        sample_size,
                    });
                }
            }
        }
        cells
    }
}

fn default_repeats() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: u32,
    pub dataset: DatasetRef,
    #[serde(default)]
    pub splits: SplitGrid,
    pub estimators: Vec<EstimatorSpec>,
    #[serde(default)]
    pub regroup: RegroupConfig,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    pub seed: u64,
    /// Count estimates whose kernel QP hit the iteration cap as trial failures.
    #[serde(default)]
    pub exclude_unconverged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl RunManifest {
    pub fn new(dataset: DatasetRef, estimators: Vec<EstimatorSpec>, seed: u64) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            dataset,
            splits: SplitGrid::default(),
            estimators,
            regroup: RegroupConfig::default(),
            repeats: default_repeats(),
            seed,
            exclude_unconverged: false,
            output_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let manifest: Self = serde_json::from_str(text)?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(MpeError::Manifest(msg.into()));
        if self.schema != SCHEMA_VERSION {
            return Err(MpeError::Manifest(format!(
                "unsupported schema {}; expected {SCHEMA_VERSION}",
                self.schema
            )));
        }
        if self.estimators.is_empty() {
            return bad("at least one estimator is required");
        }
        if self.repeats == 0 {
            return bad("repeats must be >= 1");
        }
        let g = &self.splits;
        if g.sides.is_empty() || g.component_fractions.is_empty() || g.sample_sizes.is_empty() {
            return bad("split grid has an empty axis");
        }
        if g.component_fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return bad("component fractions must lie in (0, 1)");
        }
        if g.sample_sizes.contains(&0) {
            return bad("sample sizes must be positive");
        }
        self.regroup.validate()?;
        for spec in &self.estimators {
            match spec {
                EstimatorSpec::Roc(cfg) => cfg.validate()?,
                EstimatorSpec::Km(cfg) => cfg.validate()?,
                EstimatorSpec::En => {}
            }
        }
        if let DatasetRef::Synthetic(spec) = &self.dataset {
            spec.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::SyntheticKind;

    fn manifest() -> RunManifest {
        RunManifest::new(
            DatasetRef::Synthetic(SyntheticSpec::new(SyntheticKind::Reducible, 200, 3)),
            vec![EstimatorSpec::En],
            42,
        )
    }

    #[test]
    fn json_round_trip() {
        let m = manifest();
        let text = serde_json::to_string_pretty(&m).unwrap();
        assert_eq!(RunManifest::from_json(&text).unwrap(), m);
    }

    #[test]
    fn defaults_fill_grid() {
        let text = r#"{"schema":1,"dataset":{"source":"synthetic","kind":"irreducible","n":100,"seed":1},
                       "estimators":[{"kind":"roc"}],"seed":5}"#;
        let m = RunManifest::from_json(text).unwrap();
        assert_eq!(m.repeats, 10);
        assert_eq!(m.splits.cells().len(), 18);
    }

    #[test]
    fn rejects_bad_manifests() {
        let mut m = manifest();
        m.estimators.clear();
        assert!(m.validate().is_err());
        let mut m = manifest();
        m.repeats = 0;
        assert!(m.validate().is_err());
        let mut m = manifest();
        m.schema = 2;
        assert!(m.validate().is_err());
    }
}
