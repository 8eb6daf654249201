use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{MpeError, Result};

/// Which distribution a sample was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Mixture,
    Component,
}

/// A finite point set in `R^d` with stable row identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    points: Array2<f64>,
    ids: Vec<u64>,
    provenance: Provenance,
}

impl Sample {
    /// Builds a sample whose row identifiers are `0..n`.
    pub fn new(points: Array2<f64>, provenance: Provenance) -> Result<Self> {
        let ids = (0..points.nrows() as u64).collect();
        Self::with_ids(points, ids, provenance)
    }

    pub fn with_ids(points: Array2<f64>, ids: Vec<u64>, provenance: Provenance) -> Result<Self> {
        if ids.len() != points.nrows() {
            return Err(MpeError::InvalidArgument(format!(
                "{} ids for {} rows",
                ids.len(),
                points.nrows()
            )));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(MpeError::InvalidArgument("sample contains non-finite values".into()));
        }
        Ok(Self {
            points,
            ids,
            provenance,
        })
    }

    /// One-dimensional convenience constructor.
    pub fn from_column(values: &[f64], provenance: Provenance) -> Result<Self> {
        let points = Array2::from_shape_vec((values.len(), 1), values.to_vec()).expect("column shape matches length");
        Self::new(points, provenance)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Rows at the given positions, in the given order.
    pub fn select(&self, rows: &[usize]) -> Sample {
        Sample {
            points: self.points.select(Axis(0), rows),
            ids: rows.iter().map(|&r| self.ids[r]).collect(),
            provenance: self.provenance,
        }
    }

    /// Appends rows of `other` below this sample, keeping this sample's provenance.
    pub fn concat(&self, other: &Sample) -> Result<Sample> {
        if self.dim() != other.dim() {
            return Err(MpeError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let points =
            ndarray::concatenate(Axis(0), &[self.points.view(), other.points.view()]).expect("dimensions checked");
        let mut ids = self.ids.clone();
        ids.extend_from_slice(&other.ids);
        Ok(Sample {
            points,
            ids,
            provenance: self.provenance,
        })
    }
}
