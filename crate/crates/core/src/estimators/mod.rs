//! Sample-based estimators of the maximum proportion of `H` in `F`.

mod en;
mod km;
mod roc;
pub mod simplex;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use en::{en_estimate, en_from_scores, en_holdout_split, fit_en_model};
pub use km::{km_estimate, median_heuristic_bandwidth, KmConfig, KmVariant};
pub use roc::{
    component_scores, empirical_kappa, roc_estimate, roc_from_scores, KappaTrace, RocConfig, ThresholdPoint,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Roc,
    En,
    Km1,
    Km2,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Roc => "roc",
            EstimatorKind::En => "en",
            EstimatorKind::Km1 => "km1",
            EstimatorKind::Km2 => "km2",
        }
    }

    /// Whether the estimator consumes classifier scores.
    pub fn needs_classifier(self) -> bool {
        matches!(self, EstimatorKind::Roc | EstimatorKind::En)
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "roc" => Ok(EstimatorKind::Roc),
            "en" => Ok(EstimatorKind::En),
            "km1" => Ok(EstimatorKind::Km1),
            "km2" => Ok(EstimatorKind::Km2),
            other => Err(format!("unknown estimator {other:?}")),
        }
    }
}

/// One `(lambda, d(lambda))` pair of the kernel mean matching curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub lambda: f64,
    pub distance: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Method-specific trace attached to an [`Estimate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Diagnostics {
    Roc {
        penalty: f64,
        trace: Vec<ThresholdPoint>,
    },
    En {
        label_frequency: f64,
        mean_mixture_score: f64,
        holdout_size: usize,
    },
    Km {
        bandwidth: f64,
        slope_threshold: f64,
        curve: Vec<CurvePoint>,
        /// Number of grid points whose QP stopped at the iteration cap.
        unconverged: usize,
    },
}

impl Diagnostics {
    /// CSV trace: `(t, F_hat, H_hat)` rows for ROC, `(lambda, d)` rows for KM.
    /// EN has no curve and yields a single summary row.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self {
            Diagnostics::Roc { trace, .. } => {
                out.push_str("threshold,f_hat,h_hat\n");
                for p in trace {
                    let _ = writeln!(out, "{},{},{}", p.threshold, p.f_hat, p.h_hat);
                }
            }
            Diagnostics::Km { curve, .. } => {
                out.push_str("lambda,distance,iterations,converged\n");
                for p in curve {
                    let _ = writeln!(out, "{},{},{},{}", p.lambda, p.distance, p.iterations, p.converged);
                }
            }
            Diagnostics::En {
                label_frequency,
                mean_mixture_score,
                holdout_size,
            } => {
                out.push_str("label_frequency,mean_mixture_score,holdout_size\n");
                let _ = writeln!(out, "{label_frequency},{mean_mixture_score},{holdout_size}");
            }
        }
        out
    }
}

/// Regrouping details attached to an estimate computed on `(X_F, X_H~')`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegroupTrace {
    pub copy_fraction: f64,
    pub copied_ids: Vec<u64>,
    pub posteriors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub kappa_hat: f64,
    pub method: EstimatorKind,
    pub diagnostics: Diagnostics,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regrouping: Option<RegroupTrace>,
}

impl Estimate {
    pub(crate) fn new(kappa_hat: f64, method: EstimatorKind, diagnostics: Diagnostics) -> Self {
        Self {
            kappa_hat: kappa_hat.clamp(0.0, 1.0),
            method,
            diagnostics,
            seed: 0,
            regrouping: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// True when the kernel QP hit its iteration cap somewhere on the curve.
    pub fn has_unconverged_qp(&self) -> bool {
        self.unconverged_points() > 0
    }

    pub fn unconverged_points(&self) -> usize {
        match self.diagnostics {
            Diagnostics::Km { unconverged, .. } => unconverged,
            _ => 0,
        }
    }
}
