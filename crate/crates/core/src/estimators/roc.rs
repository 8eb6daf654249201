//! Plug-in estimator over upper-level sets of a component score.
//!
//! For a score that is large where `H` dominates `F`, the sets
//! `{x : score(x) > t}` trace the ROC curve of the scorer and the smallest
//! penalized ratio `F_t / H_t` over them estimates the maximum proportion.

use serde::{Deserialize, Serialize};

use super::{Diagnostics, Estimate, EstimatorKind};
use crate::classifier::PosteriorModel;
use crate::error::{MpeError, Result};
use crate::sample::Sample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RocConfig {
    /// Multiplier `c` on the `sqrt(log n / n)` deviation envelope.
    pub penalty_scale: f64,
    /// Thresholds keeping less than this fraction of the component sample are ignored.
    pub min_component_mass: f64,
    pub grid_size: usize,
}

impl Default for RocConfig {
    fn default() -> Self {
        Self {
            penalty_scale: 1.0,
            min_component_mass: 0.05,
            grid_size: 200,
        }
    }
}

impl RocConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 10 {
            return Err(MpeError::InvalidArgument("ROC grid size must be >= 10".into()));
        }
        if !(self.min_component_mass > 0.0 && self.min_component_mass < 1.0) || self.penalty_scale < 0.0 {
            return Err(MpeError::InvalidArgument(
                "ROC component-mass floor must lie in (0, 1) and the penalty scale must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub threshold: f64,
    /// Fraction of the mixture sample scoring above the threshold.
    pub f_hat: f64,
    /// Fraction of the component sample scoring above the threshold.
    pub h_hat: f64,
}

/// Unpenalized ratio trace over the threshold family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaTrace {
    pub points: Vec<ThresholdPoint>,
    /// Smallest `f_hat / h_hat` among thresholds passing the mass floor.
    pub min_ratio: f64,
    pub argmin_threshold: f64,
}

fn sorted(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(MpeError::InvalidArgument("scores must be finite".into()));
    }
    let mut v = scores.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    Ok(v)
}

/// Fraction of `sorted_scores` strictly above `t`.
fn fraction_above(sorted_scores: &[f64], t: f64) -> f64 {
    let at_or_below = sorted_scores.partition_point(|&s| s <= t);
    (sorted_scores.len() - at_or_below) as f64 / sorted_scores.len() as f64
}

/// Candidate thresholds. With few distinct pooled scores every cut between
/// neighbours is used; otherwise pooled quantiles.
fn threshold_grid(pooled_sorted: &[f64], grid_size: usize) -> Vec<f64> {
    let mut distinct = pooled_sorted.to_vec();
    distinct.dedup();
    if distinct.len() <= grid_size {
        let mut grid = Vec::with_capacity(distinct.len());
        grid.push(distinct[0] - 1.0);
        grid.extend(distinct.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        grid
    } else {
        let n = pooled_sorted.len();
        let mut grid: Vec<f64> = (0..grid_size).map(|k| pooled_sorted[(k * n) / grid_size]).collect();
        grid[0] = pooled_sorted[0] - 1.0;
        grid.dedup();
        grid
    }
}

fn trace(f_sorted: &[f64], h_sorted: &[f64], grid_size: usize) -> Vec<ThresholdPoint> {
    let mut pooled: Vec<f64> = f_sorted.iter().chain(h_sorted).copied().collect();
    pooled.sort_unstable_by(f64::total_cmp);
    threshold_grid(&pooled, grid_size)
        .into_iter()
        .map(|t| ThresholdPoint {
            threshold: t,
            f_hat: fraction_above(f_sorted, t),
            h_hat: fraction_above(h_sorted, t),
        })
        .collect()
}

fn penalized_min(points: &[ThresholdPoint], penalty: f64, floor: f64) -> Option<(f64, f64)> {
    points
        .iter()
        .filter(|p| p.h_hat >= floor)
        .map(|p| ((p.f_hat + penalty) / p.h_hat, p.threshold))
        .fold(None, |best: Option<(f64, f64)>, cand| match best {
            Some(b) if b.0 <= cand.0 => Some(b),
            _ => Some(cand),
        })
}

/// Smallest empirical `F_t / H_t` over upper-level sets of the scores.
pub fn empirical_kappa(
    f_scores: &[f64],
    h_scores: &[f64],
    grid_size: usize,
    min_component_mass: f64,
) -> Result<KappaTrace> {
    if f_scores.is_empty() || h_scores.is_empty() {
        return Err(MpeError::InvalidArgument("empty score vector".into()));
    }
    let points = trace(&sorted(f_scores)?, &sorted(h_scores)?, grid_size);
    let (min_ratio, argmin_threshold) =
        penalized_min(&points, 0.0, min_component_mass).ok_or(MpeError::DegenerateScores(min_component_mass))?;
    Ok(KappaTrace {
        points,
        min_ratio,
        argmin_threshold,
    })
}

/// ROC estimate from precomputed component scores (large means `H`-like).
pub fn roc_from_scores(f_scores: &[f64], h_scores: &[f64], cfg: &RocConfig) -> Result<Estimate> {
    cfg.validate()?;
    let base = empirical_kappa(f_scores, h_scores, cfg.grid_size, cfg.min_component_mass)?;
    let n = f_scores.len() as f64;
    let penalty = cfg.penalty_scale * (n.ln().max(0.0) / n).sqrt();
    let (kappa, _) = penalized_min(&base.points, penalty, cfg.min_component_mass)
        .ok_or(MpeError::DegenerateScores(cfg.min_component_mass))?;
    Ok(Estimate::new(
        kappa,
        EstimatorKind::Roc,
        Diagnostics::Roc {
            penalty,
            trace: base.points,
        },
    ))
}

/// `1 - P(mu = F | x)` for each row.
pub fn component_scores(model: &PosteriorModel, sample: &Sample) -> Result<Vec<f64>> {
    Ok(model
        .predict_posterior(sample.points())?
        .into_iter()
        .map(|p| 1.0 - p)
        .collect())
}

/// ROC estimate with a posterior model trained on mixture (1) versus component (0).
pub fn roc_estimate(x_f: &Sample, x_h: &Sample, model: &PosteriorModel, cfg: &RocConfig) -> Result<Estimate> {
    roc_from_scores(&component_scores(model, x_f)?, &component_scores(model, x_h)?, cfg)
}
