//! Elkan–Noto estimator.
//!
//! Pool the component sample (labeled) with the mixture sample (unlabeled)
//! and train `g(x) = P(labeled | x)`. The labeling frequency `c` is the mean of
//! `g` on held-out labeled rows, and each mixture row is a component draw with
//! probability `g(x) / c`.

use super::{Diagnostics, Estimate, EstimatorKind};
use crate::classifier::{fit, PosteriorModel, TrainConfig};
use crate::error::{MpeError, Result};
use crate::sample::Sample;

const MIN_LABEL_FREQUENCY: f64 = 1e-6;

/// Training and held-out rows of the labeled sample: every fifth row
/// (positions 4, 9, 14, ...) is held out.
pub fn en_holdout_split(n: usize) -> (Vec<usize>, Vec<usize>) {
    (0..n).partition(|i| i % 5 != 4)
}

/// `kappa_hat = mean(g(x_f)) / c` with `c = mean(g(holdout))`, clamped to `[0, 1]`.
pub fn en_from_scores(f_scores: &[f64], holdout_scores: &[f64]) -> Result<Estimate> {
    if f_scores.is_empty() || holdout_scores.is_empty() {
        return Err(MpeError::InvalidArgument("empty score vector".into()));
    }
    let c = holdout_scores.iter().sum::<f64>() / holdout_scores.len() as f64;
    if !(c >= MIN_LABEL_FREQUENCY) {
        return Err(MpeError::DegenerateLabelFrequency(c));
    }
    let mean_f = f_scores.iter().sum::<f64>() / f_scores.len() as f64;
    Ok(Estimate::new(
        mean_f / c,
        EstimatorKind::En,
        Diagnostics::En {
            label_frequency: c,
            mean_mixture_score: mean_f,
            holdout_size: holdout_scores.len(),
        },
    ))
}

/// Trains `P(labeled | x)` on the non-held-out rows of `x_h` against all of `x_f`.
pub fn fit_en_model(x_f: &Sample, x_h: &Sample, cfg: &TrainConfig) -> Result<PosteriorModel> {
    let (train, _) = en_holdout_split(x_h.len());
    fit(&x_h.select(&train), x_f, cfg)
}

/// Elkan–Noto estimate. `model` must output `P(labeled | x)` and must not have
/// seen the held-out rows of `x_h` (see [`fit_en_model`]).
pub fn en_estimate(x_f: &Sample, x_h: &Sample, model: &PosteriorModel) -> Result<Estimate> {
    let (_, holdout) = en_holdout_split(x_h.len());
    if holdout.is_empty() {
        return Err(MpeError::TooFewRows("component sample needs at least 5 rows".into()));
    }
    let f_scores = model.predict_posterior(x_f.points())?;
    let h_scores = model.predict_posterior(x_h.select(&holdout).points())?;
    en_from_scores(&f_scores, &h_scores)
}
