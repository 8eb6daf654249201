//! Sample-level regrouping.
//!
//! A classifier separates the mixture sample (class 1) from the component
//! sample (class 0). Mixture rows with the smallest posterior sit where the
//! latent part of the mixture is thinnest relative to the component; copying
//! the lowest `p` fraction of them into the component sample yields a sample
//! of the surrogate `H~' = (F_A + H) / (F(A) + 1)`. The estimator then runs on
//! the mixture sample and the enlarged component sample.

use serde::{Deserialize, Serialize};

use crate::classifier::{fit, PosteriorModel, TrainConfig};
use crate::error::{MpeError, Result};
use crate::estimators::{
    component_scores, en_from_scores, en_holdout_split, km_estimate, roc_from_scores, Estimate, EstimatorKind,
    KmConfig, RegroupTrace, RocConfig,
};
use crate::sample::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ranking {
    /// Ascending `P(mu = F | x)`.
    #[default]
    PosteriorAsc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegroupConfig {
    pub copy_fraction: f64,
    pub ranking: Ranking,
    pub classifier: TrainConfig,
    /// Fit a fresh scorer on `(X_F, X_H~')` for the estimator instead of
    /// reusing the ranking model.
    pub refit: bool,
}

impl Default for RegroupConfig {
    fn default() -> Self {
        Self {
            copy_fraction: 0.10,
            ranking: Ranking::PosteriorAsc,
            classifier: TrainConfig::default(),
            refit: false,
        }
    }
}

impl RegroupConfig {
    pub fn validate(&self) -> Result<()> {
        check_fraction(self.copy_fraction)?;
        self.classifier.validate()
    }
}

fn check_fraction(p: f64) -> Result<()> {
    if (0.0..=0.5).contains(&p) {
        Ok(())
    } else {
        Err(MpeError::InvalidArgument(format!(
            "copy fraction must lie in [0, 0.5], got {p}"
        )))
    }
}

/// Which estimator to run, with its configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EstimatorSpec {
    Roc(RocConfig),
    En,
    Km(KmConfig),
}

impl EstimatorSpec {
    pub fn kind(&self) -> EstimatorKind {
        match self {
            EstimatorSpec::Roc(_) => EstimatorKind::Roc,
            EstimatorSpec::En => EstimatorKind::En,
            EstimatorSpec::Km(cfg) => match cfg.variant {
                crate::estimators::KmVariant::Km1 => EstimatorKind::Km1,
                crate::estimators::KmVariant::Km2 => EstimatorKind::Km2,
            },
        }
    }

    pub fn from_kind(kind: EstimatorKind) -> Self {
        match kind {
            EstimatorKind::Roc => EstimatorSpec::Roc(RocConfig::default()),
            EstimatorKind::En => EstimatorSpec::En,
            EstimatorKind::Km1 => EstimatorSpec::Km(KmConfig::km1()),
            EstimatorKind::Km2 => EstimatorSpec::Km(KmConfig::km2()),
        }
    }
}

/// The component sample after copying, with the ranking that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct RegroupedSample {
    pub h_tilde: Sample,
    /// Identifiers of the copied mixture rows, lowest posterior first.
    pub copied_ids: Vec<u64>,
    /// Posterior of every mixture row, in mixture-sample order.
    pub posteriors: Vec<f64>,
}

impl RegroupedSample {
    /// `id,posterior,copied` rows for audit.
    pub fn to_csv(&self, x_f: &Sample) -> String {
        let copied: std::collections::HashSet<u64> = self.copied_ids.iter().copied().collect();
        let mut out = String::from("id,posterior,copied\n");
        for (id, p) in x_f.ids().iter().zip(&self.posteriors) {
            out.push_str(&format!("{id},{p},{}\n", copied.contains(id)));
        }
        out
    }
}

/// `floor(p * n)`; the small offset keeps products such as `0.3 * 10` from
/// rounding down a whole unit.
pub fn copy_count(p: f64, n: usize) -> usize {
    (p * n as f64 + 1e-9).floor() as usize
}

/// Row positions sorted by ascending posterior; ties go to the smaller row id.
pub fn ranking_order(posteriors: &[f64], ids: &[u64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..posteriors.len()).collect();
    order.sort_by(|&a, &b| posteriors[a].total_cmp(&posteriors[b]).then(ids[a].cmp(&ids[b])));
    order
}

fn checked_count(p: f64, n: usize) -> Result<usize> {
    check_fraction(p)?;
    let count = copy_count(p, n);
    if p > 0.0 && count == 0 {
        return Err(MpeError::CopyFractionTooSmall { p, n });
    }
    Ok(count)
}

/// Identifiers of the `floor(p |X_F|)` mixture rows with the smallest posterior.
pub fn select_from_posteriors(posteriors: &[f64], ids: &[u64], p: f64) -> Result<Vec<u64>> {
    let count = checked_count(p, posteriors.len())?;
    Ok(ranking_order(posteriors, ids)[..count]
        .iter()
        .map(|&r| ids[r])
        .collect())
}

pub fn select_regroup_set(x_f: &Sample, model: &PosteriorModel, p: f64) -> Result<Vec<u64>> {
    let posteriors = model.predict_posterior(x_f.points())?;
    select_from_posteriors(&posteriors, x_f.ids(), p)
}

/// Builds `X_H~'` from precomputed mixture posteriors.
pub fn h_tilde_from_posteriors(x_f: &Sample, x_h: &Sample, posteriors: Vec<f64>, p: f64) -> Result<RegroupedSample> {
    let count = checked_count(p, x_f.len())?;
    let order = ranking_order(&posteriors, x_f.ids());
    let picked = &order[..count];
    let h_tilde = if count == 0 {
        x_h.clone()
    } else {
        x_h.concat(&x_f.select(picked))?
    };
    Ok(RegroupedSample {
        h_tilde,
        copied_ids: picked.iter().map(|&r| x_f.ids()[r]).collect(),
        posteriors,
    })
}

pub fn build_h_tilde_with_model(x_f: &Sample, x_h: &Sample, model: &PosteriorModel, p: f64) -> Result<RegroupedSample> {
    let posteriors = model.predict_posterior(x_f.points())?;
    h_tilde_from_posteriors(x_f, x_h, posteriors, p)
}

/// Trains the ranking model and builds `X_H~'`.
pub fn build_h_tilde(x_f: &Sample, x_h: &Sample, cfg: &RegroupConfig) -> Result<(RegroupedSample, PosteriorModel)> {
    cfg.validate()?;
    let model = fit_scorer(x_f, x_h, &cfg.classifier)?;
    let regrouped = build_h_tilde_with_model(x_f, x_h, &model, cfg.copy_fraction)?;
    Ok((regrouped, model))
}

/// Mixture-versus-component model trained without the component rows that the
/// Elkan–Noto estimator holds out. One fit serves every estimator of a trial.
pub fn fit_scorer(x_f: &Sample, x_h: &Sample, cfg: &TrainConfig) -> Result<PosteriorModel> {
    let (train, _) = en_holdout_split(x_h.len());
    fit(x_f, &x_h.select(&train), cfg)
}

/// Runs an estimator on `(x_f, x_h)`. Score-based estimators use `scorer`, a
/// model from [`fit_scorer`]; the kernel estimator ignores it.
pub fn estimate_with_scorer(
    x_f: &Sample,
    x_h: &Sample,
    spec: &EstimatorSpec,
    scorer: Option<&PosteriorModel>,
) -> Result<Estimate> {
    let need = || scorer.ok_or_else(|| MpeError::InvalidArgument(format!("{} needs a classifier", spec.kind())));
    match spec {
        EstimatorSpec::Roc(cfg) => {
            let model = need()?;
            roc_from_scores(&component_scores(model, x_f)?, &component_scores(model, x_h)?, cfg)
        }
        EstimatorSpec::En => {
            let model = need()?;
            let (_, holdout) = en_holdout_split(x_h.len());
            if holdout.is_empty() {
                return Err(MpeError::TooFewRows("component sample needs at least 5 rows".into()));
            }
            en_from_scores(
                &component_scores(model, x_f)?,
                &component_scores(model, &x_h.select(&holdout))?,
            )
        }
        EstimatorSpec::Km(cfg) => km_estimate(x_f, x_h, cfg),
    }
}

/// The plain estimate `kappa_hat(F | H)`, fitting a scorer when needed.
pub fn plain_estimate(x_f: &Sample, x_h: &Sample, spec: &EstimatorSpec, classifier: &TrainConfig) -> Result<Estimate> {
    let model = match spec.kind().needs_classifier() {
        true => Some(fit_scorer(x_f, x_h, classifier)?),
        false => None,
    };
    Ok(estimate_with_scorer(x_f, x_h, spec, model.as_ref())?.with_seed(classifier.seed))
}

/// Estimate on an already regrouped pair, given the ranking model of the trial.
pub fn estimate_regrouped(
    x_f: &Sample,
    regrouped: &RegroupedSample,
    spec: &EstimatorSpec,
    ranking_model: &PosteriorModel,
    cfg: &RegroupConfig,
) -> Result<Estimate> {
    let refitted;
    let scorer = if cfg.refit && spec.kind().needs_classifier() {
        refitted = fit_scorer(x_f, &regrouped.h_tilde, &cfg.classifier)?;
        &refitted
    } else {
        ranking_model
    };
    let mut estimate =
        estimate_with_scorer(x_f, &regrouped.h_tilde, spec, Some(scorer))?.with_seed(cfg.classifier.seed);
    estimate.regrouping = Some(RegroupTrace {
        copy_fraction: cfg.copy_fraction,
        copied_ids: regrouped.copied_ids.clone(),
        posteriors: regrouped.posteriors.clone(),
    });
    Ok(estimate)
}

/// `kappa_hat(F | H~')`: rank, copy, estimate.
pub fn regrouped_estimate(x_f: &Sample, x_h: &Sample, cfg: &RegroupConfig, spec: &EstimatorSpec) -> Result<Estimate> {
    let (regrouped, model) = build_h_tilde(x_f, x_h, cfg)?;
    estimate_regrouped(x_f, &regrouped, spec, &model, cfg)
}
