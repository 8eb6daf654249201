//! Mixture proportion estimation with and without the irreducibility
//! assumption.
//!
//! Given a sample from a mixture `F = (1 - k) G + k H` and a sample from the
//! component `H`, estimate `k`. Distribution-independent estimators recover the
//! maximum proportion of `H` in `F`, which overshoots `k` whenever `G` itself
//! contains some `H`. Regrouping copies the mixture points that look most like
//! `H` into the component sample, which builds a nearby problem where the
//! overshoot vanishes, and then runs the original estimator on that problem.
//!
//! Layout:
//! - [`measure`]: exact computations on finite discrete distributions.
//! - [`classifier`]: a small MLP posterior model trained with SGD.
//! - [`regrouping`]: the sample-level copy transform.
//! - [`estimators`]: ROC plug-in, Elkan–Noto and kernel mean matching estimators.
//! - [`datagen`]: synthetic generators, mixture/component splits, CSV ingestion.
//! - [`harness`]: trial grids, copy-fraction sweeps, Wilcoxon tests, reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod datagen;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod measure;
pub mod regrouping;
pub mod sample;
pub mod seed;

pub use classifier::{PosteriorModel, TrainConfig};
pub use datagen::{LabeledDataset, SplitSpec, SyntheticKind, SyntheticSpec};
pub use error::{MpeError, Result};
pub use estimators::{Estimate, EstimatorKind, KmConfig, RocConfig};
pub use harness::{ExperimentReport, RunManifest};
pub use measure::{DiscreteDistribution, RegroupResult, SubsetMask};
pub use regrouping::{RegroupConfig, RegroupedSample};
pub use sample::{Provenance, Sample};
