use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, MpeError>;

#[derive(Debug, Error)]
pub enum MpeError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("degenerate component: no support point carries positive mass")]
    DegenerateComponent,

    #[error("unknown support identifier {0}")]
    UnknownIdentifier(u64),

    #[error("support mismatch between distributions")]
    SupportMismatch,

    #[error("A outside support of F")]
    SetOutsideSupport,

    #[error("regrouping entire G: G(A^c) = 0")]
    RegroupingEntireG,

    #[error("selection condition failed: G(A) = {g_a} is not below kappa(G|H) = {kappa}")]
    SelectionConditionFailed { g_a: f64, kappa: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("too few rows: {0}")]
    TooFewRows(String),

    #[error("copy fraction too small for sample: p = {p}, |X_F| = {n}")]
    CopyFractionTooSmall { p: f64, n: usize },

    #[error("degenerate score distribution: no threshold keeps component mass >= {0}")]
    DegenerateScores(f64),

    #[error("degenerate labeling frequency: c = {0}")]
    DegenerateLabelFrequency(f64),

    #[error("filter too aggressive: yield {yield_fraction:.3} after {rounds} rounds")]
    FilterTooAggressive { yield_fraction: f64, rounds: usize },

    #[error("insufficient rows: need {needed}, have {available} ({what})")]
    InsufficientRows {
        what: String,
        needed: usize,
        available: usize,
    },

    #[error("label column {column:?} not found; available columns: {available:?}")]
    MissingLabelColumn { column: String, available: Vec<String> },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("cannot write to {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
