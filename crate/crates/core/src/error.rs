//! Error type shared by every solver module.

use thiserror::Error;

/// Which condition of a dual price certificate failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateCondition {
    /// The price function is not convex.
    Convexity,
    /// The price function dips below the intermediary's indirect utility.
    Domination,
    /// The price function does not touch the indirect utility at a posterior atom.
    Contact,
    /// The integrals of the price function under the posterior and the prior differ.
    MeanEquality,
    /// The posterior is not of a form the constructor can price.
    Structure,
}

impl std::fmt::Display for CertificateCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Convexity => "convexity",
            Self::Domination => "domination",
            Self::Contact => "contact",
            Self::MeanEquality => "mean-equality",
            Self::Structure => "structure",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate interval [{a}, {b}]: prior mass {mass:e} below tolerance")]
    DegenerateInterval { a: f64, b: f64, mass: f64 },

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("prior is not regular: hazard rate decreases near theta = {theta}")]
    NotRegular { theta: f64 },

    #[error("invalid cost function: {0}")]
    InvalidCost(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid posterior: {0}")]
    InvalidPosterior(String),

    #[error("type recursion collapsed at item {item} for b = {b}")]
    RecursionCollapse { item: usize, b: f64 },

    #[error("qualities are not strictly increasing (item {item})")]
    NonMonotoneQualities { item: usize },

    #[error("item-count search reached the cap of {cap} items")]
    CapReached { cap: usize },

    #[error("no interior solution: bracket [{lo}, {hi}] does not change sign")]
    NoInteriorSolution { lo: f64, hi: f64 },

    #[error("no feasible binding pattern found")]
    NoFeasiblePattern,

    #[error("certificate failed: {condition} violated at w = {at} (by {violation:e})")]
    CertificateFailed {
        condition: CertificateCondition,
        at: f64,
        violation: f64,
    },

    #[error("linear program failed: {0}")]
    LpFailed(String),

    #[error("b = {b} is outside the closed-form regime")]
    OutOfRegime { b: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
