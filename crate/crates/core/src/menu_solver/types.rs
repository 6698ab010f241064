//! Posterior types pinned down by binding obedience: w_i = E(θ | w_i − b ≤ θ ≤ w_{i+1} − b).

use serde::Serialize;

use crate::distributions::{Atom, Prior};
use crate::error::{Error, Result};
use crate::numeric::bisect;

/// Iteration cap for each fixed-point bisection.
pub const FIXED_POINT_MAX_ITER: usize = 200;

/// One solved fixed point, counted from the top of the menu.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct TypeStep {
    /// Lower end of the pooling interval.
    pub x: f64,
    /// Posterior type (the conditional mean of [x, upper end]).
    pub w: f64,
    pub residual: f64,
    pub iterations: usize,
    /// False when no interior cutoff exists and the interval reaches 0.
    pub interior: bool,
}

/// Lower cutoff x ∈ (0, y) with E(θ | x ≤ θ ≤ y) − x = b, if one exists.
pub(crate) fn obedient_cutoff(prior: &Prior, b: f64, y: f64) -> Option<TypeStep> {
    let r = |x: f64| prior.conditional_mean_unchecked(x, y) - x - b;
    if r(0.0) <= 0.0 {
        return None;
    }
    let root = bisect(r, 0.0, y, FIXED_POINT_MAX_ITER)?;
    let x = root.x;
    Some(TypeStep { x, w: x + b, residual: root.residual.abs(), iterations: root.iterations, interior: true })
}

/// Fixed points computed top-down. The types of an N-item menu are the
/// first N steps, so a single chain serves every item count.
#[derive(Clone, Debug, Default)]
pub(crate) struct TypeChain {
    pub steps: Vec<TypeStep>,
    /// Set once a step reached θ = 0; no further items fit below it.
    pub terminal: bool,
}

impl TypeChain {
    /// Appends the next step below the current bottom. Returns false if the
    /// chain had already reached θ = 0.
    pub fn extend(&mut self, prior: &Prior, b: f64) -> bool {
        if self.terminal {
            return false;
        }
        let y = self.steps.last().map_or(1.0, |s| s.x);
        let step = obedient_cutoff(prior, b, y).unwrap_or_else(|| {
            self.terminal = true;
            TypeStep { x: 0.0, w: prior.conditional_mean_unchecked(0.0, y), residual: 0.0, iterations: 0, interior: false }
        });
        self.steps.push(step);
        true
    }

    /// Types, cutoffs and masses of the `n`-item menu, bottom item first.
    pub fn posterior_types(&self, prior: &Prior, b: f64, n: usize) -> Result<PosteriorTypes> {
        assert!(n >= 1 && n <= self.steps.len());
        if let Some(j) = self.steps[..n - 1].iter().position(|s| !s.interior) {
            // Step j (from the top) reached 0, leaving no room for item n − j − 1.
            return Err(Error::RecursionCollapse { item: n - j - 1, b });
        }
        let steps: Vec<TypeStep> = self.steps[..n].iter().rev().copied().collect();
        let types: Vec<f64> = steps.iter().map(|s| s.w).collect();
        let cutoffs: Vec<f64> = steps.iter().map(|s| s.x).collect();
        let masses: Vec<f64> = (0..n)
            .map(|i| prior.mass(cutoffs[i], cutoffs.get(i + 1).copied().unwrap_or(1.0)))
            .collect();
        let x1 = cutoffs[0];
        let excluded = if x1 > 0.0 && prior.mass(0.0, x1) > 0.0 {
            Some(Atom { location: prior.conditional_mean_unchecked(0.0, x1), mass: prior.mass(0.0, x1) })
        } else {
            None
        };
        Ok(PosteriorTypes {
            b,
            no_exclusion: excluded.is_none(),
            excluded,
            types,
            cutoffs,
            masses,
            max_residual: steps.iter().map(|s| s.residual).fold(0.0, f64::max),
            iterations: steps.iter().map(|s| s.iterations).sum(),
        })
    }
}

/// Posterior types of the N-item menu with binding obedience.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PosteriorTypes {
    pub b: f64,
    /// w_1..w_N, increasing.
    pub types: Vec<f64>,
    /// x_i = w_i − b (x_1 = 0 without an exclusion region).
    pub cutoffs: Vec<f64>,
    /// ω_1..ω_N.
    pub masses: Vec<f64>,
    /// The excluded type w_0 and its mass ω_0.
    pub excluded: Option<Atom>,
    /// Set when w_1 ≤ b, so nobody is excluded.
    pub no_exclusion: bool,
    pub max_residual: f64,
    pub iterations: usize,
}

/// Solves the backward type recursion for an `n`-item menu.
pub fn solve_posterior_types(prior: &Prior, b: f64, n: usize) -> Result<PosteriorTypes> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::InvalidInput(format!("bias must be positive, got {b}")));
    }
    if n == 0 {
        return Err(Error::InvalidInput("item count must be at least 1".into()));
    }
    let mut chain = TypeChain::default();
    while chain.steps.len() < n {
        if !chain.extend(prior, b) {
            return Err(Error::RecursionCollapse { item: n - chain.steps.len(), b });
        }
    }
    chain.posterior_types(prior, b, n)
}
