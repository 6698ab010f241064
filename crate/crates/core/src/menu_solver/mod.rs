//! Seller-optimal menus under intermediary obedience, plus the benchmark
//! regimes (Mussa-Rosen, seller-designed information) and capped menus.

mod bhm;
mod mussa_rosen;
mod pattern;
mod restricted;
mod types;

pub use bhm::{solve_bhm_finite, solve_bhm_single_item, BhmFinite, BhmFiniteConfig, BhmSingleItem};
pub use mussa_rosen::{solve_mussa_rosen, MussaRosen, MussaRosenStats};
pub use restricted::{solve_restricted_menu, MAX_RESTRICTED_CAP};
pub use types::{solve_posterior_types, PosteriorTypes, FIXED_POINT_MAX_ITER};

use crate::costs::CostFunction;
use crate::distributions::{PosteriorDistribution, Prior};
use crate::error::{Error, Result};
use crate::menu::{atom_payoffs, CutoffBinding, Diagnostics, Menu, MenuOutcome, Regime, SolverWarning};
use crate::persuasion::build_certificate;
use types::TypeChain;

/// Qualities at or below this value count as zero.
pub const QUALITY_TOL: f64 = 1e-10;

/// Largest item count tried by [`optimal_item_count`].
pub const N_MAX: usize = 10_000;

/// Slack when comparing the bias against the single-item threshold b*.
pub const THRESHOLD_TOL: f64 = 1e-12;

/// Cutoffs at or below this value are treated as 0 (no exclusion region).
const CUTOFF_ZERO: f64 = 1e-14;

pub(crate) fn check_bias(b: f64) -> Result<()> {
    if b > 0.0 && b.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("bias must be positive and finite, got {b}")))
    }
}

/// Per-item scores whose inverse marginal cost gives the profit-maximizing
/// qualities for fixed breakpoints w and masses ω:
/// φ_k = w_k − (Σ_{j>k} ω_j / ω_k)(w_{k+1} − w_k), φ_N = w_N.
pub(crate) fn screening_scores(breakpoints: &[f64], masses: &[f64]) -> Vec<f64> {
    let n = breakpoints.len();
    let mut scores = vec![0.0; n];
    let mut above = 0.0;
    for k in (0..n).rev() {
        scores[k] = if k + 1 == n {
            breakpoints[k]
        } else {
            breakpoints[k] - above / masses[k].max(1e-300) * (breakpoints[k + 1] - breakpoints[k])
        };
        above += masses[k];
    }
    scores
}

/// Σ ω_k (t_k − c(q_k)) with transfers from binding local downward IC.
pub(crate) fn screening_profit(cost: &CostFunction, breakpoints: &[f64], qualities: &[f64], masses: &[f64]) -> f64 {
    let (mut t, mut q_prev, mut profit) = (0.0, 0.0, 0.0);
    for ((&w, &q), &m) in breakpoints.iter().zip(qualities).zip(masses) {
        t += w * (q - q_prev);
        q_prev = q;
        profit += m * (t - cost.value(q));
    }
    profit
}

/// Qualities solving the first-order conditions for the given types and masses:
/// c'(q_N) = w_N and c'(q_i) = w_i − (Σ_{j>i} ω_j / ω_i)(w_{i+1} − w_i).
/// Entries may be zero; positive entries must increase strictly.
pub fn optimal_qualities(cost: &CostFunction, types: &[f64], masses: &[f64]) -> Result<Vec<f64>> {
    if types.len() != masses.len() || types.is_empty() {
        return Err(Error::InvalidInput("types and masses must be nonempty and of equal length".into()));
    }
    let q: Vec<f64> = screening_scores(types, masses).into_iter().map(|s| cost.inverse_marginal(s)).collect();
    for i in 1..q.len() {
        if q[i - 1] > QUALITY_TOL && !(q[i] > q[i - 1]) {
            return Err(Error::NonMonotoneQualities { item: i + 1 });
        }
    }
    Ok(q)
}

/// Lowest quality of the n-item menu built from the first n chain steps.
fn bottom_quality(prior: &Prior, cost: &CostFunction, chain: &TypeChain, n: usize) -> f64 {
    let s = &chain.steps;
    let bottom = s[n - 1];
    let score = if n == 1 {
        bottom.w
    } else {
        let next = s[n - 2];
        let own = prior.mass(bottom.x, next.x);
        let above = prior.mass(next.x, 1.0);
        bottom.w - above / own.max(1e-300) * (next.w - bottom.w)
    };
    cost.inverse_marginal(score)
}

/// Largest item count whose lowest quality is positive, with the type chain.
fn item_count_search(prior: &Prior, cost: &CostFunction, b: f64) -> Result<(usize, TypeChain)> {
    check_bias(b)?;
    let mut chain = TypeChain::default();
    let mut best = 0;
    for n in 1..=N_MAX {
        if !chain.extend(prior, b) {
            return Ok((best, chain));
        }
        if bottom_quality(prior, cost, &chain, n) <= QUALITY_TOL {
            return Ok((best.max(1), chain));
        }
        best = n;
    }
    Err(Error::CapReached { cap: N_MAX })
}

/// Optimal number of items: the largest N whose lowest quality is positive.
pub fn optimal_item_count(prior: &Prior, cost: &CostFunction, b: f64) -> Result<usize> {
    item_count_search(prior, cost, b).map(|(n, _)| n)
}

/// Confirms the conditions under which the optimal seller-designed policy is a
/// single pooled item; returns a description of what fails.
pub fn single_item_preconditions(prior: &Prior, cost: &CostFunction) -> Option<String> {
    let mut failed = Vec::new();
    if !cost.third_derivative_nonnegative() {
        failed.push("marginal cost is not convex");
    }
    if !prior.satisfies_single_item_assumption() {
        failed.push("density condition f0' < 0 => f0'' <= 0 fails");
    }
    (!failed.is_empty()).then(|| failed.join("; "))
}

/// Assembles an outcome from a menu and the lower cutoffs of the items'
/// pooling intervals; the posterior pools each interval at its mean.
#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble_outcome(
    prior: &Prior,
    cost: &CostFunction,
    b: f64,
    regime: Regime,
    menu: Menu,
    cutoffs: Vec<f64>,
    bindings: Vec<CutoffBinding>,
    mut warnings: Vec<SolverWarning>,
    diagnostics: Diagnostics,
) -> Result<MenuOutcome> {
    let has_exclusion = cutoffs[0] > CUTOFF_ZERO;
    let interior: Vec<f64> = cutoffs.iter().copied().skip(usize::from(!has_exclusion)).collect();
    let posterior = PosteriorDistribution::monotone_pool(prior, &interior)?;
    let atoms = posterior.atoms();
    let pay = atom_payoffs(&menu, cost, b, &atoms);
    if !has_exclusion {
        warnings.push(SolverWarning::NoExclusionRegion);
    }
    if menu.items().iter().any(|it| cost.cap_binds(it.q)) {
        warnings.push(SolverWarning::QualityCapBinds { q_bar: cost.q_bar() });
    }
    Ok(MenuOutcome {
        b,
        regime,
        menu,
        types: atoms.iter().map(|a| a.location).collect(),
        masses: atoms.iter().map(|a| a.mass).collect(),
        has_exclusion,
        cutoffs,
        bindings,
        profit: pay.profit,
        consumer_rent: pay.consumer_rent,
        intermediary_payoff: pay.intermediary_payoff,
        posterior,
        warnings,
        diagnostics,
    })
}

/// The menu with exactly `n` items, all cutoffs pinned by binding obedience.
pub fn solve_menu_with_items(prior: &Prior, cost: &CostFunction, b: f64, n: usize) -> Result<MenuOutcome> {
    let pt = solve_posterior_types(prior, b, n)?;
    outcome_from_types(prior, cost, b, &pt)
}

fn outcome_from_types(prior: &Prior, cost: &CostFunction, b: f64, pt: &PosteriorTypes) -> Result<MenuOutcome> {
    let q = optimal_qualities(cost, &pt.types, &pt.masses)?;
    if q[0] <= QUALITY_TOL {
        return Err(Error::InvalidInput(format!(
            "{} items is too many at b = {b}: the lowest quality is zero",
            q.len()
        )));
    }
    let menu = Menu::transfers_from(&pt.types, &q)?;
    let mut bindings = vec![CutoffBinding::Both; q.len()];
    if pt.no_exclusion {
        bindings[0] = CutoffBinding::Interior;
    }
    assemble_outcome(
        prior,
        cost,
        b,
        Regime::IntermediaryConstrained,
        menu,
        pt.cutoffs.clone(),
        bindings,
        Vec::new(),
        Diagnostics { iterations: pt.iterations, max_residual: pt.max_residual },
    )
}

/// The single-item outcome in which the seller's preferred pooling survives.
pub fn bhm_outcome(prior: &Prior, cost: &CostFunction, b: f64, bhm: &BhmSingleItem) -> Result<MenuOutcome> {
    check_bias(b)?;
    let menu = Menu::transfers_from(&[bhm.w_star], &[bhm.q_star])?;
    assemble_outcome(
        prior,
        cost,
        b,
        Regime::Bhm,
        menu,
        vec![bhm.v_star],
        vec![CutoffBinding::Interior],
        Vec::new(),
        Diagnostics { iterations: bhm.iterations, max_residual: bhm.residual },
    )
}

/// Profit-maximizing finite menu subject to intermediary obedience.
///
/// For b ≥ b* (when the single-item conditions hold) this is the
/// seller-designed single-item outcome; otherwise every cutoff is pinned by
/// binding obedience and the item count is the largest with positive lowest
/// quality. The result is certified by a dual price function before return.
pub fn solve_optimal_menu(prior: &Prior, cost: &CostFunction, b: f64) -> Result<MenuOutcome> {
    check_bias(b)?;
    let mut warnings = Vec::new();
    match single_item_preconditions(prior, cost) {
        None => {
            let bhm = solve_bhm_single_item(prior, cost)?;
            if b >= bhm.b_star - THRESHOLD_TOL {
                let out = bhm_outcome(prior, cost, b, &bhm)?;
                build_certificate(&out.menu, b, prior, &out.posterior)?;
                return Ok(out);
            }
        }
        Some(detail) => warnings.push(SolverWarning::PreconditionUnverified { detail }),
    }
    let (n, chain) = item_count_search(prior, cost, b)?;
    let pt = chain.posterior_types(prior, b, n)?;
    let mut out = outcome_from_types(prior, cost, b, &pt)?;
    out.warnings.extend(warnings);
    build_certificate(&out.menu, b, prior, &out.posterior)?;
    Ok(out)
}
