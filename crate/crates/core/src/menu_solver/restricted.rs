//! Best menu with at most `cap` items under intermediary obedience, found by
//! enumerating which condition pins down each item's cutoff.

use crate::costs::CostFunction;
use crate::distributions::Prior;
use crate::error::{Error, Result};
use crate::menu::{CutoffBinding, Diagnostics, Menu, MenuOutcome, Regime, SolverWarning};
use crate::numeric::nelder_mead_restarted;
use crate::persuasion::build_certificate;

use super::pattern::{evaluate, free_count, PatternEval};
use super::{assemble_outcome, check_bias, QUALITY_TOL};

/// Largest cap accepted (3^cap patterns per item count).
pub const MAX_RESTRICTED_CAP: usize = 8;

/// Minimum gap between adjacent qualities of a candidate.
const DISTINCT_QUALITY: f64 = 1e-9;

/// Starting fractions for the free cutoffs.
const STARTS: [f64; 3] = [0.5, 0.8, 0.2];

/// All binding patterns for `n` items, bottom item first.
fn patterns(n: usize) -> Vec<Vec<CutoffBinding>> {
    const ALL: [CutoffBinding; 3] = [CutoffBinding::Both, CutoffBinding::Obedience, CutoffBinding::Interior];
    let total = 3usize.pow(n as u32);
    (0..total)
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let b = ALL[code % 3];
                    code /= 3;
                    b
                })
                .collect()
        })
        .collect()
}

/// Best consistent evaluation of one pattern, if any.
fn optimize_pattern(
    prior: &Prior,
    cost: &CostFunction,
    b: f64,
    pattern: &[CutoffBinding],
    evaluations: &mut usize,
) -> Option<PatternEval> {
    let d = free_count(pattern);
    if d == 0 {
        *evaluations += 1;
        return evaluate(prior, cost, Some(b), pattern, &[]);
    }
    let objective = |u: &[f64]| {
        if u.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return f64::INFINITY;
        }
        evaluate(prior, cost, Some(b), pattern, u).map_or(f64::INFINITY, |e| -e.profit)
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in STARTS {
        let m = nelder_mead_restarted(objective, &vec![s; d], 0.1, 1e-13, 4000);
        *evaluations += m.evaluations;
        if best.as_ref().is_none_or(|b| m.value < b.1) {
            best = Some((m.x, m.value));
        }
    }
    let (u, value) = best?;
    if !value.is_finite() {
        return None;
    }
    evaluate(prior, cost, Some(b), pattern, &u)
}

fn admissible(e: &PatternEval) -> bool {
    e.consistent()
        && e.qualities[0] > QUALITY_TOL
        && e.qualities.windows(2).all(|q| q[1] - q[0] > DISTINCT_QUALITY)
        && e.masses.iter().all(|m| *m > 1e-12)
}

/// Profit-maximizing menu with at most `cap` items.
///
/// For each item count and each assignment of {obedience binds, interior,
/// both} to the item cutoffs, the free cutoffs are optimized numerically.
/// Candidates that violate their own binding assumptions or fail the dual
/// price certificate are discarded; the most profitable survivor is returned
/// (ties go to fewer items).
pub fn solve_restricted_menu(prior: &Prior, cost: &CostFunction, b: f64, cap: usize) -> Result<MenuOutcome> {
    check_bias(b)?;
    if cap == 0 || cap > MAX_RESTRICTED_CAP {
        return Err(Error::InvalidInput(format!("cap must be between 1 and {MAX_RESTRICTED_CAP}, got {cap}")));
    }
    let mut evaluations = 0;
    let mut best: Option<MenuOutcome> = None;
    for n in 1..=cap {
        for pattern in patterns(n) {
            let Some(e) = optimize_pattern(prior, cost, b, &pattern, &mut evaluations) else {
                continue;
            };
            if !admissible(&e) {
                continue;
            }
            if best.as_ref().is_some_and(|o| e.profit <= o.profit + 1e-12) {
                continue;
            }
            let Ok(menu) = Menu::transfers_from(&e.breakpoints, &e.qualities) else {
                continue;
            };
            let regime = if e.bindings.iter().all(|b| *b == CutoffBinding::Interior) {
                Regime::Bhm
            } else {
                Regime::IntermediaryConstrained
            };
            let diagnostics = Diagnostics { iterations: evaluations, max_residual: e.violation.max(0.0) };
            let Ok(out) =
                assemble_outcome(prior, cost, b, regime, menu, e.cutoffs.clone(), e.bindings.clone(), Vec::new(), diagnostics)
            else {
                continue;
            };
            if build_certificate(&out.menu, b, prior, &out.posterior).is_ok() {
                best = Some(out);
            }
        }
    }
    let mut out = best.ok_or(Error::NoFeasiblePattern)?;
    out.diagnostics.iterations = evaluations;
    out.warnings.push(SolverWarning::BestFound {
        detail: format!("best certified candidate of a numerical search over binding patterns with at most {cap} items"),
    });
    Ok(out)
}
