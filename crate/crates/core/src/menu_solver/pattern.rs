//! Profit of a monotone-pooling menu for a given pattern of binding cutoffs.
//!
//! Item i pools types in [x_i, x_{i+1}] at m_i = E(θ | x_i ≤ θ ≤ x_{i+1}). Its
//! breakpoint is w_i = x_i + b when obedience binds (the pooled type keeps a
//! rent), w_i = m_i when the cutoff is interior, or both at once. Qualities
//! maximize profit for the resulting breakpoints and masses.

use crate::costs::CostFunction;
use crate::distributions::Prior;
use crate::menu::CutoffBinding;
use crate::numeric::isotonic_increasing;

use super::types::obedient_cutoff;
use super::{screening_profit, screening_scores};

/// Slack allowed in the per-item consistency conditions.
pub(crate) const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub(crate) struct PatternEval {
    pub cutoffs: Vec<f64>,
    #[allow(dead_code)]
    pub means: Vec<f64>,
    pub breakpoints: Vec<f64>,
    pub masses: Vec<f64>,
    pub qualities: Vec<f64>,
    /// Effective binding per item (a bottom `Both` item that reaches 0 becomes `Interior`).
    pub bindings: Vec<CutoffBinding>,
    pub profit: f64,
    /// Largest violation of the per-item consistency conditions (≤ 0 when consistent).
    pub violation: f64,
}

impl PatternEval {
    pub fn consistent(&self) -> bool {
        self.violation <= CONSISTENCY_TOL
    }
}

/// Number of free cutoff variables of a pattern.
pub(crate) fn free_count(pattern: &[CutoffBinding]) -> usize {
    pattern.iter().filter(|b| **b != CutoffBinding::Both).count()
}

/// Evaluates a pattern (bottom item first). `free` holds, top-down, the
/// fraction u with x_i = u · x_{i+1} for every non-`Both` item. `bias = None`
/// drops obedience entirely (every item must then be `Interior`).
pub(crate) fn evaluate(
    prior: &Prior,
    cost: &CostFunction,
    bias: Option<f64>,
    pattern: &[CutoffBinding],
    free: &[f64],
) -> Option<PatternEval> {
    let n = pattern.len();
    let mut cutoffs = vec![0.0; n];
    let mut means = vec![0.0; n];
    let mut breakpoints = vec![0.0; n];
    let mut masses = vec![0.0; n];
    let mut bindings = pattern.to_vec();
    let mut violation = f64::NEG_INFINITY;
    let mut y = 1.0;
    let mut k = 0;
    for i in (0..n).rev() {
        match pattern[i] {
            CutoffBinding::Both => {
                let b = bias?;
                match obedient_cutoff(prior, b, y) {
                    Some(step) => {
                        cutoffs[i] = step.x;
                        means[i] = step.w;
                        breakpoints[i] = step.w;
                    }
                    None if i == 0 => {
                        let m = prior.conditional_mean_unchecked(0.0, y);
                        cutoffs[i] = 0.0;
                        means[i] = m;
                        breakpoints[i] = m;
                        bindings[i] = CutoffBinding::Interior;
                    }
                    None => return None,
                }
            }
            binding => {
                let x = free[k].clamp(0.0, 1.0) * y;
                k += 1;
                let m = prior.conditional_mean_unchecked(x, y);
                cutoffs[i] = x;
                means[i] = m;
                match (binding, bias) {
                    (CutoffBinding::Obedience, Some(b)) => {
                        breakpoints[i] = x + b;
                        violation = violation.max(breakpoints[i] - m);
                    }
                    (CutoffBinding::Obedience, None) => return None,
                    (_, Some(b)) => {
                        breakpoints[i] = m;
                        violation = violation.max(m - b - x);
                    }
                    (_, None) => breakpoints[i] = m,
                }
            }
        }
        masses[i] = prior.mass(cutoffs[i], y);
        y = cutoffs[i];
    }
    if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
        return None;
    }
    let scores = screening_scores(&breakpoints, &masses);
    let ironed = isotonic_increasing(&scores, &masses);
    let qualities: Vec<f64> = ironed.iter().map(|s| cost.inverse_marginal(*s)).collect();
    let profit = screening_profit(cost, &breakpoints, &qualities, &masses);
    Some(PatternEval { cutoffs, means, breakpoints, masses, qualities, bindings, profit, violation })
}
