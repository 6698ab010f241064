//! Seller-designed information benchmarks: the single-item optimum with its
//! bias threshold b*, and numerically optimized N-item menus with threshold b̂.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::costs::CostFunction;
use crate::distributions::Prior;
use crate::error::{Error, Result};
use crate::menu::{CutoffBinding, Menu};
use crate::numeric::{bisect, golden_max, nelder_mead_restarted};

use super::pattern::{evaluate, PatternEval};
use super::QUALITY_TOL;

/// Single-item optimum when the seller designs information.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BhmSingleItem {
    /// Lowest type that buys.
    pub v_star: f64,
    pub q_star: f64,
    /// Pooled type E(θ | v* ≤ θ ≤ 1).
    pub w_star: f64,
    /// Price w* q*.
    pub p_star: f64,
    /// Bias threshold w* − v*.
    pub b_star: f64,
    pub profit: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Solves w = c'(q), v q = c(q), w = E(θ | v ≤ θ ≤ 1) by bisection on v.
pub fn solve_bhm_single_item(prior: &Prior, cost: &CostFunction) -> Result<BhmSingleItem> {
    let at = |v: f64| {
        let w = prior.conditional_mean_unchecked(v, 1.0);
        let q = cost.inverse_marginal(w);
        (w, q, v * q - cost.value(q))
    };
    let root = bisect(|v| at(v).2, 0.0, 1.0, 200).ok_or(Error::NoInteriorSolution { lo: 0.0, hi: 1.0 })?;
    let v = root.x;
    let (w, q, r) = at(v);
    if !(q > 0.0) {
        return Err(Error::NoInteriorSolution { lo: 0.0, hi: 1.0 });
    }
    let residual = r.abs().max((cost.marginal(q) - w).abs() * f64::from(!cost.cap_binds(q)));
    Ok(BhmSingleItem {
        v_star: v,
        q_star: q,
        w_star: w,
        p_star: w * q,
        b_star: w - v,
        profit: prior.mass(v, 1.0) * (w * q - cost.value(q)),
        residual,
        iterations: root.iterations,
    })
}

/// Search settings for [`solve_bhm_finite`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BhmFiniteConfig {
    pub starts: usize,
    pub seed: u64,
    /// Coordinate-ascent sweeps per start.
    pub sweeps: usize,
}

impl Default for BhmFiniteConfig {
    fn default() -> Self {
        Self { starts: 16, seed: 0x5EED_B4A1, sweeps: 8 }
    }
}

/// Best-found N-item menu when the seller designs information.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BhmFinite {
    pub n_requested: usize,
    /// Items with positive, distinct qualities.
    pub menu: Menu,
    /// Lower cutoff v_i of each offered item's pool.
    pub cutoffs: Vec<f64>,
    /// Breakpoints w_i of the offered items.
    pub types: Vec<f64>,
    /// Prior mass of each offered item's buyers.
    pub masses: Vec<f64>,
    pub profit: f64,
    /// max_i (w_i − v_i) over offered items.
    pub b_hat: f64,
    /// Largest absolute finite-difference derivative of profit in the cutoffs.
    pub first_order_residual: f64,
    pub evaluations: usize,
}

/// Maximizes profit over N pooling cutoffs with each item's breakpoint equal
/// to its pooled type, by seeded multi-start coordinate ascent and a
/// Nelder-Mead polish.
pub fn solve_bhm_finite(prior: &Prior, cost: &CostFunction, n: usize, config: &BhmFiniteConfig) -> Result<BhmFinite> {
    if n == 0 {
        return Err(Error::InvalidInput("item count must be at least 1".into()));
    }
    let pattern = vec![CutoffBinding::Interior; n];
    let objective = |u: &[f64]| evaluate(prior, cost, None, &pattern, u).map_or(f64::NEG_INFINITY, |e| e.profit);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut evaluations = 0;
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..config.starts.max(1) {
        let mut u: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
        let mut value = objective(&u);
        for _ in 0..config.sweeps {
            let before = value;
            for j in 0..n {
                let (x, v) = golden_max(
                    |s| {
                        let mut trial = u.clone();
                        trial[j] = s;
                        objective(&trial)
                    },
                    0.0,
                    1.0,
                    1e-10,
                );
                evaluations += 60;
                if v >= value {
                    u[j] = x;
                    value = v;
                }
            }
            if value - before <= 1e-15 {
                break;
            }
        }
        let polished = nelder_mead_restarted(|x| -objective(x), &u, 0.05, 1e-12, 4000);
        evaluations += polished.evaluations;
        let (u, value) = if -polished.value >= value { (polished.x, -polished.value) } else { (u, value) };
        if best.as_ref().is_none_or(|b| value > b.1 + 1e-15) {
            best = Some((u, value));
        }
    }
    let (u, _) = best.expect("at least one start");
    let e = evaluate(prior, cost, None, &pattern, &u).ok_or(Error::NoInteriorSolution { lo: 0.0, hi: 1.0 })?;
    let first_order_residual = cutoff_gradient(prior, cost, &e);
    finite_result(n, e, first_order_residual, evaluations)
}

/// Central finite differences of profit in each cutoff, breakpoints following
/// the pooled types.
fn cutoff_gradient(prior: &Prior, cost: &CostFunction, e: &PatternEval) -> f64 {
    let n = e.cutoffs.len();
    let profit_at = |x: &[f64]| -> Option<f64> {
        let mut u = vec![0.0; n];
        let mut y = 1.0;
        for i in (0..n).rev() {
            if !(x[i] <= y) {
                return None;
            }
            u[n - 1 - i] = if y > 0.0 { x[i] / y } else { 0.0 };
            y = x[i];
        }
        evaluate(prior, cost, None, &vec![CutoffBinding::Interior; n], &u).map(|e| e.profit)
    };
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        if e.masses[i] <= 1e-12 || e.qualities[i] <= QUALITY_TOL {
            continue;
        }
        let (mut up, mut dn) = (e.cutoffs.clone(), e.cutoffs.clone());
        up[i] += h;
        dn[i] -= h;
        if let (Some(a), Some(b)) = (profit_at(&up), profit_at(&dn)) {
            worst = worst.max(((a - b) / (2.0 * h)).abs());
        }
    }
    worst
}

fn finite_result(n: usize, e: PatternEval, first_order_residual: f64, evaluations: usize) -> Result<BhmFinite> {
    let mut keep: Vec<usize> = Vec::new();
    for i in 0..n {
        if e.qualities[i] <= QUALITY_TOL || e.masses[i] <= 1e-12 {
            continue;
        }
        match keep.last() {
            Some(&j) if (e.qualities[i] - e.qualities[j]).abs() <= 1e-9 => {}
            _ => keep.push(i),
        }
    }
    if keep.is_empty() {
        return Err(Error::NoInteriorSolution { lo: 0.0, hi: 1.0 });
    }
    let types: Vec<f64> = keep.iter().map(|&i| e.breakpoints[i]).collect();
    let qualities: Vec<f64> = keep.iter().map(|&i| e.qualities[i]).collect();
    let cutoffs: Vec<f64> = keep.iter().map(|&i| e.cutoffs[i]).collect();
    let masses: Vec<f64> = keep
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let end = keep.get(k + 1).copied().unwrap_or(n);
            e.masses[i..end].iter().sum()
        })
        .collect();
    let b_hat = types.iter().zip(&cutoffs).map(|(w, v)| w - v).fold(f64::NEG_INFINITY, f64::max);
    Ok(BhmFinite {
        n_requested: n,
        menu: Menu::transfers_from(&types, &qualities)?,
        cutoffs,
        types,
        masses,
        profit: e.profit,
        b_hat,
        first_order_residual,
        evaluations,
    })
}
