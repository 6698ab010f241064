//! Market statistics, bias sweeps and regime comparisons.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::costs::CostFunction;
use crate::distributions::{Prior, Segment};
use crate::error::{Error, Result};
use crate::menu::{Diagnostics, MenuOutcome, Regime};
use crate::menu_solver::{
    assemble_outcome, bhm_outcome, single_item_preconditions, solve_bhm_finite, solve_bhm_single_item,
    solve_mussa_rosen, solve_optimal_menu, solve_restricted_menu, BhmFiniteConfig, MussaRosenStats,
};

/// Simpson panels per disclosed piece when integrating first-best quality.
const DISCLOSED_PANELS: usize = 2000;

/// Item count used for the seller-designed benchmark when the single-item
/// conditions cannot be confirmed.
pub const BHM_FALLBACK_ITEMS: usize = 4;

/// CSV column order of [`write_sweep_csv`].
pub const SWEEP_HEADER: [&str; 9] =
    ["b", "regime", "n_items", "profit", "rent", "total_surplus", "distortion", "avg_quality", "trade_prob"];

/// Aggregate outcomes of a menu under the posterior it induces.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct MarketStats {
    pub profit: f64,
    pub consumer_rent: f64,
    pub total_surplus: f64,
    /// E[q^FB(θ)] − E[q(θ)], over all types including the excluded ones.
    pub distortion: f64,
    pub avg_quality: f64,
    pub trade_probability: f64,
}

impl From<MussaRosenStats> for MarketStats {
    fn from(s: MussaRosenStats) -> Self {
        Self {
            profit: s.profit,
            consumer_rent: s.consumer_rent,
            total_surplus: s.total_surplus,
            distortion: s.distortion,
            avg_quality: s.avg_quality,
            trade_probability: s.trade_probability,
        }
    }
}

/// Statistics of an outcome. Pooled parts are summed over atoms; disclosed
/// parts are split at the menu breakpoints and integrated exactly, except
/// for the first-best quality term which uses Simpson's rule.
pub fn market_stats(outcome: &MenuOutcome, prior: &Prior, cost: &CostFunction) -> MarketStats {
    let menu = &outcome.menu;
    let mut s = MarketStats::default();
    let mut first_best = 0.0;
    for seg in outcome.posterior.segments() {
        if let Segment::Disclose { lo, hi } = *seg {
            let mut cuts = vec![lo];
            cuts.extend(menu.breakpoints().iter().copied().filter(|&w| w > lo && w < hi));
            cuts.push(hi);
            for piece in cuts.windows(2) {
                let (a, c) = (piece[0], piece[1]);
                let mass = prior.mass(a, c);
                let moment = prior.partial_moment(c) - prior.partial_moment(a);
                let k = menu.buyer_choice(0.5 * (a + c));
                if k > 0 {
                    let it = menu.items()[k - 1];
                    let cq = cost.value(it.q);
                    s.profit += mass * (it.t - cq);
                    s.consumer_rent += it.q * moment - it.t * mass;
                    s.total_surplus += it.q * moment - cq * mass;
                    s.avg_quality += it.q * mass;
                    s.trade_probability += mass;
                }
                first_best += crate::numeric::simpson(
                    |x| cost.first_best_quality(x) * prior.density(x),
                    a,
                    c,
                    DISCLOSED_PANELS,
                );
            }
        } else {
            for a in seg.atoms() {
                first_best += a.mass * cost.first_best_quality(a.location);
                if menu.buyer_choice(a.location) == 0 {
                    continue;
                }
                let it = menu.chosen(a.location);
                let cq = cost.value(it.q);
                s.profit += a.mass * (it.t - cq);
                s.consumer_rent += a.mass * (a.location * it.q - it.t);
                s.total_surplus += a.mass * (a.location * it.q - cq);
                s.avg_quality += a.mass * it.q;
                s.trade_probability += a.mass;
            }
        }
    }
    s.distortion = first_best - s.avg_quality;
    s
}

/// One row of a bias sweep. Failed solves keep their error message.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub b: f64,
    /// Regime label, or `error` when the solve failed.
    pub regime: String,
    /// Number of items; 0 for the continuum limit and for failed rows.
    pub n_items: usize,
    pub stats: Option<MarketStats>,
    pub error: Option<String>,
    pub diagnostics: Diagnostics,
}

fn sweep_row(prior: &Prior, cost: &CostFunction, b: f64, cap: Option<usize>) -> SweepRow {
    let solved = match cap {
        Some(k) => solve_restricted_menu(prior, cost, b, k),
        None => solve_optimal_menu(prior, cost, b),
    };
    let failed = |e: Error| SweepRow {
        b,
        regime: "error".into(),
        n_items: 0,
        stats: None,
        error: Some(e.to_string()),
        diagnostics: Diagnostics::default(),
    };
    match solved {
        Ok(out) => SweepRow {
            b,
            regime: out.regime.label().into(),
            n_items: out.menu.len(),
            stats: Some(market_stats(&out, prior, cost)),
            error: None,
            diagnostics: out.diagnostics.clone(),
        },
        Err(Error::CapReached { .. }) => match solve_mussa_rosen(prior, cost) {
            Ok(mr) => SweepRow {
                b,
                regime: Regime::MussaRosenLimit.label().into(),
                n_items: 0,
                stats: Some(mr.stats.into()),
                error: None,
                diagnostics: Diagnostics::default(),
            },
            Err(e) => failed(e),
        },
        Err(e) => failed(e),
    }
}

/// Solves every bias on `b_grid` (positive and strictly increasing) with
/// `jobs` worker threads. Rows come back in grid order; a failed solve is
/// recorded in its row and does not stop the sweep.
pub fn sweep(prior: &Prior, cost: &CostFunction, b_grid: &[f64], cap: Option<usize>, jobs: usize) -> Result<Vec<SweepRow>> {
    if b_grid.is_empty() {
        return Err(Error::InvalidInput("bias grid is empty".into()));
    }
    if !b_grid.iter().all(|b| b.is_finite() && *b > 0.0) || b_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("bias grid must be positive and strictly increasing".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start {jobs} worker threads: {e}")))?;
    Ok(pool.install(|| b_grid.par_iter().map(|&b| sweep_row(prior, cost, b, cap)).collect()))
}

/// `%.12g`-style formatting: 12 significant digits, trailing zeros removed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rounds to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x.is_finite() {
        format_sig(x, digits).parse().unwrap_or(x)
    } else {
        x
    }
}

/// Writes sweep rows as CSV with 12 significant digits. Failed rows carry the
/// regime `error` and NaN statistics.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        let s = r.stats.unwrap_or(MarketStats {
            profit: f64::NAN,
            consumer_rent: f64::NAN,
            total_surplus: f64::NAN,
            distortion: f64::NAN,
            avg_quality: f64::NAN,
            trade_probability: f64::NAN,
        });
        let f = |x: f64| format_sig(x, 12);
        w.write_record([
            f(r.b),
            r.regime.clone(),
            r.n_items.to_string(),
            f(s.profit),
            f(s.consumer_rent),
            f(s.total_surplus),
            f(s.distortion),
            f(s.avg_quality),
            f(s.trade_probability),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Statistics of one regime in a comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeStats {
    pub regime: Regime,
    pub n_items: usize,
    pub stats: MarketStats,
}

/// Full-information screening, the obedience-constrained menu and the
/// seller-designed information benchmark at one bias.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeComparison {
    pub b: f64,
    pub mussa_rosen: RegimeStats,
    pub intermediary: RegimeStats,
    pub bhm: RegimeStats,
}

fn seller_designed(prior: &Prior, cost: &CostFunction, b: f64) -> Result<MenuOutcome> {
    if single_item_preconditions(prior, cost).is_none() {
        let single = solve_bhm_single_item(prior, cost)?;
        return bhm_outcome(prior, cost, b, &single);
    }
    let f = solve_bhm_finite(prior, cost, BHM_FALLBACK_ITEMS, &BhmFiniteConfig::default())?;
    let bindings = vec![crate::menu::CutoffBinding::Interior; f.menu.len()];
    let diagnostics = Diagnostics { iterations: f.evaluations, max_residual: f.first_order_residual };
    assemble_outcome(prior, cost, b, Regime::Bhm, f.menu, f.cutoffs, bindings, Vec::new(), diagnostics)
}

/// Compares the three regimes at bias `b`.
pub fn compare_regimes(prior: &Prior, cost: &CostFunction, b: f64) -> Result<RegimeComparison> {
    let mr = solve_mussa_rosen(prior, cost)?;
    let mussa_rosen = RegimeStats { regime: Regime::MussaRosenLimit, n_items: 0, stats: mr.stats.into() };
    let intermediary = match solve_optimal_menu(prior, cost, b) {
        Ok(out) => RegimeStats { regime: out.regime, n_items: out.menu.len(), stats: market_stats(&out, prior, cost) },
        Err(Error::CapReached { .. }) => mussa_rosen.clone(),
        Err(e) => return Err(e),
    };
    let bhm = seller_designed(prior, cost, b)?;
    let bhm = RegimeStats { regime: Regime::Bhm, n_items: bhm.menu.len(), stats: market_stats(&bhm, prior, cost) };
    Ok(RegimeComparison { b, mussa_rosen, intermediary, bhm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::PosteriorDistribution;
    use crate::menu::Menu;
    use crate::uq_closed_form::uq_unrestricted_menu;
    use approx::assert_abs_diff_eq;

    fn uq() -> (Prior, CostFunction) {
        (Prior::uniform(), CostFunction::power(2.0).unwrap())
    }

    #[test]
    fn formats_like_printf_g() {
        assert_eq!(format_sig(0.1, 12), "0.1");
        assert_eq!(format_sig(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_sig(2.0 / 3.0, 12), "0.666666666667");
        assert_eq!(format_sig(1e-7, 12), "1e-07");
        assert_eq!(format_sig(123456789012345.0, 12), "1.23456789012e+14");
        assert_eq!(format_sig(-0.25, 12), "-0.25");
        assert_eq!(format_sig(0.0, 12), "0");
        assert_eq!(format_sig(f64::NAN, 12), "NaN");
        assert_eq!(format_sig(9.9999999999999, 12), "10");
        assert_eq!(round_sig(0.1 + 0.2, 12), 0.3);
    }

    #[test]
    fn closed_form_menu_statistics() {
        let (p, c) = uq();
        let o = uq_unrestricted_menu(0.1).unwrap();
        let s = market_stats(&o, &p, &c);
        // Items 0.1, 0.5, 0.9 at mass 0.2 each; rents 0, 0.02, 0.12.
        assert_abs_diff_eq!(s.avg_quality, 0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(s.trade_probability, 0.6, epsilon = 1e-14);
        assert_abs_diff_eq!(s.consumer_rent, 0.028, epsilon = 1e-14);
        assert_abs_diff_eq!(s.consumer_rent, o.consumer_rent, epsilon = 1e-14);
        assert_abs_diff_eq!(s.profit, o.profit, epsilon = 1e-14);
        assert_abs_diff_eq!(s.distortion, 0.5 - 0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(s.total_surplus, s.profit + s.consumer_rent, epsilon = 1e-14);
    }

    #[test]
    fn disclosed_intervals_are_integrated() {
        let (p, c) = uq();
        // Single item (q, t) = (0.5, 0.25) under full disclosure: types above 1/2 buy.
        let menu = Menu::transfers_from(&[0.5], &[0.5]).unwrap();
        let mut o = uq_unrestricted_menu(0.3).unwrap();
        o.menu = menu;
        o.posterior = PosteriorDistribution::full_disclosure();
        let s = market_stats(&o, &p, &c);
        assert_abs_diff_eq!(s.trade_probability, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(s.profit, 0.5 * (0.25 - 0.125), epsilon = 1e-14);
        // ∫_{1/2}^1 (0.5θ − 0.25) dθ = 1/16.
        assert_abs_diff_eq!(s.consumer_rent, 1.0 / 16.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.distortion, 0.5 - 0.25, epsilon = 1e-12);
    }

    #[test]
    fn sweep_keeps_order_and_records_failures() {
        let (p, c) = uq();
        let grid = [0.05, 0.1, 0.2, 0.4];
        let rows = sweep(&p, &c, &grid, None, 3).unwrap();
        assert_eq!(rows.iter().map(|r| r.b).collect::<Vec<_>>(), grid);
        assert_eq!(rows[3].regime, "bhm");
        assert_eq!(rows[1].n_items, 3);
        let seq = sweep(&p, &c, &grid, None, 1).unwrap();
        assert_eq!(rows, seq);
        assert!(sweep(&p, &c, &[0.2, 0.1], None, 1).is_err());
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("b,regime,n_items,profit,rent,total_surplus,distortion,avg_quality,trade_prob\n"));
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn comparison_at_one_tenth() {
        let (p, c) = uq();
        let r = compare_regimes(&p, &c, 0.1).unwrap();
        assert_abs_diff_eq!(r.mussa_rosen.stats.consumer_rent, 1.0 / 24.0, epsilon = 1e-6);
        assert_eq!(r.intermediary.n_items, 3);
        assert_eq!(r.bhm.n_items, 1);
        assert!(r.intermediary.stats.total_surplus < r.bhm.stats.total_surplus);
    }
}
