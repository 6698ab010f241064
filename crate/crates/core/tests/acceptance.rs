//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::time::Instant;

use screening_core::costs::CostFunction;
use screening_core::distributions::{PosteriorDistribution, Prior};
use screening_core::menu::{CutoffBinding, Menu, MenuOutcome, Regime};
use screening_core::menu_solver::{
    bhm_outcome, optimal_item_count, solve_bhm_single_item, solve_mussa_rosen, solve_optimal_menu,
    solve_restricted_menu,
};
use screening_core::outcomes::{compare_regimes, market_stats};
use screening_core::persuasion::{
    build_certificate, check_obedience, intermediary_value, oracle_best_response, DEFAULT_GRID_M,
};
use screening_core::uq_closed_form::{uq_item_count, uq_restricted_menu, uq_unrestricted_menu};

// Pinned tolerances.
const TOL_SINGLE_ITEM: f64 = 1e-8;
const TOL_CLOSED_FORM: f64 = 1e-7;
const MAX_CLOSED_FORM_SECONDS: f64 = 30.0;
const TOL_RESTRICTED: f64 = 1e-6;
const TOL_FIRST_ORDER: f64 = 1e-8;
const TOL_MONOTONE: f64 = 1e-12;
const TOL_ACCOUNTING: f64 = 1e-10;
const MIN_LP_MARGIN: f64 = 1e-4;
const MIN_POOL_BREAKPOINTS: usize = 4;
const MAX_NARROW_BREAKPOINTS: usize = 2;
const MERGE_OVERLAP_CELLS: f64 = 1.5;
const TOL_LIMIT_RENT: f64 = 0.02;

type Check = std::result::Result<String, String>;
type Solved = [(f64, MenuOutcome)];

fn uq() -> (Prior, CostFunction) {
    (Prior::uniform(), CostFunction::power(2.0).expect("quadratic cost"))
}

/// 500 interior points of (0.001, 0.33).
fn grid() -> Vec<f64> {
    (1..=500).map(|i| 0.001 + 0.329 * i as f64 / 501.0).collect()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn criterion_1() -> Check {
    let (p, c) = uq();
    let s = solve_bhm_single_item(&p, &c).map_err(|e| e.to_string())?;
    let pairs = [
        ("v*", s.v_star, 1.0 / 3.0),
        ("q*", s.q_star, 2.0 / 3.0),
        ("w*", s.w_star, 2.0 / 3.0),
        ("p*", s.p_star, 4.0 / 9.0),
        ("b*", s.b_star, 1.0 / 3.0),
    ];
    let worst = pairs.iter().map(|(_, a, b)| (a - b).abs()).fold(0.0, f64::max);
    for (name, got, want) in pairs {
        ensure((got - want).abs() <= TOL_SINGLE_ITEM, || format!("{name} = {got}, expected {want}"))?;
    }
    Ok(format!("max error {worst:.2e}"))
}

fn criterion_2(solved: &[(f64, MenuOutcome)]) -> Check {
    let (p, c) = uq();
    for (b, want) in [(0.1, 3), (0.01, 25), (0.001, 250)] {
        let n = optimal_item_count(&p, &c, b).map_err(|e| e.to_string())?;
        ensure(n == want, || format!("N*({b}) = {n}, expected {want}"))?;
    }
    for (b, out) in solved {
        let n = out.menu.len();
        let closed = uq_item_count(*b).map_err(|e| e.to_string())?;
        ensure(n == closed, || format!("b = {b}: solver {n} items, closed form {closed}"))?;
        let counted = optimal_item_count(&p, &c, *b).map_err(|e| e.to_string())?;
        ensure(counted == closed, || format!("b = {b}: item count {counted}, closed form {closed}"))?;
    }
    Ok(format!("3/25/250 and {} grid points agree", solved.len()))
}

fn criterion_3(solved: &[(f64, MenuOutcome)], seconds: f64) -> Check {
    let mut worst: f64 = 0.0;
    for (b, out) in solved {
        let cf = uq_unrestricted_menu(*b).map_err(|e| e.to_string())?;
        let d = [
            max_diff(&out.types, &cf.types),
            max_diff(&out.menu.qualities(), &cf.menu.qualities()),
            max_diff(&out.menu.transfers(), &cf.menu.transfers()),
            max_diff(&out.masses, &cf.masses),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        ensure(d <= TOL_CLOSED_FORM, || format!("b = {b}: deviation {d:.3e}"))?;
        worst = worst.max(d);
    }
    ensure(seconds < MAX_CLOSED_FORM_SECONDS, || format!("grid solve took {seconds:.1} s"))?;
    Ok(format!("max deviation {worst:.2e}, {seconds:.2} s"))
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Branch {
    Rent,
    Constrained,
    Seller,
}

fn criterion_4() -> Check {
    let (p, c) = uq();
    let mut worst: f64 = 0.0;
    let mut branches = Vec::new();
    for j in 1..=200 {
        let b = 0.5 * (j as f64 - 0.5) / 200.0;
        let out = solve_restricted_menu(&p, &c, b, 1).map_err(|e| format!("b = {b}: {e}"))?;
        ensure(out.menu.len() == 1, || format!("b = {b}: {} items", out.menu.len()))?;
        let q = out.menu.items()[0].q;
        let want = if b >= 1.0 / 3.0 {
            2.0 / 3.0
        } else if b >= 0.2 {
            1.0 - b
        } else {
            2.0 * (b + 1.0) / 3.0
        };
        ensure((q - want).abs() <= TOL_RESTRICTED, || format!("b = {b}: q = {q}, expected {want}"))?;
        worst = worst.max((q - want).abs());
        let branch = match (out.regime, out.bindings[0]) {
            (Regime::Bhm, _) => Branch::Seller,
            (_, CutoffBinding::Obedience) => Branch::Rent,
            _ => Branch::Constrained,
        };
        branches.push((b, branch));
    }
    let step = 0.5 / 200.0;
    let switch = |from: Branch, to: Branch| -> std::result::Result<f64, String> {
        let last = branches.iter().filter(|(_, r)| *r == from).map(|(b, _)| *b).fold(f64::NEG_INFINITY, f64::max);
        let first = branches.iter().filter(|(_, r)| *r == to).map(|(b, _)| *b).fold(f64::INFINITY, f64::min);
        ensure(last < first && first - last <= step + 1e-12, || format!("{from:?} -> {to:?} not a single switch"))?;
        Ok(0.5 * (last + first))
    };
    let s1 = switch(Branch::Rent, Branch::Constrained)?;
    let s2 = switch(Branch::Constrained, Branch::Seller)?;
    ensure((s1 - 0.2).abs() <= step, || format!("first switch at {s1}"))?;
    ensure((s2 - 1.0 / 3.0).abs() <= step, || format!("second switch at {s2}"))?;
    Ok(format!("max error {worst:.2e}, switches near {s1:.4} and {s2:.4}"))
}

fn criterion_5() -> Check {
    let (p, c) = uq();
    let mut worst: f64 = 0.0;
    for cap in [2, 3] {
        for b in [0.15, 0.12, 0.09, 0.05] {
            let out = solve_restricted_menu(&p, &c, b, cap).map_err(|e| format!("cap {cap}, b = {b}: {e}"))?;
            let cf = uq_restricted_menu(b, cap).map_err(|e| e.to_string())?;
            let d = max_diff(&out.menu.qualities(), &cf.qualities()).max(max_diff(&out.menu.transfers(), &cf.transfers()));
            ensure(d <= TOL_RESTRICTED, || {
                format!("cap {cap}, b = {b}: {:?} vs {:?}", out.menu.qualities(), cf.qualities())
            })?;
            worst = worst.max(d);
        }
    }
    Ok(format!("max deviation {worst:.2e}"))
}

fn criterion_6() -> Check {
    let (p, c) = uq();
    let mut worst_ratio: f64 = f64::NEG_INFINITY;
    for b in [0.05, 0.1, 0.2, 0.25, 0.4] {
        let out = solve_optimal_menu(&p, &c, b).map_err(|e| format!("b = {b}: {e}"))?;
        build_certificate(&out.menu, b, &p, &out.posterior).map_err(|e| format!("b = {b}: {e}"))?;
        let q_top = out.menu.items().last().expect("nonempty menu").q;
        for m in [201, 401] {
            let r = check_obedience(&out.menu, b, &p, &out.posterior, m, None).map_err(|e| e.to_string())?;
            let bound = 2.0 / m as f64 * q_top;
            ensure(r.gap <= bound, || format!("b = {b}, m = {m}: gap {:.3e} above {bound:.3e}", r.gap))?;
            worst_ratio = worst_ratio.max(r.gap / bound);
        }
    }
    let single = solve_bhm_single_item(&p, &c).map_err(|e| e.to_string())?;
    let bhm = bhm_outcome(&p, &c, 0.2, &single).map_err(|e| e.to_string())?;
    ensure(build_certificate(&bhm.menu, 0.2, &p, &bhm.posterior).is_err(), || {
        "single-item menu certified at b = 0.2".into()
    })?;
    let mut gaps = Vec::new();
    for m in [201, 401] {
        let r = check_obedience(&bhm.menu, 0.2, &p, &bhm.posterior, m, None).map_err(|e| e.to_string())?;
        ensure(r.gap > 0.0 && !r.obedient, || format!("single item at b = 0.2, m = {m}: gap {:.3e}", r.gap))?;
        gaps.push(r.gap);
    }
    Ok(format!("worst gap/bound {worst_ratio:.3}, single-item gaps {:.3e}, {:.3e}", gaps[0], gaps[1]))
}

fn criterion_7() -> Check {
    let (p, c) = uq();
    let single = solve_bhm_single_item(&p, &c).map_err(|e| e.to_string())?;
    for (b, should_pass) in
        [(1.0 / 3.0, true), (0.34, true), (0.5, true), (0.30, false), (0.32, false), (0.333, false)]
    {
        let out = bhm_outcome(&p, &c, b, &single).map_err(|e| e.to_string())?;
        let passed = build_certificate(&out.menu, b, &p, &out.posterior).is_ok();
        ensure(passed == should_pass, || format!("b = {b}: certificate {}", if passed { "passed" } else { "failed" }))?;
    }
    Ok("succeeds at 1/3, 0.34, 0.5; fails at 0.30, 0.32, 0.333".into())
}

fn criterion_8(solved: &[(f64, MenuOutcome)]) -> Check {
    let (_, c) = uq();
    let mut top_worst: f64 = 0.0;
    for (b, out) in solved {
        let w = out.trading_types();
        let q = out.menu.qualities();
        let n = q.len();
        let top = (c.marginal(q[n - 1]) - w[n - 1]).abs();
        ensure(top <= TOL_FIRST_ORDER, || format!("b = {b}: top residual {top:.3e}"))?;
        top_worst = top_worst.max(top);
        for i in 0..n - 1 {
            ensure(c.marginal(q[i]) < w[i] - TOL_FIRST_ORDER, || format!("b = {b}: item {} undistorted", i + 1))?;
        }
    }
    Ok(format!("top residual {top_worst:.2e}, lower items distorted downward"))
}

fn criterion_9(solved: &[(f64, MenuOutcome)]) -> Check {
    for pair in solved.windows(2) {
        let ((b0, o0), (b1, o1)) = (&pair[0], &pair[1]);
        ensure(o1.profit >= o0.profit - TOL_MONOTONE, || format!("profit falls between b = {b0} and {b1}"))?;
        ensure(o1.menu.len() <= o0.menu.len(), || format!("item count rises between b = {b0} and {b1}"))?;
        let (w0, w1) = (o0.trading_types().last().unwrap(), o1.trading_types().last().unwrap());
        ensure(w1 < w0, || format!("top type does not fall between b = {b0} and {b1}"))?;
    }
    let rents: Vec<(f64, f64)> = solved.iter().map(|(b, o)| (*b, o.consumer_rent)).collect();
    let rise = rents.windows(2).find(|r| r[1].1 > r[0].1);
    let fall = rents.windows(2).find(|r| r[1].1 < r[0].1);
    match (rise, fall) {
        (Some(r), Some(f)) => Ok(format!(
            "rent rises on [{:.4}, {:.4}] and falls on [{:.4}, {:.4}]",
            r[0].0, r[1].0, f[0].0, f[1].0
        )),
        _ => Err("rent is monotone on the grid".into()),
    }
}

fn criterion_10(solved: &[(f64, MenuOutcome)]) -> Check {
    let (p, c) = uq();
    let r = compare_regimes(&p, &c, 0.1).map_err(|e| e.to_string())?;
    let (int, bhm, mr) = (&r.intermediary.stats, &r.bhm.stats, &r.mussa_rosen.stats);
    ensure(int.total_surplus < bhm.total_surplus, || {
        format!("TS intermediary {} vs BHM {}", int.total_surplus, bhm.total_surplus)
    })?;
    ensure(bhm.consumer_rent == 0.0, || format!("BHM rent {}", bhm.consumer_rent))?;
    ensure(int.consumer_rent > bhm.consumer_rent, || format!("intermediary rent {}", int.consumer_rent))?;
    ensure(int.distortion < mr.distortion, || format!("distortion {} vs {}", int.distortion, mr.distortion))?;
    let mut worst: f64 = 0.0;
    let mut all = vec![*int, *bhm, *mr];
    all.extend(solved.iter().map(|(_, o)| market_stats(o, &p, &c)));
    for s in &all {
        let d = (s.total_surplus - s.profit - s.consumer_rent).abs();
        ensure(d <= TOL_ACCOUNTING, || format!("TS - profit - rent = {d:.3e}"))?;
        worst = worst.max(d);
    }
    Ok(format!(
        "TS {:.5} < {:.5}, rent {:.5} > 0, distortion {:.5} < {:.5}, identity {worst:.1e}",
        int.total_surplus, bhm.total_surplus, int.consumer_rent, int.distortion, mr.distortion
    ))
}

/// Step menu approximating full-information qualities under cubic cost.
fn example_two_menu() -> Menu {
    let w: Vec<f64> = (0..40).map(|i| 0.5 + i as f64 / 80.0).collect();
    let q: Vec<f64> = w.iter().map(|x| (2.0 * (x + 1.0 / 160.0) - 1.0).sqrt()).collect();
    Menu::transfers_from(&w, &q).expect("valid step menu")
}

fn criterion_11() -> Check {
    let p = Prior::uniform();
    let b = 0.1;
    let menu = example_two_menu();
    let sol = oracle_best_response(&menu, b, &p, DEFAULT_GRID_M).map_err(|e| e.to_string())?;
    // Cluster trading actions whose cell supports share more than a boundary cell.
    let cell = 1.0 / DEFAULT_GRID_M as f64;
    let mut supports: Vec<(f64, f64)> = sol.action_supports[1..].iter().flatten().copied().collect();
    supports.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut clusters: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in supports {
        match clusters.last_mut() {
            Some(last) if last.1 - lo > MERGE_OVERLAP_CELLS * cell => last.1 = last.1.max(hi),
            _ => clusters.push((lo, hi)),
        }
    }
    let blocks: Vec<(f64, f64, usize)> = clusters
        .iter()
        .map(|&(lo, hi)| (lo, hi, menu.breakpoints().iter().filter(|&&w| w > lo && w < hi).count()))
        .collect();
    ensure(!blocks.is_empty(), || "no trading action recommended".into())?;
    let wide: Vec<usize> = (0..blocks.len()).filter(|&i| blocks[i].2 >= MIN_POOL_BREAKPOINTS).collect();
    ensure(wide == [0], || format!("wide blocks at {wide:?} of {}", blocks.len()))?;
    ensure(blocks[1..].iter().all(|b| b.2 <= MAX_NARROW_BREAKPOINTS), || "a block above the pool is not narrow".into())?;
    let disclosure = intermediary_value(&menu, b, &p, &PosteriorDistribution::full_disclosure());
    let margin = sol.value - disclosure;
    ensure(margin > MIN_LP_MARGIN, || format!("LP {} vs full disclosure {disclosure}", sol.value))?;
    Ok(format!(
        "pool [{:.4}, {:.4}] then {} narrow blocks; LP {:.6} vs disclosure {:.6}",
        blocks[0].0,
        blocks[0].1,
        blocks.len() - 1,
        sol.value,
        disclosure
    ))
}

fn criterion_12() -> Check {
    let (p, c) = uq();
    let out = solve_optimal_menu(&p, &c, 0.001).map_err(|e| e.to_string())?;
    let mr = solve_mussa_rosen(&p, &c).map_err(|e| e.to_string())?;
    let d = (out.consumer_rent - mr.stats.consumer_rent).abs();
    ensure(d <= TOL_LIMIT_RENT, || format!("rent {} vs {}", out.consumer_rent, mr.stats.consumer_rent))?;
    Ok(format!("rent {:.6} vs limit {:.6}", out.consumer_rent, mr.stats.consumer_rent))
}

fn main() {
    let (p, c) = uq();
    let start = Instant::now();
    let solved: std::result::Result<Vec<(f64, MenuOutcome)>, String> = grid()
        .into_iter()
        .map(|b| solve_optimal_menu(&p, &c, b).map(|o| (b, o)).map_err(|e| format!("b = {b}: {e}")))
        .collect();
    let seconds = start.elapsed().as_secs_f64();
    let on_grid = |f: &dyn Fn(&Solved) -> Check| match &solved {
        Ok(s) => f(s),
        Err(e) => Err(e.clone()),
    };
    let results: Vec<(&str, Check)> = vec![
        ("single-item seller optimum", criterion_1()),
        ("item-count table", on_grid(&criterion_2)),
        ("closed-form equivalence", on_grid(&|s| criterion_3(s, seconds))),
        ("single-item piecewise law", criterion_4()),
        ("restricted menus", criterion_5()),
        ("certificate and oracle agreement", criterion_6()),
        ("threshold sharpness", criterion_7()),
        ("distortion pattern", on_grid(&criterion_8)),
        ("monotonicity", on_grid(&criterion_9)),
        ("regime sandwich", on_grid(&criterion_10)),
        ("lower censorship", criterion_11()),
        ("small-bias limit", criterion_12()),
    ];
    let mut failed = 0;
    for (i, (name, r)) in results.iter().enumerate() {
        match r {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
