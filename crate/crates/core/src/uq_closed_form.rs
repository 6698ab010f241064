//! Closed forms for the uniform prior with quadratic cost c(q) = q²/2.

use crate::costs::CostFunction;
use crate::distributions::{Atom, PosteriorDistribution, Segment};
use crate::error::{Error, Result};
use crate::menu::{atom_payoffs, CutoffBinding, Diagnostics, Menu, MenuOutcome, Regime};
use crate::menu_solver::QUALITY_TOL;

fn check(b: f64) -> Result<()> {
    if b > 0.0 && b.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("bias must be positive, got {b}")))
    }
}

/// ⌊(1/b − 1)/4⌋ + 1 for 0 < b < 1/3.
pub fn uq_item_count(b: f64) -> Result<usize> {
    check(b)?;
    if b >= 1.0 / 3.0 {
        return Err(Error::OutOfRegime { b });
    }
    Ok(((1.0 / b - 1.0) / 4.0).floor() as usize + 1)
}

/// Optimal menu for 0 < b < 1/3: w_i = 1 − (1 + 2(N−i))b,
/// q_i = 1 − (1 + 4(N−i))b, mass 2b per trading type. An item whose quality
/// is zero (at b = 1/(4k+1)) is dropped.
pub fn uq_unrestricted_menu(b: f64) -> Result<MenuOutcome> {
    let n = uq_item_count(b)?;
    let mut types = Vec::with_capacity(n);
    let mut qualities = Vec::with_capacity(n);
    for i in 1..=n {
        let k = (n - i) as f64;
        let q = 1.0 - (1.0 + 4.0 * k) * b;
        if q > QUALITY_TOL {
            types.push(1.0 - (1.0 + 2.0 * k) * b);
            qualities.push(q);
        }
    }
    let menu = Menu::transfers_from(&types, &qualities)?;
    let kept = types.len();
    let cutoffs: Vec<f64> = types.iter().map(|w| w - b).collect();
    let excluded_mass = 1.0 - 2.0 * b * kept as f64;
    let mut atoms = vec![Atom { location: cutoffs[0] / 2.0, mass: excluded_mass }];
    atoms.extend(types.iter().map(|&w| Atom { location: w, mass: 2.0 * b }));
    let mut bounds = vec![0.0];
    bounds.extend(&cutoffs);
    bounds.push(1.0);
    let segments = bounds
        .windows(2)
        .zip(&atoms)
        .map(|(w, a)| Segment::Pool { lo: w[0], hi: w[1], atom: *a })
        .collect();
    let posterior = PosteriorDistribution::new(segments)?;
    let cost = CostFunction::power(2.0)?;
    let pay = atom_payoffs(&menu, &cost, b, &atoms);
    Ok(MenuOutcome {
        b,
        regime: Regime::IntermediaryConstrained,
        menu,
        types: atoms.iter().map(|a| a.location).collect(),
        masses: atoms.iter().map(|a| a.mass).collect(),
        has_exclusion: true,
        cutoffs,
        bindings: vec![CutoffBinding::Both; kept],
        profit: pay.profit,
        consumer_rent: pay.consumer_rent,
        intermediary_payoff: pay.intermediary_payoff,
        posterior,
        warnings: Vec::new(),
        diagnostics: Diagnostics::default(),
    })
}

/// Optimal menu with at most `cap` ∈ {1, 2, 3} items, with s = 1 + b:
/// the unrestricted menu when it has at most `cap` items (the single item
/// (2/3, 4/9) for b ≥ 1/3), otherwise the rent menu with breakpoints
/// w_i = (cap + i)s/(2cap + 1) and qualities q_i = 2is/(2cap + 1).
pub fn uq_restricted_menu(b: f64, cap: usize) -> Result<Menu> {
    check(b)?;
    if !(1..=3).contains(&cap) {
        return Err(Error::InvalidInput(format!("closed forms cover caps 1 to 3, got {cap}")));
    }
    if b >= 1.0 / 3.0 {
        return Menu::transfers_from(&[2.0 / 3.0], &[2.0 / 3.0]);
    }
    let fits = 1.0 / b <= (4 * cap + 1) as f64 + 1e-9;
    if fits {
        return Ok(uq_unrestricted_menu(b)?.menu);
    }
    let s = 1.0 + b;
    let d = (2 * cap + 1) as f64;
    let types: Vec<f64> = (1..=cap).map(|i| (cap + i) as f64 * s / d).collect();
    let qualities: Vec<f64> = (1..=cap).map(|i| 2.0 * i as f64 * s / d).collect();
    Menu::transfers_from(&types, &qualities)
}
