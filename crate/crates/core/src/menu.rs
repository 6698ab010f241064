//! Menus of quality/transfer pairs and solved market outcomes.

use serde::{Deserialize, Serialize};

use crate::costs::CostFunction;
use crate::distributions::{Atom, PosteriorDistribution};
use crate::error::{Error, Result};

/// Breakpoint tolerance: a buyer within this distance above or below a
/// breakpoint is treated as indifferent and buys the higher-quality item.
pub const BREAKPOINT_TOL: f64 = 1e-9;

/// One menu entry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MenuItem {
    pub q: f64,
    pub t: f64,
}

/// Items ordered by quality; the outside option (0,0) is implicit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Menu {
    items: Vec<MenuItem>,
    #[serde(skip)]
    breakpoints: Vec<f64>,
}

impl Menu {
    /// Validates increasing qualities, transfers and marginal-price breakpoints.
    pub fn new(items: Vec<MenuItem>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidInput("menu has no items".into()));
        }
        let mut prev = MenuItem { q: 0.0, t: 0.0 };
        let mut breakpoints = Vec::with_capacity(items.len());
        for (i, it) in items.iter().enumerate() {
            if !(it.q.is_finite() && it.t.is_finite()) {
                return Err(Error::InvalidInput(format!("item {} is not finite", i + 1)));
            }
            if !(it.q > prev.q) {
                return Err(Error::InvalidInput(format!("quality of item {} does not increase", i + 1)));
            }
            if !(it.t > prev.t) {
                return Err(Error::InvalidInput(format!("transfer of item {} does not increase", i + 1)));
            }
            let w = (it.t - prev.t) / (it.q - prev.q);
            if let Some(&last) = breakpoints.last() {
                if !(w > last) {
                    return Err(Error::InvalidInput(format!(
                        "breakpoint of item {} ({w}) does not exceed the previous one ({last})",
                        i + 1
                    )));
                }
            }
            if w > 1.0 + BREAKPOINT_TOL {
                return Err(Error::InvalidInput(format!(
                    "item {} has breakpoint {w} above 1 and is never bought",
                    i + 1
                )));
            }
            breakpoints.push(w);
            prev = *it;
        }
        Ok(Self { items, breakpoints })
    }

    /// Transfers from binding local downward incentive constraints:
    /// t_1 = w_1 q_1 and t_i = t_{i−1} + w_i (q_i − q_{i−1}).
    pub fn transfers_from(types: &[f64], qualities: &[f64]) -> Result<Self> {
        if types.len() != qualities.len() {
            return Err(Error::InvalidInput("types and qualities differ in length".into()));
        }
        let mut items = Vec::with_capacity(types.len());
        let (mut t, mut q_prev) = (0.0, 0.0);
        for (&w, &q) in types.iter().zip(qualities) {
            t += w * (q - q_prev);
            items.push(MenuItem { q, t });
            q_prev = q;
        }
        let mut menu = Self::new(items)?;
        // Breakpoints are the given types by construction.
        menu.breakpoints = types.to_vec();
        Ok(menu)
    }

    pub fn items(&self) -> &[MenuItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn qualities(&self) -> Vec<f64> {
        self.items.iter().map(|i| i.q).collect()
    }

    pub fn transfers(&self) -> Vec<f64> {
        self.items.iter().map(|i| i.t).collect()
    }

    /// Item bought by a buyer with expected value `w` (0 is the outside
    /// option, item indices start at 1). Ties go to the higher quality.
    pub fn buyer_choice(&self, w: f64) -> usize {
        self.breakpoints.partition_point(|&bp| bp <= w + BREAKPOINT_TOL)
    }

    /// (q, t) of the chosen option, (0, 0) for the outside option.
    pub fn chosen(&self, w: f64) -> MenuItem {
        match self.buyer_choice(w) {
            0 => MenuItem { q: 0.0, t: 0.0 },
            a => self.items[a - 1],
        }
    }

    /// The intermediary's payoff (w + b) q − t from the chosen option.
    pub fn indirect_utility(&self, b: f64, w: f64) -> f64 {
        match self.buyer_choice(w) {
            0 => 0.0,
            a => {
                let it = self.items[a - 1];
                (w + b) * it.q - it.t
            }
        }
    }
}

/// Which outcome family an outcome belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// The intermediary's obedience constraint binds somewhere.
    IntermediaryConstrained,
    /// The seller-optimal information policy survives obedience.
    Bhm,
    /// Bias too small for a finite item search; continuum limit.
    MussaRosenLimit,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::IntermediaryConstrained => "intermediary_constrained",
            Regime::Bhm => "bhm",
            Regime::MussaRosenLimit => "mussa_rosen_limit",
        }
    }
}

/// How the lower cutoff x_i of item i's pooling interval is pinned down.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffBinding {
    /// Obedience binds: x_i = w_i − b; the pooled type keeps a rent.
    Obedience,
    /// The breakpoint equals the pooled type; obedience is slack.
    Interior,
    /// Both hold: x_i = w_i − b and w_i is the pooled type.
    Both,
}

/// Non-fatal notes attached to solver output.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverWarning {
    /// Convex marginal cost or the single-item density condition could not be confirmed.
    PreconditionUnverified { detail: String },
    /// Some quality sits at the cap q̄.
    QualityCapBinds { q_bar: f64 },
    /// The bottom pooling interval starts at 0; nobody is excluded.
    NoExclusionRegion,
    /// The result comes from numerical search without optimality guarantee.
    BestFound { detail: String },
}

/// Solver diagnostics.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Fixed-point or optimizer iterations spent.
    pub iterations: usize,
    /// Largest residual among the solved equations.
    pub max_residual: f64,
}

/// A menu together with the posterior it induces and its payoffs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MenuOutcome {
    pub b: f64,
    pub regime: Regime,
    #[serde(flatten)]
    pub menu: Menu,
    /// Posterior types; the first entry is the excluded type when present.
    pub types: Vec<f64>,
    pub masses: Vec<f64>,
    pub has_exclusion: bool,
    /// Lower end of each trading item's pooling interval.
    pub cutoffs: Vec<f64>,
    pub bindings: Vec<CutoffBinding>,
    pub profit: f64,
    pub consumer_rent: f64,
    pub intermediary_payoff: f64,
    pub posterior: PosteriorDistribution,
    pub warnings: Vec<SolverWarning>,
    pub diagnostics: Diagnostics,
}

/// Payoffs from a menu when the posterior is a finite set of atoms.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AtomPayoffs {
    pub profit: f64,
    pub consumer_rent: f64,
    pub intermediary_payoff: f64,
}

/// Sums payoffs over atoms using each atom's own buyer choice.
pub fn atom_payoffs(menu: &Menu, cost: &CostFunction, b: f64, atoms: &[Atom]) -> AtomPayoffs {
    let mut p = AtomPayoffs::default();
    for a in atoms {
        let it = menu.chosen(a.location);
        if menu.buyer_choice(a.location) == 0 {
            continue;
        }
        p.profit += a.mass * (it.t - cost.value(it.q));
        p.consumer_rent += a.mass * (a.location * it.q - it.t);
        p.intermediary_payoff += a.mass * ((a.location + b) * it.q - it.t);
    }
    p
}

impl MenuOutcome {
    /// Trading items' posterior types (w_1..w_N).
    pub fn trading_types(&self) -> &[f64] {
        if self.has_exclusion {
            &self.types[1..]
        } else {
            &self.types
        }
    }

    /// Trading items' masses (ω_1..ω_N).
    pub fn trading_masses(&self) -> &[f64] {
        if self.has_exclusion {
            &self.masses[1..]
        } else {
            &self.masses
        }
    }
}
