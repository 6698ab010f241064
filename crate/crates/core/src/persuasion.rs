//! Intermediary side: indirect utility, buyer choice, dual price
//! certificates, and an obedient-recommendation LP oracle.

use serde::Serialize;

use crate::distributions::{Atom, PosteriorDistribution, Prior, Segment};
use crate::error::{CertificateCondition, Error, Result};
use crate::lp::LinearProgram;
use crate::menu::Menu;

/// Tolerance for domination, contact and convexity of a certificate.
pub const CERT_TOL: f64 = 1e-9;
/// Tolerance for the equality of the certificate's integrals.
pub const CERT_MEAN_TOL: f64 = 1e-8;
/// Uniform grid points used to verify a certificate.
pub const CERT_GRID: usize = 10_001;
/// Default oracle grid.
pub const DEFAULT_GRID_M: usize = 201;
/// Smallest accepted oracle grid.
pub const MIN_GRID_M: usize = 51;

/// Intermediary payoff (w + b) q − t from the buyer's choice at `w`.
pub fn indirect_utility(menu: &Menu, b: f64, w: f64) -> f64 {
    menu.indirect_utility(b, w)
}

/// Item chosen by a buyer with expected value `w` (0 = outside option).
pub fn buyer_choice(menu: &Menu, w: f64) -> usize {
    menu.buyer_choice(w)
}

/// Continuous piecewise-affine convex function given by its knots.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualPriceCertificate {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl DualPriceCertificate {
    /// Linear interpolation between knots (extrapolated at the ends).
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.knots.len();
        if n == 1 {
            return self.values[0];
        }
        let j = self.knots.partition_point(|&k| k <= x).clamp(1, n - 1) - 1;
        let (k0, k1) = (self.knots[j], self.knots[j + 1]);
        if k1 <= k0 {
            return self.values[j + 1];
        }
        self.values[j] + (self.values[j + 1] - self.values[j]) * (x - k0) / (k1 - k0)
    }

    /// Slopes of consecutive pieces.
    pub fn slopes(&self) -> Vec<f64> {
        self.knots
            .windows(2)
            .zip(self.values.windows(2))
            .filter(|(k, _)| k[1] > k[0])
            .map(|(k, v)| (v[1] - v[0]) / (k[1] - k[0]))
            .collect()
    }

    /// ∫ p dF0 over [lo, hi], exact for each affine piece.
    fn prior_integral(&self, prior: &Prior, lo: f64, hi: f64) -> f64 {
        let mut total = 0.0;
        for (k, v) in self.knots.windows(2).zip(self.values.windows(2)) {
            let (a, b) = (k[0].max(lo), k[1].min(hi));
            if !(b > a) || !(k[1] > k[0]) {
                continue;
            }
            let slope = (v[1] - v[0]) / (k[1] - k[0]);
            let intercept = v[0] - slope * k[0];
            total += intercept * prior.mass(a, b) + slope * (prior.partial_moment(b) - prior.partial_moment(a));
        }
        total
    }
}

fn fail(condition: CertificateCondition, at: f64, violation: f64) -> Error {
    Error::CertificateFailed { condition, at, violation }
}

/// Builds and verifies a dual price function for a monotone-pooling (or
/// partially disclosing) posterior.
///
/// The price is 0 on an excluded bottom pool. On every other pool it is the
/// line through its left end (continuity) and the pooled type's indirect
/// utility; a trading bottom pool that starts at 0 takes the slope of the
/// quality bought by its pooled type. On disclosed intervals it follows the
/// indirect utility. The result is checked for convexity, domination of the
/// indirect utility, contact on the support, and equal integrals under the
/// posterior and the prior.
pub fn build_certificate(menu: &Menu, b: f64, prior: &Prior, g: &PosteriorDistribution) -> Result<DualPriceCertificate> {
    let mut knots: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for seg in g.segments() {
        let (lo, hi) = seg.bounds();
        match seg {
            Segment::Disclose { .. } => {
                if knots.is_empty() {
                    knots.push(lo);
                    values.push(menu.indirect_utility(b, lo));
                }
                for &bp in menu.breakpoints().iter().filter(|&&bp| bp > lo && bp < hi) {
                    knots.push(bp);
                    values.push(menu.indirect_utility(b, bp));
                }
                knots.push(hi);
                values.push(menu.indirect_utility(b, hi));
            }
            Segment::Pool { atom, .. } => {
                let y = atom.location;
                let uy = menu.indirect_utility(b, y);
                let (p_lo, slope) = if knots.is_empty() {
                    let slope = match menu.buyer_choice(y) {
                        0 => 0.0,
                        a => menu.items()[a - 1].q,
                    };
                    (uy + slope * (lo - y), slope)
                } else {
                    let p_lo = *values.last().expect("nonempty");
                    if !(y - lo > 1e-15) {
                        return Err(fail(CertificateCondition::Structure, lo, 0.0));
                    }
                    (p_lo, (uy - p_lo) / (y - lo))
                };
                if knots.is_empty() {
                    knots.push(lo);
                    values.push(p_lo);
                }
                knots.push(hi);
                values.push(p_lo + slope * (hi - lo));
            }
            Segment::BiPool { .. } | Segment::MultiPool { .. } => {
                return Err(fail(CertificateCondition::Structure, lo, 0.0));
            }
        }
    }
    let cert = DualPriceCertificate { knots, values };
    verify_certificate(&cert, menu, b, prior, g)?;
    Ok(cert)
}

/// Checks the four conditions of a dual price function for `g`.
pub fn verify_certificate(
    cert: &DualPriceCertificate,
    menu: &Menu,
    b: f64,
    prior: &Prior,
    g: &PosteriorDistribution,
) -> Result<()> {
    let slopes = cert.slopes();
    let piece_starts: Vec<f64> = cert.knots.windows(2).filter(|k| k[1] > k[0]).map(|k| k[0]).collect();
    for j in 1..slopes.len() {
        let drop = slopes[j - 1] - slopes[j];
        if drop > CERT_TOL {
            return Err(fail(CertificateCondition::Convexity, piece_starts[j], drop));
        }
    }
    let atoms = g.atoms();
    let mut points: Vec<f64> = (0..CERT_GRID).map(|i| i as f64 / (CERT_GRID - 1) as f64).collect();
    points.extend(&cert.knots);
    points.extend(atoms.iter().map(|a| a.location));
    points.extend(menu.breakpoints().iter().filter(|bp| (0.0..=1.0).contains(*bp)));
    for &x in &points {
        let gap = menu.indirect_utility(b, x) - cert.eval(x);
        if gap > CERT_TOL {
            return Err(fail(CertificateCondition::Domination, x, gap));
        }
    }
    for a in &atoms {
        let gap = (cert.eval(a.location) - menu.indirect_utility(b, a.location)).abs();
        if gap > CERT_TOL {
            return Err(fail(CertificateCondition::Contact, a.location, gap));
        }
    }
    for (lo, hi) in g.disclosed_intervals() {
        for &x in points.iter().filter(|&&x| x >= lo && x <= hi) {
            let gap = (cert.eval(x) - menu.indirect_utility(b, x)).abs();
            if gap > CERT_TOL {
                return Err(fail(CertificateCondition::Contact, x, gap));
            }
        }
    }
    let under_prior = cert.prior_integral(prior, 0.0, 1.0);
    let under_g: f64 = atoms.iter().map(|a| a.mass * cert.eval(a.location)).sum::<f64>()
        + g.disclosed_intervals().iter().map(|&(lo, hi)| cert.prior_integral(prior, lo, hi)).sum::<f64>();
    let diff = (under_g - under_prior).abs();
    if diff > CERT_MEAN_TOL {
        return Err(fail(CertificateCondition::MeanEquality, 1.0, diff));
    }
    Ok(())
}

/// ∫ u^I dG, exact: atoms plus affine pieces over disclosed intervals.
pub fn intermediary_value(menu: &Menu, b: f64, prior: &Prior, g: &PosteriorDistribution) -> f64 {
    let mut total: f64 = g.atoms().iter().map(|a| a.mass * menu.indirect_utility(b, a.location)).sum();
    for (lo, hi) in g.disclosed_intervals() {
        let mut cuts = vec![lo];
        cuts.extend(menu.breakpoints().iter().filter(|&&bp| bp > lo && bp < hi));
        cuts.push(hi);
        for c in cuts.windows(2) {
            let (a, z) = (c[0], c[1]);
            let it = menu.chosen(0.5 * (a + z));
            total += (b * it.q - it.t) * prior.mass(a, z) + it.q * (prior.partial_moment(z) - prior.partial_moment(a));
        }
    }
    total
}

/// Best response of the intermediary computed by the recommendation LP.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleSolution {
    /// LP optimum: the intermediary's payoff from the best obedient policy.
    pub value: f64,
    /// Posterior induced by the LP solution.
    pub distribution: PosteriorDistribution,
    /// Total mass recommended each action (index 0 = outside option).
    pub action_masses: Vec<f64>,
    /// Posterior mean of each recommended action (NaN when unused).
    pub action_means: Vec<f64>,
    /// Hull [lower bound of first cell, upper bound of last cell] of the
    /// cells recommending each action (None when unused).
    pub action_supports: Vec<Option<(f64, f64)>>,
    pub cells: usize,
    pub pivots: usize,
}

/// Candidate policy compared against the LP oracle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObedienceReport {
    pub candidate_value: f64,
    pub oracle_value: f64,
    pub oracle_distribution: PosteriorDistribution,
    pub gap: f64,
    pub tol: f64,
    pub obedient: bool,
    pub grid_m: usize,
}

/// Default obedience tolerance at grid size `grid_m`: 5·10⁻³ at 201 cells,
/// shrinking in proportion to the cell width.
pub fn default_obedience_tol(grid_m: usize) -> f64 {
    5e-3 * DEFAULT_GRID_M as f64 / grid_m as f64
}

/// Solves the recommendation LP on `grid_m` equal-width cells.
pub fn oracle_best_response(menu: &Menu, b: f64, prior: &Prior, grid_m: usize) -> Result<OracleSolution> {
    if grid_m < MIN_GRID_M {
        return Err(Error::InvalidInput(format!("grid_m must be at least {MIN_GRID_M}, got {grid_m}")));
    }
    let bounds: Vec<f64> = (0..=grid_m).map(|i| i as f64 / grid_m as f64).collect();
    oracle_on_cells(menu, b, prior, &bounds)
}

/// Recommendation LP on the cells between consecutive `bounds`.
///
/// Variables x[θ, a] are the mass of cell θ recommended action a. Each
/// cell's mass is fully assigned, and each action's recommended posterior
/// mean must lie in the interval where the buyer prefers that action.
pub fn oracle_on_cells(menu: &Menu, b: f64, prior: &Prior, bounds: &[f64]) -> Result<OracleSolution> {
    let cells = bounds.len() - 1;
    let n = menu.len();
    let actions = n + 1;
    let bp = menu.breakpoints();
    let scale = cells as f64;
    let mass: Vec<f64> = bounds.windows(2).map(|w| prior.mass(w[0], w[1]) * scale).collect();
    let mean: Vec<f64> = bounds.windows(2).map(|w| prior.conditional_mean_unchecked(w[0], w[1])).collect();
    let rows = cells + 2 * n;
    let cols = cells * actions + 2 * n;
    let var = |cell: usize, a: usize| cell * actions + a;
    // Row indices: lower rows cells..cells+n for a = 1..n, upper rows for a = 0..n−1.
    let lower_row = |a: usize| cells + a - 1;
    let upper_row = |a: usize| cells + n + a;
    let mut lp = LinearProgram::new(rows, cols);
    for c in 0..cells {
        lp.rhs[c] = mass[c];
        for a in 0..actions {
            let j = var(c, a);
            lp.set(c, j, 1.0);
            if a >= 1 {
                lp.set(lower_row(a), j, mean[c] - bp[a - 1]);
                let it = menu.items()[a - 1];
                lp.objective[j] = (mean[c] + b) * it.q - it.t;
            }
            if a < n {
                lp.set(upper_row(a), j, mean[c] - bp[a]);
            }
        }
    }
    let slack0 = cells * actions;
    for a in 1..=n {
        lp.set(lower_row(a), slack0 + a - 1, -1.0);
    }
    for a in 0..n {
        lp.set(upper_row(a), slack0 + n + a, 1.0);
    }
    let start = menu.buyer_choice(prior.mean());
    let mut basis: Vec<usize> = (0..cells).map(|c| var(c, start)).collect();
    basis.extend((0..2 * n).map(|k| slack0 + k));
    let sol = lp.maximize(&basis, 200_000)?;
    if sol.primal_residual > 1e-7 * scale {
        return Err(Error::LpFailed(format!("primal residual {:e} too large", sol.primal_residual / scale)));
    }
    let x = |c: usize, a: usize| sol.x[var(c, a)] / scale;
    let tiny = 1e-12;
    let mut action_masses = vec![0.0; actions];
    let mut action_means = vec![f64::NAN; actions];
    let mut action_supports = vec![None; actions];
    let mut ranges: Vec<(usize, usize, usize)> = Vec::new();
    for a in 0..actions {
        let used: Vec<usize> = (0..cells).filter(|&c| x(c, a) > tiny).collect();
        let m: f64 = used.iter().map(|&c| x(c, a)).sum();
        if used.is_empty() || m <= tiny {
            continue;
        }
        action_masses[a] = m;
        action_means[a] = used.iter().map(|&c| x(c, a) * mean[c]).sum::<f64>() / m;
        let last = *used.last().expect("nonempty");
        action_supports[a] = Some((bounds[used[0]], bounds[last + 1]));
        ranges.push((used[0], last, a));
    }
    ranges.sort();
    let mut segments = Vec::new();
    let mut i = 0;
    while i < ranges.len() {
        let (first, mut last, _) = ranges[i];
        let mut members = vec![ranges[i].2];
        let mut j = i + 1;
        while j < ranges.len() && ranges[j].0 <= last {
            last = last.max(ranges[j].1);
            members.push(ranges[j].2);
            j += 1;
        }
        let atoms: Vec<Atom> = members.iter().map(|&a| Atom { location: action_means[a], mass: action_masses[a] }).collect();
        segments.push(Segment::from_atoms(bounds[first], bounds[last + 1], atoms));
        i = j;
    }
    if let Some(Segment::Pool { lo, .. } | Segment::BiPool { lo, .. } | Segment::MultiPool { lo, .. }) = segments.first_mut() {
        *lo = 0.0;
    }
    let distribution = PosteriorDistribution::new(segments)?;
    Ok(OracleSolution {
        value: sol.value / scale,
        distribution,
        action_masses,
        action_means,
        action_supports,
        cells,
        pivots: sol.pivots,
    })
}

/// Compares the candidate's intermediary payoff with the LP optimum.
///
/// The LP cells are the uniform grid refined by the candidate's segment
/// boundaries and by the menu breakpoints inside disclosed intervals, so an
/// obedient candidate is itself feasible in the LP.
pub fn check_obedience(
    menu: &Menu,
    b: f64,
    prior: &Prior,
    g: &PosteriorDistribution,
    grid_m: usize,
    tol: Option<f64>,
) -> Result<ObedienceReport> {
    if grid_m < MIN_GRID_M {
        return Err(Error::InvalidInput(format!("grid_m must be at least {MIN_GRID_M}, got {grid_m}")));
    }
    let mut bounds: Vec<f64> = (0..=grid_m).map(|i| i as f64 / grid_m as f64).collect();
    bounds.extend(g.segments().iter().map(|s| s.bounds().0));
    for (lo, hi) in g.disclosed_intervals() {
        bounds.extend(menu.breakpoints().iter().filter(|&&w| w > lo && w < hi));
    }
    bounds.sort_by(f64::total_cmp);
    bounds.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    *bounds.last_mut().expect("nonempty") = 1.0;
    bounds[0] = 0.0;
    let oracle = oracle_on_cells(menu, b, prior, &bounds)?;
    let candidate_value = intermediary_value(menu, b, prior, g);
    let tol = tol.unwrap_or_else(|| default_obedience_tol(grid_m));
    let gap = oracle.value - candidate_value;
    Ok(ObedienceReport {
        candidate_value,
        oracle_value: oracle.value,
        oracle_distribution: oracle.distribution,
        gap,
        tol,
        obedient: gap <= tol,
        grid_m,
    })
}
