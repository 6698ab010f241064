//! Priors on [0,1], conditional means, and posterior distributions
//! represented as ordered segments (disclose / pool / bi-pool).

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prior mass below which an interval is considered empty.
pub const MASS_TOL: f64 = 1e-12;

/// Survival mass below which the hazard-rate check stops.
pub const HAZARD_TAIL_TOL: f64 = 1e-9;

/// Default number of grid points for the hazard-rate check.
pub const HAZARD_GRID: usize = 1000;

/// Piecewise-linear density on a strictly increasing grid covering [0,1].
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedDensity {
    theta: Vec<f64>,
    density: Vec<f64>,
    cdf: Vec<f64>,
    moment: Vec<f64>,
    renormalization: f64,
}

impl TabulatedDensity {
    fn new(theta: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if theta.len() != density.len() || theta.len() < 2 {
            return Err(Error::InvalidPrior(
                "tabulated prior needs at least two (theta, density) rows".into(),
            ));
        }
        if theta[0] != 0.0 || theta[theta.len() - 1] != 1.0 {
            return Err(Error::InvalidPrior("theta column must start at 0 and end at 1".into()));
        }
        if theta.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidPrior("theta column must be strictly increasing".into()));
        }
        if density.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::InvalidPrior("density values must be finite and nonnegative".into()));
        }
        let last = density.len() - 1;
        if let Some(j) = (1..last).find(|&j| density[j] <= 0.0) {
            return Err(Error::InvalidPrior(format!(
                "density must be strictly positive on (0,1); zero at theta = {}",
                theta[j]
            )));
        }
        let total: f64 = theta
            .windows(2)
            .zip(density.windows(2))
            .map(|(t, d)| 0.5 * (t[1] - t[0]) * (d[0] + d[1]))
            .sum();
        if !(total > 0.0) {
            return Err(Error::InvalidPrior("density integrates to zero".into()));
        }
        let density: Vec<f64> = density.iter().map(|d| d / total).collect();
        let mut cdf = vec![0.0; theta.len()];
        let mut moment = vec![0.0; theta.len()];
        for j in 1..theta.len() {
            let (x0, h) = (theta[j - 1], theta[j] - theta[j - 1]);
            let (f0, f1) = (density[j - 1], density[j]);
            cdf[j] = cdf[j - 1] + 0.5 * h * (f0 + f1);
            moment[j] = moment[j - 1] + h * (x0 * (f0 + f1) / 2.0 + h * (f0 + 2.0 * f1) / 6.0);
        }
        // Pin the endpoint so that F(1) = 1 holds exactly.
        let end = cdf[last];
        for c in cdf.iter_mut() {
            *c /= end;
        }
        for m in moment.iter_mut() {
            *m /= end;
        }
        let density = density.iter().map(|d| d / end).collect();
        Ok(Self { theta, density, cdf, moment, renormalization: 1.0 / total })
    }

    /// Factor applied to the raw density samples so that they integrate to one.
    pub fn renormalization(&self) -> f64 {
        self.renormalization
    }

    pub fn knots(&self) -> &[f64] {
        &self.theta
    }

    pub fn density_samples(&self) -> &[f64] {
        &self.density
    }

    fn piece(&self, x: f64) -> usize {
        let j = self.theta.partition_point(|&t| t <= x);
        j.clamp(1, self.theta.len() - 1) - 1
    }

    fn slope(&self, j: usize) -> f64 {
        (self.density[j + 1] - self.density[j]) / (self.theta[j + 1] - self.theta[j])
    }

    fn density(&self, x: f64) -> f64 {
        let j = self.piece(x);
        self.density[j] + self.slope(j) * (x - self.theta[j])
    }

    fn cdf(&self, x: f64) -> f64 {
        let j = self.piece(x);
        let d = x - self.theta[j];
        (self.cdf[j] + d * (self.density[j] + 0.5 * self.slope(j) * d)).clamp(0.0, 1.0)
    }

    fn moment(&self, x: f64) -> f64 {
        let j = self.piece(x);
        let (x0, f0, s) = (self.theta[j], self.density[j], self.slope(j));
        let d = x - x0;
        self.moment[j] + x0 * f0 * d + (x0 * s + f0) * d * d / 2.0 + s * d * d * d / 3.0
    }

    /// Mass of [a,b] and first moment about `a`, accumulated piece by piece.
    fn mass_and_moment_about(&self, a: f64, b: f64) -> (f64, f64) {
        let (mut mass, mut mom) = (0.0, 0.0);
        let mut j = self.piece(a);
        let mut p = a;
        while p < b && j < self.theta.len() - 1 {
            let q = b.min(self.theta[j + 1]);
            if q > p {
                let fp = self.density[j] + self.slope(j) * (p - self.theta[j]);
                let fq = self.density[j] + self.slope(j) * (q - self.theta[j]);
                let m = 0.5 * (q - p) * (fp + fq);
                mass += m;
                mom += (p - a) * m + (q - p) * (q - p) * (fp + 2.0 * fq) / 6.0;
            }
            p = q;
            j += 1;
        }
        (mass, mom)
    }
}

/// Family of the prior distribution of buyer values on [0,1].
#[derive(Clone, Debug, PartialEq)]
pub enum PriorFamily {
    Uniform01,
    /// F0(θ) = θ^k.
    PowerCdf { k: f64 },
    Tabulated(TabulatedDensity),
}

/// Prior distribution F0 on [0,1] with a cached mean.
#[derive(Clone, Debug, PartialEq)]
pub struct Prior {
    family: PriorFamily,
    mean: f64,
}

/// Outcome of the hazard-rate monotonicity check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HazardReport {
    pub monotone: bool,
    pub first_violation: Option<f64>,
    /// Largest grid point at which the hazard rate was evaluated.
    pub last_checked: f64,
    pub grid_n: usize,
}

impl Prior {
    pub fn uniform() -> Self {
        Self { family: PriorFamily::Uniform01, mean: 0.5 }
    }

    /// Prior with CDF θ^k. Rejected unless k > 0 and the hazard rate is increasing.
    pub fn power_cdf(k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidPrior(format!("power exponent must be positive, got {k}")));
        }
        Self::regular(Self { family: PriorFamily::PowerCdf { k }, mean: k / (k + 1.0) })
    }

    /// Prior with a piecewise-linear density through the given samples.
    pub fn tabulated(theta: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        let tab = TabulatedDensity::new(theta, density)?;
        let mean = tab.moment(1.0);
        Self::regular(Self { family: PriorFamily::Tabulated(tab), mean })
    }

    /// Reads a two-column `theta,density` CSV with a header row.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::InvalidPrior(format!("missing `{name}` column")))
        };
        let (ti, di) = (col("theta")?, col("density")?);
        let (mut theta, mut density) = (Vec::new(), Vec::new());
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidPrior(format!("row {}: unparsable number", row + 1)))
            };
            theta.push(parse(ti)?);
            density.push(parse(di)?);
        }
        Self::tabulated(theta, density)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    fn regular(prior: Self) -> Result<Self> {
        let report = prior.check_hazard_rate(HAZARD_GRID);
        match report.first_violation {
            Some(theta) => Err(Error::NotRegular { theta }),
            None => Ok(prior),
        }
    }

    pub fn family(&self) -> &PriorFamily {
        &self.family
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Short textual description, e.g. `uniform` or `power:2`.
    pub fn label(&self) -> String {
        match &self.family {
            PriorFamily::Uniform01 => "uniform".into(),
            PriorFamily::PowerCdf { k } => format!("power:{k}"),
            PriorFamily::Tabulated(_) => "tabulated".into(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match &self.family {
            PriorFamily::Uniform01 => x,
            PriorFamily::PowerCdf { k } => x.powf(*k),
            PriorFamily::Tabulated(t) => t.cdf(x),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        match &self.family {
            PriorFamily::Uniform01 => 1.0,
            PriorFamily::PowerCdf { k } => k * x.powf(k - 1.0),
            PriorFamily::Tabulated(t) => t.density(x),
        }
    }

    /// Partial first moment ∫_0^x θ dF0(θ).
    pub fn partial_moment(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match &self.family {
            PriorFamily::Uniform01 => 0.5 * x * x,
            PriorFamily::PowerCdf { k } => k / (k + 1.0) * x.powf(k + 1.0),
            PriorFamily::Tabulated(t) => t.moment(x),
        }
    }

    /// Prior mass of [a,b].
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0));
        if b <= a {
            return 0.0;
        }
        match &self.family {
            PriorFamily::Uniform01 => b - a,
            PriorFamily::PowerCdf { k } => {
                if a == 0.0 {
                    b.powf(*k)
                } else {
                    -b.powf(*k) * (k * ((a - b) / b).ln_1p()).exp_m1()
                }
            }
            PriorFamily::Tabulated(t) => t.mass_and_moment_about(a, b).0,
        }
    }

    /// E(θ | a ≤ θ ≤ b). Fails when the interval carries (almost) no mass.
    pub fn conditional_mean(&self, a: f64, b: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&a) || !(a <= b && b <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "conditional mean needs 0 <= a <= b <= 1, got [{a}, {b}]"
            )));
        }
        let mass = self.mass(a, b);
        if mass < MASS_TOL {
            return Err(Error::DegenerateInterval { a, b, mass });
        }
        Ok(self.conditional_mean_unchecked(a, b))
    }

    /// E(θ | a ≤ θ ≤ b) without the mass check; returns the midpoint of a
    /// massless interval. Inputs are clamped to [0,1].
    pub fn conditional_mean_unchecked(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0));
        if b <= a {
            return a;
        }
        let m = match &self.family {
            PriorFamily::Uniform01 => 0.5 * (a + b),
            PriorFamily::PowerCdf { k } => {
                if a == 0.0 {
                    k / (k + 1.0) * b
                } else {
                    let ln_t = ((a - b) / b).ln_1p();
                    let num = -((k + 1.0) * ln_t).exp_m1();
                    let den = -(k * ln_t).exp_m1();
                    if den > 0.0 {
                        k / (k + 1.0) * b * num / den
                    } else {
                        0.5 * (a + b)
                    }
                }
            }
            PriorFamily::Tabulated(t) => {
                let (mass, mom) = t.mass_and_moment_about(a, b);
                if mass > 0.0 {
                    a + mom / mass
                } else {
                    0.5 * (a + b)
                }
            }
        };
        m.clamp(a, b)
    }

    /// Hazard rate f0/(1−F0) on a uniform grid of `grid_n` points, stopping
    /// once the survival mass drops below [`HAZARD_TAIL_TOL`]. Non-finite
    /// hazard values (an unbounded density at an endpoint) are skipped.
    pub fn check_hazard_rate(&self, grid_n: usize) -> HazardReport {
        let grid_n = grid_n.max(2);
        let mut prev: Option<f64> = None;
        let mut last_checked = 0.0;
        let mut first_violation = None;
        for j in 0..grid_n {
            let x = j as f64 / (grid_n - 1) as f64;
            let survival = 1.0 - self.cdf(x);
            if survival < HAZARD_TAIL_TOL {
                break;
            }
            let h = self.density(x) / survival;
            if !h.is_finite() {
                continue;
            }
            last_checked = x;
            if let Some(p) = prev {
                if h < p - 1e-12 * p.abs().max(1.0) {
                    first_violation = Some(x);
                    break;
                }
            }
            prev = Some(h);
        }
        HazardReport { monotone: first_violation.is_none(), first_violation, last_checked, grid_n }
    }

    /// Whether f0' < 0 implies f0'' ≤ 0 everywhere (the single-item condition
    /// for the seller-designed benchmark).
    pub fn satisfies_single_item_assumption(&self) -> bool {
        match &self.family {
            PriorFamily::Uniform01 => true,
            PriorFamily::PowerCdf { k } => *k >= 1.0,
            PriorFamily::Tabulated(t) => (1..t.theta.len() - 1).all(|j| {
                let (left, right) = (t.slope(j - 1), t.slope(j));
                !(left < 0.0 || right < 0.0) || right <= left + 1e-12
            }),
        }
    }

    /// Virtual value θ − (1−F0(θ))/f0(θ).
    pub fn virtual_value(&self, theta: f64) -> f64 {
        let f = self.density(theta);
        let survival = 1.0 - self.cdf(theta);
        if survival <= 0.0 {
            theta
        } else if f <= 0.0 {
            f64::NEG_INFINITY
        } else {
            theta - survival / f
        }
    }
}

/// A point mass of the posterior distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// One interval of a posterior distribution and what happens to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    /// Types in the interval learn their value.
    Disclose { lo: f64, hi: f64 },
    /// The interval is pooled at its conditional mean.
    Pool { lo: f64, hi: f64, atom: Atom },
    /// The interval is split into two posterior atoms.
    BiPool { lo: f64, hi: f64, atoms: [Atom; 2] },
    /// The interval is split into three or more atoms (only produced by the
    /// oracle when several recommended actions share one block of types).
    MultiPool { lo: f64, hi: f64, atoms: Vec<Atom> },
}

impl Segment {
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Segment::Disclose { lo, hi }
            | Segment::Pool { lo, hi, .. }
            | Segment::BiPool { lo, hi, .. }
            | Segment::MultiPool { lo, hi, .. } => (*lo, *hi),
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        match self {
            Segment::Disclose { .. } => &[],
            Segment::Pool { atom, .. } => std::slice::from_ref(atom),
            Segment::BiPool { atoms, .. } => atoms,
            Segment::MultiPool { atoms, .. } => atoms,
        }
    }

    /// Builds the segment matching the number of atoms.
    pub fn from_atoms(lo: f64, hi: f64, mut atoms: Vec<Atom>) -> Self {
        atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        match atoms.len() {
            0 => Segment::Disclose { lo, hi },
            1 => Segment::Pool { lo, hi, atom: atoms[0] },
            2 => Segment::BiPool { lo, hi, atoms: [atoms[0], atoms[1]] },
            _ => Segment::MultiPool { lo, hi, atoms },
        }
    }
}

/// Result of the mean-preserving-contraction check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MpcReport {
    pub feasible: bool,
    /// Smallest value of the integral gap over the checked points.
    pub worst_gap: f64,
    pub worst_at: f64,
    pub gap_at_one: f64,
}

/// Tolerance on segment boundaries when checking the partition.
const PARTITION_TOL: f64 = 1e-12;

/// A posterior distribution given as an ordered partition of [0,1].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PosteriorDistribution {
    segments: Vec<Segment>,
}

impl PosteriorDistribution {
    /// Validates that the segments partition [0,1] in order and that atoms
    /// are nonnegative and lie inside their segment.
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidPosterior("no segments".into()));
        }
        let mut expect = 0.0;
        for (i, seg) in segments.iter().enumerate() {
            let (lo, hi) = seg.bounds();
            if (lo - expect).abs() > PARTITION_TOL {
                return Err(Error::InvalidPosterior(format!(
                    "segment {i} starts at {lo}, expected {expect}"
                )));
            }
            if !(hi > lo) {
                return Err(Error::InvalidPosterior(format!("segment {i} is empty: [{lo}, {hi}]")));
            }
            for a in seg.atoms() {
                if !(a.mass >= 0.0) || !a.location.is_finite() {
                    return Err(Error::InvalidPosterior(format!("segment {i} has an invalid atom")));
                }
                if a.location < lo - PARTITION_TOL || a.location > hi + PARTITION_TOL {
                    return Err(Error::InvalidPosterior(format!(
                        "atom at {} lies outside segment [{lo}, {hi}]",
                        a.location
                    )));
                }
            }
            expect = hi;
        }
        if (expect - 1.0).abs() > PARTITION_TOL {
            return Err(Error::InvalidPosterior(format!("segments end at {expect}, expected 1")));
        }
        Ok(Self { segments })
    }

    /// The prior itself: every type learns its value.
    pub fn full_disclosure() -> Self {
        Self { segments: vec![Segment::Disclose { lo: 0.0, hi: 1.0 }] }
    }

    /// All mass at a single point (a structural object; generally not an MPC).
    pub fn point_mass(location: f64) -> Result<Self> {
        Self::new(vec![Segment::Pool { lo: 0.0, hi: 1.0, atom: Atom { location, mass: 1.0 } }])
    }

    /// Pools each interval between consecutive cutoffs at its conditional mean.
    pub fn monotone_pool(prior: &Prior, cutoffs: &[f64]) -> Result<Self> {
        if cutoffs.iter().any(|c| !(*c > 0.0 && *c < 1.0)) {
            return Err(Error::InvalidInput("cutoffs must lie in (0,1)".into()));
        }
        if cutoffs.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput("cutoffs must be increasing".into()));
        }
        let mut bounds = Vec::with_capacity(cutoffs.len() + 2);
        bounds.push(0.0);
        bounds.extend_from_slice(cutoffs);
        bounds.push(1.0);
        let segments = bounds
            .windows(2)
            .map(|w| {
                let location = prior.conditional_mean(w[0], w[1])?;
                Ok(Segment::Pool {
                    lo: w[0],
                    hi: w[1],
                    atom: Atom { location, mass: prior.mass(w[0], w[1]) },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(segments)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// All atoms in increasing order of location.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut atoms: Vec<Atom> = self.segments.iter().flat_map(|s| s.atoms().iter().copied()).collect();
        atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        atoms
    }

    /// Intervals on which the posterior coincides with the prior.
    pub fn disclosed_intervals(&self) -> Vec<(f64, f64)> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Disclose { lo, hi } => Some((*lo, *hi)),
                _ => None,
            })
            .collect()
    }

    /// Interior segment boundaries.
    pub fn cutoffs(&self) -> Vec<f64> {
        self.segments.iter().skip(1).map(|s| s.bounds().0).collect()
    }

    /// Segment boundaries and atom locations, sorted and deduplicated.
    pub fn knots(&self) -> Vec<f64> {
        let mut k: Vec<f64> = Vec::new();
        for s in &self.segments {
            let (lo, hi) = s.bounds();
            k.push(lo);
            k.push(hi);
            k.extend(s.atoms().iter().map(|a| a.location.clamp(0.0, 1.0)));
        }
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }

    /// Total posterior mass.
    pub fn total_mass(&self, prior: &Prior) -> f64 {
        self.segments
            .iter()
            .map(|s| match s {
                Segment::Disclose { lo, hi } => prior.mass(*lo, *hi),
                _ => s.atoms().iter().map(|a| a.mass).sum(),
            })
            .sum()
    }

    /// I_G(θ) = ∫_0^θ (F0 − G)(x) dx, evaluated segment by segment.
    pub fn integral_gap(&self, prior: &Prior, theta: f64) -> f64 {
        let theta = theta.clamp(0.0, 1.0);
        let mut gap = 0.0;
        for s in &self.segments {
            let (lo, hi) = s.bounds();
            if lo >= theta {
                break;
            }
            if let Segment::Disclose { .. } = s {
                continue;
            }
            let u = hi.min(theta);
            // ∫_lo^u (θ − x) dF0 minus the same integral against the atoms.
            let prior_part = theta * prior.mass(lo, u) - (prior.partial_moment(u) - prior.partial_moment(lo));
            let atom_part: f64 = s
                .atoms()
                .iter()
                .map(|a| a.mass * (theta - a.location).max(0.0))
                .sum();
            gap += prior_part - atom_part;
        }
        gap
    }

    /// Checks I_G ≥ −tol on all knots and a 1,000-point grid, and |I_G(1)| ≤ tol.
    pub fn is_mpc(&self, prior: &Prior, tol: f64) -> MpcReport {
        let mut points = self.knots();
        points.extend((0..1000).map(|j| j as f64 / 999.0));
        let (mut worst_gap, mut worst_at) = (f64::INFINITY, 0.0);
        for &x in &points {
            let g = self.integral_gap(prior, x);
            if g < worst_gap {
                worst_gap = g;
                worst_at = x;
            }
        }
        let gap_at_one = self.integral_gap(prior, 1.0);
        let mass_ok = (self.total_mass(prior) - 1.0).abs() <= tol;
        MpcReport {
            feasible: worst_gap >= -tol && gap_at_one.abs() <= tol && mass_ok,
            worst_gap,
            worst_at,
            gap_at_one,
        }
    }

    /// Checks the per-segment invariants against the prior: pool atoms sit at
    /// the conditional mean with the interval's mass, and multi-atom segments
    /// preserve mass and first moment.
    pub fn check_segments(&self, prior: &Prior, tol: f64) -> Result<()> {
        for s in &self.segments {
            let (lo, hi) = s.bounds();
            let mass = prior.mass(lo, hi);
            let moment = prior.partial_moment(hi) - prior.partial_moment(lo);
            let atoms = s.atoms();
            if atoms.is_empty() {
                continue;
            }
            let m: f64 = atoms.iter().map(|a| a.mass).sum();
            let my: f64 = atoms.iter().map(|a| a.mass * a.location).sum();
            if (m - mass).abs() > tol || (my - moment).abs() > tol {
                return Err(Error::InvalidPosterior(format!(
                    "segment [{lo}, {hi}] does not preserve prior mass and mean"
                )));
            }
        }
        if (self.total_mass(prior) - 1.0).abs() > tol {
            return Err(Error::InvalidPosterior("total mass differs from one".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn linear_decreasing() -> Prior {
        let theta: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let density = theta.iter().map(|t| 2.0 - 2.0 * t).collect();
        Prior::tabulated(theta, density).unwrap()
    }

    #[test]
    fn uniform_conditional_means() {
        let p = Prior::uniform();
        assert_abs_diff_eq!(p.conditional_mean(1.0 / 3.0, 1.0).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.conditional_mean(0.0, 1.0).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn power_conditional_mean_closed_form() {
        let p = Prior::power_cdf(2.0).unwrap();
        assert_abs_diff_eq!(p.conditional_mean(0.5, 1.0).unwrap(), 7.0 / 9.0, epsilon = 1e-14);
    }

    #[test]
    fn power_conditional_mean_matches_quadrature() {
        let p = Prior::power_cdf(3.5).unwrap();
        let (a, b) = (0.2, 0.9);
        let num = crate::numeric::simpson(|x| x * p.density(x), a, b, 2000);
        let den = crate::numeric::simpson(|x| p.density(x), a, b, 2000);
        assert_abs_diff_eq!(p.conditional_mean(a, b).unwrap(), num / den, epsilon = 1e-12);
    }

    #[test]
    fn power_conditional_mean_stable_on_tiny_intervals() {
        let p = Prior::power_cdf(2.0).unwrap();
        let m = p.conditional_mean_unchecked(0.6, 0.6 + 1e-13);
        assert!((0.6..=0.6 + 1e-13).contains(&m));
    }

    #[test]
    fn degenerate_interval_is_rejected() {
        let p = Prior::uniform();
        assert!(matches!(p.conditional_mean(0.3, 0.3 + 1e-14), Err(Error::DegenerateInterval { .. })));
    }

    #[test]
    fn tabulated_linear_density_is_exact() {
        let p = linear_decreasing();
        assert_abs_diff_eq!(p.cdf(0.3), 2.0 * 0.3 - 0.09, epsilon = 1e-14);
        assert_abs_diff_eq!(p.mean(), 1.0 / 3.0, epsilon = 1e-14);
        let exact = |a: f64, b: f64| {
            let mom = |x: f64| x * x - 2.0 * x * x * x / 3.0;
            (mom(b) - mom(a)) / ((2.0 * b - b * b) - (2.0 * a - a * a))
        };
        assert_abs_diff_eq!(p.conditional_mean(0.13, 0.77).unwrap(), exact(0.13, 0.77), epsilon = 1e-13);
        assert_abs_diff_eq!(p.partial_moment(0.61), 0.61f64.powi(2) - 2.0 * 0.61f64.powi(3) / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn tabulated_renormalizes() {
        let p = Prior::tabulated(vec![0.0, 1.0], vec![3.0, 3.0]).unwrap();
        match p.family() {
            PriorFamily::Tabulated(t) => assert_abs_diff_eq!(t.renormalization(), 1.0 / 3.0, epsilon = 1e-15),
            _ => unreachable!(),
        }
        assert_abs_diff_eq!(p.cdf(0.4), 0.4, epsilon = 1e-15);
    }

    #[test]
    fn tabulated_from_csv() {
        let csv = "theta,density\n0,1\n0.5,1\n1,1\n";
        let p = Prior::from_csv_reader(csv.as_bytes()).unwrap();
        assert_abs_diff_eq!(p.mean(), 0.5, epsilon = 1e-15);
        assert!(Prior::from_csv_reader("theta,density\n0.1,1\n1,1\n".as_bytes()).is_err());
        assert!(Prior::from_csv_reader("theta,density\n0,1\n0.5,0\n1,1\n".as_bytes()).is_err());
    }

    #[test]
    fn hazard_checks() {
        assert!(Prior::uniform().check_hazard_rate(1000).monotone);
        assert!(Prior::power_cdf(2.0).unwrap().check_hazard_rate(1000).monotone);
        let r = linear_decreasing().check_hazard_rate(1000);
        assert!(r.monotone);
        assert!(r.last_checked < 1.0);
        assert!(matches!(Prior::power_cdf(0.5), Err(Error::NotRegular { .. })));
    }

    #[test]
    fn single_item_assumption() {
        assert!(Prior::uniform().satisfies_single_item_assumption());
        assert!(Prior::power_cdf(2.0).unwrap().satisfies_single_item_assumption());
        assert!(linear_decreasing().satisfies_single_item_assumption());
        // Decreasing then flattening density: convex kink where f' < 0.
        let p = Prior::tabulated(vec![0.0, 0.5, 1.0], vec![2.0, 1.0, 0.9]).unwrap();
        assert!(!p.satisfies_single_item_assumption());
    }

    #[test]
    fn integral_gap_examples() {
        let p = Prior::uniform();
        let g = PosteriorDistribution::point_mass(0.5).unwrap();
        assert_eq!(g.integral_gap(&p, 0.0), 0.0);
        assert_abs_diff_eq!(g.integral_gap(&p, 0.5), 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(g.integral_gap(&p, 1.0), 0.0, epsilon = 1e-15);
        let d = PosteriorDistribution::full_disclosure();
        assert_eq!(d.integral_gap(&p, 0.7), 0.0);
    }

    #[test]
    fn integral_gap_matches_quadrature_of_cdf_difference() {
        let p = Prior::power_cdf(2.0).unwrap();
        let g = PosteriorDistribution::new(vec![
            Segment::Pool { lo: 0.0, hi: 0.3, atom: Atom { location: p.conditional_mean(0.0, 0.3).unwrap(), mass: p.mass(0.0, 0.3) } },
            Segment::Disclose { lo: 0.3, hi: 0.6 },
            Segment::Pool { lo: 0.6, hi: 1.0, atom: Atom { location: p.conditional_mean(0.6, 1.0).unwrap(), mass: p.mass(0.6, 1.0) } },
        ])
        .unwrap();
        let atoms = g.atoms();
        let g_cdf = |x: f64| {
            let atom_mass: f64 = atoms.iter().filter(|a| a.location <= x).map(|a| a.mass).sum();
            atom_mass + if x >= 0.3 { p.mass(0.3, x.min(0.6)) } else { 0.0 }
        };
        for &theta in &[0.1, 0.25, 0.45, 0.7, 0.95] {
            let q = crate::numeric::simpson(|x| p.cdf(x) - g_cdf(x), 0.0, theta, 200_000);
            assert_abs_diff_eq!(g.integral_gap(&p, theta), q, epsilon = 1e-6);
        }
    }

    #[test]
    fn mpc_examples() {
        let p = Prior::uniform();
        assert!(PosteriorDistribution::full_disclosure().is_mpc(&p, 1e-9).feasible);
        let pooled = PosteriorDistribution::monotone_pool(&p, &[1.0 / 3.0]).unwrap();
        assert!(pooled.is_mpc(&p, 1e-9).feasible);
        assert!(!PosteriorDistribution::point_mass(0.9).unwrap().is_mpc(&p, 1e-9).feasible);
    }

    #[test]
    fn monotone_pool_examples() {
        let p = Prior::uniform();
        let g = PosteriorDistribution::monotone_pool(&p, &[1.0 / 3.0]).unwrap();
        let a = g.atoms();
        assert_abs_diff_eq!(a[0].location, 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a[1].mass, 2.0 / 3.0, epsilon = 1e-15);
        let g = PosteriorDistribution::monotone_pool(&p, &[]).unwrap();
        assert_eq!(g.atoms(), vec![Atom { location: 0.5, mass: 1.0 }]);
        let g = PosteriorDistribution::monotone_pool(&p, &[0.4, 0.6, 0.8]).unwrap();
        let want = [(0.2, 0.4), (0.5, 0.2), (0.7, 0.2), (0.9, 0.2)];
        for (a, (y, m)) in g.atoms().iter().zip(want) {
            assert_abs_diff_eq!(a.location, y, epsilon = 1e-15);
            assert_abs_diff_eq!(a.mass, m, epsilon = 1e-15);
        }
        assert!(g.check_segments(&p, 1e-12).is_ok());
        assert!(matches!(
            PosteriorDistribution::monotone_pool(&p, &[0.4, 0.4]),
            Err(Error::DegenerateInterval { .. })
        ));
    }

    #[test]
    fn partition_is_validated() {
        assert!(PosteriorDistribution::new(vec![Segment::Disclose { lo: 0.0, hi: 0.5 }]).is_err());
        assert!(PosteriorDistribution::new(vec![
            Segment::Disclose { lo: 0.0, hi: 0.5 },
            Segment::Disclose { lo: 0.6, hi: 1.0 }
        ])
        .is_err());
    }
}
