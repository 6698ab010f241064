//! Strictly convex production costs with marginal and inverse-marginal evaluation.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// Default quality cap.
pub const DEFAULT_Q_BAR: f64 = 10.0;

/// Piecewise-linear, strictly increasing marginal cost through samples.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedMarginal {
    q: Vec<f64>,
    marginal: Vec<f64>,
    cost: Vec<f64>,
}

impl TabulatedMarginal {
    fn new(q: Vec<f64>, marginal: Vec<f64>) -> Result<Self> {
        if q.len() != marginal.len() || q.len() < 2 {
            return Err(Error::InvalidCost("tabulated cost needs at least two (q, marginal) rows".into()));
        }
        if q[0] != 0.0 {
            return Err(Error::InvalidCost("quality column must start at 0".into()));
        }
        if q.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidCost("quality column must be strictly increasing".into()));
        }
        if marginal.iter().any(|m| !m.is_finite()) || marginal[0] < 0.0 {
            return Err(Error::InvalidCost("marginal cost must be finite and nonnegative".into()));
        }
        if marginal.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidCost("marginal cost must be strictly increasing".into()));
        }
        let mut cost = vec![0.0; q.len()];
        for j in 1..q.len() {
            cost[j] = cost[j - 1] + 0.5 * (q[j] - q[j - 1]) * (marginal[j - 1] + marginal[j]);
        }
        Ok(Self { q, marginal, cost })
    }

    fn piece(&self, q: f64) -> usize {
        let j = self.q.partition_point(|&x| x <= q);
        j.clamp(1, self.q.len() - 1) - 1
    }

    fn slope(&self, j: usize) -> f64 {
        (self.marginal[j + 1] - self.marginal[j]) / (self.q[j + 1] - self.q[j])
    }

    fn marginal(&self, q: f64) -> f64 {
        let j = self.piece(q);
        self.marginal[j] + self.slope(j) * (q - self.q[j])
    }

    fn value(&self, q: f64) -> f64 {
        let j = self.piece(q);
        let d = q - self.q[j];
        self.cost[j] + d * (self.marginal[j] + 0.5 * self.slope(j) * d)
    }

    fn inverse(&self, w: f64) -> f64 {
        let j = self.marginal.partition_point(|&m| m <= w).clamp(1, self.q.len() - 1) - 1;
        self.q[j] + (w - self.marginal[j]) / self.slope(j)
    }

    fn marginal_is_convex(&self) -> bool {
        (1..self.q.len() - 1).all(|j| self.slope(j) >= self.slope(j - 1) - 1e-12)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CostFamily {
    /// c(q) = q^k / k.
    Power { k: f64 },
    TabulatedConvex(TabulatedMarginal),
}

/// Production cost c(q) on [0, q̄] with c(0) = 0.
#[derive(Clone, Debug, PartialEq)]
pub struct CostFunction {
    family: CostFamily,
    q_bar: f64,
}

impl CostFunction {
    /// c(q) = q^k / k with k ≥ 2 and the default quality cap.
    pub fn power(k: f64) -> Result<Self> {
        if !(k >= 2.0) || !k.is_finite() {
            return Err(Error::InvalidCost(format!("power exponent must be at least 2, got {k}")));
        }
        Ok(Self { family: CostFamily::Power { k }, q_bar: DEFAULT_Q_BAR })
    }

    /// Cost whose marginal interpolates the samples linearly; the cap is the
    /// last quality sample unless lowered with [`CostFunction::with_q_bar`].
    pub fn tabulated(q: Vec<f64>, marginal: Vec<f64>) -> Result<Self> {
        let t = TabulatedMarginal::new(q, marginal)?;
        let q_bar = *t.q.last().expect("at least two samples");
        Ok(Self { family: CostFamily::TabulatedConvex(t), q_bar })
    }

    /// Reads a two-column `q,marginal` CSV with a header row.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::InvalidCost(format!("missing `{name}` column")))
        };
        let (qi, mi) = (col("q")?, col("marginal")?);
        let (mut q, mut m) = (Vec::new(), Vec::new());
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidCost(format!("row {}: unparsable number", row + 1)))
            };
            q.push(parse(qi)?);
            m.push(parse(mi)?);
        }
        Self::tabulated(q, m)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    /// Replaces the quality cap.
    pub fn with_q_bar(mut self, q_bar: f64) -> Result<Self> {
        if !(q_bar > 0.0) || !q_bar.is_finite() {
            return Err(Error::InvalidCost(format!("quality cap must be positive, got {q_bar}")));
        }
        if let CostFamily::TabulatedConvex(t) = &self.family {
            let last = *t.q.last().expect("at least two samples");
            if q_bar > last {
                return Err(Error::InvalidCost(format!(
                    "quality cap {q_bar} exceeds the last tabulated quality {last}"
                )));
            }
        }
        self.q_bar = q_bar;
        Ok(self)
    }

    pub fn family(&self) -> &CostFamily {
        &self.family
    }

    pub fn q_bar(&self) -> f64 {
        self.q_bar
    }

    pub fn label(&self) -> String {
        match &self.family {
            CostFamily::Power { k } => format!("power:{k}"),
            CostFamily::TabulatedConvex(_) => "tabulated".into(),
        }
    }

    pub fn value(&self, q: f64) -> f64 {
        let q = q.max(0.0);
        match &self.family {
            CostFamily::Power { k } => q.powf(*k) / k,
            CostFamily::TabulatedConvex(t) => t.value(q),
        }
    }

    pub fn marginal(&self, q: f64) -> f64 {
        let q = q.max(0.0);
        match &self.family {
            CostFamily::Power { k } => q.powf(k - 1.0),
            CostFamily::TabulatedConvex(t) => t.marginal(q),
        }
    }

    /// (c')⁻¹(w) clamped to [0, q̄].
    pub fn inverse_marginal(&self, w: f64) -> f64 {
        if w.is_nan() {
            return 0.0;
        }
        if w <= self.marginal(0.0) {
            return 0.0;
        }
        if w >= self.marginal(self.q_bar) {
            return self.q_bar;
        }
        let q = match &self.family {
            CostFamily::Power { k } => {
                if *k == 2.0 {
                    w
                } else {
                    w.powf(1.0 / (k - 1.0))
                }
            }
            CostFamily::TabulatedConvex(t) => t.inverse(w),
        };
        q.clamp(0.0, self.q_bar)
    }

    /// Efficient quality for a buyer whose expected value is `w`.
    pub fn first_best_quality(&self, w: f64) -> f64 {
        self.inverse_marginal(w)
    }

    /// Whether the marginal cost is convex (c''' ≥ 0).
    pub fn third_derivative_nonnegative(&self) -> bool {
        match &self.family {
            CostFamily::Power { k } => *k >= 2.0,
            CostFamily::TabulatedConvex(t) => t.marginal_is_convex(),
        }
    }

    /// Whether a quality sits at the cap.
    pub fn cap_binds(&self, q: f64) -> bool {
        q >= self.q_bar * (1.0 - 1e-12)
    }
}
