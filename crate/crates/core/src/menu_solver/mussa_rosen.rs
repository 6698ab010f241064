//! Full-information screening: q(θ) = (c')⁻¹(max(virtual value, 0)).

use serde::Serialize;

use crate::costs::CostFunction;
use crate::distributions::Prior;
use crate::error::Result;
use crate::numeric::{bisect, simpson, trapezoid};

/// Quadrature nodes for the market statistics.
pub const MR_QUADRATURE_POINTS: usize = 10_001;

/// Market statistics of the full-information allocation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct MussaRosenStats {
    pub profit: f64,
    pub consumer_rent: f64,
    pub total_surplus: f64,
    pub distortion: f64,
    pub avg_quality: f64,
    pub trade_probability: f64,
}

/// The full-information allocation with envelope transfers.
#[derive(Clone, Debug)]
pub struct MussaRosen {
    prior: Prior,
    cost: CostFunction,
    /// Lowest type served.
    pub exclusion_cutoff: f64,
    pub stats: MussaRosenStats,
}

impl MussaRosen {
    pub fn quality(&self, theta: f64) -> f64 {
        if theta < self.exclusion_cutoff {
            return 0.0;
        }
        self.cost.inverse_marginal(self.prior.virtual_value(theta).max(0.0))
    }

    /// Buyer rent ∫_{cutoff}^θ q(s) ds.
    pub fn rent(&self, theta: f64) -> f64 {
        simpson(|s| self.quality(s), self.exclusion_cutoff, theta.min(1.0), 2000)
    }

    /// Transfer θ q(θ) − ∫_0^θ q(s) ds (zero rent for the lowest type).
    pub fn transfer(&self, theta: f64) -> f64 {
        theta * self.quality(theta) - self.rent(theta)
    }
}

/// Solves the full-information screening problem and its statistics.
pub fn solve_mussa_rosen(prior: &Prior, cost: &CostFunction) -> Result<MussaRosen> {
    let floor = cost.marginal(0.0);
    let excess = |x: f64| prior.virtual_value(x) - floor;
    let exclusion_cutoff = if excess(0.0) >= 0.0 {
        0.0
    } else {
        bisect(excess, 0.0, 1.0, 200).map_or(1.0, |r| r.x)
    };
    let mut mr = MussaRosen { prior: prior.clone(), cost: cost.clone(), exclusion_cutoff, stats: MussaRosenStats::default() };
    mr.stats = statistics(&mr);
    Ok(mr)
}

fn statistics(mr: &MussaRosen) -> MussaRosenStats {
    let (prior, cost, lo) = (&mr.prior, &mr.cost, mr.exclusion_cutoff);
    let n = MR_QUADRATURE_POINTS;
    let h = (1.0 - lo) / (n - 1) as f64;
    let nodes: Vec<f64> = (0..n).map(|j| if j + 1 == n { 1.0 } else { lo + h * j as f64 }).collect();
    let q: Vec<f64> = nodes.iter().map(|&x| mr.quality(x)).collect();
    let f: Vec<f64> = nodes.iter().map(|&x| prior.density(x)).collect();
    let mut u = vec![0.0; n];
    for j in 1..n {
        u[j] = u[j - 1] + 0.5 * h * (q[j - 1] + q[j]);
    }
    let weighted = |g: &dyn Fn(usize) -> f64| trapezoid(&(0..n).map(|j| g(j) * f[j]).collect::<Vec<_>>(), h);
    let total_surplus = weighted(&|j| nodes[j] * q[j] - cost.value(q[j]));
    let consumer_rent = weighted(&|j| u[j]);
    let profit = weighted(&|j| nodes[j] * q[j] - u[j] - cost.value(q[j]));
    let avg_quality = weighted(&|j| q[j]);
    let fb_served = weighted(&|j| cost.first_best_quality(nodes[j]));
    let hx = lo / (n - 1) as f64;
    let fb_excluded = trapezoid(
        &(0..n)
            .map(|j| {
                let x = hx * j as f64;
                cost.first_best_quality(x) * prior.density(x)
            })
            .collect::<Vec<_>>(),
        hx,
    );
    MussaRosenStats {
        profit,
        consumer_rent,
        total_surplus,
        distortion: fb_served + fb_excluded - avg_quality,
        avg_quality,
        trade_probability: 1.0 - prior.cdf(lo),
    }
}
