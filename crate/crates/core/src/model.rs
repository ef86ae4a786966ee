//! Newsvendor economics: market parameters, unreliable suppliers, discretized
//! demand, the profit function, exact expected profit by enumeration, and the
//! classical critical-fractile optimum.
//!
//! The profit of a single period with demand `d`, orders `q`, and realized
//! yield fractions `r` is
//!
//! ```text
//! f = (p - w)·d + Σᵢ (w - cᵢ)·rᵢ·qᵢ - (o - w)·max(d - Σᵢ rᵢqᵢ, 0) - Σᵢ Fᵢ·xᵢ
//! ```
//!
//! which merges the overage case (everything delivered beyond demand is
//! salvaged at `w`) and the shortage case (missing units are procured at the
//! emergency cost `o`) into one expression. [`profit`] implements exactly
//! this form; the test suite checks it against the two piecewise cases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of nodes used when a random reliability model is discretized for
/// exact enumeration.
pub const RELIABILITY_GRID_POINTS: usize = 9;

/// Market-side prices: selling price `p`, salvage value `w`, and the unit
/// cost `o` of covering a shortage from an emergency source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    pub price: f64,
    pub salvage: f64,
    pub shortage_cost: f64,
}

/// Yield model of a supplier: the fraction of an order that actually arrives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReliabilityModel {
    /// Always delivers exactly `value` of the order (value in [0, 1]).
    Deterministic { value: f64 },
    /// Normal(mean, variance) restricted to [0, 1] by rejection.
    TruncatedNormal { mean: f64, variance: f64 },
}

impl ReliabilityModel {
    /// The distribution mean (after truncation for the normal case).
    pub fn mean(&self) -> f64 {
        match *self {
            ReliabilityModel::Deterministic { value } => value,
            ReliabilityModel::TruncatedNormal { mean, variance } => {
                truncated_normal_mean(mean, variance)
            }
        }
    }
}

/// Analytic mean of Normal(mu, variance) truncated to [0, 1].
pub fn truncated_normal_mean(mu: f64, variance: f64) -> f64 {
    if variance <= 0.0 {
        return mu.clamp(0.0, 1.0);
    }
    use statrs::distribution::{Continuous, ContinuousCDF, Normal};
    let sigma = variance.sqrt();
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let alpha = (0.0 - mu) / sigma;
    let beta = (1.0 - mu) / sigma;
    let mass = std.cdf(beta) - std.cdf(alpha);
    mu + sigma * (std.pdf(alpha) - std.pdf(beta)) / mass
}

/// One supplier: unit cost `c`, fixed ordering cost `F`, capacity `K`, and a
/// reliability (yield) model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Supplier {
    pub unit_cost: f64,
    pub fixed_cost: f64,
    pub capacity: u32,
    pub reliability: ReliabilityModel,
}

/// An order vector, one non-negative quantity per supplier. The binary
/// activation vector `x` (which triggers fixed costs) is always derived from
/// `q`, never stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderDecision {
    q: Vec<u32>,
}

impl OrderDecision {
    /// Builds a decision, enforcing the per-supplier capacity bound.
    pub fn new(q: Vec<u32>, suppliers: &[Supplier]) -> Result<Self> {
        if q.len() != suppliers.len() {
            return Err(Error::DimensionMismatch {
                what: "order vector",
                expected: suppliers.len(),
                got: q.len(),
            });
        }
        for (i, (&qi, s)) in q.iter().zip(suppliers).enumerate() {
            if qi > s.capacity {
                return Err(Error::CapacityExceeded {
                    supplier: i,
                    q: qi,
                    capacity: s.capacity,
                });
            }
        }
        Ok(OrderDecision { q })
    }

    pub fn q(&self) -> &[u32] {
        &self.q
    }

    /// Activation bits: `x[i] = 1` iff `q[i] > 0`.
    pub fn x(&self) -> Vec<u8> {
        self.q.iter().map(|&qi| u8::from(qi > 0)).collect()
    }

    /// Total ordered quantity, the first tie-break key in grid searches.
    pub fn total(&self) -> u64 {
        self.q.iter().map(|&qi| u64::from(qi)).sum()
    }
}

/// Demand discretized on the 2^n-point grid of an n-qubit register. The
/// affine map `phi(i) = phi_offset + phi_slope * i` translates a register
/// index into demand units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandDistribution {
    n_qubits: usize,
    probs: Vec<f64>,
    phi_offset: f64,
    phi_slope: f64,
}

impl DemandDistribution {
    pub fn new(n_qubits: usize, probs: Vec<f64>, phi_offset: f64, phi_slope: f64) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::QubitCountOutOfRange {
                n: 0,
                max: crate::qsim::MAX_QUBITS,
            });
        }
        let expected = 1usize << n_qubits;
        if probs.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "demand probabilities",
                expected,
                got: probs.len(),
            });
        }
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidDistribution {
                reason: "negative or non-finite probability".into(),
            });
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution {
                reason: format!("probabilities sum to {total}, expected 1 within 1e-12"),
            });
        }
        let slope_valid = phi_slope.is_finite() && phi_slope > 0.0;
        if !slope_valid {
            return Err(Error::InvalidArgument {
                what: format!("phi_slope must be positive, got {phi_slope}"),
            });
        }
        Ok(DemandDistribution {
            n_qubits,
            probs,
            phi_offset,
            phi_slope,
        })
    }

    /// Uniform distribution over the full grid with the identity map.
    pub fn uniform(n_qubits: usize) -> Result<Self> {
        let n = 1usize << n_qubits;
        Self::new(n_qubits, vec![1.0 / n as f64; n], 0.0, 1.0)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_points(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn phi_offset(&self) -> f64 {
        self.phi_offset
    }

    pub fn phi_slope(&self) -> f64 {
        self.phi_slope
    }

    /// Demand units at grid index `i`.
    pub fn phi(&self, i: usize) -> f64 {
        self.phi_offset + self.phi_slope * i as f64
    }

    /// Cumulative probability P[index <= i].
    pub fn cdf(&self, i: usize) -> f64 {
        self.probs[..=i.min(self.probs.len() - 1)].iter().sum()
    }

    /// Expected demand in units.
    pub fn mean_units(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| p * self.phi(i))
            .sum()
    }
}

/// A finite weighted discretization of a reliability model, used by the
/// exact-enumeration oracle and by quantum estimation under random yield.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ReliabilityGrid {
    /// Discretizes a model to at most `n_bins` weighted nodes. Deterministic
    /// models collapse to a single node. The truncated normal is split into
    /// equal-width bins on [0, 1]; each bin contributes its midpoint with the
    /// bin's (renormalized) truncated-normal mass.
    pub fn from_model(model: &ReliabilityModel, n_bins: usize) -> Result<Self> {
        match *model {
            ReliabilityModel::Deterministic { value } => Ok(ReliabilityGrid {
                nodes: vec![value],
                weights: vec![1.0],
            }),
            ReliabilityModel::TruncatedNormal { mean, variance } => {
                if variance <= 0.0 {
                    return Ok(ReliabilityGrid {
                        nodes: vec![mean.clamp(0.0, 1.0)],
                        weights: vec![1.0],
                    });
                }
                if n_bins == 0 {
                    return Err(Error::EmptySupport {
                        what: "reliability grid with zero bins",
                    });
                }
                use statrs::distribution::{ContinuousCDF, Normal};
                let sigma = variance.sqrt();
                let normal = Normal::new(mean, sigma).map_err(|_| Error::InvalidArgument {
                    what: format!("invalid truncated normal (mean={mean}, variance={variance})"),
                })?;
                let total_mass = normal.cdf(1.0) - normal.cdf(0.0);
                if total_mass <= 0.0 {
                    return Err(Error::EmptySupport {
                        what: "truncated normal has no mass on [0, 1]",
                    });
                }
                let width = 1.0 / n_bins as f64;
                let mut nodes = Vec::with_capacity(n_bins);
                let mut weights = Vec::with_capacity(n_bins);
                for b in 0..n_bins {
                    let lo = b as f64 * width;
                    let hi = lo + width;
                    nodes.push(0.5 * (lo + hi));
                    weights.push((normal.cdf(hi) - normal.cdf(lo)) / total_mass);
                }
                Ok(ReliabilityGrid { nodes, weights })
            }
        }
    }

    /// Mean of the discretized distribution.
    pub fn mean(&self) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(n, w)| n * w)
            .sum()
    }
}

/// Default discretizations for a supplier list, at [`RELIABILITY_GRID_POINTS`]
/// nodes per random model.
pub fn default_reliability_grids(suppliers: &[Supplier]) -> Result<Vec<ReliabilityGrid>> {
    suppliers
        .iter()
        .map(|s| ReliabilityGrid::from_model(&s.reliability, RELIABILITY_GRID_POINTS))
        .collect()
}

/// Checks the parameter ordering the model requires: `p > 0` and
/// `o > cᵢ > w` for every supplier. A violation names the offending supplier.
pub fn validate(market: &MarketParams, suppliers: &[Supplier]) -> Result<()> {
    let price_valid = market.price.is_finite() && market.price > 0.0;
    if !price_valid {
        return Err(Error::InvalidPrice { p: market.price });
    }
    for (i, s) in suppliers.iter().enumerate() {
        if !(market.shortage_cost > s.unit_cost && s.unit_cost > market.salvage) {
            return Err(Error::ParameterOrder {
                supplier: i,
                o: market.shortage_cost,
                c: s.unit_cost,
                w: market.salvage,
            });
        }
        if s.fixed_cost < 0.0 {
            return Err(Error::InvalidArgument {
                what: format!("supplier {i}: negative fixed cost {}", s.fixed_cost),
            });
        }
    }
    Ok(())
}

/// Single-period profit for demand `d` (in units) under realized reliability
/// fractions `r`. See the module docs for the formula.
pub fn profit(
    market: &MarketParams,
    suppliers: &[Supplier],
    decision: &OrderDecision,
    r: &[f64],
    d: f64,
) -> Result<f64> {
    if r.len() != suppliers.len() {
        return Err(Error::DimensionMismatch {
            what: "reliability vector",
            expected: suppliers.len(),
            got: r.len(),
        });
    }
    if decision.q().len() != suppliers.len() {
        return Err(Error::DimensionMismatch {
            what: "order vector",
            expected: suppliers.len(),
            got: decision.q().len(),
        });
    }
    let p = market.price;
    let w = market.salvage;
    let o = market.shortage_cost;
    let mut value = (p - w) * d;
    let mut delivered = 0.0;
    for ((s, &ri), &qi) in suppliers.iter().zip(r).zip(decision.q()) {
        delivered += ri * f64::from(qi);
        value += (w - s.unit_cost) * ri * f64::from(qi);
        if qi > 0 {
            value -= s.fixed_cost;
        }
    }
    value -= (o - w) * (d - delivered).max(0.0);
    Ok(value)
}

/// Exact expected profit by full enumeration over the demand grid and the
/// joint reliability discretization. This is the brute-force oracle the
/// estimators are benchmarked against.
pub fn expected_profit_exact(
    market: &MarketParams,
    suppliers: &[Supplier],
    decision: &OrderDecision,
    demand: &DemandDistribution,
    grids: &[ReliabilityGrid],
) -> Result<f64> {
    if grids.len() != suppliers.len() {
        return Err(Error::DimensionMismatch {
            what: "reliability grids",
            expected: suppliers.len(),
            got: grids.len(),
        });
    }
    if grids.iter().any(|g| g.nodes.is_empty()) {
        return Err(Error::EmptySupport {
            what: "reliability grid",
        });
    }
    let mut total = 0.0;
    let mut r = vec![0.0; suppliers.len()];
    // Odometer-style walk over the joint reliability support; the demand sum
    // is the innermost loop.
    let mut idx = vec![0usize; suppliers.len()];
    loop {
        let mut weight = 1.0;
        for (k, &j) in idx.iter().enumerate() {
            r[k] = grids[k].nodes[j];
            weight *= grids[k].weights[j];
        }
        if weight != 0.0 {
            for (i, &pd) in demand.probs().iter().enumerate() {
                if pd != 0.0 {
                    total += weight * pd * profit(market, suppliers, decision, &r, demand.phi(i))?;
                }
            }
        }
        // Advance the odometer.
        let mut k = 0;
        loop {
            if k == idx.len() {
                return Ok(total);
            }
            idx[k] += 1;
            if idx[k] < grids[k].nodes.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// The critical ratio `cu / (cu + co)` for underage cost `cu` and overage
/// cost `co`.
pub fn critical_fractile(cu: f64, co: f64) -> Result<f64> {
    if !(cu > 0.0 && co > 0.0) {
        return Err(Error::InvalidArgument {
            what: format!("critical fractile needs positive costs, got cu={cu}, co={co}"),
        });
    }
    Ok(cu / (cu + co))
}

/// The critical ratio expressed in this model's costs: underage `o - c`
/// (a missing unit is covered at `o` instead of bought at `c`), overage
/// `c - w` (an excess unit bought at `c` is salvaged at `w`), giving
/// `(o - c) / (o - w)`.
pub fn critical_fractile_ratio(market: &MarketParams, unit_cost: f64) -> Result<f64> {
    let o = market.shortage_cost;
    let w = market.salvage;
    if !(o > unit_cost && unit_cost > w) {
        return Err(Error::ParameterOrder {
            supplier: 0,
            o,
            c: unit_cost,
            w,
        });
    }
    critical_fractile(o - unit_cost, unit_cost - w)
}

/// Smallest grid index `Q` with `CDF(Q) >= ratio`. Under the identity map
/// this is the optimal order quantity for a single perfectly reliable
/// supplier with zero fixed cost; ties in expected profit resolve to the
/// smaller quantity, matching this minimum.
pub fn classical_optimal_q(demand: &DemandDistribution, ratio: f64) -> Result<u32> {
    if !(0.0 < ratio && ratio < 1.0) {
        return Err(Error::InvalidArgument {
            what: format!("fractile ratio must lie in (0, 1), got {ratio}"),
        });
    }
    let mut acc = 0.0;
    for (i, &p) in demand.probs().iter().enumerate() {
        acc += p;
        if acc >= ratio {
            return Ok(i as u32);
        }
    }
    // Float round-off can leave the accumulated sum a hair under the ratio;
    // the top grid point carries the full CDF.
    Ok((demand.n_points() - 1) as u32)
}
