//! Classical baselines: seeded Monte Carlo estimation of expected profit and
//! Sample Average Approximation (SAA) optimization over a shared scenario
//! set.
//!
//! All randomness flows from explicit `u64` seeds through ChaCha8. Distinct
//! purposes (demand draws, reliability draws, shot noise) get their own
//! generator, seeded by mixing the master seed with a purpose tag, so that
//! estimators can share demand scenarios without coupling unrelated noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{profit, DemandDistribution, MarketParams, OrderDecision, ReliabilityModel, Supplier};

/// Point estimate plus confidence interval and cost accounting, shared by
/// classical and quantum estimators. `oracle_queries` counts Grover-operator
/// applications and is 0 for classical methods.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EstimateResult {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples_or_shots: u64,
    pub oracle_queries: u64,
}

impl EstimateResult {
    /// An exact value: the interval collapses to the point.
    pub fn exact(value: f64) -> Self {
        EstimateResult {
            estimate: value,
            ci_low: value,
            ci_high: value,
            samples_or_shots: 0,
            oracle_queries: 0,
        }
    }
}

/// One sampled world: a demand realization and a reliability realization per
/// supplier.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSample {
    pub d: f64,
    pub r: Vec<f64>,
}

const DEMAND_TAG: u64 = 0x44454d414e44; // "DEMAND"
const RELIABILITY_TAG: u64 = 0x52454c; // "REL"
pub(crate) const SHOT_TAG: u64 = 0x53484f54; // "SHOT"

/// SplitMix64-style avalanche step.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Deterministically derives an independent sub-seed from a master seed and
/// up to two context words (purpose tag, worker/cell index, ...).
pub fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    splitmix(splitmix(seed ^ splitmix(a)) ^ splitmix(b.rotate_left(32)))
}

fn rng_for(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, tag, 0))
}

/// Draws one reliability realization from a model. Deterministic models
/// consume no randomness; truncated normals are rejection-sampled into
/// [0, 1].
pub fn sample_reliability<R: Rng>(model: &ReliabilityModel, rng: &mut R) -> f64 {
    match *model {
        ReliabilityModel::Deterministic { value } => value,
        ReliabilityModel::TruncatedNormal { mean, variance } => {
            if variance <= 0.0 {
                return mean.clamp(0.0, 1.0);
            }
            let normal = Normal::new(mean, variance.sqrt()).expect("valid normal");
            loop {
                let x = normal.sample(rng);
                if (0.0..=1.0).contains(&x) {
                    return x;
                }
            }
        }
    }
}

/// Draws a demand grid index by inverse CDF.
fn sample_demand_index<R: Rng>(demand: &DemandDistribution, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in demand.probs().iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    demand.n_points() - 1
}

/// Draws `n` i.i.d. scenarios, deterministic in `seed`. Demand and
/// reliability use separate sub-streams.
pub fn draw_scenarios(
    suppliers: &[Supplier],
    demand: &DemandDistribution,
    n: u64,
    seed: u64,
) -> Vec<ScenarioSample> {
    let mut demand_rng = rng_for(seed, DEMAND_TAG);
    let mut rel_rng = rng_for(seed, RELIABILITY_TAG);
    (0..n)
        .map(|_| {
            let i = sample_demand_index(demand, &mut demand_rng);
            let r = suppliers
                .iter()
                .map(|s| sample_reliability(&s.reliability, &mut rel_rng))
                .collect();
            ScenarioSample {
                d: demand.phi(i),
                r,
            }
        })
        .collect()
}

/// Monte Carlo estimate of expected profit: the sample mean over `n_samples`
/// scenarios with a normal-approximation 95% confidence interval
/// (mean ± 1.96·s/√n).
pub fn mc_expected_profit(
    market: &MarketParams,
    suppliers: &[Supplier],
    decision: &OrderDecision,
    demand: &DemandDistribution,
    n_samples: u64,
    seed: u64,
) -> Result<EstimateResult> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument {
            what: "Monte Carlo needs at least one sample".into(),
        });
    }
    let scenarios = draw_scenarios(suppliers, demand, n_samples, seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for s in &scenarios {
        let f = profit(market, suppliers, decision, &s.r, s.d)?;
        sum += f;
        sum_sq += f * f;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let half = if n_samples > 1 {
        let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        1.96 * (var / n).sqrt()
    } else {
        0.0
    };
    Ok(EstimateResult {
        estimate: mean,
        ci_low: mean - half,
        ci_high: mean + half,
        samples_or_shots: n_samples,
        oracle_queries: 0,
    })
}

/// Average profit of one decision over a fixed scenario set.
pub fn scenario_average(
    market: &MarketParams,
    suppliers: &[Supplier],
    decision: &OrderDecision,
    scenarios: &[ScenarioSample],
) -> Result<f64> {
    if scenarios.is_empty() {
        return Err(Error::EmptySupport {
            what: "scenario set",
        });
    }
    let mut sum = 0.0;
    for s in scenarios {
        sum += profit(market, suppliers, decision, &s.r, s.d)?;
    }
    Ok(sum / scenarios.len() as f64)
}

/// Compares candidates by (higher value, smaller total quantity, smaller
/// lexicographic order vector). Used by every grid search so tie-breaking is
/// identical across estimators and invariant to candidate ordering.
pub fn better_candidate(
    value_a: f64,
    decision_a: &OrderDecision,
    value_b: f64,
    decision_b: &OrderDecision,
) -> std::cmp::Ordering {
    value_a
        .partial_cmp(&value_b)
        .expect("profit values are finite")
        .then_with(|| decision_b.total().cmp(&decision_a.total()))
        .then_with(|| decision_b.q().cmp(decision_a.q()))
}

/// Sample Average Approximation: draws one scenario set (common random
/// numbers) and returns the candidate maximizing the scenario-average profit.
/// Ties break to the smaller total quantity, then lexicographically.
pub fn saa_optimize(
    market: &MarketParams,
    suppliers: &[Supplier],
    demand: &DemandDistribution,
    n_scenarios: u64,
    seed: u64,
    q_grid: &[OrderDecision],
) -> Result<(OrderDecision, EstimateResult)> {
    if q_grid.is_empty() {
        return Err(Error::EmptySupport {
            what: "decision grid",
        });
    }
    if n_scenarios == 0 {
        return Err(Error::InvalidArgument {
            what: "SAA needs at least one scenario".into(),
        });
    }
    let scenarios = draw_scenarios(suppliers, demand, n_scenarios, seed);
    let mut best: Option<(f64, &OrderDecision)> = None;
    for cand in q_grid {
        let value = scenario_average(market, suppliers, cand, &scenarios)?;
        let replace = match &best {
            None => true,
            Some((bv, bd)) => better_candidate(value, cand, *bv, bd).is_gt(),
        };
        if replace {
            best = Some((value, cand));
        }
    }
    let (value, decision) = best.expect("non-empty grid");
    // Report the winner's spread over the scenario set as a standard MC
    // interval; the scenarios are shared, so this reuses the same draws.
    let mut sum_sq = 0.0;
    for s in &scenarios {
        let f = profit(market, suppliers, decision, &s.r, s.d)?;
        sum_sq += (f - value) * (f - value);
    }
    let n = n_scenarios as f64;
    let half = if n_scenarios > 1 {
        1.96 * ((sum_sq / (n - 1.0)).max(0.0) / n).sqrt()
    } else {
        0.0
    };
    Ok((
        decision.clone(),
        EstimateResult {
            estimate: value,
            ci_low: value - half,
            ci_high: value + half,
            samples_or_shots: n_scenarios,
            oracle_queries: 0,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{default_reliability_grids, expected_profit_exact};
    use approx::assert_abs_diff_eq;

    fn paper_market() -> MarketParams {
        MarketParams {
            price: 1.4,
            salvage: 0.6,
            shortage_cost: 1.3,
        }
    }

    fn det_supplier(c: f64, f: f64, k: u32, r: f64) -> Supplier {
        Supplier {
            unit_cost: c,
            fixed_cost: f,
            capacity: k,
            reliability: ReliabilityModel::Deterministic { value: r },
        }
    }

    #[test]
    fn point_mass_sampling_has_zero_variance() {
        let market = paper_market();
        let suppliers = vec![det_supplier(0.95, 0.0, 10, 1.0)];
        let mut probs = vec![0.0; 8];
        probs[5] = 1.0;
        let demand = DemandDistribution::new(3, probs, 0.0, 1.0).unwrap();
        let d = OrderDecision::new(vec![4], &suppliers).unwrap();
        let est = mc_expected_profit(&market, &suppliers, &d, &demand, 50, 9).unwrap();
        let exact = profit(&market, &suppliers, &d, &[1.0], 5.0).unwrap();
        assert_abs_diff_eq!(est.estimate, exact, epsilon = 1e-12);
        assert_abs_diff_eq!(est.ci_high - est.ci_low, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn mc_converges_to_oracle() {
        let market = paper_market();
        let suppliers = vec![det_supplier(0.95, 0.0, 3, 1.0)];
        let demand = DemandDistribution::uniform(2).unwrap();
        let d = OrderDecision::new(vec![2], &suppliers).unwrap();
        let est = mc_expected_profit(&market, &suppliers, &d, &demand, 100_000, 7).unwrap();
        assert_abs_diff_eq!(est.estimate, 0.325, epsilon = 0.01);
        assert!(est.ci_low <= est.estimate && est.estimate <= est.ci_high);
    }

    #[test]
    fn single_sample_is_one_profit_draw() {
        let market = paper_market();
        let suppliers = vec![det_supplier(0.95, 0.0, 3, 1.0)];
        let demand = DemandDistribution::uniform(2).unwrap();
        let d = OrderDecision::new(vec![2], &suppliers).unwrap();
        let est = mc_expected_profit(&market, &suppliers, &d, &demand, 1, 3).unwrap();
        let scen = draw_scenarios(&suppliers, &demand, 1, 3);
        let expected = profit(&market, &suppliers, &d, &scen[0].r, scen[0].d).unwrap();
        assert_eq!(est.estimate, expected);
    }

    #[test]
    fn sampling_is_bit_for_bit_deterministic() {
        let suppliers = vec![
            det_supplier(0.95, 0.03, 15, 1.0),
            Supplier {
                unit_cost: 0.8,
                fixed_cost: 0.04,
                capacity: 15,
                reliability: ReliabilityModel::TruncatedNormal {
                    mean: 0.6,
                    variance: 0.1,
                },
            },
        ];
        let demand = DemandDistribution::uniform(4).unwrap();
        let a = draw_scenarios(&suppliers, &demand, 500, 42);
        let b = draw_scenarios(&suppliers, &demand, 500, 42);
        assert_eq!(a, b);
        let c = draw_scenarios(&suppliers, &demand, 500, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn reliability_sampling_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let det = ReliabilityModel::Deterministic { value: 0.7 };
        assert_eq!(sample_reliability(&det, &mut rng), 0.7);

        let degenerate = ReliabilityModel::TruncatedNormal {
            mean: 0.5,
            variance: 0.0,
        };
        assert_eq!(sample_reliability(&degenerate, &mut rng), 0.5);

        let tn = ReliabilityModel::TruncatedNormal {
            mean: 0.5,
            variance: 0.1,
        };
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| sample_reliability(&tn, &mut rng))
            .sum::<f64>()
            / n as f64;
        let analytic = crate::model::truncated_normal_mean(0.5, 0.1);
        assert_abs_diff_eq!(mean, analytic, epsilon = 0.01);
        // Every draw stays inside the unit interval.
        for _ in 0..1000 {
            let x = sample_reliability(&tn, &mut rng);
            assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn saa_matches_fractile_on_reliable_supplier() {
        let market = paper_market();
        let suppliers = vec![det_supplier(0.80, 0.0, 15, 1.0)];
        let demand = DemandDistribution::uniform(4).unwrap();
        let grid: Vec<OrderDecision> = (0..16)
            .map(|q| OrderDecision::new(vec![q], &suppliers).unwrap())
            .collect();
        let (dec, _) = saa_optimize(&market, &suppliers, &demand, 20_000, 11, &grid).unwrap();
        let ratio = crate::model::critical_fractile_ratio(&market, 0.80).unwrap();
        let q_star = crate::model::classical_optimal_q(&demand, ratio).unwrap();
        assert_eq!(dec.q(), &[q_star]);
    }

    #[test]
    fn saa_point_mass_orders_exact_demand() {
        let market = paper_market();
        let suppliers = vec![det_supplier(0.95, 0.0, 10, 1.0)];
        let mut probs = vec![0.0; 8];
        probs[5] = 1.0;
        let demand = DemandDistribution::new(3, probs, 0.0, 1.0).unwrap();
        let grid: Vec<OrderDecision> = (0..=10)
            .map(|q| OrderDecision::new(vec![q], &suppliers).unwrap())
            .collect();
        let (dec, est) = saa_optimize(&market, &suppliers, &demand, 100, 1, &grid).unwrap();
        assert_eq!(dec.q(), &[5]);
        let exact = profit(&market, &suppliers, &dec, &[1.0], 5.0).unwrap();
        assert_eq!(est.estimate, exact);
    }

    #[test]
    fn saa_dominated_supplier_stays_idle() {
        // Both suppliers fully reliable, supplier 1 cheaper in both unit and
        // fixed cost: supplier 0 should never be used. Cross-checked against
        // the enumeration oracle.
        let market = paper_market();
        let suppliers = vec![det_supplier(0.95, 0.04, 7, 1.0), det_supplier(0.80, 0.03, 7, 1.0)];
        let demand = DemandDistribution::uniform(3).unwrap();
        let mut grid = Vec::new();
        for q0 in 0..=7 {
            for q1 in 0..=7 {
                grid.push(OrderDecision::new(vec![q0, q1], &suppliers).unwrap());
            }
        }
        let (dec, _) = saa_optimize(&market, &suppliers, &demand, 20_000, 13, &grid).unwrap();
        assert_eq!(dec.q()[0], 0);

        let grids = default_reliability_grids(&suppliers).unwrap();
        let mut best: Option<(f64, &OrderDecision)> = None;
        for cand in &grid {
            let v = expected_profit_exact(&market, &suppliers, cand, &demand, &grids).unwrap();
            let replace = match &best {
                None => true,
                Some((bv, bd)) => better_candidate(v, cand, *bv, bd).is_gt(),
            };
            if replace {
                best = Some((v, cand));
            }
        }
        assert_eq!(best.unwrap().1.q()[0], 0);
    }

    #[test]
    fn mix_seed_spreads_inputs() {
        let a = mix_seed(1, 2, 3);
        let b = mix_seed(1, 2, 4);
        let c = mix_seed(1, 3, 3);
        let d = mix_seed(2, 2, 3);
        assert!(a != b && a != c && a != d && b != c);
    }
}
