//! Simulation-based optimization: evaluate a candidate order with any
//! estimator, grid-search the decision space, and sweep reliability axes
//! into heatmaps.
//!
//! Quantum estimators handle random supplier reliability by classical
//! mixing: the reliability distributions are discretized onto small grids,
//! one amplitude-estimation run prices each joint grid node (a fixed
//! reliability vector keeps the payoff piecewise affine, which the rotation
//! encoding needs), and the inverted estimates combine by node weight.

use crate::classical::{mc_expected_profit, mix_seed, saa_optimize, EstimateResult};
use crate::encoding::{
    build_a_operator, build_payoff_operator, exact_load, invert_estimate, scale_payoff,
};
use crate::error::{Error, Result};
use crate::model::{
    default_reliability_grids, expected_profit_exact, validate, DemandDistribution, MarketParams,
    OrderDecision, ReliabilityModel, Supplier,
};
use crate::qae::{canonical_qae, iqae, median_boost, QaeConfig};
use crate::qsim::Circuit;

/// Which objective estimator drives an optimization run.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorChoice {
    /// Full enumeration over demand and discretized reliability.
    Exact,
    /// Fresh Monte Carlo scenarios per evaluation.
    MonteCarlo { n_samples: u64 },
    /// Sample average approximation: one shared scenario set per
    /// optimization, averaged per candidate.
    Saa { n_scenarios: u64 },
    /// Phase-estimation amplitude estimation with median boosting.
    CanonicalQae {
        m: usize,
        shots: u64,
        repetitions: usize,
        c_scale: f64,
    },
    /// Iterative amplitude estimation to a target half-width.
    Iqae { epsilon: f64, alpha: f64, shots: u64, c_scale: f64 },
}

/// How a sweep axis value becomes a reliability model.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepMode {
    /// Axis value is the deterministic delivered fraction.
    Deterministic,
    /// Axis value is the mean of a truncated normal with this variance.
    TruncatedNormalMean { variance: f64 },
}

/// Objective values and optimal decisions over a reliability grid.
/// `objective[i][j]` corresponds to `(axis1[i], axis2[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    pub objective: Vec<Vec<f64>>,
    pub decision: Vec<Vec<OrderDecision>>,
}

/// Estimates the expected profit of one order decision.
///
/// `loader` optionally replaces the exact demand loader in the quantum
/// path (a trained ansatz, for example); classical estimators always use
/// the demand distribution itself.
pub fn evaluate_order(
    market: &MarketParams,
    suppliers: &[Supplier],
    decision: &OrderDecision,
    demand: &DemandDistribution,
    loader: Option<&Circuit>,
    estimator: &EstimatorChoice,
    seed: u64,
) -> Result<EstimateResult> {
    validate(market, suppliers)?;
    if decision.q().len() != suppliers.len() {
        return Err(Error::DimensionMismatch {
            what: "order vector",
            expected: suppliers.len(),
            got: decision.q().len(),
        });
    }
    for (i, (s, &q)) in suppliers.iter().zip(decision.q()).enumerate() {
        if q > s.capacity {
            return Err(Error::CapacityExceeded {
                supplier: i,
                q,
                capacity: s.capacity,
            });
        }
    }

    match *estimator {
        EstimatorChoice::Exact => {
            let grids = default_reliability_grids(suppliers)?;
            Ok(EstimateResult::exact(expected_profit_exact(
                market, suppliers, decision, demand, &grids,
            )?))
        }
        EstimatorChoice::MonteCarlo { n_samples } => {
            mc_expected_profit(market, suppliers, decision, demand, n_samples, seed)
        }
        EstimatorChoice::Saa { n_scenarios } => {
            // For a single fixed decision the shared-scenario average is
            // the same computation as Monte Carlo.
            mc_expected_profit(market, suppliers, decision, demand, n_scenarios, seed)
        }
        EstimatorChoice::CanonicalQae {
            m,
            shots,
            repetitions,
            c_scale,
        } => quantum_evaluate(
            market,
            suppliers,
            decision,
            demand,
            loader,
            seed,
            c_scale,
            |a, node_seed| {
                median_boost(repetitions, node_seed, |s| canonical_qae(a, m, shots, s))
            },
        ),
        EstimatorChoice::Iqae {
            epsilon,
            alpha,
            shots,
            c_scale,
        } => {
            let config = QaeConfig {
                epsilon,
                alpha,
                shots,
                ..QaeConfig::default()
            };
            quantum_evaluate(
                market,
                suppliers,
                decision,
                demand,
                loader,
                seed,
                c_scale,
                |a, node_seed| iqae(a, &config, node_seed),
            )
        }
    }
}

/// Tag mixed into per-reliability-node sub-seeds.
const NODE_TAG: u64 = 0x4e4f_4445;

/// Shared quantum path: discretize reliability, run the supplied amplitude
/// estimator once per joint node, invert each estimate to money, and mix.
#[allow(clippy::too_many_arguments)]
fn quantum_evaluate<F>(
    market: &MarketParams,
    suppliers: &[Supplier],
    decision: &OrderDecision,
    demand: &DemandDistribution,
    loader: Option<&Circuit>,
    seed: u64,
    c_scale: f64,
    mut estimate_amplitude: F,
) -> Result<EstimateResult>
where
    F: FnMut(&crate::encoding::AOperator, u64) -> Result<EstimateResult>,
{
    let n = demand.n_qubits();
    let loader_circuit = match loader {
        Some(c) => {
            if c.n_qubits() != n {
                return Err(Error::WidthMismatch {
                    what: format!(
                        "loader on {} qubits does not fit {}-qubit demand",
                        c.n_qubits(),
                        n
                    ),
                });
            }
            c.clone()
        }
        None => exact_load(demand),
    };

    let grids = default_reliability_grids(suppliers)?;
    let sizes: Vec<usize> = grids.iter().map(|g| g.nodes.len()).collect();
    let n_nodes: usize = sizes.iter().product();

    let mut estimate = 0.0;
    let mut ci_low = 0.0;
    let mut ci_high = 0.0;
    let mut shots_total = 0u64;
    let mut queries_total = 0u64;

    let mut index = vec![0usize; suppliers.len()];
    for node in 0..n_nodes {
        let mut weight = 1.0;
        let mut r = Vec::with_capacity(suppliers.len());
        for (s, &ix) in index.iter().enumerate() {
            weight *= grids[s].weights[ix];
            r.push(grids[s].nodes[ix]);
        }

        let sp = scale_payoff(market, suppliers, decision, &r, demand, c_scale)?;
        let payoff = build_payoff_operator(&sp, n)?;
        let a = build_a_operator(&loader_circuit, &payoff)?;
        let res = estimate_amplitude(&a, mix_seed(seed, NODE_TAG, node as u64))?;
        estimate += weight * invert_estimate(res.estimate, &sp);
        // The inversion is affine increasing in the probability, so interval
        // endpoints map to interval endpoints.
        ci_low += weight * invert_estimate(res.ci_low, &sp);
        ci_high += weight * invert_estimate(res.ci_high, &sp);
        shots_total += res.samples_or_shots;
        queries_total += res.oracle_queries;

        // Odometer over the joint reliability grid.
        for s in 0..index.len() {
            index[s] += 1;
            if index[s] < sizes[s] {
                break;
            }
            index[s] = 0;
        }
    }

    Ok(EstimateResult {
        estimate,
        ci_low,
        ci_high,
        samples_or_shots: shots_total,
        oracle_queries: queries_total,
    })
}

/// The full Cartesian decision grid: per supplier, q ranges over
/// 0..=min(capacity, 2^n - 1); the demand grid bounds useful quantities.
pub fn decision_grid(
    suppliers: &[Supplier],
    demand: &DemandDistribution,
) -> Result<Vec<OrderDecision>> {
    if suppliers.is_empty() {
        return Err(Error::EmptySupport {
            what: "supplier list",
        });
    }
    let caps: Vec<u32> = suppliers
        .iter()
        .map(|s| s.capacity.min(demand.n_points() as u32 - 1))
        .collect();
    let mut grid = Vec::new();
    let mut q = vec![0u32; suppliers.len()];
    loop {
        grid.push(OrderDecision::new(q.clone(), suppliers)?);
        let mut carried = true;
        for s in (0..q.len()).rev() {
            if q[s] < caps[s] {
                q[s] += 1;
                carried = false;
                break;
            }
            q[s] = 0;
        }
        if carried {
            break;
        }
    }
    Ok(grid)
}

/// Exhaustive argmax of [`evaluate_order`] over `q_grid`.
///
/// Every candidate is evaluated with the same seed, so stochastic
/// estimators see common random numbers and candidate comparisons are not
/// washed out by independent noise. Ties break toward the smaller total
/// quantity, then the lexicographically smaller vector; the winner is
/// independent of grid order.
pub fn grid_optimize(
    market: &MarketParams,
    suppliers: &[Supplier],
    demand: &DemandDistribution,
    loader: Option<&Circuit>,
    estimator: &EstimatorChoice,
    q_grid: &[OrderDecision],
    seed: u64,
) -> Result<(OrderDecision, EstimateResult)> {
    if q_grid.is_empty() {
        return Err(Error::EmptySupport {
            what: "decision grid",
        });
    }
    if let EstimatorChoice::Saa { n_scenarios } = *estimator {
        return saa_optimize(market, suppliers, demand, n_scenarios, seed, q_grid);
    }
    let mut best: Option<(OrderDecision, EstimateResult)> = None;
    for candidate in q_grid {
        let result = evaluate_order(market, suppliers, candidate, demand, loader, estimator, seed)?;
        let replace = match &best {
            None => true,
            Some((inc_dec, inc_res)) => {
                crate::classical::better_candidate(
                    result.estimate,
                    candidate,
                    inc_res.estimate,
                    inc_dec,
                ) == std::cmp::Ordering::Greater
            }
        };
        if replace {
            best = Some((candidate.clone(), result));
        }
    }
    Ok(best.expect("non-empty grid"))
}

/// Optimizes every cell of a 2-D reliability grid for a two-supplier
/// problem. Cell `(i, j)` gives supplier 0 the reliability `axis1[i]` and
/// supplier 1 `axis2[j]` (interpreted per `mode`), then runs
/// [`grid_optimize`] with the cell-specific seed `mix_seed(seed, i, j)`,
/// making cells independent and individually reproducible.
#[allow(clippy::too_many_arguments)]
pub fn reliability_sweep(
    market: &MarketParams,
    suppliers: &[Supplier],
    demand: &DemandDistribution,
    loader: Option<&Circuit>,
    estimator: &EstimatorChoice,
    axis1: &[f64],
    axis2: &[f64],
    mode: SweepMode,
    q_grid: &[OrderDecision],
    seed: u64,
) -> Result<Heatmap> {
    if suppliers.len() != 2 {
        return Err(Error::DimensionMismatch {
            what: "suppliers for a 2-D sweep",
            expected: 2,
            got: suppliers.len(),
        });
    }
    for &axis in &[axis1, axis2] {
        if axis.is_empty() {
            return Err(Error::EmptySupport {
                what: "sweep axis",
            });
        }
        if axis.iter().any(|&r| !(0.0..=1.0).contains(&r)) {
            return Err(Error::InvalidArgument {
                what: "sweep axis values must lie in [0, 1]".into(),
            });
        }
    }
    let model_for = |r: f64| match mode {
        SweepMode::Deterministic => ReliabilityModel::Deterministic { value: r },
        SweepMode::TruncatedNormalMean { variance } => {
            ReliabilityModel::TruncatedNormal { mean: r, variance }
        }
    };
    let mut objective = Vec::with_capacity(axis1.len());
    let mut decision = Vec::with_capacity(axis1.len());
    for (i, &r1) in axis1.iter().enumerate() {
        let mut obj_row = Vec::with_capacity(axis2.len());
        let mut dec_row = Vec::with_capacity(axis2.len());
        for (j, &r2) in axis2.iter().enumerate() {
            let mut cell_suppliers = suppliers.to_vec();
            cell_suppliers[0].reliability = model_for(r1);
            cell_suppliers[1].reliability = model_for(r2);
            let cell_seed = mix_seed(seed, i as u64, j as u64);
            let (dec, res) = grid_optimize(
                market,
                &cell_suppliers,
                demand,
                loader,
                estimator,
                q_grid,
                cell_seed,
            )?;
            obj_row.push(res.estimate);
            dec_row.push(dec);
        }
        objective.push(obj_row);
        decision.push(dec_row);
    }
    Ok(Heatmap {
        axis1: axis1.to_vec(),
        axis2: axis2.to_vec(),
        objective,
        decision,
    })
}
