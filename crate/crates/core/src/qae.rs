//! Amplitude estimation on the statevector simulator.
//!
//! Both estimators measure `a = P(objective = 1)` of a prepared state
//! `A|0...0>` to precision far beyond shot-noise scaling, by powering the
//! Grover operator `Q = A S_0 A^dag S_psi0`. On the two-dimensional
//! invariant subspace spanned by the good and bad components, `Q` rotates
//! by `2 theta` where `a = sin^2(theta)`, so its eigenphases reveal `theta`.
//!
//! The canonical estimator runs textbook phase estimation with `m` readout
//! qubits and reports the modal outcome, giving a fixed grid of `M = 2^m`
//! candidate values. The iterative estimator never builds the phase
//! register: it applies increasing powers `Q^k`, measures the objective
//! qubit alone, and narrows a confidence interval for `theta` until the
//! requested precision is met.

use rand::SeedableRng;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::classical::{mix_seed, EstimateResult, SHOT_TAG};
use crate::encoding::AOperator;
use crate::error::{Error, Result};
use crate::qsim::{Circuit, GateKind, GateOp, QuantumState};

use std::f64::consts::PI;

/// The Grover operator for an [`AOperator`], with the bookkeeping needed to
/// apply powers of it.
#[derive(Debug, Clone)]
pub struct GroverOperator {
    pub circuit: Circuit,
    pub objective: usize,
    pub n_qubits: usize,
}

/// Tuning knobs for the estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QaeConfig {
    /// Phase-register width for the canonical estimator.
    pub m: usize,
    /// Measurement shots per circuit execution.
    pub shots: u64,
    /// Target half-width of the iterative estimator's interval (on `a`).
    pub epsilon: f64,
    /// Allowed failure probability of the iterative estimator's interval.
    pub alpha: f64,
    /// Repetitions for [`median_boost`].
    pub repetitions: usize,
}

impl Default for QaeConfig {
    fn default() -> Self {
        QaeConfig {
            m: 5,
            shots: 1024,
            epsilon: 0.01,
            alpha: 0.05,
            repetitions: 5,
        }
    }
}

/// Builds `Q = A S_0 A^dag S_psi0` (rightmost factor applied first),
/// followed by a global sign flip. `S_psi0` is a Z on the objective qubit;
/// `S_0` reflects about |0> on the state and objective qubits jointly,
/// leaving comparator ancillas out of both reflections. The trailing
/// X-Z-X-Z pair on the objective realizes -I so that phase estimation
/// reads eigenphases `+-2 theta` rather than `pi +- 2 theta`.
pub fn grover_operator(a: &AOperator) -> Result<GroverOperator> {
    let n = a.circuit.n_qubits();
    let mut q = Circuit::new(n);

    // S_psi0: flip the sign of the good (objective = 1) component.
    q.z(a.objective)?;

    // A^dag.
    q.extend(&a.circuit.inverse())?;

    // S_0 on state + objective: X-sandwiched multi-controlled Z flips the
    // sign of exactly the all-zeros component of those qubits.
    let mut reflect: Vec<usize> = (0..a.n_state).collect();
    reflect.push(a.objective);
    for &qubit in &reflect {
        q.x(qubit)?;
    }
    let (target, controls) = reflect.split_last().expect("objective always present");
    q.push(GateOp::new(GateKind::Z, vec![*target], controls.to_vec()))?;
    for &qubit in &reflect {
        q.x(qubit)?;
    }

    // A.
    q.extend(&a.circuit)?;

    // Global -I via XZXZ on any single qubit.
    q.x(a.objective)?;
    q.z(a.objective)?;
    q.x(a.objective)?;
    q.z(a.objective)?;

    Ok(GroverOperator {
        circuit: q,
        objective: a.objective,
        n_qubits: n,
    })
}

/// Grid resolution bound for the canonical estimator with `M = 2^m` phase
/// values: `|a - a_hat| <= pi/M + pi^2/M^2` holds with probability at least
/// 8/pi^2 for the modal outcome.
pub fn qae_error_bound(m_points: u64) -> Result<f64> {
    if m_points < 2 {
        return Err(Error::InvalidArgument {
            what: format!("phase grid needs at least 2 points, got {m_points}"),
        });
    }
    let m = m_points as f64;
    Ok(PI / m + PI * PI / (m * m))
}

/// Canonical phase-estimation QAE. Prepares `A|0>` joined with `m` phase
/// qubits, applies `Q^(2^j)` controlled on phase qubit `j`, inverts the
/// Fourier transform on the phase register, and samples it. The modal
/// outcome `y` yields `a_hat = sin^2(y pi / M)`.
pub fn canonical_qae(
    a: &AOperator,
    m: usize,
    shots: u64,
    seed: u64,
) -> Result<EstimateResult> {
    if m == 0 {
        return Err(Error::InvalidArgument {
            what: "phase register must have at least 1 qubit".into(),
        });
    }
    if shots == 0 {
        return Err(Error::InvalidArgument {
            what: "shots must be at least 1".into(),
        });
    }
    let n_a = a.circuit.n_qubits();
    let total = n_a + m;
    if total > crate::qsim::MAX_QUBITS {
        return Err(Error::QubitCountOutOfRange {
            n: total,
            max: crate::qsim::MAX_QUBITS,
        });
    }
    let grover = grover_operator(a)?;

    let mut state = QuantumState::zero(total)?;
    state.apply_circuit(&a.circuit)?;
    for j in 0..m {
        state.apply(&GateOp::new(GateKind::H, vec![n_a + j], vec![]))?;
    }
    // Controlled powers: phase qubit j drives Q^(2^j).
    for j in 0..m {
        let controlled = grover.circuit.controlled_by(n_a + j)?;
        for _ in 0..(1u64 << j) {
            state.apply_circuit(&controlled)?;
        }
    }
    let phase_qubits: Vec<usize> = (0..m).map(|j| n_a + j).collect();
    state.apply_circuit(&Circuit::inverse_qft(total, &phase_qubits)?)?;

    let counts = state.sample_counts(&phase_qubits, shots, mix_seed(seed, SHOT_TAG, 0))?;
    // Modal y; ties break toward the smaller outcome for determinism.
    let (&y, _) = counts
        .iter()
        .max_by(|(ya, ca), (yb, cb)| ca.cmp(cb).then(yb.cmp(ya)))
        .expect("at least one shot");

    let m_points = 1u64 << m;
    let estimate = (y as f64 * PI / m_points as f64).sin().powi(2);
    let bound = qae_error_bound(m_points)?;
    Ok(EstimateResult {
        estimate,
        ci_low: (estimate - bound).max(0.0),
        ci_high: (estimate + bound).min(1.0),
        samples_or_shots: shots,
        oracle_queries: shots * (m_points - 1),
    })
}

/// Clopper-Pearson interval for `hits` successes in `shots` trials at
/// confidence `1 - alpha`, via Beta quantiles.
fn clopper_pearson(hits: u64, shots: u64, alpha: f64) -> (f64, f64) {
    let n = shots as f64;
    let k = hits as f64;
    let lo = if hits == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0)
            .expect("valid Beta parameters")
            .inverse_cdf(alpha / 2.0)
    };
    let hi = if hits == shots {
        1.0
    } else {
        Beta::new(k + 1.0, n - k)
            .expect("valid Beta parameters")
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

/// Hard cap on interval-refinement rounds; the union bound splits `alpha`
/// across this many Clopper-Pearson evaluations.
const IQAE_MAX_ROUNDS: u64 = 500;

/// Iterative amplitude estimation without a phase register.
///
/// Maintains a confidence interval `[theta_l, theta_u]` for the rotation
/// angle. Each round picks the largest power `k` (with `K = 4k + 2`) such
/// that the scaled interval `[K theta_l, K theta_u]` stays inside one
/// half-period of `sin^2`, measures the objective of `Q^k A|0>`, converts
/// the Clopper-Pearson interval on that probability back through the
/// half-period, and intersects. Stops once `a_u - a_l <= 2 epsilon`.
/// Shots at the same `k` pool; `oracle_queries` counts applications of `A`
/// or `A^dag` within `Q^k` per shot.
pub fn iqae(a: &AOperator, config: &QaeConfig, seed: u64) -> Result<EstimateResult> {
    if !(config.epsilon > 0.0 && config.epsilon < 0.5) {
        return Err(Error::InvalidArgument {
            what: format!("epsilon must lie in (0, 0.5), got {}", config.epsilon),
        });
    }
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(Error::InvalidArgument {
            what: format!("alpha must lie in (0, 1), got {}", config.alpha),
        });
    }
    if config.shots == 0 {
        return Err(Error::InvalidArgument {
            what: "shots must be at least 1".into(),
        });
    }
    let grover = grover_operator(a)?;
    let alpha_round = config.alpha / IQAE_MAX_ROUNDS as f64;
    // The rotation angle lives in [0, pi/2]; track its interval in radians.
    let mut theta_l = 0.0f64;
    let mut theta_u = PI / 2.0;

    let mut k_current = 0u64;
    let mut hits_pool = 0u64;
    let mut shots_pool = 0u64;
    let mut total_shots = 0u64;
    let mut queries = 0u64;

    // Cache the prepared state per k: Q^k A|0>.
    let mut base = QuantumState::zero(a.circuit.n_qubits())?;
    base.apply_circuit(&a.circuit)?;
    let mut cached_k = 0u64;

    for round in 0..IQAE_MAX_ROUNDS {
        // Stop when the induced interval on a is tight enough.
        let a_l = theta_l.sin().powi(2);
        let a_u = theta_u.sin().powi(2);
        if a_u - a_l <= 2.0 * config.epsilon {
            break;
        }

        let k_next = find_next_k(k_current, theta_l, theta_u);
        if let Some(k) = k_next {
            if k != k_current {
                k_current = k;
                hits_pool = 0;
                shots_pool = 0;
            }
        }
        // No admissible larger power: keep measuring at the current one.

        // Advance the cached state to Q^(k_current) A|0>.
        while cached_k < k_current {
            base.apply_circuit(&grover.circuit)?;
            cached_k += 1;
        }

        let shot_seed = mix_seed(seed, SHOT_TAG, round);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(shot_seed);
        let p1 = base.prob_of_outcome(grover.objective, true);
        let hits = sample_binomial(&mut rng, config.shots, p1);
        hits_pool += hits;
        shots_pool += config.shots;
        total_shots += config.shots;
        queries += config.shots * (2 * k_current + 1);

        let (p_lo, p_hi) = clopper_pearson(hits_pool, shots_pool, alpha_round);

        // Measured probability is sin^2((2k+1) theta) = sin^2(K theta / 2)
        // with K = 4k + 2. The scaled angle K theta lies in a known
        // half-period [j pi, (j+1) pi]; invert monotonically there.
        let big_k = (4 * k_current + 2) as f64;
        let j = ((big_k * theta_l / PI) + 1e-12).floor();
        let (lam_lo, lam_hi) = if (j as u64).is_multiple_of(2) {
            // Rising half-period: Lambda = acos(1 - 2p).
            (
                (1.0 - 2.0 * p_lo).clamp(-1.0, 1.0).acos(),
                (1.0 - 2.0 * p_hi).clamp(-1.0, 1.0).acos(),
            )
        } else {
            // Falling half-period: Lambda = acos(2p - 1), order swaps.
            (
                (2.0 * p_hi - 1.0).clamp(-1.0, 1.0).acos(),
                (2.0 * p_lo - 1.0).clamp(-1.0, 1.0).acos(),
            )
        };
        let new_l = (j * PI + lam_lo) / big_k;
        let new_u = (j * PI + lam_hi) / big_k;
        theta_l = theta_l.max(new_l);
        theta_u = theta_u.min(new_u);
        if theta_u < theta_l {
            // Numerically collapsed from two noisy intersections; pin to a
            // point rather than an inverted interval.
            let mid = 0.5 * (theta_l + theta_u);
            theta_l = mid;
            theta_u = mid;
        }
    }

    let a_l = theta_l.sin().powi(2);
    let a_u = theta_u.sin().powi(2);
    Ok(EstimateResult {
        estimate: 0.5 * (a_l + a_u),
        ci_low: a_l,
        ci_high: a_u,
        samples_or_shots: total_shots,
        oracle_queries: queries,
    })
}

/// Largest admissible next power for the iterative estimator: the biggest
/// `K = 4k + 2` that keeps `[K theta_l, K theta_u]` inside one half-period
/// of `sin^2` and at least doubles the current `K`. Returns None when no
/// such power exists yet.
fn find_next_k(k_current: u64, theta_l: f64, theta_u: f64) -> Option<u64> {
    let k_now = (4 * k_current + 2) as f64;
    let width = theta_u - theta_l;
    if width <= 0.0 {
        return None;
    }
    let k_max = (PI / width).floor();
    // Largest K <= k_max with K = 2 (mod 4).
    let mut big_k = k_max - ((k_max as i64 - 2).rem_euclid(4)) as f64;
    while big_k >= 2.0 * k_now {
        let j_lo = ((big_k * theta_l / PI) + 1e-12).floor();
        let fits = big_k * theta_u <= (j_lo + 1.0) * PI + 1e-12;
        if fits {
            let k = ((big_k - 2.0) / 4.0).round() as u64;
            if k > k_current {
                return Some(k);
            }
            return None;
        }
        big_k -= 4.0;
    }
    None
}

/// Draws from Binomial(shots, p) by counting uniform draws below `p`.
/// Plenty fast at the shot counts used here and trivially reproducible.
fn sample_binomial(rng: &mut rand_chacha::ChaCha8Rng, shots: u64, p: f64) -> u64 {
    use rand::Rng;
    let mut hits = 0;
    for _ in 0..shots {
        if rng.random::<f64>() < p {
            hits += 1;
        }
    }
    hits
}

/// Runs an estimator several times on sub-seeds and reports the run with
/// the median estimate, sharpening the canonical estimator's 8/pi^2 success
/// probability exponentially in `repetitions`. Requires an odd count so the
/// median is an actual run.
pub fn median_boost<F>(repetitions: usize, seed: u64, mut run: F) -> Result<EstimateResult>
where
    F: FnMut(u64) -> Result<EstimateResult>,
{
    if repetitions == 0 || repetitions.is_multiple_of(2) {
        return Err(Error::InvalidArgument {
            what: format!("repetitions must be odd and positive, got {repetitions}"),
        });
    }
    let mut results = Vec::with_capacity(repetitions);
    for i in 0..repetitions {
        results.push(run(mix_seed(seed, 0x4d45_4449, i as u64))?);
    }
    let total_shots: u64 = results.iter().map(|r| r.samples_or_shots).sum();
    let total_queries: u64 = results.iter().map(|r| r.oracle_queries).sum();
    results.sort_by(|a, b| {
        a.estimate
            .partial_cmp(&b.estimate)
            .expect("finite estimates")
    });
    let mut median = results.swap_remove(repetitions / 2);
    median.samples_or_shots = total_shots;
    median.oracle_queries = total_queries;
    Ok(median)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grover_probability_after(a_val: f64, k: u32) -> f64 {
        let a = AOperator::bernoulli(a_val).unwrap();
        let g = grover_operator(&a).unwrap();
        let mut state = QuantumState::zero(g.n_qubits).unwrap();
        state.apply_circuit(&a.circuit).unwrap();
        for _ in 0..k {
            state.apply_circuit(&g.circuit).unwrap();
        }
        state.prob_of_outcome(g.objective, true)
    }

    #[test]
    fn grover_amplifies_quarter_to_one() {
        // a = 1/4: theta = pi/6, one Grover step gives sin^2(3 theta) = 1.
        assert_abs_diff_eq!(grover_probability_after(0.25, 1), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn grover_fixes_zero() {
        assert_abs_diff_eq!(grover_probability_after(0.0, 1), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(grover_probability_after(0.0, 3), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn grover_half_stays_half() {
        // theta = pi/4: sin^2(3 pi/4) = 1/2 again.
        assert_abs_diff_eq!(grover_probability_after(0.5, 1), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn grover_matches_closed_form_for_many_powers() {
        let a_val: f64 = 0.3;
        let theta = a_val.sqrt().asin();
        for k in 0..6u32 {
            let expected = ((2.0 * k as f64 + 1.0) * theta).sin().powi(2);
            assert_abs_diff_eq!(grover_probability_after(a_val, k), expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn canonical_recovers_on_grid_amplitude() {
        // An amplitude sitting exactly on the phase grid is read without
        // error; this would fail if the estimator read cos^2 instead of
        // sin^2 or mirrored y.
        let m = 4;
        let m_points = 1u64 << m;
        for y in [1u64, 3, 6] {
            let a_val = (y as f64 * PI / m_points as f64).sin().powi(2);
            let a = AOperator::bernoulli(a_val).unwrap();
            let r = canonical_qae(&a, m, 64, 11).unwrap();
            assert_abs_diff_eq!(r.estimate, a_val, epsilon = 1e-10);
        }
    }

    #[test]
    fn canonical_error_within_grid_bound() {
        let a_val = 0.3;
        let a = AOperator::bernoulli(a_val).unwrap();
        let r = canonical_qae(&a, 5, 256, 42).unwrap();
        let bound = qae_error_bound(32).unwrap();
        assert!(
            (r.estimate - a_val).abs() <= bound,
            "estimate {} misses {} by more than {}",
            r.estimate,
            a_val,
            bound
        );
        assert_eq!(r.oracle_queries, 256 * 31);
    }

    #[test]
    fn iqae_zero_amplitude_collapses_interval() {
        let a = AOperator::bernoulli(0.0).unwrap();
        let config = QaeConfig {
            epsilon: 0.01,
            ..QaeConfig::default()
        };
        let r = iqae(&a, &config, 3).unwrap();
        assert_eq!(r.ci_low, 0.0);
        assert!(r.ci_high <= 2.0 * config.epsilon);
        assert!(r.estimate <= config.epsilon);
    }

    #[test]
    fn iqae_hits_requested_precision() {
        let a = AOperator::bernoulli(0.3).unwrap();
        let config = QaeConfig {
            epsilon: 0.005,
            ..QaeConfig::default()
        };
        let r = iqae(&a, &config, 7).unwrap();
        assert!(r.ci_high - r.ci_low <= 2.0 * config.epsilon);
        assert!((r.estimate - 0.3).abs() <= 2.0 * config.epsilon);
    }

    #[test]
    fn iqae_tighter_epsilon_costs_fewer_than_classical_scaling() {
        // Halving epsilon should cost roughly 2x the queries, far below the
        // 4x of shot-noise scaling. Allow generous slack; this is a smoke
        // test of the scaling direction, not a benchmark.
        let a = AOperator::bernoulli(0.3).unwrap();
        let loose = iqae(
            &a,
            &QaeConfig {
                epsilon: 0.01,
                ..QaeConfig::default()
            },
            5,
        )
        .unwrap();
        let tight = iqae(
            &a,
            &QaeConfig {
                epsilon: 0.00125,
                ..QaeConfig::default()
            },
            5,
        )
        .unwrap();
        let ratio = tight.oracle_queries as f64 / loose.oracle_queries as f64;
        assert!(
            ratio < 32.0,
            "8x precision cost {ratio}x queries, expected far under the classical 64x"
        );
    }

    #[test]
    fn median_boost_single_repetition_is_identity() {
        let a = AOperator::bernoulli(0.25).unwrap();
        let direct = canonical_qae(&a, 4, 128, mix_seed(9, 0x4d45_4449, 0)).unwrap();
        let boosted = median_boost(1, 9, |s| canonical_qae(&a, 4, 128, s)).unwrap();
        assert_eq!(direct.estimate, boosted.estimate);
    }

    #[test]
    fn median_boost_rejects_even_repetitions() {
        assert!(median_boost(2, 0, |_| Ok(EstimateResult::exact(0.5))).is_err());
        assert!(median_boost(0, 0, |_| Ok(EstimateResult::exact(0.5))).is_err());
    }

    #[test]
    fn error_bound_values() {
        assert_abs_diff_eq!(
            qae_error_bound(32).unwrap(),
            PI / 32.0 + PI * PI / 1024.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            qae_error_bound(2).unwrap(),
            PI / 2.0 + PI * PI / 4.0,
            epsilon = 1e-15
        );
        assert!(qae_error_bound(1).is_err());
        // The bound shrinks like 1/M.
        assert!(qae_error_bound(1 << 20).unwrap() < 1e-5);
    }

    #[test]
    fn canonical_qae_on_composed_operator() {
        // End-to-end on a real payoff operator rather than the Bernoulli
        // toy: the grid estimate must land within the resolution bound of
        // the exact probability.
        use crate::encoding::{build_a_operator, build_payoff_operator, exact_load, scale_payoff};
        use crate::model::{DemandDistribution, MarketParams, OrderDecision, ReliabilityModel, Supplier};
        let market = MarketParams {
            price: 1.4,
            salvage: 0.6,
            shortage_cost: 1.3,
        };
        let suppliers = vec![Supplier {
            unit_cost: 0.95,
            fixed_cost: 0.0,
            capacity: 3,
            reliability: ReliabilityModel::Deterministic { value: 1.0 },
        }];
        let decision = OrderDecision::new(vec![2], &suppliers).unwrap();
        let demand = DemandDistribution::uniform(2).unwrap();
        let sp = scale_payoff(&market, &suppliers, &decision, &[1.0], &demand, 0.05).unwrap();
        let a = build_a_operator(
            &exact_load(&demand),
            &build_payoff_operator(&sp, 2).unwrap(),
        )
        .unwrap();
        let p_exact = a.exact_probability().unwrap();
        let r = canonical_qae(&a, 5, 512, 13).unwrap();
        assert!((r.estimate - p_exact).abs() <= qae_error_bound(32).unwrap());
    }

    #[test]
    fn iqae_on_composed_operator_recovers_exact_probability() {
        use crate::encoding::{build_a_operator, build_payoff_operator, exact_load, scale_payoff};
        use crate::model::{DemandDistribution, MarketParams, OrderDecision, ReliabilityModel, Supplier};
        let market = MarketParams {
            price: 1.4,
            salvage: 0.6,
            shortage_cost: 1.3,
        };
        let suppliers = vec![Supplier {
            unit_cost: 0.95,
            fixed_cost: 0.0,
            capacity: 3,
            reliability: ReliabilityModel::Deterministic { value: 1.0 },
        }];
        let decision = OrderDecision::new(vec![2], &suppliers).unwrap();
        let demand = DemandDistribution::uniform(2).unwrap();
        let sp = scale_payoff(&market, &suppliers, &decision, &[1.0], &demand, 0.05).unwrap();
        let a = build_a_operator(
            &exact_load(&demand),
            &build_payoff_operator(&sp, 2).unwrap(),
        )
        .unwrap();
        let p_exact = a.exact_probability().unwrap();
        let r = iqae(
            &a,
            &QaeConfig {
                epsilon: 0.002,
                ..QaeConfig::default()
            },
            21,
        )
        .unwrap();
        assert!((r.estimate - p_exact).abs() <= 0.004);
    }
}
