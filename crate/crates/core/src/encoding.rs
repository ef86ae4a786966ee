//! Problem-specific circuit construction.
//!
//! The composed operator prepared here is `A = F_q (P_D ⊗ I)`: a probability
//! loader `P_D` puts the demand distribution onto the state register, then
//! the payoff operator `F_q` rotates an objective qubit so that its |1>
//! amplitude at demand index `i` is `sin(c*f~(i) + pi/4)`, where `f~` is the
//! profit rescaled to [-1, 1]. Measuring the objective qubit therefore
//! estimates `P = sum_i p_i sin^2(c*f~(i) + pi/4) ~ c*E[f~] + 1/2`, which
//! [`invert_estimate`] maps back to money.
//!
//! Register layout of a payoff circuit on an n-qubit demand register, in
//! index order: state qubits `0..n`, the comparator flag at `n`, n-1 ripple
//! carries at `n+1..2n`, and the objective qubit at `2n`. The carries are
//! uncomputed; the flag is left computed, which is safe for amplitude
//! estimation because the Grover reflections never touch ancillas.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate, DemandDistribution, MarketParams, OrderDecision, Supplier};
use crate::qsim::{Circuit, GateKind, GateOp, QuantumState};

use std::f64::consts::FRAC_PI_4;

/// A trained or exact probability loader, serializable for reuse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LoaderSpec {
    /// Load these probabilities exactly with the rotation tree.
    Exact { probs: Vec<f64> },
    /// Hardware-efficient ansatz parameters found by [`variational_load`].
    Variational {
        n_qubits: usize,
        depth: usize,
        params: Vec<f64>,
        achieved_divergence: f64,
    },
}

impl LoaderSpec {
    /// Builds the loader circuit this spec describes.
    pub fn circuit(&self) -> Result<Circuit> {
        match self {
            LoaderSpec::Exact { probs } => {
                let n = probs.len().trailing_zeros() as usize;
                if probs.len() != (1 << n) || probs.is_empty() {
                    return Err(Error::InvalidDistribution {
                        reason: format!("{} probabilities is not a power of two", probs.len()),
                    });
                }
                let demand = DemandDistribution::new(n, probs.clone(), 0.0, 1.0)?;
                Ok(exact_load(&demand))
            }
            LoaderSpec::Variational {
                n_qubits,
                depth,
                params,
                ..
            } => ansatz_circuit(*n_qubits, *depth, params),
        }
    }
}

/// Builds the exact loader: a Y-rotation per internal node of the binary
/// probability tree, controlled on the already-set higher bits (with X
/// sandwiches realizing 0-controls). Maps |0...0> to sum_i sqrt(p_i) |i>
/// with non-negative real amplitudes.
pub fn exact_load(demand: &DemandDistribution) -> Circuit {
    let n = demand.n_qubits();
    let probs = demand.probs();
    let mut circuit = Circuit::new(n);
    // Bit b is set for all indices in the upper half of a block of width
    // 2^(b+1); process blocks from the most significant bit down.
    for b in (0..n).rev() {
        let block = 1usize << (b + 1);
        let n_blocks = probs.len() / block;
        for v in 0..n_blocks {
            let start = v * block;
            let total: f64 = probs[start..start + block].iter().sum();
            if total <= 0.0 {
                continue; // unreachable branch of the tree
            }
            let upper: f64 = probs[start + block / 2..start + block].iter().sum();
            let cond = (upper / total).clamp(0.0, 1.0);
            let theta = 2.0 * cond.sqrt().asin();
            if theta == 0.0 && v != 0 {
                // A zero rotation is the identity; skip it unless it is the
                // very first op (keeping at least the root makes the circuit
                // well-formed for point masses at index 0).
                continue;
            }
            // Controls: bits n-1..b+1 must match the prefix v.
            let mut flips = Vec::new();
            let mut controls = Vec::new();
            for k in 0..(n - 1 - b) {
                let control_bit = n - 1 - k;
                let want = (v >> (n - 1 - b - 1 - k)) & 1;
                controls.push(control_bit);
                if want == 0 {
                    flips.push(control_bit);
                }
            }
            for &f in &flips {
                circuit.x(f).expect("valid loader qubit");
            }
            circuit
                .push(GateOp::new(GateKind::Ry(theta), vec![b], controls))
                .expect("valid loader rotation");
            for &f in &flips {
                circuit.x(f).expect("valid loader qubit");
            }
        }
    }
    circuit
}

/// The hardware-efficient ansatz: a Y-rotation layer, then `depth`
/// repetitions of (controlled-Z ring + Y-rotation layer). Parameter order is
/// layer-major: `params[layer * n + qubit]`.
pub fn ansatz_circuit(n_qubits: usize, depth: usize, params: &[f64]) -> Result<Circuit> {
    if n_qubits == 0 {
        return Err(Error::QubitCountOutOfRange {
            n: 0,
            max: crate::qsim::MAX_QUBITS,
        });
    }
    let expected = (depth + 1) * n_qubits;
    if params.len() != expected {
        return Err(Error::DimensionMismatch {
            what: "ansatz parameters",
            expected,
            got: params.len(),
        });
    }
    let mut c = Circuit::new(n_qubits);
    for (q, &theta) in params.iter().take(n_qubits).enumerate() {
        c.ry(theta, q)?;
    }
    for layer in 1..=depth {
        // Entangling ring of controlled-Z gates; CZ is symmetric, so express
        // it as Z(target) with one control.
        if n_qubits == 2 {
            c.push(GateOp::new(GateKind::Z, vec![1], vec![0]))?;
        } else if n_qubits > 2 {
            for q in 0..n_qubits {
                let a = q;
                let b = (q + 1) % n_qubits;
                c.push(GateOp::new(GateKind::Z, vec![b], vec![a]))?;
            }
        }
        for q in 0..n_qubits {
            c.ry(params[layer * n_qubits + q], q)?;
        }
    }
    Ok(c)
}

/// The measurement distribution of a loader circuit applied to |0...0>.
pub fn circuit_distribution(circuit: &Circuit) -> Result<Vec<f64>> {
    let mut state = QuantumState::zero(circuit.n_qubits())?;
    state.apply_circuit(circuit)?;
    Ok(state.amplitudes().iter().map(|a| a.norm_sqr()).collect())
}

/// KL(p || q) with q clamped to 1e-12 so unlikely circuit outcomes cannot
/// blow the objective up to infinity.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi.max(1e-12)).ln())
        .sum()
}

/// Trains the ansatz to match a target distribution by minimizing
/// KL(target || circuit) with a seeded Nelder-Mead search (restarted while
/// budget remains). `budget` counts objective evaluations. Returns the best
/// parameters found; exhausting the budget is not an error.
pub fn variational_load(
    target: &DemandDistribution,
    depth: usize,
    budget: u64,
    seed: u64,
) -> Result<LoaderSpec> {
    use rand::{Rng, SeedableRng};
    if depth == 0 {
        return Err(Error::InvalidArgument {
            what: "ansatz depth must be at least 1".into(),
        });
    }
    if budget == 0 {
        return Err(Error::InvalidArgument {
            what: "training budget must be at least 1 evaluation".into(),
        });
    }
    let n = target.n_qubits();
    let dim = (depth + 1) * n;
    let mut objective = CountedObjective {
        probs: target.probs().to_vec(),
        n_qubits: n,
        depth,
        evals: 0,
        budget,
    };

    // First layer from single-qubit marginals: RY(2 asin(sqrt(P[bit=1])))
    // reproduces any product distribution exactly and is a strong start
    // otherwise. Deeper layers start at zero (identity).
    let mut init = vec![0.0; dim];
    for (q, slot) in init.iter_mut().take(n).enumerate() {
        let marginal: f64 = objective
            .probs
            .iter()
            .enumerate()
            .filter(|(i, _)| i & (1 << q) != 0)
            .map(|(_, &p)| p)
            .sum();
        *slot = 2.0 * marginal.clamp(0.0, 1.0).sqrt().asin();
    }

    let mut best_params = init.clone();
    let mut best_value = objective.eval(&best_params);

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut scale = 0.25;
    while objective.evals < budget && best_value > 1e-12 {
        let (params, value) = nelder_mead(&mut objective, &best_params, scale, &mut rng);
        if value < best_value {
            best_value = value;
            best_params = params;
        }
        // Restart around the incumbent with a fresh perturbation scale.
        scale = 0.1 + rng.random::<f64>() * 0.6;
    }

    Ok(LoaderSpec::Variational {
        n_qubits: n,
        depth,
        params: best_params,
        achieved_divergence: best_value,
    })
}

/// KL objective with a built-in evaluation budget.
struct CountedObjective {
    probs: Vec<f64>,
    n_qubits: usize,
    depth: usize,
    evals: u64,
    budget: u64,
}

impl CountedObjective {
    fn eval(&mut self, params: &[f64]) -> f64 {
        self.evals += 1;
        let circuit =
            ansatz_circuit(self.n_qubits, self.depth, params).expect("dimension fixed");
        let q = circuit_distribution(&circuit).expect("valid circuit");
        kl_divergence(&self.probs, &q)
    }

    fn exhausted(&self) -> bool {
        self.evals >= self.budget
    }
}

/// One Nelder-Mead run from a seeded simplex around `start`. Returns the
/// best vertex when the simplex collapses or the budget runs out.
fn nelder_mead(
    f: &mut CountedObjective,
    start: &[f64],
    spread: f64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> (Vec<f64>, f64) {
    use rand::Rng;
    let dim = start.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((start.to_vec(), f.eval(start)));
    for i in 0..dim {
        if f.exhausted() {
            break;
        }
        let mut v = start.to_vec();
        v[i] += spread * (0.5 + rng.random::<f64>());
        let fv = f.eval(&v);
        simplex.push((v, fv));
    }

    while f.evals + 2 <= f.budget && simplex.len() == dim + 1 {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite KL"));
        let spread_now = simplex[dim].1 - simplex[0].1;
        if spread_now < 1e-12 {
            break;
        }
        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|(v, _)| v[j]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();
        let reflected: Vec<f64> = (0..dim)
            .map(|j| centroid[j] + alpha * (centroid[j] - worst.0[j]))
            .collect();
        let fr = f.eval(&reflected);
        if fr < simplex[0].1 {
            if f.exhausted() {
                simplex[dim] = (reflected, fr);
                break;
            }
            let expanded: Vec<f64> = (0..dim)
                .map(|j| centroid[j] + gamma * (reflected[j] - centroid[j]))
                .collect();
            let fe = f.eval(&expanded);
            simplex[dim] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
        } else {
            let contracted: Vec<f64> = (0..dim)
                .map(|j| centroid[j] + rho * (worst.0[j] - centroid[j]))
                .collect();
            let fc = f.eval(&contracted);
            if fc < worst.1 {
                simplex[dim] = (contracted, fc);
            } else {
                // Shrink toward the best vertex.
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    if f.exhausted() {
                        break;
                    }
                    let v: Vec<f64> = (0..dim)
                        .map(|j| best[j] + sigma * (vertex.0[j] - best[j]))
                        .collect();
                    let fv = f.eval(&v);
                    *vertex = (v, fv);
                }
            }
        }
    }
    simplex
        .into_iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite KL"))
        .expect("non-empty simplex")
}

/// The payoff rescaled for rotation encoding. The profit at grid index `i`
/// is affine per branch (shortage vs overage, split at `threshold`); the
/// rotation angle `c*f~(i) + pi/4` is therefore affine per branch too, and
/// `branch_low`/`branch_high` hold its (slope, intercept) over `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPayoff {
    pub f_min: f64,
    pub f_max: f64,
    pub c_scale: f64,
    /// Angle coefficients (slope, intercept) for indices below the threshold.
    pub branch_low: (f64, f64),
    /// Angle coefficients (slope, intercept) for indices at or above it.
    pub branch_high: (f64, f64),
    /// Smallest grid index whose demand meets or exceeds the delivered
    /// quantity; 0 means all-shortage, 2^n means all-overage.
    pub threshold: usize,
    pub n_state: usize,
}

impl ScaledPayoff {
    /// True when the payoff is constant over the grid; the objective
    /// probability is then pinned at 1/2 and inversion returns the constant.
    pub fn is_degenerate(&self) -> bool {
        self.f_max - self.f_min <= 1e-12 * self.f_max.abs().max(1.0)
    }

    /// The rotation angle at grid index `i`.
    pub fn angle(&self, i: usize) -> f64 {
        let (slope, intercept) = if i < self.threshold {
            self.branch_low
        } else {
            self.branch_high
        };
        slope * i as f64 + intercept
    }

    /// The profit value at grid index `i`, reconstructed from the angle.
    pub fn payoff(&self, i: usize) -> f64 {
        if self.is_degenerate() {
            return self.f_min;
        }
        let f_tilde = (self.angle(i) - FRAC_PI_4) / self.c_scale;
        self.f_min + (f_tilde + 1.0) * (self.f_max - self.f_min) / 2.0
    }
}

/// Computes the scaled payoff for a decision under deterministic
/// reliabilities. Profit is evaluated on every grid point; `f~` maps its
/// range onto [-1, 1].
pub fn scale_payoff(
    market: &MarketParams,
    suppliers: &[Supplier],
    decision: &OrderDecision,
    r: &[f64],
    demand: &DemandDistribution,
    c_scale: f64,
) -> Result<ScaledPayoff> {
    validate(market, suppliers)?;
    if !(c_scale > 0.0 && c_scale <= 1.0) {
        return Err(Error::InvalidArgument {
            what: format!("c_scale must lie in (0, 1], got {c_scale}"),
        });
    }
    if r.len() != suppliers.len() {
        return Err(Error::DimensionMismatch {
            what: "reliability vector",
            expected: suppliers.len(),
            got: r.len(),
        });
    }
    let n = demand.n_qubits();
    let n_points = demand.n_points();
    let delivered: f64 = suppliers
        .iter()
        .zip(r)
        .zip(decision.q())
        .map(|((_, &ri), &qi)| ri * f64::from(qi))
        .sum();
    let fixed: f64 = suppliers
        .iter()
        .zip(decision.q())
        .filter(|(_, &qi)| qi > 0)
        .map(|(s, _)| s.fixed_cost)
        .sum();
    let procure: f64 = suppliers
        .iter()
        .zip(r)
        .zip(decision.q())
        .map(|((s, &ri), &qi)| (market.salvage - s.unit_cost) * ri * f64::from(qi))
        .sum();
    let g = procure - fixed;

    // First grid index where demand meets or exceeds the delivered quantity.
    // At equality both profit branches coincide, so the boundary choice
    // cannot change any payoff value.
    let threshold = (0..n_points)
        .find(|&i| demand.phi(i) >= delivered)
        .unwrap_or(n_points);

    let p = market.price;
    let w = market.salvage;
    let o = market.shortage_cost;
    let slope = demand.phi_slope();
    let offset = demand.phi_offset();
    // Overage branch: f = (p-w) d + g. Shortage branch: subtract
    // (o-w)(d - delivered), i.e. f = (p-o) d + g + (o-w) delivered.
    let f_low = ((p - w) * slope, (p - w) * offset + g);
    let f_high = (
        (p - o) * slope,
        (p - o) * offset + g + (o - w) * delivered,
    );

    let f_at = |i: usize| -> f64 {
        let (s, b) = if i < threshold { f_low } else { f_high };
        s * i as f64 + b
    };
    let mut f_min = f64::INFINITY;
    let mut f_max = f64::NEG_INFINITY;
    for i in 0..n_points {
        let f = f_at(i);
        f_min = f_min.min(f);
        f_max = f_max.max(f);
    }

    let span = f_max - f_min;
    let (branch_low, branch_high) = if span <= 1e-12 * f_max.abs().max(1.0) {
        ((0.0, FRAC_PI_4), (0.0, FRAC_PI_4))
    } else {
        // angle(i) = c * (2 (f(i) - f_min) / span - 1) + pi/4.
        let to_angle = |(s, b): (f64, f64)| {
            (
                2.0 * c_scale * s / span,
                2.0 * c_scale * (b - f_min) / span - c_scale + FRAC_PI_4,
            )
        };
        (to_angle(f_low), to_angle(f_high))
    };

    Ok(ScaledPayoff {
        f_min,
        f_max,
        c_scale,
        branch_low,
        branch_high,
        threshold,
        n_state: n,
    })
}

/// How the demand-vs-supply comparison is realized in the payoff circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ComparatorStyle {
    /// Ripple-carry adder against the constant 2^n - t; n-1 carry ancillas,
    /// uncomputed after the flag is extracted.
    #[default]
    RippleCarry,
    /// One multi-controlled flip per grid index at or above the threshold.
    /// Exponentially many gates; exists to show estimates do not depend on
    /// the comparator construction.
    Enumerated,
}

/// Appends gates computing `flag ^= [i >= t]` for the n-qubit register value
/// i, using the ripple-carry trick: i >= t iff the addition i + (2^n - t)
/// carries out of n bits. Carries are computed forward into the ancillas,
/// the carry-out is folded into the flag, and the chain is uncomputed.
fn append_ripple_comparator(
    circuit: &mut Circuit,
    n: usize,
    t: usize,
    flag: usize,
    carries: &[usize],
) -> Result<()> {
    debug_assert!(t >= 1 && t < (1 << n));
    let tc = (1usize << n) - t;
    let bit = |j: usize| (tc >> j) & 1;
    if n == 1 {
        // tc is 1: the carry-out is just the input bit.
        circuit.push(GateOp::new(GateKind::X, vec![flag], vec![0]))?;
        return Ok(());
    }
    let mut forward: Vec<GateOp> = Vec::new();
    // Stage 0 writes carry c_1 = (i_0 AND tc_0) into carries[0]; with no
    // incoming carry this is a copy when tc_0 = 1 and a constant 0 otherwise.
    if bit(0) == 1 {
        forward.push(GateOp::new(GateKind::X, vec![carries[0]], vec![0]));
    }
    // Stages 1..n-1 combine i_j with the previous carry:
    //   tc_j = 1: c_{j+1} = i_j OR c_j   (CCX, CX, CX onto a fresh ancilla)
    //   tc_j = 0: c_{j+1} = i_j AND c_j  (CCX onto a fresh ancilla)
    for j in 1..n - 1 {
        let prev = carries[j - 1];
        let next = carries[j];
        forward.push(GateOp::new(GateKind::X, vec![next], vec![j, prev]));
        if bit(j) == 1 {
            forward.push(GateOp::new(GateKind::X, vec![next], vec![j]));
            forward.push(GateOp::new(GateKind::X, vec![next], vec![prev]));
        }
    }
    for op in &forward {
        circuit.push(op.clone())?;
    }
    // Final stage folds the carry-out into the flag directly.
    let j = n - 1;
    let prev = carries[j - 1];
    circuit.push(GateOp::new(GateKind::X, vec![flag], vec![j, prev]))?;
    if bit(j) == 1 {
        circuit.push(GateOp::new(GateKind::X, vec![flag], vec![j]))?;
        circuit.push(GateOp::new(GateKind::X, vec![flag], vec![prev]))?;
    }
    // Uncompute the carry chain (all ops are self-inverse X-family gates).
    for op in forward.iter().rev() {
        circuit.push(op.clone())?;
    }
    Ok(())
}

/// Appends `flag ^= [i >= t]` as one multi-controlled X per matching index.
fn append_enumerated_comparator(
    circuit: &mut Circuit,
    n: usize,
    t: usize,
    flag: usize,
) -> Result<()> {
    for i in t..(1 << n) {
        let mut flips = Vec::new();
        for b in 0..n {
            if (i >> b) & 1 == 0 {
                flips.push(b);
            }
        }
        for &f in &flips {
            circuit.x(f)?;
        }
        circuit.push(GateOp::new(
            GateKind::X,
            vec![flag],
            (0..n).collect::<Vec<_>>(),
        ))?;
        for &f in &flips {
            circuit.x(f)?;
        }
    }
    Ok(())
}

/// Total qubit count of a payoff circuit over an n-qubit demand register.
pub fn payoff_width(n_state: usize) -> usize {
    // state + flag + (n-1) carries + objective
    2 * n_state + 1
}

/// Standalone comparator on the payoff layout: flips the flag qubit
/// exactly when the state register holds an index `>= threshold`, leaving
/// the carry ancillas uncomputed back to |0>. Thresholds of 0 and 2^n
/// degenerate to a constant flag (one X, or nothing).
pub fn comparator_circuit(
    n_state: usize,
    threshold: usize,
    style: ComparatorStyle,
) -> Result<Circuit> {
    if n_state == 0 {
        return Err(Error::QubitCountOutOfRange {
            n: 0,
            max: crate::qsim::MAX_QUBITS,
        });
    }
    let flag = flag_qubit(n_state);
    let carries: Vec<usize> = (0..n_state.saturating_sub(1))
        .map(|k| n_state + 1 + k)
        .collect();
    let mut circuit = Circuit::new(payoff_width(n_state));
    if threshold == 0 {
        circuit.x(flag)?;
    } else if threshold < (1 << n_state) {
        match style {
            ComparatorStyle::RippleCarry => {
                append_ripple_comparator(&mut circuit, n_state, threshold, flag, &carries)?
            }
            ComparatorStyle::Enumerated => {
                append_enumerated_comparator(&mut circuit, n_state, threshold, flag)?
            }
        }
    }
    Ok(circuit)
}

/// Index of the comparator flag qubit.
pub fn flag_qubit(n_state: usize) -> usize {
    n_state
}

/// Index of the objective qubit.
pub fn objective_qubit(n_state: usize) -> usize {
    2 * n_state
}

/// Builds the payoff operator `F_q`: the comparator writes the branch flag,
/// then flag-conditioned Y-rotations put `sin(c*f~(i) + pi/4)` onto the
/// objective qubit's |1> amplitude. The angle is affine in `i`, so one
/// rotation carries the intercept and each state bit contributes its
/// power-of-two slope share.
pub fn build_payoff_operator(sp: &ScaledPayoff, n_state: usize) -> Result<Circuit> {
    build_payoff_operator_with(sp, n_state, ComparatorStyle::RippleCarry)
}

/// [`build_payoff_operator`] with an explicit comparator construction.
pub fn build_payoff_operator_with(
    sp: &ScaledPayoff,
    n_state: usize,
    style: ComparatorStyle,
) -> Result<Circuit> {
    if sp.n_state != n_state {
        return Err(Error::WidthMismatch {
            what: format!(
                "payoff scaled for {} state qubits, requested {}",
                sp.n_state, n_state
            ),
        });
    }
    let n_points = 1usize << n_state;
    let flag = flag_qubit(n_state);
    let objective = objective_qubit(n_state);
    let mut circuit = Circuit::new(payoff_width(n_state));

    if sp.is_degenerate() {
        // Constant payoff: probability pinned at sin^2(pi/4) = 1/2.
        circuit.ry(2.0 * FRAC_PI_4, objective)?;
        return Ok(circuit);
    }

    // Comparator: flag = [i >= threshold]. Thresholds 0 and 2^n make the
    // flag constant (always high branch, always low branch).
    circuit.extend(&comparator_circuit(n_state, sp.threshold, style)?)?;

    // Branch rotations. RY angles add on a shared target, so the rotations
    // controlled on the state bits accumulate 2*(slope*i + intercept),
    // leaving amplitude sin(angle(i)) on |1>.
    let mut add_branch = |(slope, intercept): (f64, f64), on_flag: bool| -> Result<()> {
        if on_flag {
            circuit.push(GateOp::new(
                GateKind::Ry(2.0 * intercept),
                vec![objective],
                vec![flag],
            ))?;
            for b in 0..n_state {
                circuit.push(GateOp::new(
                    GateKind::Ry(2.0 * slope * (1u64 << b) as f64),
                    vec![objective],
                    vec![flag, b],
                ))?;
            }
        } else {
            circuit.x(flag)?;
            circuit.push(GateOp::new(
                GateKind::Ry(2.0 * intercept),
                vec![objective],
                vec![flag],
            ))?;
            for b in 0..n_state {
                circuit.push(GateOp::new(
                    GateKind::Ry(2.0 * slope * (1u64 << b) as f64),
                    vec![objective],
                    vec![flag, b],
                ))?;
            }
            circuit.x(flag)?;
        }
        Ok(())
    };
    if sp.threshold > 0 {
        add_branch(sp.branch_low, false)?;
    }
    if sp.threshold < n_points {
        add_branch(sp.branch_high, true)?;
    }
    Ok(circuit)
}

/// The composed operator `A` with its register bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct AOperator {
    pub n_state: usize,
    /// Comparator ancillas (flag and carries); excluded from the Grover
    /// reflections.
    pub ancillas: Vec<usize>,
    pub objective: usize,
    pub circuit: Circuit,
}

impl AOperator {
    /// A one-qubit operator preparing amplitude sqrt(a) on |1>; the smallest
    /// test case for amplitude estimation.
    pub fn bernoulli(a: f64) -> Result<AOperator> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::InvalidArgument {
                what: format!("amplitude must lie in [0, 1], got {a}"),
            });
        }
        let mut circuit = Circuit::new(1);
        circuit.ry(2.0 * a.sqrt().asin(), 0)?;
        Ok(AOperator {
            n_state: 0,
            ancillas: vec![],
            objective: 0,
            circuit,
        })
    }

    /// Probability of measuring |1> on the objective qubit of `A|0...0>`,
    /// by exact statevector evaluation.
    pub fn exact_probability(&self) -> Result<f64> {
        let mut state = QuantumState::zero(self.circuit.n_qubits())?;
        state.apply_circuit(&self.circuit)?;
        Ok(state.prob_of_outcome(self.objective, true))
    }
}

/// Concatenates a loader (on the state register) with a payoff circuit into
/// the full `A = F_q (P_D ⊗ I)`.
pub fn build_a_operator(loader: &Circuit, payoff: &Circuit) -> Result<AOperator> {
    let n_state = loader.n_qubits();
    if payoff.n_qubits() != payoff_width(n_state) {
        return Err(Error::WidthMismatch {
            what: format!(
                "payoff circuit on {} qubits does not match a {}-qubit loader (expected {})",
                payoff.n_qubits(),
                n_state,
                payoff_width(n_state)
            ),
        });
    }
    let mut circuit = Circuit::new(payoff.n_qubits());
    circuit.extend(loader)?;
    circuit.extend(payoff)?;
    Ok(AOperator {
        n_state,
        ancillas: (n_state..2 * n_state).collect(),
        objective: objective_qubit(n_state),
        circuit,
    })
}

/// First-order inversion of the measured probability back to money:
/// `E[f] = f_min + (P - 1/2 + c) (f_max - f_min) / (2c)`. The relative error
/// in E[f~] degrades as O(c^2).
pub fn invert_estimate(p_measured: f64, sp: &ScaledPayoff) -> f64 {
    if sp.is_degenerate() {
        return sp.f_min;
    }
    sp.f_min + (p_measured - 0.5 + sp.c_scale) * (sp.f_max - sp.f_min) / (2.0 * sp.c_scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{profit, ReliabilityModel};
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
    fn exact_load_uniform() {
        let demand = DemandDistribution::uniform(3).unwrap();
        let c = exact_load(&demand);
        let dist = circuit_distribution(&c).unwrap();
        for &p in &dist {
            assert_abs_diff_eq!(p, 0.125, epsilon = 1e-12);
        }
    }

    #[test]
    fn exact_load_point_mass() {
        let mut probs = vec![0.0; 8];
        probs[5] = 1.0;
        let demand = DemandDistribution::new(3, probs, 0.0, 1.0).unwrap();
        let c = exact_load(&demand);
        let mut state = QuantumState::zero(3).unwrap();
        state.apply_circuit(&c).unwrap();
        // Index 5 = |101>: amplitude 1 there, 0 elsewhere.
        assert_abs_diff_eq!(state.amplitudes()[5].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exact_load_amplitudes_are_square_roots() {
        let probs = vec![0.1, 0.2, 0.3, 0.4];
        let demand = DemandDistribution::new(2, probs.clone(), 0.0, 1.0).unwrap();
        let c = exact_load(&demand);
        let mut state = QuantumState::zero(2).unwrap();
        state.apply_circuit(&c).unwrap();
        for (i, &p) in probs.iter().enumerate() {
            assert_abs_diff_eq!(state.amplitudes()[i].re, p.sqrt(), epsilon = 1e-12);
            assert_abs_diff_eq!(state.amplitudes()[i].im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn variational_uniform_is_exactly_representable() {
        let target = DemandDistribution::uniform(3).unwrap();
        let spec = variational_load(&target, 2, 2000, 7).unwrap();
        match &spec {
            LoaderSpec::Variational {
                achieved_divergence,
                ..
            } => assert!(*achieved_divergence <= 1e-6, "KL = {achieved_divergence}"),
            _ => unreachable!(),
        }
        let dist = circuit_distribution(&spec.circuit().unwrap()).unwrap();
        for &p in &dist {
            assert_abs_diff_eq!(p, 0.125, epsilon = 1e-3);
        }
    }

    #[test]
    fn variational_rejects_zero_depth() {
        let target = DemandDistribution::uniform(2).unwrap();
        assert!(variational_load(&target, 0, 100, 0).is_err());
    }

    #[test]
    fn scaled_payoff_endpoints_map_to_unit_interval() {
        let market = paper_market();
        let suppliers = vec![det_supplier(0.95, 0.03, 100, 1.0)];
        let decision = OrderDecision::new(vec![10], &suppliers).unwrap();
        let demand = DemandDistribution::uniform(4).unwrap();
        let sp = scale_payoff(&market, &suppliers, &decision, &[1.0], &demand, 0.05).unwrap();
        // f~ at the extremes is -1 and +1, so angles are pi/4 -+ c.
        let mut angles: Vec<f64> = (0..16).map(|i| sp.angle(i)).collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(angles[0], FRAC_PI_4 - 0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(angles[15], FRAC_PI_4 + 0.05, epsilon = 1e-12);
    }

    #[test]
    fn scaled_payoff_matches_profit_on_grid() {
        let market = paper_market();
        let suppliers = vec![det_supplier(0.95, 0.03, 100, 1.0)];
        let decision = OrderDecision::new(vec![10], &suppliers).unwrap();
        let demand = DemandDistribution::uniform(4).unwrap();
        let sp = scale_payoff(&market, &suppliers, &decision, &[1.0], &demand, 0.05).unwrap();
        assert_eq!(sp.threshold, 10);
        for i in 0..16 {
            let f = profit(&market, &suppliers, &decision, &[1.0], i as f64).unwrap();
            assert_abs_diff_eq!(sp.payoff(i), f, epsilon = 1e-9);
        }
        // Both branches rise with demand (p > o here), but the shortage
        // branch rises more slowly: its marginal unit nets p - o, not p - w.
        assert!(sp.branch_low.0 > 0.0);
        assert!(sp.branch_high.0 > 0.0);
        assert!(sp.branch_high.0 < sp.branch_low.0);
    }

    #[test]
    fn degenerate_payoff_is_constant() {
        // p = o makes the shortage branch flat; with threshold 0 (no order,
        // always short) the payoff is constant over the grid.
        let market = MarketParams {
            price: 1.3,
            salvage: 0.6,
            shortage_cost: 1.3,
        };
        let suppliers = vec![det_supplier(0.95, 0.0, 10, 1.0)];
        let decision = OrderDecision::new(vec![0], &suppliers).unwrap();
        let demand = DemandDistribution::uniform(2).unwrap();
        let sp = scale_payoff(&market, &suppliers, &decision, &[1.0], &demand, 0.05).unwrap();
        assert!(sp.is_degenerate());
        let payoff = build_payoff_operator(&sp, 2).unwrap();
        let loader = exact_load(&demand);
        let a = build_a_operator(&loader, &payoff).unwrap();
        assert_abs_diff_eq!(a.exact_probability().unwrap(), 0.5, epsilon = 1e-12);
        assert_eq!(invert_estimate(0.5, &sp), sp.f_min);
    }

    #[test]
    fn payoff_probability_matches_closed_form() {
        let market = paper_market();
        let suppliers = vec![det_supplier(0.95, 0.0, 3, 1.0)];
        let decision = OrderDecision::new(vec![2], &suppliers).unwrap();
        let demand = DemandDistribution::new(2, vec![0.1, 0.2, 0.3, 0.4], 0.0, 1.0).unwrap();
        let sp = scale_payoff(&market, &suppliers, &decision, &[1.0], &demand, 0.05).unwrap();
        let a = build_a_operator(
            &exact_load(&demand),
            &build_payoff_operator(&sp, 2).unwrap(),
        )
        .unwrap();
        let p = a.exact_probability().unwrap();
        let expected: f64 = demand
            .probs()
            .iter()
            .enumerate()
            .map(|(i, &pi)| pi * sp.angle(i).sin().powi(2))
            .sum();
        assert_abs_diff_eq!(p, expected, epsilon = 1e-9);
    }

    #[test]
    fn per_state_conditional_amplitudes() {
        // Check sin(angle(i)) state by state, not just in aggregate.
        let market = paper_market();
        let suppliers = vec![det_supplier(0.8, 0.02, 7, 1.0)];
        let decision = OrderDecision::new(vec![5], &suppliers).unwrap();
        let demand = DemandDistribution::uniform(3).unwrap();
        let sp = scale_payoff(&market, &suppliers, &decision, &[1.0], &demand, 0.1).unwrap();
        let a = build_a_operator(
            &exact_load(&demand),
            &build_payoff_operator(&sp, 3).unwrap(),
        )
        .unwrap();
        let mut state = QuantumState::zero(a.circuit.n_qubits()).unwrap();
        state.apply_circuit(&a.circuit).unwrap();
        // Amplitude of |objective=1, state=i> (ancillas traced by summing).
        for i in 0..8usize {
            let mut prob1 = 0.0;
            for (idx, amp) in state.amplitudes().iter().enumerate() {
                let idx = idx as u64;
                if idx & 0b111 == i as u64 && idx & (1 << a.objective) != 0 {
                    prob1 += amp.norm_sqr();
                }
            }
            let expected = 0.125 * sp.angle(i).sin().powi(2);
            assert_abs_diff_eq!(prob1, expected, epsilon = 1e-9);
        }
    }

    #[test]
    fn c_to_zero_pins_probability_at_half() {
        let market = paper_market();
        let suppliers = vec![det_supplier(0.95, 0.0, 3, 1.0)];
        let decision = OrderDecision::new(vec![2], &suppliers).unwrap();
        let demand = DemandDistribution::uniform(2).unwrap();
        let sp = scale_payoff(&market, &suppliers, &decision, &[1.0], &demand, 1e-6).unwrap();
        let a = build_a_operator(
            &exact_load(&demand),
            &build_payoff_operator(&sp, 2).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(a.exact_probability().unwrap(), 0.5, epsilon = 1e-5);
    }

    #[test]
    fn threshold_zero_uses_single_branch() {
        // q = 0 delivers nothing, so every demand index is in the shortage
        // branch and the comparator degenerates to a constant flag.
        let market = paper_market();
        let suppliers = vec![det_supplier(0.95, 0.0, 3, 1.0)];
        let decision = OrderDecision::new(vec![0], &suppliers).unwrap();
        let demand = DemandDistribution::new(2, vec![0.1, 0.2, 0.3, 0.4], 0.0, 1.0).unwrap();
        let sp = scale_payoff(&market, &suppliers, &decision, &[1.0], &demand, 0.05).unwrap();
        assert_eq!(sp.threshold, 0);
        let a = build_a_operator(
            &exact_load(&demand),
            &build_payoff_operator(&sp, 2).unwrap(),
        )
        .unwrap();
        let p = a.exact_probability().unwrap();
        let expected: f64 = demand
            .probs()
            .iter()
            .enumerate()
            .map(|(i, &pi)| pi * sp.angle(i).sin().powi(2))
            .sum();
        assert_abs_diff_eq!(p, expected, epsilon = 1e-9);
    }

    #[test]
    fn comparator_styles_agree() {
        let market = paper_market();
        let suppliers = vec![det_supplier(0.9, 0.01, 12, 1.0)];
        let demand = DemandDistribution::uniform(4).unwrap();
        for q in [1, 5, 9, 12] {
            let decision = OrderDecision::new(vec![q], &suppliers).unwrap();
            let sp = scale_payoff(&market, &suppliers, &decision, &[1.0], &demand, 0.05).unwrap();
            let ripple = build_a_operator(
                &exact_load(&demand),
                &build_payoff_operator_with(&sp, 4, ComparatorStyle::RippleCarry).unwrap(),
            )
            .unwrap();
            let enumerated = build_a_operator(
                &exact_load(&demand),
                &build_payoff_operator_with(&sp, 4, ComparatorStyle::Enumerated).unwrap(),
            )
            .unwrap();
            assert_abs_diff_eq!(
                ripple.exact_probability().unwrap(),
                enumerated.exact_probability().unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn a_operator_width_mismatch_is_an_error() {
        let demand3 = DemandDistribution::uniform(3).unwrap();
        let demand2 = DemandDistribution::uniform(2).unwrap();
        let market = paper_market();
        let suppliers = vec![det_supplier(0.95, 0.0, 3, 1.0)];
        let decision = OrderDecision::new(vec![2], &suppliers).unwrap();
        let sp = scale_payoff(&market, &suppliers, &decision, &[1.0], &demand2, 0.05).unwrap();
        let payoff2 = build_payoff_operator(&sp, 2).unwrap();
        assert!(build_a_operator(&exact_load(&demand3), &payoff2).is_err());
    }

    #[test]
    fn constant_angle_half_pi_forces_objective_on() {
        // A hand-built non-degenerate payoff with angle pi/2 everywhere turns
        // the objective qubit fully on regardless of the demand state.
        let sp = ScaledPayoff {
            f_min: 0.0,
            f_max: 1.0,
            c_scale: 0.05,
            branch_low: (0.0, std::f64::consts::FRAC_PI_2),
            branch_high: (0.0, std::f64::consts::FRAC_PI_2),
            threshold: 4,
            n_state: 2,
        };
        let mut probs = vec![0.0; 4];
        probs[2] = 1.0;
        let demand = DemandDistribution::new(2, probs, 0.0, 1.0).unwrap();
        let a = build_a_operator(
            &exact_load(&demand),
            &build_payoff_operator(&sp, 2).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(a.exact_probability().unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn inversion_examples() {
        let sp = ScaledPayoff {
            f_min: -0.7,
            f_max: 1.0,
            c_scale: 0.05,
            branch_low: (0.0, 0.0),
            branch_high: (0.0, 0.0),
            threshold: 0,
            n_state: 2,
        };
        // P = 1/2 is the midpoint of [f_min, f_max].
        assert_abs_diff_eq!(invert_estimate(0.5, &sp), 0.15, epsilon = 1e-12);
        // P = 1/2 + c is the top.
        assert_abs_diff_eq!(invert_estimate(0.55, &sp), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn inversion_of_exact_probability_recovers_oracle() {
        // Small c makes the first-order inversion nearly exact: within 1e-3
        // of the enumerated 0.325 at c = 0.01.
        let market = paper_market();
        let suppliers = vec![det_supplier(0.95, 0.0, 3, 1.0)];
        let decision = OrderDecision::new(vec![2], &suppliers).unwrap();
        let demand = DemandDistribution::uniform(2).unwrap();
        let sp = scale_payoff(&market, &suppliers, &decision, &[1.0], &demand, 0.01).unwrap();
        let a = build_a_operator(
            &exact_load(&demand),
            &build_payoff_operator(&sp, 2).unwrap(),
        )
        .unwrap();
        let p = a.exact_probability().unwrap();
        assert_abs_diff_eq!(invert_estimate(p, &sp), 0.325, epsilon = 1e-3);
    }

    #[test]
    fn loader_spec_round_trips_via_circuit() {
        let target = DemandDistribution::new(2, vec![0.15, 0.35, 0.05, 0.45], 0.0, 1.0).unwrap();
        let spec = LoaderSpec::Exact {
            probs: target.probs().to_vec(),
        };
        let dist = circuit_distribution(&spec.circuit().unwrap()).unwrap();
        for (a, b) in dist.iter().zip(target.probs()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }
}
