//! Dense statevector simulator.
//!
//! Supports the gate set needed by the amplitude-estimation circuits: H, X,
//! Z, Y-rotations, phase gates, and SWAP, each with an arbitrary set of
//! |1>-controls, plus the (inverse) quantum Fourier transform, exact marginal
//! probabilities, and seeded multinomial shot sampling.
//!
//! Convention: qubit 0 is the least-significant bit of a basis-state index,
//! so |q2 q1 q0> = |110> is index 6. Multi-controlled gates are applied
//! directly on the dense vector; no ancilla decompositions happen here.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Hard cap on register width; 2^24 complex doubles is 256 MiB.
pub const MAX_QUBITS: usize = 24;

/// What a gate does to its target(s), before controls are applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    H,
    X,
    Z,
    /// Rotation about Y by the given angle: RY(t)|0> = cos(t/2)|0> + sin(t/2)|1>.
    Ry(f64),
    /// diag(1, e^{i t}) on the target.
    Phase(f64),
    /// Exchanges two targets.
    Swap,
}

/// A gate with explicit target and control qubits. Controls condition on
/// |1>; a control in state |0> makes the gate act as the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct GateOp {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub controls: Vec<usize>,
}

impl GateOp {
    pub fn new(kind: GateKind, targets: Vec<usize>, controls: Vec<usize>) -> Self {
        GateOp {
            kind,
            targets,
            controls,
        }
    }

    fn expected_targets(&self) -> usize {
        match self.kind {
            GateKind::Swap => 2,
            _ => 1,
        }
    }

    /// Checks index ranges and disjointness against a register width.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.targets.len() != self.expected_targets() {
            return Err(Error::InvalidArgument {
                what: format!(
                    "{:?} expects {} target(s), got {}",
                    self.kind,
                    self.expected_targets(),
                    self.targets.len()
                ),
            });
        }
        let mut seen = Vec::with_capacity(self.targets.len() + self.controls.len());
        for &q in self.targets.iter().chain(&self.controls) {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    n_qubits,
                });
            }
            if seen.contains(&q) {
                return Err(Error::OverlappingQubits { index: q });
            }
            seen.push(q);
        }
        Ok(())
    }

    /// The inverse gate: same targets and controls, inverted action.
    pub fn inverse(&self) -> GateOp {
        let kind = match self.kind {
            GateKind::Ry(t) => GateKind::Ry(-t),
            GateKind::Phase(t) => GateKind::Phase(-t),
            k => k, // H, X, Z, Swap are involutions
        };
        GateOp {
            kind,
            targets: self.targets.clone(),
            controls: self.controls.clone(),
        }
    }
}

/// An ordered gate list over a fixed register width.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    n_qubits: usize,
    ops: Vec<GateOp>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            ops: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn push(&mut self, op: GateOp) -> Result<()> {
        op.validate(self.n_qubits)?;
        self.ops.push(op);
        Ok(())
    }

    pub fn h(&mut self, target: usize) -> Result<()> {
        self.push(GateOp::new(GateKind::H, vec![target], vec![]))
    }

    pub fn x(&mut self, target: usize) -> Result<()> {
        self.push(GateOp::new(GateKind::X, vec![target], vec![]))
    }

    pub fn z(&mut self, target: usize) -> Result<()> {
        self.push(GateOp::new(GateKind::Z, vec![target], vec![]))
    }

    pub fn ry(&mut self, theta: f64, target: usize) -> Result<()> {
        self.push(GateOp::new(GateKind::Ry(theta), vec![target], vec![]))
    }

    pub fn phase(&mut self, theta: f64, target: usize) -> Result<()> {
        self.push(GateOp::new(GateKind::Phase(theta), vec![target], vec![]))
    }

    pub fn swap(&mut self, a: usize, b: usize) -> Result<()> {
        self.push(GateOp::new(GateKind::Swap, vec![a, b], vec![]))
    }

    /// Appends all ops of `other` (which must fit this register).
    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        for op in other.ops() {
            self.push(op.clone())?;
        }
        Ok(())
    }

    /// The inverse circuit: reversed op order, each op inverted.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            ops: self.ops.iter().rev().map(GateOp::inverse).collect(),
        }
    }

    /// The same circuit with `control` added to every op's control set,
    /// widening the register if needed. Controlled-U composes gate-wise:
    /// controlling every op of U yields controlled-U.
    pub fn controlled_by(&self, control: usize) -> Result<Circuit> {
        let mut out = Circuit::new(self.n_qubits.max(control + 1));
        for op in &self.ops {
            if op.targets.contains(&control) || op.controls.contains(&control) {
                return Err(Error::OverlappingQubits { index: control });
            }
            let mut controls = op.controls.clone();
            controls.push(control);
            out.push(GateOp::new(op.kind, op.targets.clone(), controls))?;
        }
        Ok(out)
    }

    /// Quantum Fourier transform on the listed qubits, where `qubits[j]`
    /// carries weight 2^j of the register value: |v> -> (1/sqrt(M)) sum_x
    /// exp(2*pi*i*v*x/M) |x> with M = 2^len.
    pub fn qft(n_qubits: usize, qubits: &[usize]) -> Result<Circuit> {
        let m = qubits.len();
        let mut c = Circuit::new(n_qubits);
        for s in (0..m).rev() {
            c.h(qubits[s])?;
            for t in (0..s).rev() {
                let angle = std::f64::consts::PI / (1 << (s - t)) as f64;
                c.push(GateOp::new(
                    GateKind::Phase(angle),
                    vec![qubits[s]],
                    vec![qubits[t]],
                ))?;
            }
        }
        for j in 0..m / 2 {
            c.swap(qubits[j], qubits[m - 1 - j])?;
        }
        Ok(c)
    }

    /// Inverse quantum Fourier transform on the listed qubits (same weight
    /// convention as [`Circuit::qft`]), including the bit-reversal swaps.
    pub fn inverse_qft(n_qubits: usize, qubits: &[usize]) -> Result<Circuit> {
        Ok(Self::qft(n_qubits, qubits)?.inverse())
    }
}

/// 2^n complex amplitudes with unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl QuantumState {
    /// |0...0> on `n` qubits, 1 <= n <= [`MAX_QUBITS`].
    pub fn zero(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::QubitCountOutOfRange {
                n,
                max: MAX_QUBITS,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(QuantumState { n_qubits: n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn control_mask(&self, op: &GateOp) -> u64 {
        op.controls.iter().fold(0u64, |m, &q| m | (1u64 << q))
    }

    /// Applies one (controlled) gate in place.
    pub fn apply(&mut self, op: &GateOp) -> Result<()> {
        op.validate(self.n_qubits)?;
        let cmask = self.control_mask(op);
        match op.kind {
            GateKind::Swap => {
                let a = 1u64 << op.targets[0];
                let b = 1u64 << op.targets[1];
                for i in 0..self.amps.len() as u64 {
                    // Visit each pair once: target a set, target b clear.
                    if i & a != 0 && i & b == 0 && i & cmask == cmask {
                        let j = (i ^ a) | b;
                        self.amps.swap(i as usize, j as usize);
                    }
                }
            }
            GateKind::Phase(theta) => {
                let t = 1u64 << op.targets[0];
                let phase = Complex64::from_polar(1.0, theta);
                for i in 0..self.amps.len() as u64 {
                    if i & t != 0 && i & cmask == cmask {
                        self.amps[i as usize] *= phase;
                    }
                }
            }
            GateKind::Z => {
                let t = 1u64 << op.targets[0];
                for i in 0..self.amps.len() as u64 {
                    if i & t != 0 && i & cmask == cmask {
                        self.amps[i as usize] = -self.amps[i as usize];
                    }
                }
            }
            GateKind::X => {
                let t = 1u64 << op.targets[0];
                for i in 0..self.amps.len() as u64 {
                    if i & t == 0 && i & cmask == cmask {
                        self.amps.swap(i as usize, (i | t) as usize);
                    }
                }
            }
            GateKind::H => {
                let t = 1u64 << op.targets[0];
                let s = std::f64::consts::FRAC_1_SQRT_2;
                for i in 0..self.amps.len() as u64 {
                    if i & t == 0 && i & cmask == cmask {
                        let lo = self.amps[i as usize];
                        let hi = self.amps[(i | t) as usize];
                        self.amps[i as usize] = s * (lo + hi);
                        self.amps[(i | t) as usize] = s * (lo - hi);
                    }
                }
            }
            GateKind::Ry(theta) => {
                let t = 1u64 << op.targets[0];
                let (sin, cos) = (theta / 2.0).sin_cos();
                for i in 0..self.amps.len() as u64 {
                    if i & t == 0 && i & cmask == cmask {
                        let lo = self.amps[i as usize];
                        let hi = self.amps[(i | t) as usize];
                        self.amps[i as usize] = cos * lo - sin * hi;
                        self.amps[(i | t) as usize] = sin * lo + cos * hi;
                    }
                }
            }
        }
        Ok(())
    }

    /// Applies every op of a circuit in order. The circuit may be narrower
    /// than the state; it must never address qubits beyond it.
    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.n_qubits() > self.n_qubits {
            return Err(Error::WidthMismatch {
                what: format!(
                    "circuit on {} qubits applied to {}-qubit state",
                    circuit.n_qubits(),
                    self.n_qubits
                ),
            });
        }
        for op in circuit.ops() {
            self.apply(op)?;
        }
        Ok(())
    }

    /// Exact marginal probability of measuring `outcome` on one qubit.
    pub fn prob_of_outcome(&self, qubit: usize, outcome: bool) -> f64 {
        let t = 1u64 << qubit;
        let want = if outcome { t } else { 0 };
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| (*i as u64) & t == want)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Exact joint distribution over the listed qubits; `qubits[j]` is bit j
    /// of the outcome key.
    pub fn joint_distribution(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        for &q in qubits {
            if q >= self.n_qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    n_qubits: self.n_qubits,
                });
            }
        }
        let mut dist = vec![0.0; 1 << qubits.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let mut key = 0usize;
            for (j, &q) in qubits.iter().enumerate() {
                if (i as u64) & (1u64 << q) != 0 {
                    key |= 1 << j;
                }
            }
            dist[key] += a.norm_sqr();
        }
        Ok(dist)
    }

    /// Samples `shots` measurement outcomes of the listed qubits from the
    /// exact joint marginal. Deterministic given the seed; returns a sorted
    /// outcome -> count map.
    pub fn sample_counts(
        &self,
        qubits: &[usize],
        shots: u64,
        seed: u64,
    ) -> Result<BTreeMap<u64, u64>> {
        if shots == 0 {
            return Err(Error::InvalidArgument {
                what: "shot count must be positive".into(),
            });
        }
        let dist = self.joint_distribution(qubits)?;
        let mut cumulative = Vec::with_capacity(dist.len());
        let mut acc = 0.0;
        for &p in &dist {
            acc += p;
            cumulative.push(acc);
        }
        let total = acc;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = BTreeMap::new();
        for _ in 0..shots {
            let u: f64 = rng.random::<f64>() * total;
            let idx = cumulative.partition_point(|&c| c <= u).min(dist.len() - 1);
            *counts.entry(idx as u64).or_insert(0) += 1;
        }
        Ok(counts)
    }
}
