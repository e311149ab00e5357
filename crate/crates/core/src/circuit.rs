//! Rotation gates and a dense statevector simulator.
//!
//! Gate convention: `Rα(θ) = exp(−iθα/2)` for α ∈ {X, Y, Z}. A controlled
//! rotation applies `Rα(θ)` to the target on the basis states whose control
//! bit is 1. Qubit 0 is the least-significant bit of a basis index, so the
//! amplitude of `|q_{n-1} … q_1 q_0⟩` lives at index `Σ q_k 2^k`.
//!
//! Only probabilities and expectations are meaningful outputs; global phase
//! is not tracked.

use std::fmt;

use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::{Error, Result};

/// Largest register the simulator accepts (2^26 amplitudes, 1 GiB).
pub const MAX_QUBITS: usize = 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    CRx,
    CRy,
    CRz,
}

impl GateKind {
    pub const SINGLE: [GateKind; 3] = [GateKind::Rx, GateKind::Ry, GateKind::Rz];
    pub const CONTROLLED: [GateKind; 3] = [GateKind::CRx, GateKind::CRy, GateKind::CRz];

    pub fn is_controlled(self) -> bool {
        matches!(self, GateKind::CRx | GateKind::CRy | GateKind::CRz)
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::CRx => "crx",
            GateKind::CRy => "cry",
            GateKind::CRz => "crz",
        }
    }
}

/// A single- or two-qubit rotation.
///
/// `control` is present exactly when `kind` is a controlled rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    kind: GateKind,
    target: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    control: Option<usize>,
    theta: f64,
}

impl Gate {
    pub fn new(kind: GateKind, target: usize, control: Option<usize>, theta: f64) -> Result<Self> {
        match (kind.is_controlled(), control) {
            (true, None) => {
                return Err(Error::ControlMismatch {
                    kind: kind.name(),
                    detail: "requires a control qubit",
                })
            }
            (false, Some(_)) => {
                return Err(Error::ControlMismatch {
                    kind: kind.name(),
                    detail: "takes no control qubit",
                })
            }
            (true, Some(c)) if c == target => return Err(Error::ControlIsTarget(c)),
            _ => {}
        }
        if !theta.is_finite() {
            return Err(Error::NonFiniteAngle(theta));
        }
        Ok(Self {
            kind,
            target,
            control,
            theta,
        })
    }

    /// Single-qubit rotation. Panics if `kind` is controlled or `theta` is not finite.
    pub fn single(kind: GateKind, target: usize, theta: f64) -> Self {
        Self::new(kind, target, None, theta).expect("valid single-qubit gate")
    }

    /// Controlled rotation. Panics if `kind` is not controlled, `control == target`
    /// or `theta` is not finite.
    pub fn controlled(kind: GateKind, control: usize, target: usize, theta: f64) -> Self {
        Self::new(kind, target, Some(control), theta).expect("valid controlled gate")
    }

    pub fn rx(target: usize, theta: f64) -> Self {
        Self::single(GateKind::Rx, target, theta)
    }

    pub fn ry(target: usize, theta: f64) -> Self {
        Self::single(GateKind::Ry, target, theta)
    }

    pub fn rz(target: usize, theta: f64) -> Self {
        Self::single(GateKind::Rz, target, theta)
    }

    pub fn crx(control: usize, target: usize, theta: f64) -> Self {
        Self::controlled(GateKind::CRx, control, target, theta)
    }

    pub fn cry(control: usize, target: usize, theta: f64) -> Self {
        Self::controlled(GateKind::CRy, control, target, theta)
    }

    pub fn crz(control: usize, target: usize, theta: f64) -> Self {
        Self::controlled(GateKind::CRz, control, target, theta)
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn control(&self) -> Option<usize> {
        self.control
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn is_controlled(&self) -> bool {
        self.control.is_some()
    }

    pub fn with_theta(self, theta: f64) -> Result<Self> {
        Self::new(self.kind, self.target, self.control, theta)
    }

    /// Same rotation with control and target exchanged; single-qubit gates
    /// are returned unchanged.
    pub fn flipped(self) -> Self {
        match self.control {
            Some(c) => Self {
                target: c,
                control: Some(self.target),
                ..self
            },
            None => self,
        }
    }

    /// The rotation undoing this one.
    pub fn inverse(self) -> Self {
        Self {
            theta: -self.theta,
            ..self
        }
    }

    pub fn validate(&self, nqubits: usize) -> Result<()> {
        for index in std::iter::once(self.target).chain(self.control) {
            if index >= nqubits {
                return Err(Error::QubitOutOfRange { index, nqubits });
            }
        }
        Ok(())
    }

    /// 2×2 matrix of the (uncontrolled) rotation, row-major.
    pub fn rotation_matrix(&self) -> [[Complex64; 2]; 2] {
        let half = 0.5 * self.theta;
        let (s, c) = half.sin_cos();
        let zero = Complex64::new(0.0, 0.0);
        match self.kind {
            GateKind::Rx | GateKind::CRx => [
                [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
                [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
            ],
            GateKind::Ry | GateKind::CRy => [
                [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
                [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
            ],
            GateKind::Rz | GateKind::CRz => {
                [[Complex64::new(c, -s), zero], [zero, Complex64::new(c, s)]]
            }
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.control {
            Some(c) => write!(
                f,
                "{}({}) q{} -> q{}",
                self.kind.name(),
                self.theta,
                c,
                self.target
            ),
            None => write!(f, "{}({}) q{}", self.kind.name(), self.theta, self.target),
        }
    }
}

fn check_nqubits(nqubits: usize) -> Result<()> {
    if nqubits == 0 || nqubits > MAX_QUBITS {
        return Err(Error::InvalidQubitCount {
            got: nqubits,
            max: MAX_QUBITS,
        });
    }
    Ok(())
}

/// An ordered gate list on a fixed register. The empty circuit is the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    nqubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(nqubits: usize) -> Result<Self> {
        check_nqubits(nqubits)?;
        Ok(Self {
            nqubits,
            gates: Vec::new(),
        })
    }

    pub fn from_gates(nqubits: usize, gates: Vec<Gate>) -> Result<Self> {
        check_nqubits(nqubits)?;
        for gate in &gates {
            gate.validate(nqubits)?;
        }
        Ok(Self { nqubits, gates })
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Gate count.
    pub fn depth(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.nqubits)?;
        self.gates.push(gate);
        Ok(())
    }

    /// Inserts `gate` before position `index` (`index == depth()` appends).
    pub fn insert(&mut self, index: usize, gate: Gate) -> Result<()> {
        gate.validate(self.nqubits)?;
        if index > self.gates.len() {
            return Err(Error::Dimension(format!(
                "insert position {index} past circuit depth {}",
                self.gates.len()
            )));
        }
        self.gates.insert(index, gate);
        Ok(())
    }

    pub fn remove(&mut self, index: usize) -> Option<Gate> {
        (index < self.gates.len()).then(|| self.gates.remove(index))
    }

    /// Replaces the gate at `index`; the new gate must be valid for the register.
    pub fn replace(&mut self, index: usize, gate: Gate) -> Result<Gate> {
        gate.validate(self.nqubits)?;
        let depth = self.gates.len();
        let slot = self.gates.get_mut(index).ok_or_else(|| {
            Error::Dimension(format!("gate index {index} past circuit depth {depth}"))
        })?;
        Ok(std::mem::replace(slot, gate))
    }

    /// Number of controlled rotations.
    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_controlled()).count()
    }

    /// `U|0…0⟩`.
    pub fn run(&self) -> Result<Statevector> {
        let mut state = Statevector::zero(self.nqubits)?;
        for gate in &self.gates {
            state.apply(gate)?;
        }
        Ok(state)
    }
}

/// Dense `2^n` amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    nqubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// `|0…0⟩`.
    pub fn zero(nqubits: usize) -> Result<Self> {
        check_nqubits(nqubits)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << nqubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { nqubits, amps })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(nqubits: usize, index: usize) -> Result<Self> {
        let mut state = Self::zero(nqubits)?;
        if index >= state.amps.len() {
            return Err(Error::Dimension(format!(
                "basis index {index} out of range for {nqubits} qubits"
            )));
        }
        state.amps[0] = Complex64::new(0.0, 0.0);
        state.amps[index] = Complex64::new(1.0, 0.0);
        Ok(state)
    }

    /// Wraps raw amplitudes. The length must be a power of two; the vector is
    /// used as given (callers normalize).
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Dimension(format!(
                "amplitude count {len} is not a power of two ≥ 2"
            )));
        }
        let nqubits = len.trailing_zeros() as usize;
        check_nqubits(nqubits)?;
        Ok(Self { nqubits, amps })
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies `gate` in place.
    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.nqubits)?;
        let target = 1usize << gate.target();
        let control = gate.control().map_or(0, |c| 1usize << c);
        let m = gate.rotation_matrix();
        if matches!(gate.kind(), GateKind::Rz | GateKind::CRz) {
            apply_diagonal(&mut self.amps, target, control, m[0][0], m[1][1]);
        } else {
            apply_2x2(&mut self.amps, target, control, &m);
        }
        Ok(())
    }

    /// Applies every gate of `circuit` in order.
    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.nqubits() != self.nqubits {
            return Err(Error::QubitCountMismatch {
                expected: self.nqubits,
                actual: circuit.nqubits(),
            });
        }
        for gate in circuit.gates() {
            self.apply(gate)?;
        }
        Ok(())
    }

    /// `p_x = |amp_x|²`, indexed by basis label.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `Σ_x |amp_x|² E_x` over the full basis.
    pub fn expectation_exact(&self, obs: &DiagonalObservable) -> Result<f64> {
        self.check_observable(obs)?;
        Ok(self
            .amps
            .iter()
            .zip(obs.energies())
            .map(|(a, e)| a.norm_sqr() * e)
            .sum())
    }

    /// Draws `shots` basis outcomes from the Born distribution.
    pub fn sample(&self, shots: usize, rng: &mut rng::Rng) -> Result<Vec<usize>> {
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        let mut cdf = Vec::with_capacity(self.amps.len());
        let mut acc = 0.0;
        for a in &self.amps {
            acc += a.norm_sqr();
            cdf.push(acc);
        }
        let total = acc;
        Ok((0..shots)
            .map(|_| {
                let u = rng.gen::<f64>() * total;
                // First index whose cumulative mass exceeds u; zero-probability
                // outcomes share their predecessor's cdf value and are never hit.
                cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
            })
            .collect())
    }

    /// Empirical mean of `E_x` over `shots` samples drawn with `seed`.
    pub fn expectation_sampled(
        &self,
        obs: &DiagonalObservable,
        shots: usize,
        seed: u64,
    ) -> Result<f64> {
        self.check_observable(obs)?;
        let mut rng = rng::seeded(seed);
        let outcomes = self.sample(shots, &mut rng)?;
        let sum: f64 = outcomes.iter().map(|&x| obs.energy(x)).sum();
        Ok(sum / shots as f64)
    }

    /// Most probable basis index; ties go to the smallest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        let mut best_p = f64::NEG_INFINITY;
        for (x, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p > best_p {
                best = x;
                best_p = p;
            }
        }
        best
    }

    /// The `k` most probable outcomes, descending by probability, ties by index.
    pub fn top_k(&self, k: usize) -> Vec<(usize, f64)> {
        top_k(&self.probabilities(), k)
    }

    fn check_observable(&self, obs: &DiagonalObservable) -> Result<()> {
        if obs.nqubits() != self.nqubits {
            return Err(Error::QubitCountMismatch {
                expected: self.nqubits,
                actual: obs.nqubits(),
            });
        }
        Ok(())
    }
}

/// Largest `k` entries of a probability table, descending, ties by index.
pub fn top_k(probs: &[f64], k: usize) -> Vec<(usize, f64)> {
    let mut entries: Vec<(usize, f64)> = probs.iter().copied().enumerate().collect();
    let k = k.min(entries.len());
    let by_prob = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if k < entries.len() && k > 0 {
        entries.select_nth_unstable_by(k - 1, by_prob);
    }
    entries.truncate(k);
    entries.sort_by(by_prob);
    entries
}

/// Pairs `(i, i | target)` with the target bit clear, restricted to `i & control == control`.
fn apply_2x2(amps: &mut [Complex64], target: usize, control: usize, m: &[[Complex64; 2]; 2]) {
    let len = amps.len();
    let mut base = 0;
    while base < len {
        for i in base..base + target {
            if i & control != control {
                continue;
            }
            let j = i | target;
            let a0 = amps[i];
            let a1 = amps[j];
            amps[i] = m[0][0] * a0 + m[0][1] * a1;
            amps[j] = m[1][0] * a0 + m[1][1] * a1;
        }
        base += target << 1;
    }
}

fn apply_diagonal(
    amps: &mut [Complex64],
    target: usize,
    control: usize,
    d0: Complex64,
    d1: Complex64,
) {
    for (i, a) in amps.iter_mut().enumerate() {
        if i & control != control {
            continue;
        }
        *a *= if i & target == 0 { d0 } else { d1 };
    }
}

/// A cost Hamiltonian diagonal in the computational basis, stored as the
/// full table of `2^n` energies.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalObservable {
    nqubits: usize,
    energies: Vec<f64>,
}

impl DiagonalObservable {
    pub fn from_fn(nqubits: usize, energy: impl Fn(usize) -> f64) -> Result<Self> {
        check_nqubits(nqubits)?;
        Ok(Self {
            nqubits,
            energies: (0..1usize << nqubits).map(energy).collect(),
        })
    }

    pub fn from_table(energies: Vec<f64>) -> Result<Self> {
        let len = energies.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Dimension(format!(
                "energy table length {len} is not a power of two ≥ 2"
            )));
        }
        let nqubits = len.trailing_zeros() as usize;
        check_nqubits(nqubits)?;
        Ok(Self { nqubits, energies })
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, basis: usize) -> f64 {
        self.energies[basis]
    }

    /// `a·self + b·other`.
    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if other.nqubits != self.nqubits {
            return Err(Error::QubitCountMismatch {
                expected: self.nqubits,
                actual: other.nqubits,
            });
        }
        Ok(Self {
            nqubits: self.nqubits,
            energies: self
                .energies
                .iter()
                .zip(&other.energies)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }
}

/// Basis index rendered as bits in qubit order (qubit 0 first).
pub fn bits_qubit_order(basis: usize, nqubits: usize) -> String {
    (0..nqubits)
        .map(|q| if basis >> q & 1 == 1 { '1' } else { '0' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    /// Dense 4×4 unitary of a two-qubit gate, built by brute force from the
    /// 2×2 rotation and the little-endian basis convention.
    fn dense_two_qubit(gate: &Gate) -> [[Complex64; 4]; 4] {
        let m = gate.rotation_matrix();
        let mut u = [[Complex64::new(0.0, 0.0); 4]; 4];
        for col in 0..4usize {
            let tbit = col >> gate.target() & 1;
            let active = gate.control().map_or(true, |c| col >> c & 1 == 1);
            if !active {
                u[col][col] = Complex64::new(1.0, 0.0);
                continue;
            }
            for out in 0..2usize {
                let row = (col & !(1 << gate.target())) | out << gate.target();
                u[row][col] += m[out][tbit];
            }
        }
        u
    }

    #[test]
    fn rx_zero_is_identity() {
        let mut state = Circuit::from_gates(2, vec![Gate::ry(0, 0.7), Gate::crx(0, 1, 1.3)])
            .unwrap()
            .run()
            .unwrap();
        let before = state.clone();
        state.apply(&Gate::rx(1, 0.0)).unwrap();
        assert_eq!(state, before);
    }

    #[test]
    fn ry_pi_flips_single_qubit() {
        let mut state = Statevector::zero(1).unwrap();
        state.apply(&Gate::ry(0, PI)).unwrap();
        assert_close(state.probabilities()[1], 1.0, 1e-12);
    }

    #[test]
    fn crx_pi_with_control_set() {
        // |01⟩ in the |q1 q0⟩ reading: qubit 0 set, basis index 1.
        let mut state = Statevector::basis(2, 0b01).unwrap();
        let gate = Gate::crx(0, 1, PI);
        let u = dense_two_qubit(&gate);
        let expected: Vec<Complex64> = (0..4)
            .map(|r| (0..4).map(|c| u[r][c] * state.amplitudes()[c]).sum())
            .collect();
        state.apply(&gate).unwrap();
        assert_close(state.probabilities()[0b11], 1.0, 1e-12);
        for (a, b) in state.amplitudes().iter().zip(&expected) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn two_qubit_gates_match_dense_matrices() {
        let prep = Circuit::from_gates(
            2,
            vec![
                Gate::ry(0, 0.4),
                Gate::rx(1, 1.1),
                Gate::rz(0, 0.3),
                Gate::cry(1, 0, 2.0),
            ],
        )
        .unwrap();
        for kind in GateKind::CONTROLLED {
            for (c, t) in [(0, 1), (1, 0)] {
                let gate = Gate::controlled(kind, c, t, 0.83);
                let mut state = prep.run().unwrap();
                let u = dense_two_qubit(&gate);
                let expected: Vec<Complex64> = (0..4)
                    .map(|r| (0..4).map(|k| u[r][k] * state.amplitudes()[k]).sum())
                    .collect();
                state.apply(&gate).unwrap();
                for (a, b) in state.amplitudes().iter().zip(&expected) {
                    assert!((a - b).norm() < 1e-14, "{kind:?} c={c} t={t}");
                }
            }
        }
    }

    #[test]
    fn gate_validation_errors() {
        assert!(matches!(
            Gate::new(GateKind::CRx, 1, Some(1), 0.1),
            Err(Error::ControlIsTarget(1))
        ));
        assert!(Gate::new(GateKind::Rx, 0, Some(1), 0.1).is_err());
        assert!(Gate::new(GateKind::CRy, 0, None, 0.1).is_err());
        assert!(matches!(
            Gate::new(GateKind::Ry, 0, None, f64::NAN),
            Err(Error::NonFiniteAngle(_))
        ));
        let mut state = Statevector::zero(2).unwrap();
        assert!(matches!(
            state.apply(&Gate::rx(2, 0.1)),
            Err(Error::QubitOutOfRange {
                index: 2,
                nqubits: 2
            })
        ));
        assert!(state.apply(&Gate::crz(3, 0, 0.1)).is_err());
        assert!(Circuit::from_gates(1, vec![Gate::cry(0, 1, 0.2)]).is_err());
        assert!(Circuit::new(0).is_err());
    }

    #[test]
    fn empty_circuit_is_all_zeros() {
        let state = Circuit::new(3).unwrap().run().unwrap();
        assert_eq!(state.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert!(state.amplitudes()[1..].iter().all(|a| a.norm_sqr() == 0.0));
    }

    #[test]
    fn half_rotation_gives_equal_superposition() {
        let state = Circuit::from_gates(1, vec![Gate::ry(0, FRAC_PI_2)])
            .unwrap()
            .run()
            .unwrap();
        let p = state.probabilities();
        assert_close(p[0], 0.5, 1e-12);
        assert_close(p[1], 0.5, 1e-12);
    }

    #[test]
    fn exact_expectation_examples() {
        let obs = DiagonalObservable::from_fn(3, |x| (x * x) as f64 + 2.5).unwrap();
        let zero = Statevector::zero(3).unwrap();
        assert_eq!(zero.expectation_exact(&obs).unwrap(), 2.5);

        let uniform = Circuit::from_gates(2, vec![Gate::ry(0, FRAC_PI_2), Gate::ry(1, FRAC_PI_2)])
            .unwrap()
            .run()
            .unwrap();
        let obs = DiagonalObservable::from_table(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_close(uniform.expectation_exact(&obs).unwrap(), 1.5, 1e-12);

        let wrong = DiagonalObservable::from_table(vec![0.0; 8]).unwrap();
        assert!(uniform.expectation_exact(&wrong).is_err());
    }

    #[test]
    fn sampled_expectation_contract() {
        let obs = DiagonalObservable::from_fn(3, |x| x as f64 * 1.5 + 4.0).unwrap();
        let zero = Statevector::zero(3).unwrap();
        assert_eq!(zero.expectation_sampled(&obs, 17, 3).unwrap(), 4.0);
        assert!(matches!(
            zero.expectation_sampled(&obs, 0, 3),
            Err(Error::ZeroShots)
        ));

        let state = Circuit::from_gates(3, vec![Gate::ry(0, 1.0), Gate::crx(0, 2, 2.0)])
            .unwrap()
            .run()
            .unwrap();
        let a = state.expectation_sampled(&obs, 1000, 42).unwrap();
        let b = state.expectation_sampled(&obs, 1000, 42).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn sampling_never_returns_zero_probability_outcomes() {
        // Only basis 0 and 5 are populated.
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        amps[0] = Complex64::new(0.6, 0.0);
        amps[5] = Complex64::new(0.0, 0.8);
        let state = Statevector::from_amplitudes(amps).unwrap();
        let mut rng = rng::seeded(9);
        let outcomes = state.sample(5000, &mut rng).unwrap();
        assert!(outcomes.iter().all(|&x| x == 0 || x == 5));
        let fives = outcomes.iter().filter(|&&x| x == 5).count();
        assert!((fives as f64 / 5000.0 - 0.64).abs() < 0.03);
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(Statevector::zero(4).unwrap().argmax(), 0);

        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        amps[0b101] = Complex64::new(0.7f64.sqrt(), 0.0);
        amps[0b010] = Complex64::new(0.3f64.sqrt(), 0.0);
        assert_eq!(Statevector::from_amplitudes(amps).unwrap().argmax(), 0b101);

        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        amps[2] = Complex64::new(0.5f64.sqrt(), 0.0);
        amps[5] = Complex64::new(0.0, 0.5f64.sqrt());
        assert_eq!(Statevector::from_amplitudes(amps).unwrap().argmax(), 2);
    }

    #[test]
    fn top_k_orders_by_probability_then_index() {
        let probs = [0.1, 0.3, 0.0, 0.3, 0.25, 0.05];
        assert_eq!(top_k(&probs, 3), vec![(1, 0.3), (3, 0.3), (4, 0.25)]);
        assert_eq!(top_k(&probs, 100).len(), probs.len());
        assert!(top_k(&probs, 0).is_empty());
    }

    #[test]
    fn flipped_and_inverse() {
        let g = Gate::crx(0, 1, 0.9);
        let f = g.flipped();
        assert_eq!((f.control(), f.target(), f.theta()), (Some(1), 0, 0.9));
        assert_eq!(f.kind(), GateKind::CRx);
        assert_eq!(Gate::ry(2, 0.4).flipped(), Gate::ry(2, 0.4));
        assert_eq!(g.inverse().theta(), -0.9);
    }

    #[test]
    fn bit_rendering_is_qubit_ordered() {
        assert_eq!(bits_qubit_order(0b001, 3), "100");
        assert_eq!(bits_qubit_order(0b110, 3), "011");
    }

    #[test]
    fn linear_combination_of_observables() {
        let a = DiagonalObservable::from_table(vec![1.0, 2.0]).unwrap();
        let b = DiagonalObservable::from_table(vec![10.0, -4.0]).unwrap();
        let c = a.linear_combination(2.0, &b, 0.5).unwrap();
        assert_eq!(c.energies(), &[7.0, 2.0]);
    }
}
