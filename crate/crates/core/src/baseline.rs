//! Fixed-ansatz variational baseline.
//!
//! Each ansatz layer is one `Ry` per qubit followed by a ring of `CRz`
//! entanglers (qubit `q` controls `q + 1 mod n`). Parameters are trained by
//! plain gradient descent on the exact expectation, with gradients from
//! parameter-shift rules:
//!
//! * `Ry(θ)`: generator eigenvalues `±1/2`, so
//!   `∂f = [f(θ + π/2) − f(θ − π/2)] / 2`.
//! * `CRz(θ)`: generator `|1⟩⟨1| ⊗ Z/2` has eigenvalues `{0, ±1/2}`, giving
//!   frequencies 1/2 and 1; the four-term rule
//!   `∂f = d₊[f(θ + π/2) − f(θ − π/2)] − d₋[f(θ + 3π/2) − f(θ − 3π/2)]`
//!   with `d± = (√2 ± 1) / (4√2)` is exact for both.

use std::f64::consts::{FRAC_PI_2, SQRT_2, TAU};

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, DiagonalObservable, Gate, GateKind};
use crate::problem::CostHamiltonian;
use crate::rng;
use crate::{Error, Result};

/// Layered hardware-efficient ansatz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ansatz {
    nqubits: usize,
    layers: usize,
}

impl Ansatz {
    pub fn new(nqubits: usize, layers: usize) -> Result<Self> {
        Circuit::new(nqubits)?;
        Ok(Self { nqubits, layers })
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    fn ring_len(&self) -> usize {
        if self.nqubits == 1 {
            0
        } else {
            self.nqubits
        }
    }

    fn params_per_layer(&self) -> usize {
        self.nqubits + self.ring_len()
    }

    pub fn num_params(&self) -> usize {
        self.layers * self.params_per_layer()
    }

    /// Gate kind driven by parameter `index`.
    pub fn param_kind(&self, index: usize) -> GateKind {
        if index % self.params_per_layer() < self.nqubits {
            GateKind::Ry
        } else {
            GateKind::CRz
        }
    }

    /// `U(θ)`; parameter `k` drives gate `k`.
    pub fn circuit(&self, theta: &[f64]) -> Result<Circuit> {
        self.check(theta)?;
        let n = self.nqubits;
        let mut gates = Vec::with_capacity(theta.len());
        for layer in theta.chunks(self.params_per_layer()) {
            let (rotations, ring) = layer.split_at(n);
            for (q, &t) in rotations.iter().enumerate() {
                gates.push(Gate::new(GateKind::Ry, q, None, t)?);
            }
            for (q, &t) in ring.iter().enumerate() {
                gates.push(Gate::new(GateKind::CRz, (q + 1) % n, Some(q), t)?);
            }
        }
        Circuit::from_gates(n, gates)
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_params() {
            return Err(Error::Dimension(format!(
                "ansatz takes {} parameters, got {}",
                self.num_params(),
                theta.len()
            )));
        }
        Ok(())
    }
}

/// Exact `⟨0|U(θ)† H U(θ)|0⟩`.
pub fn ansatz_expectation(ansatz: &Ansatz, theta: &[f64], obs: &DiagonalObservable) -> Result<f64> {
    if obs.nqubits() != ansatz.nqubits() {
        return Err(Error::QubitCountMismatch {
            expected: ansatz.nqubits(),
            actual: obs.nqubits(),
        });
    }
    ansatz.circuit(theta)?.run()?.expectation_exact(obs)
}

fn shifted(
    ansatz: &Ansatz,
    theta: &[f64],
    index: usize,
    shift: f64,
    obs: &DiagonalObservable,
) -> Result<f64> {
    let mut t = theta.to_vec();
    t[index] += shift;
    ansatz_expectation(ansatz, &t, obs)
}

/// `∂f/∂θ_k` for every parameter by parameter shift.
pub fn parameter_shift_gradient(
    ansatz: &Ansatz,
    theta: &[f64],
    obs: &DiagonalObservable,
) -> Result<Vec<f64>> {
    ansatz.check(theta)?;
    let d_plus = (SQRT_2 + 1.0) / (4.0 * SQRT_2);
    let d_minus = (SQRT_2 - 1.0) / (4.0 * SQRT_2);
    (0..theta.len())
        .into_par_iter()
        .map(|k| {
            let f = |s: f64| shifted(ansatz, theta, k, s, obs);
            match ansatz.param_kind(k) {
                GateKind::CRz => Ok(d_plus * (f(FRAC_PI_2)? - f(-FRAC_PI_2)?)
                    - d_minus * (f(3.0 * FRAC_PI_2)? - f(-3.0 * FRAC_PI_2)?)),
                _ => Ok(0.5 * (f(FRAC_PI_2)? - f(-FRAC_PI_2)?)),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqaConfig {
    pub layers: usize,
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for VqaConfig {
    fn default() -> Self {
        Self {
            layers: 2,
            learning_rate: 0.1,
            iterations: 300,
            seed: 0,
        }
    }
}

impl VqaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::Config("ansatz needs at least one layer".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::Config(
                "learning rate must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct VqaResult {
    /// Parameters with the lowest cost seen.
    pub best_theta: Vec<f64>,
    pub best_cost: f64,
    /// Parameters after the last update.
    pub final_theta: Vec<f64>,
    /// Cost before each update and after the last one (`iterations + 1` entries).
    pub trace: Vec<f64>,
    /// Born probabilities at `best_theta`.
    pub distribution: Vec<f64>,
    pub readout: usize,
    pub readout_cost: f64,
    pub decoded_slowness: Vec<u64>,
}

pub fn run_vqa(ham: &CostHamiltonian, config: &VqaConfig) -> Result<VqaResult> {
    run_vqa_with(ham, config, |_, _| {})
}

/// Like [`run_vqa`], calling `observe(iteration, theta)` for every entry of
/// the trace.
pub fn run_vqa_with(
    ham: &CostHamiltonian,
    config: &VqaConfig,
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<VqaResult> {
    config.validate()?;
    let obs = &ham.observable;
    let ansatz = Ansatz::new(ham.nqubits(), config.layers)?;
    let mut rng = rng::seeded(config.seed);
    let mut theta: Vec<f64> = (0..ansatz.num_params())
        .map(|_| rng.gen_range(0.0..TAU))
        .collect();

    let mut trace = Vec::with_capacity(config.iterations + 1);
    let mut cost = ansatz_expectation(&ansatz, &theta, obs)?;
    let mut best = (theta.clone(), cost);
    trace.push(cost);
    observe(0, &theta);
    for iteration in 1..=config.iterations {
        let grad = parameter_shift_gradient(&ansatz, &theta, obs)?;
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= config.learning_rate * g;
        }
        cost = ansatz_expectation(&ansatz, &theta, obs)?;
        if cost < best.1 {
            best = (theta.clone(), cost);
        }
        trace.push(cost);
        observe(iteration, &theta);
    }

    let (best_theta, best_cost) = best;
    let state = ansatz.circuit(&best_theta)?.run()?;
    let readout = state.argmax();
    Ok(VqaResult {
        readout,
        readout_cost: obs.energy(readout),
        decoded_slowness: ham.encoding.decode_index(readout),
        distribution: state.probabilities(),
        best_theta,
        best_cost,
        final_theta: theta,
        trace,
    })
}
