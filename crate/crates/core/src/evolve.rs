//! Gradient-free evolutionary circuit learning.
//!
//! The individual is the circuit itself. Each generation a parent spawns λ
//! offspring by random structural and parametric mutations (insert, delete,
//! modify, swap), every offspring is scored by the expectation of the cost
//! Hamiltonian on its output state, and the cheapest of parent and offspring
//! becomes the next parent. Because the parent takes part in selection the
//! best cost never increases.

use std::f64::consts::TAU;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, DiagonalObservable, Gate, GateKind};
use crate::problem::CostHamiltonian;
use crate::rng::{self, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mutation {
    Insert,
    Delete,
    Modify,
    Swap,
}

impl Mutation {
    pub const ALL: [Mutation; 4] = [
        Mutation::Insert,
        Mutation::Delete,
        Mutation::Modify,
        Mutation::Swap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::Insert => "insert",
            Mutation::Delete => "delete",
            Mutation::Modify => "modify",
            Mutation::Swap => "swap",
        }
    }

    /// Whether the operation has something to act on.
    pub fn applicable(self, circuit: &Circuit) -> bool {
        match self {
            Mutation::Insert => true,
            Mutation::Delete | Mutation::Modify => !circuit.is_empty(),
            Mutation::Swap => circuit.two_qubit_count() > 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationConfig {
    pub p_insert: f64,
    pub p_delete: f64,
    pub p_modify: f64,
    pub p_swap: f64,
    /// Probability that an insert places a single-qubit rotation.
    pub single_qubit_ratio: f64,
    pub mutations_per_offspring: usize,
}

impl Default for MutationConfig {
    fn default() -> Self {
        Self {
            p_insert: 0.25,
            p_delete: 0.25,
            p_modify: 0.25,
            p_swap: 0.25,
            single_qubit_ratio: 0.5,
            mutations_per_offspring: 1,
        }
    }
}

impl MutationConfig {
    pub fn probability(&self, op: Mutation) -> f64 {
        match op {
            Mutation::Insert => self.p_insert,
            Mutation::Delete => self.p_delete,
            Mutation::Modify => self.p_modify,
            Mutation::Swap => self.p_swap,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = Mutation::ALL.map(|op| self.probability(op));
        if probs
            .iter()
            .chain([&self.single_qubit_ratio])
            .any(|p| !(0.0..=1.0).contains(p))
        {
            return Err(Error::Config(
                "mutation probabilities must lie in [0, 1]".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "mutation probabilities sum to {total}, expected 1"
            )));
        }
        if self.p_insert == 0.0 {
            // Insert is the only operation applicable to the empty circuit.
            return Err(Error::Config("insert probability must be positive".into()));
        }
        if self.mutations_per_offspring == 0 {
            return Err(Error::Config(
                "mutations_per_offspring must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// How an offspring's cost is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// `Σ_x p_x E_x` over the full statevector.
    Exact,
    /// Mean energy over this many measurement shots.
    Sampled { shots: usize },
}

impl EvalMode {
    /// `0` selects exact evaluation.
    pub fn from_shots(shots: usize) -> Self {
        if shots == 0 {
            EvalMode::Exact
        } else {
            EvalMode::Sampled { shots }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCircuit {
    /// `Ry(θ_q)` on every qubit, `θ_q ~ U[0, 2π)`.
    RandomRy,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub mu: usize,
    pub lambda: usize,
    pub generations: usize,
    pub mutation: MutationConfig,
    pub mode: EvalMode,
    pub initial: InitialCircuit,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            mu: 1,
            lambda: 4,
            generations: 300,
            mutation: MutationConfig::default(),
            mode: EvalMode::Exact,
            initial: InitialCircuit::RandomRy,
            seed: 0,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mu == 0 {
            return Err(Error::Config("mu must be at least 1".into()));
        }
        if self.mu > 1 {
            return Err(Error::Config(format!(
                "mu = {} is not supported; selection keeps a single parent",
                self.mu
            )));
        }
        if self.lambda == 0 {
            return Err(Error::Config("lambda must be at least 1".into()));
        }
        if self.mode == (EvalMode::Sampled { shots: 0 }) {
            return Err(Error::ZeroShots);
        }
        self.mutation.validate()
    }
}

/// A circuit together with its measured cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub circuit: Circuit,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationTrace {
    pub generation: usize,
    pub best_cost: f64,
    pub depth: usize,
}

fn random_angle(rng: &mut Rng) -> f64 {
    rng.gen_range(0.0..TAU)
}

/// Inserts a random rotation at a uniformly chosen position `0..=depth`.
///
/// Single-qubit with probability `single_qubit_ratio` (always on a one-qubit
/// register); the axis is uniform, qubits are uniform with control ≠ target,
/// and `θ ~ U[0, 2π)`.
pub fn mutate_insert(circuit: &mut Circuit, single_qubit_ratio: f64, rng: &mut Rng) -> Result<()> {
    let n = circuit.nqubits();
    let position = rng.gen_range(0..=circuit.depth());
    let single = n == 1 || rng.gen_bool(single_qubit_ratio);
    let gate = if single {
        let kind = GateKind::SINGLE[rng.gen_range(0..3)];
        let target = rng.gen_range(0..n);
        Gate::new(kind, target, None, random_angle(rng))?
    } else {
        let kind = GateKind::CONTROLLED[rng.gen_range(0..3)];
        let control = rng.gen_range(0..n);
        let mut target = rng.gen_range(0..n - 1);
        if target >= control {
            target += 1;
        }
        Gate::new(kind, target, Some(control), random_angle(rng))?
    };
    circuit.insert(position, gate)
}

/// Removes a uniformly chosen gate.
pub fn mutate_delete(circuit: &mut Circuit, rng: &mut Rng) -> Result<Gate> {
    if circuit.is_empty() {
        return Err(Error::Inapplicable(Mutation::Delete.name()));
    }
    let index = rng.gen_range(0..circuit.depth());
    Ok(circuit.remove(index).expect("index within depth"))
}

/// Redraws the angle of a uniformly chosen gate from `U[0, 2π)`.
pub fn mutate_modify(circuit: &mut Circuit, rng: &mut Rng) -> Result<()> {
    if circuit.is_empty() {
        return Err(Error::Inapplicable(Mutation::Modify.name()));
    }
    let index = rng.gen_range(0..circuit.depth());
    let gate = circuit.gates()[index].with_theta(random_angle(rng))?;
    circuit.replace(index, gate)?;
    Ok(())
}

/// Exchanges control and target of a uniformly chosen controlled rotation.
pub fn mutate_swap(circuit: &mut Circuit, rng: &mut Rng) -> Result<()> {
    let controlled: Vec<usize> = circuit
        .gates()
        .iter()
        .enumerate()
        .filter(|(_, g)| g.is_controlled())
        .map(|(i, _)| i)
        .collect();
    if controlled.is_empty() {
        return Err(Error::Inapplicable(Mutation::Swap.name()));
    }
    let index = controlled[rng.gen_range(0..controlled.len())];
    let gate = circuit.gates()[index].flipped();
    circuit.replace(index, gate)?;
    Ok(())
}

/// Picks an operation with the configured probabilities, renormalized over
/// the operations applicable to `circuit`, and applies it.
pub fn mutate(circuit: &mut Circuit, config: &MutationConfig, rng: &mut Rng) -> Result<Mutation> {
    let weights: Vec<(Mutation, f64)> = Mutation::ALL
        .into_iter()
        .filter(|op| op.applicable(circuit))
        .map(|op| (op, config.probability(op)))
        .filter(|(_, p)| *p > 0.0)
        .collect();
    let total: f64 = weights.iter().map(|(_, p)| p).sum();
    if weights.is_empty() || total <= 0.0 {
        return Err(Error::Config(
            "no applicable mutation has positive probability".into(),
        ));
    }
    let mut u = rng.gen::<f64>() * total;
    let mut chosen = weights[weights.len() - 1].0;
    for &(op, p) in &weights {
        if u < p {
            chosen = op;
            break;
        }
        u -= p;
    }
    match chosen {
        Mutation::Insert => mutate_insert(circuit, config.single_qubit_ratio, rng)?,
        Mutation::Delete => {
            mutate_delete(circuit, rng)?;
        }
        Mutation::Modify => mutate_modify(circuit, rng)?,
        Mutation::Swap => mutate_swap(circuit, rng)?,
    }
    Ok(chosen)
}

/// Cost of `circuit`: expectation of `obs` on `U|0…0⟩`. `seed` drives shot
/// sampling and is ignored in exact mode.
pub fn evaluate(
    circuit: &Circuit,
    obs: &DiagonalObservable,
    mode: EvalMode,
    seed: u64,
) -> Result<f64> {
    if circuit.nqubits() != obs.nqubits() {
        return Err(Error::QubitCountMismatch {
            expected: obs.nqubits(),
            actual: circuit.nqubits(),
        });
    }
    let state = circuit.run()?;
    match mode {
        EvalMode::Exact => state.expectation_exact(obs),
        EvalMode::Sampled { shots } => state.expectation_sampled(obs, shots, seed),
    }
}

pub fn initial_circuit(nqubits: usize, initial: InitialCircuit, rng: &mut Rng) -> Result<Circuit> {
    let mut circuit = Circuit::new(nqubits)?;
    if initial == InitialCircuit::RandomRy {
        for q in 0..nqubits {
            circuit.push(Gate::ry(q, random_angle(rng)))?;
        }
    }
    Ok(circuit)
}

/// Result of one generation.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub parent: Individual,
    pub trace: GenerationTrace,
    /// Cost of every offspring, in creation order.
    pub offspring_costs: Vec<f64>,
}

/// One (1+λ) generation.
///
/// Each offspring gets its own stream seeded from `rng`, so evaluating them
/// in parallel gives the same result as a serial loop. The cheapest
/// offspring (first on ties) replaces the parent unless it costs more.
pub fn step(
    parent: &Individual,
    generation: usize,
    config: &EvolutionConfig,
    obs: &DiagonalObservable,
    rng: &mut Rng,
) -> Result<StepOutcome> {
    let seeds: Vec<u64> = (0..config.lambda).map(|_| rng.gen()).collect();
    let offspring = seeds
        .par_iter()
        .map(|&seed| {
            let mut child_rng = rng::seeded(seed);
            let mut circuit = parent.circuit.clone();
            for _ in 0..config.mutation.mutations_per_offspring {
                mutate(&mut circuit, &config.mutation, &mut child_rng)?;
            }
            let cost = evaluate(&circuit, obs, config.mode, child_rng.gen())?;
            Ok(Individual { circuit, cost })
        })
        .collect::<Result<Vec<_>>>()?;

    let offspring_costs: Vec<f64> = offspring.iter().map(|o| o.cost).collect();
    let best = offspring
        .into_iter()
        .reduce(|best, o| if o.cost < best.cost { o } else { best })
        .expect("lambda >= 1");
    let parent = if best.cost <= parent.cost {
        best
    } else {
        parent.clone()
    };
    let trace = GenerationTrace {
        generation,
        best_cost: parent.cost,
        depth: parent.circuit.depth(),
    };
    Ok(StepOutcome {
        parent,
        trace,
        offspring_costs,
    })
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    /// Parent after the last generation.
    pub best: Individual,
    /// One entry per generation, generation 0 being the initial parent.
    pub trace: Vec<GenerationTrace>,
    /// Born probabilities of the final parent's output state.
    pub distribution: Vec<f64>,
    /// Basis index read out as the answer.
    pub readout: usize,
    /// Energy of `readout`.
    pub readout_cost: f64,
    pub decoded_slowness: Vec<u64>,
}

pub fn run_evolution(ham: &CostHamiltonian, config: &EvolutionConfig) -> Result<EvolutionResult> {
    run_evolution_with(ham, config, |_, _| {})
}

/// Like [`run_evolution`], calling `observe(generation, parent)` after the
/// initial evaluation and after every generation.
pub fn run_evolution_with(
    ham: &CostHamiltonian,
    config: &EvolutionConfig,
    mut observe: impl FnMut(usize, &Individual),
) -> Result<EvolutionResult> {
    config.validate()?;
    let obs = &ham.observable;
    let mut rng = rng::seeded(config.seed);
    let circuit = initial_circuit(ham.nqubits(), config.initial, &mut rng)?;
    let cost = evaluate(&circuit, obs, config.mode, rng.gen())?;
    let mut parent = Individual { circuit, cost };
    let mut trace = Vec::with_capacity(config.generations + 1);
    trace.push(GenerationTrace {
        generation: 0,
        best_cost: parent.cost,
        depth: parent.circuit.depth(),
    });
    observe(0, &parent);

    for generation in 1..=config.generations {
        let outcome = step(&parent, generation, config, obs, &mut rng)?;
        parent = outcome.parent;
        trace.push(outcome.trace);
        observe(generation, &parent);
    }

    let state = parent.circuit.run()?;
    let readout = match config.mode {
        EvalMode::Exact => state.argmax(),
        EvalMode::Sampled { shots } => modal_outcome(&state.sample(shots, &mut rng)?),
    };
    Ok(EvolutionResult {
        readout,
        readout_cost: obs.energy(readout),
        decoded_slowness: ham.encoding.decode_index(readout),
        distribution: state.probabilities(),
        best: parent,
        trace,
    })
}

/// Most frequent outcome; ties go to the smallest basis index.
pub fn modal_outcome(outcomes: &[usize]) -> usize {
    let mut sorted = outcomes.to_vec();
    sorted.sort_unstable();
    let mut best = (0usize, 0usize);
    for run in sorted.chunk_by(|a, b| a == b) {
        if run.len() > best.1 {
            best = (run[0], run.len());
        }
    }
    best.0
}
