//! Seeded multi-run experiments.
//!
//! An experiment solves one instance `runs` times with independent seeds
//! `seed_i = derive_seed(master, i)` and writes:
//!
//! * `run_NNN.json`: one [`RunRecord`] per run;
//! * `convergence.csv`: `generation,mean_cost,std_cost,run_0,…` at the
//!   sampled generations;
//! * `histogram.csv`: `layer,reference,mean_decoded,std_decoded`, written
//!   when the instance carries reference slownesses.
//!
//! Costs are stored raw; any log scaling belongs to the plotting step.
//! Standard deviations are population deviations over the runs. Wall-clock
//! durations are kept in memory only, so output files are byte-identical
//! across repeated runs of the same configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::baseline::{run_vqa_with, Ansatz, VqaConfig};
use crate::circuit::{bits_qubit_order, top_k, Circuit};
use crate::evolve::{run_evolution_with, EvolutionConfig};
use crate::problem::{synth_instance, LayeredProblem};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// Distribution entries kept per snapshot.
pub const DEFAULT_TOP_K: usize = 64;
/// Spacing of the default convergence samples.
pub const SNAPSHOT_STRIDE: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSpec {
    Synth { layers: usize, bits: u32, seed: u64 },
    File(PathBuf),
}

impl InstanceSpec {
    pub fn load(&self) -> Result<LayeredProblem> {
        match self {
            InstanceSpec::Synth { layers, bits, seed } => synth_instance(*layers, *bits, *seed),
            InstanceSpec::File(path) => read_problem(path),
        }
    }
}

pub fn read_problem(path: &Path) -> Result<LayeredProblem> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })
}

pub fn write_problem(problem: &LayeredProblem, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(problem).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })?;
    write_file(path, text + "\n")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverConfig {
    Evolution(EvolutionConfig),
    Vqa(VqaConfig),
}

impl SolverConfig {
    pub fn name(&self) -> &'static str {
        match self {
            SolverConfig::Evolution(_) => "evolution",
            SolverConfig::Vqa(_) => "vqa",
        }
    }

    /// Generations (evolution) or iterations (VQA).
    pub fn budget(&self) -> usize {
        match self {
            SolverConfig::Evolution(c) => c.generations,
            SolverConfig::Vqa(c) => c.iterations,
        }
    }

    fn with_seed(&self, seed: u64) -> Self {
        let mut out = self.clone();
        match &mut out {
            SolverConfig::Evolution(c) => c.seed = seed,
            SolverConfig::Vqa(c) => c.seed = seed,
        }
        out
    }

    fn validate(&self) -> Result<()> {
        match self {
            SolverConfig::Evolution(c) => c.validate(),
            SolverConfig::Vqa(c) => c.validate(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    /// Per-run seeds are derived from `master_seed`; the seed inside the
    /// solver config is ignored.
    pub solver: SolverConfig,
    pub runs: usize,
    pub master_seed: u64,
    /// Files are written only when set.
    pub out_dir: Option<PathBuf>,
    /// Generations at which costs go to the convergence CSV and distributions
    /// are snapshotted. Empty selects [`default_snapshots`].
    pub snapshot_generations: Vec<usize>,
    pub top_k: usize,
    /// Worker threads; 0 uses the global pool.
    pub jobs: usize,
}

impl ExperimentConfig {
    pub fn new(instance: InstanceSpec, solver: SolverConfig) -> Self {
        Self {
            instance,
            solver,
            runs: 10,
            master_seed: 0,
            out_dir: None,
            snapshot_generations: Vec::new(),
            top_k: DEFAULT_TOP_K,
            jobs: 0,
        }
    }

    pub fn snapshots(&self) -> Vec<usize> {
        if self.snapshot_generations.is_empty() {
            default_snapshots(self.solver.budget())
        } else {
            let mut g = self.snapshot_generations.clone();
            g.sort_unstable();
            g.dedup();
            g
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        let budget = self.solver.budget();
        if let Some(g) = self.snapshot_generations.iter().find(|&&g| g > budget) {
            return Err(Error::Config(format!(
                "snapshot generation {g} beyond the {budget}-generation budget"
            )));
        }
        self.solver.validate()
    }
}

/// `0, 50, 100, …` up to `generations`, always ending at `generations`.
pub fn default_snapshots(generations: usize) -> Vec<usize> {
    let mut g: Vec<usize> = (0..=generations).step_by(SNAPSHOT_STRIDE).collect();
    if g.last() != Some(&generations) {
        g.push(generations);
    }
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbEntry {
    pub basis: usize,
    /// Bits in qubit order, qubit 0 first.
    pub bits: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub generation: usize,
    pub cost: f64,
    pub top: Vec<ProbEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub solver: String,
    /// Best cost after each generation (evolution) or cost at each
    /// iteration (VQA); index 0 is the starting point.
    pub costs: Vec<f64>,
    /// Final parent cost (evolution) or lowest cost seen (VQA).
    pub final_best_cost: f64,
    pub readout_basis: usize,
    pub readout_bits: String,
    pub readout_cost: f64,
    pub decoded_slowness: Vec<u64>,
    pub final_depth: usize,
    pub final_top: Vec<ProbEntry>,
    pub snapshots: Vec<Snapshot>,
    pub final_circuit: Circuit,
    #[serde(skip)]
    pub duration: Duration,
}

/// Statistics over all runs of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub runs: usize,
    /// `per_run_costs[r][g]`.
    pub per_run_costs: Vec<Vec<f64>>,
    pub mean_cost: Vec<f64>,
    pub std_cost: Vec<f64>,
    pub mean_decoded: Vec<f64>,
    pub std_decoded: Vec<f64>,
    pub reference: Option<Vec<u64>>,
    pub mean_final_best_cost: f64,
    /// Runs whose read-out bitstring has zero energy.
    pub exact_runs: usize,
}

fn mean_std(values: impl ExactSizeIterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl Aggregate {
    pub fn from_records(records: &[RunRecord], reference: Option<&[u64]>) -> Result<Self> {
        let Some(first) = records.first() else {
            return Err(Error::Config("cannot aggregate zero runs".into()));
        };
        let len = first.costs.len();
        let layers = first.decoded_slowness.len();
        if records
            .iter()
            .any(|r| r.costs.len() != len || r.decoded_slowness.len() != layers)
        {
            return Err(Error::Dimension("run records differ in length".into()));
        }
        let (mean_cost, std_cost) = (0..len)
            .map(|g| mean_std(records.iter().map(|r| r.costs[g])))
            .unzip();
        let (mean_decoded, std_decoded) = (0..layers)
            .map(|l| mean_std(records.iter().map(|r| r.decoded_slowness[l] as f64)))
            .unzip();
        Ok(Self {
            runs: records.len(),
            per_run_costs: records.iter().map(|r| r.costs.clone()).collect(),
            mean_cost,
            std_cost,
            mean_decoded,
            std_decoded,
            reference: reference.map(<[u64]>::to_vec),
            mean_final_best_cost: mean_std(records.iter().map(|r| r.final_best_cost)).0,
            exact_runs: records.iter().filter(|r| r.readout_cost == 0.0).count(),
        })
    }

    pub fn generations(&self) -> usize {
        self.mean_cost.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub problem: LayeredProblem,
    pub records: Vec<RunRecord>,
    pub aggregate: Aggregate,
}

fn prob_entries(probs: &[f64], k: usize, nqubits: usize) -> Vec<ProbEntry> {
    top_k(probs, k)
        .into_iter()
        .map(|(basis, probability)| ProbEntry {
            basis,
            bits: bits_qubit_order(basis, nqubits),
            probability,
        })
        .collect()
}

fn single_run(
    problem: &LayeredProblem,
    config: &ExperimentConfig,
    snapshots: &[usize],
    run: usize,
) -> Result<RunRecord> {
    let start = Instant::now();
    let ham = problem.hamiltonian()?;
    let n = ham.nqubits();
    let k = config.top_k;
    let seed = derive_seed(config.master_seed, run as u64);
    let mut taken = Vec::new();
    let mut snapshot_err = None;
    let mut take = |generation: usize, circuit: Result<Circuit>, cost: f64| {
        if snapshots.binary_search(&generation).is_err() {
            return;
        }
        match circuit.and_then(|c| c.run()) {
            Ok(state) => taken.push(Snapshot {
                generation,
                cost,
                top: prob_entries(&state.probabilities(), k, n),
            }),
            Err(e) => snapshot_err = Some(e),
        }
    };

    let record = match config.solver.with_seed(seed) {
        SolverConfig::Evolution(evo) => {
            let result = run_evolution_with(&ham, &evo, |g, parent| {
                take(g, Ok(parent.circuit.clone()), parent.cost)
            })?;
            RunRecord {
                run,
                seed,
                solver: "evolution".into(),
                costs: result.trace.iter().map(|t| t.best_cost).collect(),
                final_best_cost: result.best.cost,
                readout_basis: result.readout,
                readout_bits: bits_qubit_order(result.readout, n),
                readout_cost: result.readout_cost,
                decoded_slowness: result.decoded_slowness,
                final_depth: result.best.circuit.depth(),
                final_top: prob_entries(&result.distribution, k, n),
                snapshots: Vec::new(),
                final_circuit: result.best.circuit,
                duration: Duration::ZERO,
            }
        }
        SolverConfig::Vqa(vqa) => {
            let ansatz = Ansatz::new(n, vqa.layers)?;
            let result = run_vqa_with(&ham, &vqa, |i, theta| {
                if snapshots.binary_search(&i).is_err() {
                    return;
                }
                let circuit = ansatz.circuit(theta);
                let cost = circuit
                    .as_ref()
                    .ok()
                    .and_then(|c| c.run().ok())
                    .and_then(|s| s.expectation_exact(&ham.observable).ok())
                    .unwrap_or(f64::NAN);
                take(i, circuit, cost)
            })?;
            let final_circuit = ansatz.circuit(&result.best_theta)?;
            RunRecord {
                run,
                seed,
                solver: "vqa".into(),
                costs: result.trace,
                final_best_cost: result.best_cost,
                readout_basis: result.readout,
                readout_bits: bits_qubit_order(result.readout, n),
                readout_cost: result.readout_cost,
                decoded_slowness: result.decoded_slowness,
                final_depth: final_circuit.depth(),
                final_top: prob_entries(&result.distribution, k, n),
                snapshots: Vec::new(),
                final_circuit,
                duration: Duration::ZERO,
            }
        }
    };
    if let Some(e) = snapshot_err {
        return Err(e);
    }
    Ok(RunRecord {
        snapshots: taken,
        duration: start.elapsed(),
        ..record
    })
}

/// Runs every seed, aggregates, and writes the output files when
/// `config.out_dir` is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Experiment> {
    config.validate()?;
    let problem = config.instance.load()?;
    let snapshots = config.snapshots();
    if let Some(dir) = &config.out_dir {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
    }

    let work = || {
        use rayon::prelude::*;
        (0..config.runs)
            .into_par_iter()
            .map(|run| {
                let record = single_run(&problem, config, &snapshots, run)?;
                if let Some(dir) = &config.out_dir {
                    write_record(&record, &dir.join(record_file_name(run)))?;
                }
                Ok(record)
            })
            .collect::<Result<Vec<_>>>()
    };
    let records = if config.jobs == 0 {
        work()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work)?
    };

    let aggregate = Aggregate::from_records(&records, problem.slowness_true())?;
    if let Some(dir) = &config.out_dir {
        emit_convergence_csv(&aggregate, &snapshots, &dir.join(CONVERGENCE_FILE))?;
        if aggregate.reference.is_some() {
            emit_histogram_csv(&aggregate, &dir.join(HISTOGRAM_FILE))?;
        }
    }
    Ok(Experiment {
        problem,
        records,
        aggregate,
    })
}

pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";

pub fn record_file_name(run: usize) -> String {
    format!("run_{run:03}.json")
}

fn write_file(path: &Path, contents: String) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn write_record(record: &RunRecord, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(record).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })?;
    write_file(path, text + "\n")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    Ok(csv::Writer::from_writer(file))
}

fn check_sampled(aggregate: &Aggregate, sampled: &[usize]) -> Result<()> {
    let max = aggregate.generations();
    match sampled.iter().find(|&&g| g > max) {
        Some(g) => Err(Error::Config(format!(
            "generation {g} not in the {max}-generation trace"
        ))),
        None => Ok(()),
    }
}

/// `generation,mean_cost,std_cost,run_0,…,run_{k-1}`, one row per sampled generation.
pub fn emit_convergence_csv(aggregate: &Aggregate, sampled: &[usize], path: &Path) -> Result<()> {
    check_sampled(aggregate, sampled)?;
    let mut w = csv_writer(path)?;
    let mut header = vec![
        "generation".to_string(),
        "mean_cost".into(),
        "std_cost".into(),
    ];
    header.extend((0..aggregate.runs).map(|r| format!("run_{r}")));
    w.write_record(&header)?;
    for &g in sampled {
        let mut row = vec![
            g.to_string(),
            aggregate.mean_cost[g].to_string(),
            aggregate.std_cost[g].to_string(),
        ];
        row.extend(aggregate.per_run_costs.iter().map(|c| c[g].to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// `layer,reference,mean_decoded,std_decoded`, one row per layer.
pub fn emit_histogram_csv(aggregate: &Aggregate, path: &Path) -> Result<()> {
    let reference = aggregate.reference.as_ref().ok_or_else(|| {
        Error::Config("histogram needs reference slownesses; the instance has none".into())
    })?;
    let mut w = csv_writer(path)?;
    w.write_record(["layer", "reference", "mean_decoded", "std_decoded"])?;
    for (layer, r) in reference.iter().enumerate() {
        w.write_record([
            layer.to_string(),
            r.to_string(),
            aggregate.mean_decoded[layer].to_string(),
            aggregate.std_decoded[layer].to_string(),
        ])?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// `generation,evolution_mean_cost,evolution_std_cost,vqa_mean_cost,vqa_std_cost`.
pub fn emit_comparison_csv(
    evolution: &Aggregate,
    vqa: &Aggregate,
    sampled: &[usize],
    path: &Path,
) -> Result<()> {
    check_sampled(evolution, sampled)?;
    check_sampled(vqa, sampled)?;
    let mut w = csv_writer(path)?;
    w.write_record([
        "generation",
        "evolution_mean_cost",
        "evolution_std_cost",
        "vqa_mean_cost",
        "vqa_std_cost",
    ])?;
    for &g in sampled {
        w.write_record([
            g.to_string(),
            evolution.mean_cost[g].to_string(),
            evolution.std_cost[g].to_string(),
            vqa.mean_cost[g].to_string(),
            vqa.std_cost[g].to_string(),
        ])?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}
