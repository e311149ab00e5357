use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qseis::baseline::VqaConfig;
use qseis::evolve::{EvalMode, EvolutionConfig, InitialCircuit, MutationConfig};
use qseis::problem::synth_instance;
use qseis::runner::{
    emit_comparison_csv, run_experiment, write_problem, Experiment, ExperimentConfig, InstanceSpec,
    SolverConfig, COMPARISON_FILE,
};

/// Traveltime inversion by evolutionary quantum circuit learning.
#[derive(Parser)]
#[command(name = "qseis", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic layered problem as JSON.
    Synth {
        #[arg(long)]
        layers: usize,
        #[arg(long, default_value_t = 3)]
        bits: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the evolutionary solver.
    Evolve {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        evo: EvolveArgs,
    },
    /// Run the fixed-ansatz gradient-descent baseline.
    Vqa {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        vqa: VqaArgs,
    },
    /// Run both solvers on one instance and join their convergence curves.
    Compare {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        evo: EvolveArgs,
        #[command(flatten)]
        vqa: VqaArgs,
    },
}

#[derive(Args)]
#[group(skip)]
struct InstanceArgs {
    /// Layer count of a synthetic instance.
    #[arg(long, conflicts_with = "problem", requires = "bits")]
    layers: Option<usize>,
    /// Bits per slowness value of a synthetic instance.
    #[arg(long, conflicts_with = "problem")]
    bits: Option<u32>,
    /// Seed of the synthetic instance; defaults to --seed.
    #[arg(long, conflicts_with = "problem")]
    instance_seed: Option<u64>,
    /// Problem JSON written by `synth`.
    #[arg(long)]
    problem: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Generations (evolution) or gradient iterations (VQA).
    #[arg(long, default_value_t = 300)]
    generations: usize,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    /// Master seed; per-run seeds are derived from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parallel runs; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Initial {
    RandomRy,
    Empty,
}

#[derive(Args)]
struct EvolveArgs {
    #[arg(long, default_value_t = 1)]
    mu: usize,
    #[arg(long, default_value_t = 4)]
    lambda: usize,
    /// Measurement shots per evaluation; 0 evaluates the exact expectation.
    #[arg(long, default_value_t = 0)]
    shots: usize,
    #[arg(long, default_value_t = 1)]
    mutations_per_offspring: usize,
    #[arg(long, value_enum, default_value_t = Initial::RandomRy)]
    initial: Initial,
}

#[derive(Args)]
struct VqaArgs {
    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,
    #[arg(long, default_value_t = 2)]
    ansatz_layers: usize,
}

impl InstanceArgs {
    fn spec(&self, master_seed: u64) -> Result<InstanceSpec, String> {
        match (&self.problem, self.layers, self.bits) {
            (Some(path), None, None) => Ok(InstanceSpec::File(path.clone())),
            (None, Some(layers), Some(bits)) => Ok(InstanceSpec::Synth {
                layers,
                bits,
                seed: self.instance_seed.unwrap_or(master_seed),
            }),
            _ => Err("give either --problem or both --layers and --bits".into()),
        }
    }
}

impl EvolveArgs {
    fn config(&self, generations: usize) -> EvolutionConfig {
        EvolutionConfig {
            mu: self.mu,
            lambda: self.lambda,
            generations,
            mutation: MutationConfig {
                mutations_per_offspring: self.mutations_per_offspring,
                ..MutationConfig::default()
            },
            mode: EvalMode::from_shots(self.shots),
            initial: match self.initial {
                Initial::RandomRy => InitialCircuit::RandomRy,
                Initial::Empty => InitialCircuit::Empty,
            },
            seed: 0,
        }
    }
}

impl VqaArgs {
    fn config(&self, iterations: usize) -> VqaConfig {
        VqaConfig {
            layers: self.ansatz_layers,
            learning_rate: self.learning_rate,
            iterations,
            seed: 0,
        }
    }
}

fn experiment(
    instance: &InstanceArgs,
    run: &RunArgs,
    solver: SolverConfig,
    out: Option<PathBuf>,
) -> Result<ExperimentConfig, Box<dyn std::error::Error>> {
    let mut config = ExperimentConfig::new(instance.spec(run.seed)?, solver);
    config.runs = run.runs;
    config.master_seed = run.seed;
    config.out_dir = out;
    config.jobs = run.jobs;
    Ok(config)
}

fn report(label: &str, exp: &Experiment) {
    let agg = &exp.aggregate;
    let g = agg.generations();
    println!(
        "{label}: {} layers, {} qubits, {} runs, {g} generations",
        exp.problem.nlayers(),
        exp.problem.nqubits(),
        agg.runs
    );
    println!(
        "  mean cost: start {} final {} (std {})",
        agg.mean_cost[0], agg.mean_cost[g], agg.std_cost[g]
    );
    println!(
        "  runs reading out a zero-cost answer: {}/{}",
        agg.exact_runs, agg.runs
    );
    if let Some(reference) = &agg.reference {
        println!("  reference slowness: {reference:?}");
    }
    println!("  mean decoded slowness: {:?}", agg.mean_decoded);
    let secs: f64 = exp.records.iter().map(|r| r.duration.as_secs_f64()).sum();
    println!("  total run time: {secs:.2} s");
}

fn subdir(out: &Option<PathBuf>, name: &str) -> Option<PathBuf> {
    out.as_ref().map(|d| d.join(name))
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Synth {
            layers,
            bits,
            seed,
            out,
        } => {
            let problem = synth_instance(layers, bits, seed)?;
            match out {
                Some(path) => write_problem(&problem, &path)?,
                None => {
                    let mut stdout = std::io::stdout().lock();
                    serde_json::to_writer_pretty(&mut stdout, &problem)?;
                    writeln!(stdout)?;
                }
            }
        }
        Command::Evolve { instance, run, evo } => {
            let solver = SolverConfig::Evolution(evo.config(run.generations));
            let config = experiment(&instance, &run, solver, run.out.clone())?;
            report("evolution", &run_experiment(&config)?);
        }
        Command::Vqa { instance, run, vqa } => {
            let solver = SolverConfig::Vqa(vqa.config(run.generations));
            let config = experiment(&instance, &run, solver, run.out.clone())?;
            report("vqa", &run_experiment(&config)?);
        }
        Command::Compare {
            instance,
            run,
            evo,
            vqa,
        } => {
            let evo_config = experiment(
                &instance,
                &run,
                SolverConfig::Evolution(evo.config(run.generations)),
                subdir(&run.out, "evolution"),
            )?;
            let vqa_config = experiment(
                &instance,
                &run,
                SolverConfig::Vqa(vqa.config(run.generations)),
                subdir(&run.out, "vqa"),
            )?;
            let evo_exp = run_experiment(&evo_config)?;
            let vqa_exp = run_experiment(&vqa_config)?;
            report("evolution", &evo_exp);
            report("vqa", &vqa_exp);
            if let Some(dir) = &run.out {
                emit_comparison_csv(
                    &evo_exp.aggregate,
                    &vqa_exp.aggregate,
                    &evo_config.snapshots(),
                    &Path::new(dir).join(COMPARISON_FILE),
                )?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
