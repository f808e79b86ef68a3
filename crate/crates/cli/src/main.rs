//! Command-line pipeline runner: cut search, exact/sampled reconstruction,
//! states-merging search, benchmark generation, and cost-model runs.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use qcut_core::graph::graph_from_spec_json;
use qcut_core::pipeline::{
    cost_pipeline, generate_benchmark, run_pipeline, GeneratorSpec, PipelineError, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "qcut",
    version,
    about = "Quantum circuit cutting with tensor-network reconstruction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CutFlags {
    /// Max fraction of two-qubit gates per subcircuit.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Solver tries 2..=N subcircuits and keeps the cheapest.
    #[arg(long, default_value_t = 4)]
    max_subcircuits: usize,
    /// Branch-and-bound time limit per subcircuit count, in seconds.
    #[arg(long, default_value_t = 30.0)]
    solver_timeout_s: f64,
    /// Upper bound on cuts touching any one subcircuit.
    #[arg(long, default_value_t = 15)]
    degree_cap: usize,
}

#[derive(Args, Clone)]
struct OutputFlag {
    /// Write the report here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark circuit in the text format.
    Bench {
        /// bv | qaoa-regular | qaoa-erdos | supremacy-grid | aqft
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Hidden bitstring for bv (random when omitted).
        #[arg(long)]
        secret: Option<String>,
        #[arg(long, default_value_t = 2)]
        rows: usize,
        #[arg(long, default_value_t = 2)]
        cols: usize,
        #[arg(long, default_value_t = 8)]
        layers: usize,
        #[arg(long, default_value_t = 1)]
        rounds: usize,
        /// Phase-distance cutoff for aqft (full transform when omitted).
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        edge_probability: f64,
        #[command(flatten)]
        output: OutputFlag,
    },
    /// Find cut locations for a circuit and emit the solution as JSON.
    Cut {
        circuit: PathBuf,
        #[command(flatten)]
        cut: CutFlags,
        #[command(flatten)]
        output: OutputFlag,
    },
    /// Cut, reconstruct the full output distribution, and report.
    Run {
        circuit: Option<PathBuf>,
        /// JSON run configuration replacing all flags.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        cut: CutFlags,
        /// none | uniform | essential | optimal
        #[arg(long, default_value = "none")]
        sampler: String,
        #[arg(long, default_value_t = 1024)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1 << 28)]
        memory_limit_values: u64,
        #[command(flatten)]
        output: OutputFlag,
    },
    /// Locate solution states by the states-merging search.
    Merge {
        circuit: PathBuf,
        #[command(flatten)]
        cut: CutFlags,
        /// Max probability bins per recursion (M).
        #[arg(long, default_value_t = 256)]
        max_bins: usize,
        /// Candidate bins kept between recursions (R).
        #[arg(long, default_value_t = 1)]
        top_r: usize,
        #[arg(long, default_value_t = 64)]
        max_recursions: usize,
        #[arg(long, default_value_t = 1e-3)]
        solution_threshold: f64,
        #[command(flatten)]
        output: OutputFlag,
    },
    /// Importance-sampled reconstruction with error statistics.
    Sample {
        circuit: PathBuf,
        #[command(flatten)]
        cut: CutFlags,
        #[arg(long, default_value = "optimal")]
        sampler: String,
        #[arg(long, default_value_t = 1024)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[command(flatten)]
        output: OutputFlag,
    },
    /// Predict contraction cost for a standalone graph spec (JSON).
    Cost {
        graph: PathBuf,
        #[arg(long, default_value_t = 1 << 28)]
        memory_limit_values: u64,
        #[command(flatten)]
        output: OutputFlag,
    },
}

fn emit(output: &OutputFlag, text: String) -> Result<()> {
    match &output.output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn circuit_config(path: &PathBuf, cut: &CutFlags) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(RunConfig {
        circuit_text: Some(text),
        alpha: cut.alpha,
        max_subcircuits: cut.max_subcircuits,
        solver_timeout_s: cut.solver_timeout_s,
        degree_cap: cut.degree_cap,
        ..RunConfig::default()
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Bench {
            kind,
            n,
            seed,
            secret,
            rows,
            cols,
            layers,
            rounds,
            degree,
            edge_probability,
            output,
        } => {
            let spec = GeneratorSpec {
                kind,
                n,
                seed,
                secret,
                rows,
                cols,
                layers,
                rounds,
                degree,
                edge_probability,
            };
            let circuit = generate_benchmark(&spec)?;
            emit(&output, circuit.to_text())
        }
        Command::Cut {
            circuit,
            cut,
            output,
        } => {
            let text = fs::read_to_string(&circuit)
                .with_context(|| format!("reading {}", circuit.display()))?;
            let parsed = qcut_core::parse_circuit(&text)?;
            let dag = qcut_core::build_dag(&parsed);
            let found = qcut_core::find_cuts(
                &dag,
                cut.alpha,
                cut.max_subcircuits,
                std::time::Duration::from_secs_f64(cut.solver_timeout_s),
                cut.degree_cap,
            )?;
            let mut value = serde_json::to_value(&found.solution)?;
            value["predicted_multiplications"] =
                serde_json::Value::from(found.cost.multiplications);
            value["quantum_area"] =
                serde_json::to_value(qcut_core::quantum_area(&found.partitioned, &parsed))?;
            emit(&output, serde_json::to_string_pretty(&value)?)
        }
        Command::Run {
            circuit,
            config,
            cut,
            sampler,
            samples,
            trials,
            seed,
            memory_limit_values,
            output,
        } => {
            let run_config = match (circuit, config) {
                (None, Some(path)) => {
                    let text = fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str(&text)
                        .with_context(|| format!("parsing config {}", path.display()))?
                }
                (Some(circuit), None) => {
                    let mut c = circuit_config(&circuit, &cut)?;
                    c.mode = "full".into();
                    c.sampler = sampler;
                    c.samples = samples;
                    c.trials = trials;
                    c.seed = seed;
                    c.memory_limit_values = memory_limit_values;
                    c
                }
                (Some(_), Some(_)) => bail!("give either a circuit path or --config, not both"),
                (None, None) => bail!("a circuit path or --config is required"),
            };
            let report = run_pipeline(&run_config)?;
            emit(&output, serde_json::to_string_pretty(&report)?)
        }
        Command::Merge {
            circuit,
            cut,
            max_bins,
            top_r,
            max_recursions,
            solution_threshold,
            output,
        } => {
            let mut config = circuit_config(&circuit, &cut)?;
            config.mode = "merge".into();
            config.max_bins = max_bins;
            config.top_r = top_r;
            config.max_recursions = max_recursions;
            config.solution_threshold = solution_threshold;
            let report = run_pipeline(&config)?;
            emit(&output, serde_json::to_string_pretty(&report)?)
        }
        Command::Sample {
            circuit,
            cut,
            sampler,
            samples,
            seed,
            trials,
            output,
        } => {
            let mut config = circuit_config(&circuit, &cut)?;
            config.mode = "full".into();
            config.sampler = sampler;
            config.samples = samples;
            config.seed = seed;
            config.trials = trials;
            let report = run_pipeline(&config)?;
            emit(&output, serde_json::to_string_pretty(&report)?)
        }
        Command::Cost {
            graph,
            memory_limit_values,
            output,
        } => {
            let text = fs::read_to_string(&graph)
                .with_context(|| format!("reading {}", graph.display()))?;
            let graph = graph_from_spec_json(&text)?;
            let report = cost_pipeline(&graph, memory_limit_values)?;
            emit(&output, serde_json::to_string_pretty(&report)?)
        }
    }
}

fn exit_code_of(err: &anyhow::Error) -> i32 {
    if let Some(p) = err.downcast_ref::<PipelineError>() {
        return p.exit_code();
    }
    if let Some(c) = err.downcast_ref::<qcut_core::CutError>() {
        return match c {
            qcut_core::CutError::Infeasible { .. }
            | qcut_core::CutError::NoFeasibleCut { .. }
            | qcut_core::CutError::TimeoutWithoutIncumbent
            | qcut_core::CutError::Uncuttable => 2,
            qcut_core::CutError::BadParams(_) => 1,
        };
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_of(&err) as u8)
        }
    }
}
