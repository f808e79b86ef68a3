//! End-to-end pipeline: cut search, variant evaluation, contraction or
//! merge search or sampling, and a machine-readable run report.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::{self, BenchError};
use crate::circuit::{parse_circuit, Circuit, ParseError};
use crate::contraction::{
    contract, plan_contraction, predict_cost, ContractError, ContractionPlan, CostReport,
};
use crate::cut::{find_cuts, quantum_area, CutError, FoundCut, QuantumArea};
use crate::dag::build_dag;
use crate::fragments::CutEdgeRef;
use crate::graph::{ComputeGraph, GraphError};
use crate::merge::{
    arbitrary_subset_mode, run_merge, MergeError, MergeParams, RecursionTrace, Solution,
};
use crate::sampling::{
    compute_weights, default_narrow_subcircuit, empirical_mse, essential_error,
    essential_probabilities, estimate, expected_error, optimal_probabilities, sample_terms,
    uniform_probabilities, SampleCounts, SampleError, SamplingPlan,
};
use crate::sim::{simulate_full, SimError, SIM_WIDTH_CAP};
use crate::subsim::{restore_full_state, EntryEvaluator, EvalError};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Cut(#[from] CutError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Contract(#[from] ContractError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Merge(#[from] MergeError),
    #[error(transparent)]
    Sample(#[from] SampleError),
}

impl PipelineError {
    /// Process exit code: 2 for infeasibility, 1 for other failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Cut(
                CutError::Infeasible { .. }
                | CutError::NoFeasibleCut { .. }
                | CutError::TimeoutWithoutIncumbent
                | CutError::Uncuttable,
            ) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct GeneratorSpec {
    pub kind: String,
    pub n: usize,
    pub seed: u64,
    pub secret: Option<String>,
    pub rows: usize,
    pub cols: usize,
    pub layers: usize,
    pub rounds: usize,
    pub degree: Option<usize>,
    pub edge_probability: f64,
}

impl Default for GeneratorSpec {
    fn default() -> GeneratorSpec {
        GeneratorSpec {
            kind: "bv".into(),
            n: 8,
            seed: 0,
            secret: None,
            rows: 2,
            cols: 2,
            layers: 8,
            rounds: 1,
            degree: None,
            edge_probability: 0.5,
        }
    }
}

/// Deterministic benchmark circuit per the generator spec.
pub fn generate_benchmark(spec: &GeneratorSpec) -> Result<Circuit, PipelineError> {
    let circuit = match spec.kind.as_str() {
        "bv" => {
            let secret = match &spec.secret {
                Some(s) => s.clone(),
                None => bench::random_secret(spec.n, spec.seed),
            };
            bench::bv(&secret)?
        }
        "qaoa-regular" => bench::qaoa_regular(spec.n, spec.seed, spec.rounds)?,
        "qaoa-erdos" => bench::qaoa_erdos(spec.n, spec.seed, spec.edge_probability, spec.rounds)?,
        "supremacy-grid" => bench::supremacy_grid(spec.rows, spec.cols, spec.layers, spec.seed)?,
        "aqft" => bench::aqft(spec.n, spec.degree.unwrap_or(spec.n))?,
        other => {
            return Err(PipelineError::Config(format!(
                "unknown generator kind `{other}`"
            )))
        }
    };
    Ok(circuit)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct RunConfig {
    /// Inline circuit text; exclusive with `generator`.
    pub circuit_text: Option<String>,
    pub generator: Option<GeneratorSpec>,
    pub alpha: f64,
    pub max_subcircuits: usize,
    pub solver_timeout_s: f64,
    pub degree_cap: usize,
    pub memory_limit_values: u64,
    /// "full", "merge", or "subset".
    pub mode: String,
    pub max_bins: usize,
    pub top_r: usize,
    pub max_recursions: usize,
    pub solution_threshold: f64,
    /// Bitstrings (original qubit order) for subset mode.
    pub subset_states: Vec<String>,
    /// "none", "uniform", "essential", or "optimal".
    pub sampler: String,
    pub samples: u64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            circuit_text: None,
            generator: None,
            alpha: 0.5,
            max_subcircuits: 4,
            solver_timeout_s: 30.0,
            degree_cap: 15,
            memory_limit_values: 1 << 28,
            mode: "full".into(),
            max_bins: 1 << 8,
            top_r: 1,
            max_recursions: 64,
            solution_threshold: 1e-3,
            subset_states: Vec::new(),
            sampler: "none".into(),
            samples: 1 << 10,
            trials: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircuitSummary {
    pub n_qubits: usize,
    pub gates: usize,
    pub two_qubit_gates: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutReport {
    pub n_subcircuits: usize,
    pub objective_l: usize,
    pub total_cuts: usize,
    pub cut_edges: Vec<CutEdgeRef>,
    pub subcircuit_map: Vec<usize>,
    pub subcircuit_widths: Vec<usize>,
    pub subcircuit_outputs: Vec<usize>,
    /// Original qubits carried by each subcircuit's output block, in local
    /// order; documents how reconstructed indices map back.
    pub subcircuit_output_qubits: Vec<Vec<usize>>,
    pub solver_optimal: bool,
    pub quantum_area: QuantumArea,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContractionReport {
    pub order: Vec<usize>,
    pub optimal_order: bool,
    pub level1_slices: Vec<usize>,
    pub level2_slices: Vec<usize>,
    pub predicted: CostReport,
    pub actual_multiplications: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode")]
pub enum ResultReport {
    #[serde(rename = "full")]
    Full {
        sum: f64,
        l_inf_vs_oracle: Option<f64>,
        /// Largest-probability states of the reconstruction.
        top_states: Vec<(String, f64)>,
    },
    #[serde(rename = "merge")]
    Merge {
        solutions: Vec<Solution>,
        recursions_run: usize,
        search_exhausted: bool,
        traces: Vec<RecursionTrace>,
    },
    #[serde(rename = "subset")]
    Subset { probabilities: Vec<(String, f64)> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplingReport {
    pub sampler: String,
    pub samples: u64,
    pub trials: usize,
    pub seed: u64,
    /// Distinct sampled terms per trial.
    pub distinct_terms: Vec<usize>,
    /// First trial's sampled counters: (term index, lambda_k) for every term
    /// drawn at least once.
    pub lambda_histogram: Vec<(usize, u64)>,
    /// Largest sampling probabilities, as (term index, q_k), descending.
    pub top_probabilities: Vec<(usize, f64)>,
    pub analytic_expected_error: f64,
    pub uniform_expected_error: f64,
    pub optimal_expected_error: f64,
    pub essential_expected_error: Option<f64>,
    /// Mean squared error across trials against the exact reconstruction
    /// (available when the register fits the simulator).
    pub empirical_mse: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timing {
    pub cut_ms: u128,
    pub entries_ms: u128,
    pub reconstruct_ms: u128,
    pub total_ms: u128,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub circuit: CircuitSummary,
    pub cut: CutReport,
    pub contraction: ContractionReport,
    pub result: ResultReport,
    pub sampling: Option<SamplingReport>,
    pub timing: Timing,
}

fn bitstring(state: usize, n: usize) -> String {
    (0..n)
        .map(|q| {
            if state >> (n - 1 - q) & 1 == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

fn top_states(probs: &[f64], n: usize, count: usize) -> Vec<(String, f64)> {
    let mut indexed: Vec<(usize, f64)> = probs.iter().copied().enumerate().collect();
    indexed.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    indexed
        .into_iter()
        .take(count)
        .map(|(i, p)| (bitstring(i, n), p))
        .collect()
}

fn resolve_circuit(config: &RunConfig) -> Result<Circuit, PipelineError> {
    match (&config.circuit_text, &config.generator) {
        (Some(text), None) => Ok(parse_circuit(text)?),
        (None, Some(spec)) => generate_benchmark(spec),
        (Some(_), Some(_)) => Err(PipelineError::Config(
            "give either circuit_text or generator, not both".into(),
        )),
        (None, None) => Err(PipelineError::Config("no circuit source configured".into())),
    }
}

fn build_cut_report(circuit: &Circuit, found: &FoundCut) -> CutReport {
    CutReport {
        n_subcircuits: found.solution.n_subcircuits,
        objective_l: found.solution.objective,
        total_cuts: found.solution.cut_count,
        cut_edges: found.solution.cut_edges.clone(),
        subcircuit_map: found.solution.subcircuit_map.clone(),
        subcircuit_widths: found.solution.subcircuit_widths.clone(),
        subcircuit_outputs: found.solution.subcircuit_outputs.clone(),
        subcircuit_output_qubits: found
            .partitioned
            .fragments
            .iter()
            .map(|f| f.outputs.iter().map(|&(_, q)| q).collect())
            .collect(),
        solver_optimal: found.solution.optimal,
        quantum_area: quantum_area(&found.partitioned, circuit),
    }
}

fn sampler_probabilities(
    sampler: &str,
    graph: &ComputeGraph,
    weights: &crate::sampling::TermWeights,
) -> Result<Option<Vec<f64>>, PipelineError> {
    Ok(match sampler {
        "none" => None,
        "uniform" => Some(uniform_probabilities(weights.term_count())),
        "optimal" => Some(optimal_probabilities(weights)?),
        "essential" => Some(essential_probabilities(
            weights,
            default_narrow_subcircuit(graph),
        )?),
        other => return Err(PipelineError::Config(format!("unknown sampler `{other}`"))),
    })
}

/// Run the configured pipeline: cut, evaluate, reconstruct/search/sample,
/// and assemble the report.
pub fn run_pipeline(config: &RunConfig) -> Result<RunReport, PipelineError> {
    let t_start = Instant::now();
    let circuit = resolve_circuit(config)?;
    let summary = CircuitSummary {
        n_qubits: circuit.n_qubits,
        gates: circuit.gates.len(),
        two_qubit_gates: circuit.two_qubit_gate_count(),
        depth: circuit.depth(),
    };

    let t_cut = Instant::now();
    let dag = build_dag(&circuit);
    let found = find_cuts(
        &dag,
        config.alpha,
        config.max_subcircuits,
        Duration::from_secs_f64(config.solver_timeout_s),
        config.degree_cap,
    )?;
    let cut_ms = t_cut.elapsed().as_millis();
    let cut_report = build_cut_report(&circuit, &found);

    let graph = &found.graph;
    let plan = plan_contraction(graph, config.memory_limit_values)?;
    let predicted = predict_cost(graph, &plan);

    let t_entries = Instant::now();
    let mut timing = Timing {
        cut_ms,
        ..Timing::default()
    };

    let (result, sampling, actual) = match config.mode.as_str() {
        "full" => {
            if circuit.n_qubits > SIM_WIDTH_CAP {
                return Err(PipelineError::Config(format!(
                    "full mode needs n <= {SIM_WIDTH_CAP}, circuit has {}",
                    circuit.n_qubits
                )));
            }
            let evaluator = EntryEvaluator::new(&found.partitioned)?;
            timing.entries_ms = t_entries.elapsed().as_millis();
            let t_rec = Instant::now();
            let oracle = simulate_full(&circuit)?;

            let weights = compute_weights(graph, evaluator.full_tensors());
            let q = sampler_probabilities(&config.sampler, graph, &weights)?;
            match q {
                None => {
                    let out = contract(graph, evaluator.full_tensors(), &plan)?;
                    let probs = restore_full_state(&out.tensor, &found.partitioned);
                    timing.reconstruct_ms = t_rec.elapsed().as_millis();
                    let l_inf = probs
                        .iter()
                        .zip(&oracle)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    let result = ResultReport::Full {
                        sum: probs.iter().sum(),
                        l_inf_vs_oracle: Some(l_inf),
                        top_states: top_states(&probs, circuit.n_qubits, 8),
                    };
                    (result, None, Some(out.multiplications))
                }
                Some(q) => {
                    let p_sq: f64 = oracle.iter().map(|p| p * p).sum();
                    let trials = config.trials.max(1);
                    let mut distinct = Vec::with_capacity(trials);
                    let mut runs = Vec::with_capacity(trials);
                    let mut lambda_histogram = Vec::new();
                    for t in 0..trials {
                        let plan_s = SamplingPlan {
                            c: config.samples,
                            q: q.clone(),
                            seed: config.seed.wrapping_add(t as u64),
                        };
                        let counts: SampleCounts = sample_terms(&plan_s);
                        if t == 0 {
                            lambda_histogram = counts
                                .lambda
                                .iter()
                                .enumerate()
                                .filter(|&(_, &l)| l > 0)
                                .map(|(k, &l)| (k, l))
                                .collect();
                        }
                        let out = estimate(
                            &found.partitioned,
                            evaluator.full_tensors(),
                            &plan_s,
                            &counts,
                        )?;
                        distinct.push(out.distinct_terms);
                        runs.push(out.probabilities);
                    }
                    timing.reconstruct_ms = t_rec.elapsed().as_millis();

                    let mut top_q: Vec<(usize, f64)> = q.iter().copied().enumerate().collect();
                    top_q.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
                    top_q.truncate(8);
                    let narrow = default_narrow_subcircuit(graph);
                    let report = SamplingReport {
                        sampler: config.sampler.clone(),
                        samples: config.samples,
                        trials,
                        seed: config.seed,
                        distinct_terms: distinct,
                        lambda_histogram,
                        top_probabilities: top_q,
                        analytic_expected_error: expected_error(
                            &q,
                            &weights,
                            config.samples,
                            Some(p_sq),
                        )?,
                        uniform_expected_error: expected_error(
                            &uniform_probabilities(weights.term_count()),
                            &weights,
                            config.samples,
                            Some(p_sq),
                        )?,
                        optimal_expected_error: expected_error(
                            &optimal_probabilities(&weights)?,
                            &weights,
                            config.samples,
                            Some(p_sq),
                        )?,
                        essential_expected_error: essential_probabilities(&weights, narrow)
                            .ok()
                            .map(|_| essential_error(&weights, narrow, config.samples, Some(p_sq)))
                            .transpose()?,
                        empirical_mse: Some(empirical_mse(&runs, &oracle)),
                    };
                    let first = &runs[0];
                    let result = ResultReport::Full {
                        sum: first.iter().sum(),
                        l_inf_vs_oracle: Some(
                            first
                                .iter()
                                .zip(&oracle)
                                .map(|(a, b)| (a - b).abs())
                                .fold(0.0, f64::max),
                        ),
                        top_states: top_states(first, circuit.n_qubits, 8),
                    };
                    (result, Some(report), None)
                }
            }
        }
        "merge" => {
            let params = MergeParams {
                max_bins: config.max_bins,
                top_r: config.top_r,
                max_recursions: config.max_recursions,
                solution_threshold: config.solution_threshold,
            };
            let outcome = run_merge(&found.partitioned, &params)?;
            timing.entries_ms = t_entries.elapsed().as_millis();
            let result = ResultReport::Merge {
                solutions: outcome.solutions,
                recursions_run: outcome.recursions_run,
                search_exhausted: outcome.search_exhausted,
                traces: outcome.traces,
            };
            (result, None, None)
        }
        "subset" => {
            let mut states = Vec::with_capacity(config.subset_states.len());
            for s in &config.subset_states {
                if s.len() != circuit.n_qubits || !s.bytes().all(|b| b == b'0' || b == b'1') {
                    return Err(PipelineError::Config(format!(
                        "subset state `{s}` is not a {}-bit string",
                        circuit.n_qubits
                    )));
                }
                states.push(u64::from_str_radix(s, 2).expect("validated bitstring"));
            }
            let probs = arbitrary_subset_mode(&found.partitioned, &states, config.max_bins)?;
            timing.entries_ms = t_entries.elapsed().as_millis();
            let result = ResultReport::Subset {
                probabilities: probs
                    .into_iter()
                    .map(|(s, p)| (bitstring(s as usize, circuit.n_qubits), p))
                    .collect(),
            };
            (result, None, None)
        }
        other => return Err(PipelineError::Config(format!("unknown mode `{other}`"))),
    };

    timing.total_ms = t_start.elapsed().as_millis();
    Ok(RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: config.clone(),
        circuit: summary,
        cut: cut_report,
        contraction: ContractionReport {
            order: plan.order.clone(),
            optimal_order: plan.optimal_order,
            level1_slices: plan.level1_slices.clone(),
            level2_slices: plan.level2_slices.clone(),
            predicted,
            actual_multiplications: actual,
        },
        result,
        sampling,
        timing,
    })
}

/// Cost-model run over a standalone graph spec (no circuit involved).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostOnlyReport {
    pub schema_version: u32,
    pub node_dims: Vec<u64>,
    pub edges: Vec<(usize, usize)>,
    pub plan: ContractionPlan,
    pub cost: CostReport,
}

pub fn cost_pipeline(
    graph: &ComputeGraph,
    memory_limit: u64,
) -> Result<CostOnlyReport, PipelineError> {
    let plan = plan_contraction(graph, memory_limit)?;
    let cost = predict_cost(graph, &plan);
    Ok(CostOnlyReport {
        schema_version: REPORT_SCHEMA_VERSION,
        node_dims: graph.node_dims.clone(),
        edges: graph.edges.clone(),
        plan,
        cost,
    })
}
