//! Cut location search: a branch-and-bound solver for the constrained
//! DAG-partition model, plus the outer loop that scores candidate subcircuit
//! counts by predicted contraction cost.
//!
//! The model assigns every two-qubit gate (vertex) v to a subcircuit via
//! y[v]; an edge is cut iff its endpoints land in different subcircuits.
//! With I_c / O_c the incoming/outgoing cut edges of subcircuit c and S_c its
//! gate count, the solver minimizes L = max_c (I_c + O_c) subject to
//! S_c <= ceil(alpha * |V|), non-empty subcircuits, rebuilt fragment widths
//! within the simulator cap, and L within the degree cap.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::Circuit;
use crate::contraction::{find_order, predict_cost, ContractionPlan, CostReport};
use crate::dag::GateDag;
use crate::fragments::{partition_circuit, subcircuit_stats, CutEdgeRef, PartitionedCircuit};
use crate::graph::ComputeGraph;
use crate::sim::SIM_WIDTH_CAP;

pub const DEFAULT_DEGREE_CAP: usize = 15;
pub const DEFAULT_TIME_LIMIT: Duration = Duration::from_secs(30);

#[derive(Debug, Error, PartialEq)]
pub enum CutError {
    #[error("circuit has no two-qubit gates; nothing to cut")]
    Uncuttable,
    #[error("no assignment satisfies the constraints for n_C = {n_subcircuits}")]
    Infeasible { n_subcircuits: usize },
    #[error("time limit reached before any feasible assignment was found")]
    TimeoutWithoutIncumbent,
    #[error("no feasible cut for any subcircuit count in 2..={max}")]
    NoFeasibleCut { max: usize },
    #[error("invalid parameters: {0}")]
    BadParams(String),
}

#[derive(Debug, Clone, Copy)]
pub struct SolveParams {
    pub n_subcircuits: usize,
    pub alpha: f64,
    pub degree_cap: usize,
    pub time_limit: Duration,
    pub width_cap: usize,
}

impl SolveParams {
    pub fn new(n_subcircuits: usize, alpha: f64) -> SolveParams {
        SolveParams {
            n_subcircuits,
            alpha,
            degree_cap: DEFAULT_DEGREE_CAP,
            time_limit: DEFAULT_TIME_LIMIT,
            width_cap: SIM_WIDTH_CAP,
        }
    }
}

/// A vertex assignment together with the derived model quantities.
/// Houses the edge variables x (derived: cut iff endpoints differ) and the
/// per-subcircuit counters of the partition model.
#[derive(Debug, Clone)]
pub struct PartitionModel<'a> {
    pub dag: &'a GateDag,
    pub n_subcircuits: usize,
    pub assignment: Vec<usize>,
}

impl<'a> PartitionModel<'a> {
    pub fn new(dag: &'a GateDag, n_subcircuits: usize, assignment: Vec<usize>) -> Self {
        PartitionModel {
            dag,
            n_subcircuits,
            assignment,
        }
    }

    pub fn edge_cut(&self, edge: usize) -> bool {
        let e = &self.dag.edges[edge];
        self.assignment[e.source] != self.assignment[e.dest]
    }

    /// Incoming cut edges per subcircuit (cut edges whose destination is in c).
    pub fn incoming(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_subcircuits];
        for (i, e) in self.dag.edges.iter().enumerate() {
            if self.edge_cut(i) {
                counts[self.assignment[e.dest]] += 1;
            }
        }
        counts
    }

    /// Outgoing cut edges per subcircuit (cut edges whose source is in c).
    pub fn outgoing(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_subcircuits];
        for (i, e) in self.dag.edges.iter().enumerate() {
            if self.edge_cut(i) {
                counts[self.assignment[e.source]] += 1;
            }
        }
        counts
    }

    /// Gate count per subcircuit.
    pub fn sizes(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_subcircuits];
        for &c in &self.assignment {
            counts[c] += 1;
        }
        counts
    }

    /// Objective L = max_c (I_c + O_c).
    pub fn objective(&self) -> usize {
        let inc = self.incoming();
        let out = self.outgoing();
        (0..self.n_subcircuits)
            .map(|c| inc[c] + out[c])
            .max()
            .unwrap_or(0)
    }

    pub fn cut_count(&self) -> usize {
        (0..self.dag.edges.len())
            .filter(|&i| self.edge_cut(i))
            .count()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutSolution {
    pub n_subcircuits: usize,
    /// Subcircuit index per DAG vertex.
    pub subcircuit_map: Vec<usize>,
    pub cut_edges: Vec<CutEdgeRef>,
    /// L = max_c (I_c + O_c).
    pub objective: usize,
    /// K, the total number of cuts.
    pub cut_count: usize,
    /// Rebuilt fragment width (local qubits) per subcircuit.
    pub subcircuit_widths: Vec<usize>,
    /// Output (circuit-end) qubits per subcircuit.
    pub subcircuit_outputs: Vec<usize>,
    /// True when branch-and-bound completed; false for a time-limited incumbent.
    pub optimal: bool,
}

struct Search<'a> {
    dag: &'a GateDag,
    params: SolveParams,
    size_cap: usize,
    edges_to_earlier: Vec<Vec<usize>>, // per vertex: edge ids with both endpoints <= v
    assignment: Vec<usize>,
    sizes: Vec<usize>,
    io: Vec<usize>,
    best: Option<(usize, Vec<usize>)>,
    bound: usize,
    deadline: Instant,
    ticks: u32,
    timed_out: bool,
}

impl<'a> Search<'a> {
    fn feasible_leaf(&mut self) {
        let l = self.io.iter().copied().max().unwrap_or(0);
        if l >= self.bound {
            return;
        }
        let stats = subcircuit_stats(self.dag, &self.assignment, self.params.n_subcircuits);
        if stats.iter().any(|&(w, _)| w > self.params.width_cap) {
            return;
        }
        self.bound = l;
        self.best = Some((l, self.assignment.clone()));
    }

    fn dfs(&mut self, v: usize, used: usize) {
        self.ticks = self.ticks.wrapping_add(1);
        if self.ticks.is_multiple_of(4096) && Instant::now() >= self.deadline {
            self.timed_out = true;
        }
        if self.timed_out {
            return;
        }
        let n_v = self.dag.vertices.len();
        if v == n_v {
            if used == self.params.n_subcircuits {
                self.feasible_leaf();
            }
            return;
        }
        // remaining vertices must be able to populate the unused subcircuits
        if self.params.n_subcircuits - used > n_v - v {
            return;
        }
        let max_label = used.min(self.params.n_subcircuits - 1);
        for label in 0..=max_label {
            if self.sizes[label] == self.size_cap {
                continue;
            }
            let mut touched: Vec<usize> = Vec::new();
            let mut ok = true;
            for &ei in &self.edges_to_earlier[v] {
                let e = &self.dag.edges[ei];
                let other = if e.source == v { e.dest } else { e.source };
                let other_label = if other == v {
                    label
                } else {
                    self.assignment[other]
                };
                if other_label != label {
                    self.io[label] += 1;
                    touched.push(label);
                    if other != v {
                        self.io[other_label] += 1;
                        touched.push(other_label);
                    }
                    if self.io[label] >= self.bound
                        || self.io[label] > self.params.degree_cap
                        || (other != v
                            && (self.io[other_label] >= self.bound
                                || self.io[other_label] > self.params.degree_cap))
                    {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                self.assignment[v] = label;
                self.sizes[label] += 1;
                self.dfs(v + 1, used.max(label + 1));
                self.sizes[label] -= 1;
            }
            for &c in &touched {
                self.io[c] -= 1;
            }
            if self.timed_out {
                return;
            }
        }
    }
}

/// Minimize L over assignments of DAG vertices to `n_subcircuits` parts.
/// Returns the optimum when branch-and-bound finishes within the time limit,
/// otherwise the best incumbent with `optimal: false`.
pub fn solve_partition(dag: &GateDag, params: SolveParams) -> Result<CutSolution, CutError> {
    let n_v = dag.vertices.len();
    if n_v == 0 {
        return Err(CutError::Uncuttable);
    }
    if params.n_subcircuits == 0 {
        return Err(CutError::BadParams("n_subcircuits must be >= 1".into()));
    }
    if !(params.alpha > 0.0 && params.alpha <= 1.0) {
        return Err(CutError::BadParams(format!(
            "alpha must be in (0, 1], got {}",
            params.alpha
        )));
    }
    let size_cap = (params.alpha * n_v as f64).ceil() as usize;
    if size_cap == 0 || params.n_subcircuits * size_cap < n_v {
        return Err(CutError::Infeasible {
            n_subcircuits: params.n_subcircuits,
        });
    }
    if params.n_subcircuits > n_v {
        return Err(CutError::Infeasible {
            n_subcircuits: params.n_subcircuits,
        });
    }

    let mut edges_to_earlier = vec![Vec::new(); n_v];
    for (ei, e) in dag.edges.iter().enumerate() {
        edges_to_earlier[e.source.max(e.dest)].push(ei);
    }

    let mut search = Search {
        dag,
        params,
        size_cap,
        edges_to_earlier,
        assignment: vec![0; n_v],
        sizes: vec![0; params.n_subcircuits],
        io: vec![0; params.n_subcircuits],
        best: None,
        bound: params.degree_cap + 1,
        deadline: Instant::now() + params.time_limit,
        ticks: 0,
        timed_out: false,
    };
    // symmetry breaking: vertex 0 in subcircuit 0; labels in first-seen order
    search.dfs(0, 0);
    let timed_out = search.timed_out;

    match search.best {
        Some((objective, assignment)) => {
            let model = PartitionModel::new(dag, params.n_subcircuits, assignment.clone());
            debug_assert_eq!(model.objective(), objective);
            let stats = subcircuit_stats(dag, &assignment, params.n_subcircuits);
            Ok(CutSolution {
                n_subcircuits: params.n_subcircuits,
                cut_edges: crate::fragments::cut_edges_of(dag, &assignment),
                cut_count: model.cut_count(),
                objective,
                subcircuit_widths: stats.iter().map(|&(w, _)| w).collect(),
                subcircuit_outputs: stats.iter().map(|&(_, o)| o).collect(),
                subcircuit_map: assignment,
                optimal: !timed_out,
            })
        }
        None if timed_out => Err(CutError::TimeoutWithoutIncumbent),
        None => Err(CutError::Infeasible {
            n_subcircuits: params.n_subcircuits,
        }),
    }
}

/// A selected cut with everything downstream needs: the rebuilt fragments,
/// the compute graph, and the scored contraction plan.
#[derive(Debug, Clone)]
pub struct FoundCut {
    pub solution: CutSolution,
    pub partitioned: PartitionedCircuit,
    pub graph: ComputeGraph,
    pub plan: ContractionPlan,
    pub cost: CostReport,
}

/// Run the solver for n_C = 2..=max, score each feasible solution with the
/// predicted contraction cost, and keep the cheapest.
pub fn find_cuts(
    dag: &GateDag,
    alpha: f64,
    max_subcircuits: usize,
    time_limit: Duration,
    degree_cap: usize,
) -> Result<FoundCut, CutError> {
    if max_subcircuits < 2 {
        return Err(CutError::BadParams("max_subcircuits must be >= 2".into()));
    }
    let mut best: Option<FoundCut> = None;
    for n_c in 2..=max_subcircuits {
        let params = SolveParams {
            n_subcircuits: n_c,
            alpha,
            degree_cap,
            time_limit,
            width_cap: SIM_WIDTH_CAP,
        };
        let solution = match solve_partition(dag, params) {
            Ok(s) => s,
            Err(CutError::Infeasible { .. }) | Err(CutError::TimeoutWithoutIncumbent) => continue,
            Err(e) => return Err(e),
        };
        let partitioned = partition_circuit(dag, &solution.subcircuit_map, n_c)
            .expect("solver assignments always rebuild");
        let graph = ComputeGraph::from_partition(&partitioned);
        let plan = find_order(&graph);
        let cost = predict_cost(&graph, &plan);
        let better = match &best {
            None => true,
            Some(b) => cost.multiplications < b.cost.multiplications,
        };
        if better {
            best = Some(FoundCut {
                solution,
                partitioned,
                graph,
                plan,
                cost,
            });
        }
    }
    best.ok_or(CutError::NoFeasibleCut {
        max: max_subcircuits,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuantumArea {
    pub full: usize,
    pub max_subcircuit: usize,
    pub ratio: f64,
}

/// Width x depth of the whole circuit versus its largest rebuilt fragment.
pub fn quantum_area(partitioned: &PartitionedCircuit, circuit: &Circuit) -> QuantumArea {
    let full = circuit.n_qubits * circuit.depth();
    let max_subcircuit = partitioned
        .fragments
        .iter()
        .map(|f| f.width() * f.circuit.depth())
        .max()
        .unwrap_or(0);
    QuantumArea {
        full,
        max_subcircuit,
        ratio: if full == 0 {
            1.0
        } else {
            max_subcircuit as f64 / full as f64
        },
    }
}
