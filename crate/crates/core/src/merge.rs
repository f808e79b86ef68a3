//! States merging: locate high-probability solution states without ever
//! materializing the 2^n global vector.
//!
//! Each recursion assigns the states under analysis to at most M bins
//! (round-robin per subcircuit, halving the largest per-subcircuit bin count
//! until the product fits), reconstructs the bin probability sums through the
//! contraction path, and expands the most probable unexpanded bin. A bin
//! whose every subcircuit holds exactly one state is fully expanded; if its
//! probability clears the solution threshold it is recorded as a solution.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contraction::{contract, find_order, Axis};
use crate::fragments::PartitionedCircuit;
use crate::graph::ComputeGraph;
use crate::subsim::{EntryEvaluator, EvalError, NodeBinning};

#[derive(Debug, Error, PartialEq)]
pub enum MergeError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("state list has {got} entries, at most {max} allowed")]
    ListTooLarge { got: usize, max: usize },
}

impl From<crate::sim::SimError> for MergeError {
    fn from(e: crate::sim::SimError) -> MergeError {
        MergeError::Eval(EvalError::Sim(e))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MergeParams {
    /// M: maximum probability bins per recursion.
    pub max_bins: usize,
    /// R: candidate bins kept between recursions.
    pub top_r: usize,
    /// Maximum number of recursions to run.
    pub max_recursions: usize,
    /// A fully expanded bin counts as a solution when its probability
    /// reaches max(10 / 2^n, this threshold).
    pub solution_threshold: f64,
}

impl MergeParams {
    pub fn new(max_bins: usize, top_r: usize, max_recursions: usize) -> MergeParams {
        MergeParams {
            max_bins,
            top_r,
            max_recursions,
            solution_threshold: 1e-3,
        }
    }
}

/// Per-recursion binning of the states under analysis.
#[derive(Debug, Clone)]
pub struct BinAssignment {
    pub recursion: usize,
    pub per_node: Vec<NodeBinning>,
}

impl BinAssignment {
    pub fn total_bins(&self) -> u128 {
        self.per_node
            .iter()
            .map(|nb| nb.bin_count as u128)
            .product()
    }
}

/// A tracked bin: per-subcircuit bin indices with the states they hold.
#[derive(Debug, Clone)]
pub struct MergeBin {
    pub bins: Vec<usize>,
    pub probability: f64,
    pub fully_expanded: bool,
    pub states: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Solution {
    /// Global basis state (qubit 0 = most significant bit).
    pub state: u64,
    pub bitstring: String,
    pub probability: f64,
    /// Recursion that fully expanded this state.
    pub recursion: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecursionTrace {
    pub recursion: usize,
    pub bin_counts: Vec<usize>,
    /// Probability of the bin being expanded (1.0 for the full space).
    pub parent_probability: f64,
    /// Sum of the probabilities of this recursion's bins.
    pub children_sum: f64,
    pub best_bin_probability: f64,
    pub expanded_solutions: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MergeOutcome {
    pub solutions: Vec<Solution>,
    pub recursions_run: usize,
    pub traces: Vec<RecursionTrace>,
    /// True when the candidate list drained before the recursion limit.
    pub search_exhausted: bool,
}

/// Halve the largest per-subcircuit bin count (ceil, ties to the lowest
/// subcircuit) until the product fits in `max_bins`, then assign states
/// round-robin. `parent` carries the per-subcircuit states of the bin being
/// expanded; none means the full space of each subcircuit.
pub fn assign_states(
    recursion: usize,
    parent: Option<&MergeBin>,
    max_bins: usize,
    output_qubits: &[usize],
) -> BinAssignment {
    let states: Vec<Vec<u64>> = match parent {
        None => output_qubits
            .iter()
            .map(|&n| (0..1u64 << n).collect())
            .collect(),
        Some(bin) => bin.states.clone(),
    };
    let mut counts: Vec<usize> = states.iter().map(|s| s.len()).collect();
    while counts.iter().map(|&c| c as u128).product::<u128>() > max_bins as u128 {
        let largest = (0..counts.len())
            .max_by_key(|&i| (counts[i], usize::MAX - i))
            .unwrap();
        counts[largest] = counts[largest].div_ceil(2);
    }
    BinAssignment {
        recursion,
        per_node: states
            .into_iter()
            .zip(&counts)
            .map(|(s, &c)| NodeBinning::round_robin(s, c))
            .collect(),
    }
}

fn bin_tuple_of_flat(axes: &[Axis], flat: usize, n_nodes: usize) -> Vec<usize> {
    let mut tuple = vec![0usize; n_nodes];
    let mut rem = flat;
    for axis in axes.iter().rev() {
        match *axis {
            Axis::Block { node, dim } => {
                tuple[node] = rem % dim;
                rem /= dim;
            }
            Axis::Cut(_) => panic!("cut axis survived contraction"),
        }
    }
    tuple
}

fn assemble_state(partitioned: &PartitionedCircuit, per_node_states: &[Vec<u64>]) -> u64 {
    let n = partitioned.n_qubits;
    let mut global = 0u64;
    for (fragment, states) in partitioned.fragments.iter().zip(per_node_states) {
        let s = states[0];
        let width = fragment.outputs.len();
        for (j, &(_, original)) in fragment.outputs.iter().enumerate() {
            if s >> (width - 1 - j) & 1 == 1 {
                global |= 1 << (n - 1 - original);
            }
        }
    }
    global
}

fn bitstring(state: u64, n: usize) -> String {
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

/// The iterative search loop over probability bins.
pub fn run_merge(
    partitioned: &PartitionedCircuit,
    params: &MergeParams,
) -> Result<MergeOutcome, MergeError> {
    if params.max_bins < 2 {
        return Err(MergeError::BadParams("max_bins must be >= 2".into()));
    }
    if params.top_r < 1 {
        return Err(MergeError::BadParams("top_r must be >= 1".into()));
    }
    let n = partitioned.n_qubits;
    let threshold = (10.0 / (1u128 << n.min(127)) as f64).max(params.solution_threshold);
    let output_qubits: Vec<usize> = partitioned
        .fragments
        .iter()
        .map(|f| f.outputs.len())
        .collect();
    let evaluator = EntryEvaluator::new(partitioned)?;
    let graph = ComputeGraph::from_partition(partitioned);

    let mut candidates: Vec<MergeBin> = Vec::new();
    let mut solutions: Vec<Solution> = Vec::new();
    let mut traces: Vec<RecursionTrace> = Vec::new();
    let mut current: Option<MergeBin> = None;
    let mut recursion = 0;
    let mut search_exhausted = false;

    loop {
        if recursion >= params.max_recursions {
            break;
        }
        if recursion > 0 && current.is_none() {
            search_exhausted = true;
            break;
        }
        let assignment =
            assign_states(recursion, current.as_ref(), params.max_bins, &output_qubits);
        let binned = evaluator.binned_tensors(&assignment.per_node);
        let bin_graph = graph.with_node_dims(
            assignment
                .per_node
                .iter()
                .map(|nb| nb.bin_count as u64)
                .collect(),
        );
        let plan = find_order(&bin_graph);
        let out = contract(&bin_graph, &binned, &plan).map_err(EvalError::from)?;

        let parent_probability = current.as_ref().map_or(1.0, |b| b.probability);
        let mut children_sum = 0.0;
        let mut best = f64::NEG_INFINITY;
        let mut expanded_here = 0;
        let mut pool: Vec<MergeBin> = Vec::new();
        for (flat, &probability) in out.tensor.data.iter().enumerate() {
            let bins = bin_tuple_of_flat(&out.tensor.axes, flat, graph.node_count());
            let states: Vec<Vec<u64>> = assignment
                .per_node
                .iter()
                .zip(&bins)
                .map(|(nb, &b)| nb.bin_states(b))
                .collect();
            children_sum += probability;
            best = best.max(probability);
            let fully_expanded = states.iter().all(|s| s.len() == 1);
            if fully_expanded {
                if probability >= threshold {
                    let state = assemble_state(partitioned, &states);
                    debug_assert!(solutions.iter().all(|s| s.state != state));
                    solutions.push(Solution {
                        state,
                        bitstring: bitstring(state, n),
                        probability,
                        recursion,
                    });
                    expanded_here += 1;
                }
            } else {
                pool.push(MergeBin {
                    bins,
                    probability,
                    fully_expanded,
                    states,
                });
            }
        }

        traces.push(RecursionTrace {
            recursion,
            bin_counts: assignment.per_node.iter().map(|nb| nb.bin_count).collect(),
            parent_probability,
            children_sum,
            best_bin_probability: if best.is_finite() { best } else { 0.0 },
            expanded_solutions: expanded_here,
        });

        // append the R largest unexpanded bins, keep the overall R largest
        pool.sort_by(|a, b| b.probability.partial_cmp(&a.probability).unwrap());
        candidates.extend(pool.into_iter().take(params.top_r));
        candidates.sort_by(|a, b| b.probability.partial_cmp(&a.probability).unwrap());
        candidates.truncate(params.top_r);
        current = if candidates.is_empty() {
            None
        } else {
            Some(candidates.remove(0))
        };
        recursion += 1;
    }

    if recursion > 0 && current.is_none() && candidates.is_empty() {
        search_exhausted = true;
    }
    solutions.sort_by(|a, b| {
        b.probability
            .partial_cmp(&a.probability)
            .unwrap()
            .then(a.state.cmp(&b.state))
    });
    Ok(MergeOutcome {
        solutions,
        recursions_run: recursion,
        traces,
        search_exhausted,
    })
}

/// Exact probabilities of an explicit list of global states: one recursion
/// with singleton bins for the listed states plus a catch-all per subcircuit.
pub fn arbitrary_subset_mode(
    partitioned: &PartitionedCircuit,
    states: &[u64],
    max_bins: usize,
) -> Result<Vec<(u64, f64)>, MergeError> {
    if states.len() > max_bins {
        return Err(MergeError::ListTooLarge {
            got: states.len(),
            max: max_bins,
        });
    }
    if states.is_empty() {
        return Ok(Vec::new());
    }
    let n = partitioned.n_qubits;
    let evaluator = EntryEvaluator::new(partitioned)?;
    let graph = ComputeGraph::from_partition(partitioned);

    // project each global state onto every subcircuit's output bits
    let project = |fragment_idx: usize, state: u64| -> u64 {
        let fragment = &partitioned.fragments[fragment_idx];
        let width = fragment.outputs.len();
        let mut local = 0u64;
        for (j, &(_, original)) in fragment.outputs.iter().enumerate() {
            if state >> (n - 1 - original) & 1 == 1 {
                local |= 1 << (width - 1 - j);
            }
        }
        local
    };

    let mut per_node: Vec<NodeBinning> = Vec::new();
    let mut listed_bins: Vec<Vec<usize>> = vec![Vec::new(); states.len()];
    for i in 0..graph.node_count() {
        let width = partitioned.fragments[i].outputs.len();
        let mut singleton: Vec<u64> = Vec::new();
        for (si, &s) in states.iter().enumerate() {
            let local = project(i, s);
            let bin = match singleton.iter().position(|&x| x == local) {
                Some(pos) => pos,
                None => {
                    singleton.push(local);
                    singleton.len() - 1
                }
            };
            listed_bins[si].push(bin);
        }
        let catch_all = singleton.len();
        let mut node_states: Vec<u64> = Vec::with_capacity(1 << width);
        let mut bins: Vec<usize> = Vec::with_capacity(1 << width);
        for local in 0..1u64 << width {
            node_states.push(local);
            bins.push(
                singleton
                    .iter()
                    .position(|&x| x == local)
                    .unwrap_or(catch_all),
            );
        }
        let bin_count = if singleton.len() == 1 << width {
            singleton.len()
        } else {
            catch_all + 1
        };
        per_node.push(NodeBinning {
            states: node_states,
            bins,
            bin_count,
        });
    }

    let binned = evaluator.binned_tensors(&per_node);
    let bin_graph = graph.with_node_dims(per_node.iter().map(|nb| nb.bin_count as u64).collect());
    let plan = find_order(&bin_graph);
    let out = contract(&bin_graph, &binned, &plan).map_err(EvalError::from)?;

    // read the singleton-tuple entries
    let mut strides = vec![0usize; graph.node_count()];
    {
        let mut acc = 1usize;
        for axis in out.tensor.axes.iter().rev() {
            match *axis {
                Axis::Block { node, dim } => {
                    strides[node] = acc;
                    acc *= dim;
                }
                Axis::Cut(_) => panic!("cut axis survived contraction"),
            }
        }
    }
    Ok(states
        .iter()
        .zip(&listed_bins)
        .map(|(&s, bins)| {
            let flat: usize = bins.iter().zip(&strides).map(|(&b, &st)| b * st).sum();
            (s, out.tensor.data[flat])
        })
        .collect())
}
