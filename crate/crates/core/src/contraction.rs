//! Tensor-network contraction of the compute graph.
//!
//! Contraction is left-deep: a cluster absorbs one node per step. Each step
//! is a single matrix product between the new node's matrization (rows: kept
//! indices, cols: contraction bases) and the cluster's (rows: contraction
//! bases, cols: kept indices), so the multiplication count of a step is the
//! product of all dimensions involved. Index slicing fixes chosen cut indices
//! to each of their four values and sums the resulting smaller networks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ComputeGraph, CUT_DIM};

#[derive(Debug, Error, PartialEq)]
pub enum ContractError {
    #[error("missing entry tensor for node {0}")]
    MissingEntry(usize),
    #[error("node {node}: tensor has {got} values, graph expects {want}")]
    DimensionMismatch {
        node: usize,
        got: usize,
        want: usize,
    },
    #[error("cannot fit within {limit} values even fully sliced (needs {needed})")]
    CannotFit { limit: u64, needed: u64 },
    #[error("invalid plan: {0}")]
    BadPlan(String),
}

/// Exhaustive order search is used up to this node count; greedy beyond.
pub const EXHAUSTIVE_ORDER_LIMIT: usize = 8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContractionPlan {
    /// Node visiting order; the first node seeds the cluster.
    pub order: Vec<usize>,
    /// Cut ids sliced to shrink input tensors (level 1).
    pub level1_slices: Vec<usize>,
    /// Cut ids sliced to shrink intermediates (level 2).
    pub level2_slices: Vec<usize>,
    /// False when the order came from the greedy fallback.
    pub optimal_order: bool,
}

impl ContractionPlan {
    pub fn single(order: Vec<usize>) -> ContractionPlan {
        ContractionPlan {
            order,
            level1_slices: Vec::new(),
            level2_slices: Vec::new(),
            optimal_order: true,
        }
    }

    /// All sliced cut ids, ascending.
    pub fn slices(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self
            .level1_slices
            .iter()
            .chain(&self.level2_slices)
            .copied()
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn subgraph_count(&self) -> u64 {
        (CUT_DIM as u64).saturating_pow(self.slices().len() as u32)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanStep {
    pub node: usize,
    /// Cuts joining the node to the cluster, summed in this step.
    pub contraction_cuts: Vec<usize>,
    /// Cuts kept on the node side (connect to nodes not yet absorbed).
    pub leading_cuts: Vec<usize>,
    /// Cuts kept on the cluster side.
    pub trailing_cuts: Vec<usize>,
    pub multiplications: u64,
    pub result_values: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostReport {
    /// Stored input values: sum over nodes of 4^live_cuts * node_dim.
    pub input_storage: u64,
    /// Largest step result within one subgraph.
    pub peak_intermediate: u64,
    /// Total multiplications across all subgraphs.
    pub multiplications: u64,
    pub per_subgraph_multiplications: u64,
    pub subgraph_count: u64,
    pub steps: Vec<PlanStep>,
    /// Term-by-term evaluation of the uncut sum: 4^K outer products.
    pub naive_multiplications: u64,
}

/// Cuts a node exposes to other nodes after slicing (self cuts are summed
/// out at load time and sliced cuts are fixed).
fn external_cuts(graph: &ComputeGraph, node: usize, slices: &[usize]) -> Vec<usize> {
    graph
        .cuts_of(node)
        .into_iter()
        .filter(|&k| {
            let (a, b) = graph.edges[k];
            !(a == node && b == node) && !slices.contains(&k)
        })
        .collect()
}

fn live_cut_count(graph: &ComputeGraph, node: usize, slices: &[usize]) -> u32 {
    graph
        .cuts_of(node)
        .iter()
        .filter(|k| !slices.contains(k))
        .count() as u32
}

/// Stored input values with the given cuts sliced.
pub fn sliced_input_storage(graph: &ComputeGraph, slices: &[usize]) -> u64 {
    (0..graph.node_count())
        .map(|i| {
            (CUT_DIM as u64)
                .saturating_pow(live_cut_count(graph, i, slices))
                .saturating_mul(graph.node_dims[i])
        })
        .fold(0u64, u64::saturating_add)
}

fn build_steps(graph: &ComputeGraph, order: &[usize], slices: &[usize]) -> Vec<PlanStep> {
    let mut steps = Vec::new();
    if order.is_empty() {
        return steps;
    }
    let mut cluster_cuts = external_cuts(graph, order[0], slices);
    let mut cluster_dim = graph.node_dims[order[0]];
    for &node in &order[1..] {
        let node_cuts = external_cuts(graph, node, slices);
        let contraction: Vec<usize> = node_cuts
            .iter()
            .copied()
            .filter(|k| cluster_cuts.contains(k))
            .collect();
        let leading: Vec<usize> = node_cuts
            .iter()
            .copied()
            .filter(|k| !contraction.contains(k))
            .collect();
        let trailing: Vec<usize> = cluster_cuts
            .iter()
            .copied()
            .filter(|k| !contraction.contains(k))
            .collect();
        let union = (contraction.len() + leading.len() + trailing.len()) as u32;
        let multiplications = (CUT_DIM as u64)
            .saturating_pow(union)
            .saturating_mul(graph.node_dims[node])
            .saturating_mul(cluster_dim);
        cluster_dim = cluster_dim.saturating_mul(graph.node_dims[node]);
        cluster_cuts = leading.iter().chain(&trailing).copied().collect();
        cluster_cuts.sort_unstable();
        let result_values = (CUT_DIM as u64)
            .saturating_pow(cluster_cuts.len() as u32)
            .saturating_mul(cluster_dim);
        steps.push(PlanStep {
            node,
            contraction_cuts: contraction,
            leading_cuts: leading,
            trailing_cuts: trailing,
            multiplications,
            result_values,
        });
    }
    steps
}

fn order_multiplications(graph: &ComputeGraph, order: &[usize], slices: &[usize]) -> u64 {
    build_steps(graph, order, slices)
        .iter()
        .map(|s| s.multiplications)
        .fold(0u64, u64::saturating_add)
}

fn permutations_lex(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    let mut used = vec![false; n];
    fn rec(n: usize, current: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if current.len() == n {
            out.push(current.clone());
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                current.push(v);
                rec(n, current, used, out);
                current.pop();
                used[v] = false;
            }
        }
    }
    rec(n, &mut current, &mut used, &mut out);
    out
}

/// Minimum-multiplication left-deep order: exhaustive for small graphs,
/// greedy (cheapest pair, then cheapest node into the cluster) beyond, with
/// lexicographic tie-breaks throughout.
pub fn find_order(graph: &ComputeGraph) -> ContractionPlan {
    find_order_sliced(graph, &[])
}

pub fn find_order_sliced(graph: &ComputeGraph, slices: &[usize]) -> ContractionPlan {
    let n = graph.node_count();
    if n == 1 {
        return ContractionPlan {
            order: vec![0],
            level1_slices: slices.to_vec(),
            level2_slices: Vec::new(),
            optimal_order: true,
        };
    }
    let (order, optimal) = if n <= EXHAUSTIVE_ORDER_LIMIT {
        let mut best: Option<(u64, Vec<usize>)> = None;
        for perm in permutations_lex(n) {
            let cost = order_multiplications(graph, &perm, slices);
            if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                best = Some((cost, perm));
            }
        }
        (best.unwrap().1, true)
    } else {
        let mut remaining: Vec<usize> = (0..n).collect();
        let mut order = {
            let mut best: Option<(u64, (usize, usize))> = None;
            for i in 0..n {
                for j in i + 1..n {
                    let cost = order_multiplications(graph, &[i, j], slices);
                    if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                        best = Some((cost, (i, j)));
                    }
                }
            }
            let (_, (i, j)) = best.unwrap();
            vec![i, j]
        };
        remaining.retain(|v| !order.contains(v));
        while !remaining.is_empty() {
            let mut best: Option<(u64, usize)> = None;
            for &v in &remaining {
                let mut candidate = order.clone();
                candidate.push(v);
                let cost = order_multiplications(graph, &candidate, slices);
                if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                    best = Some((cost, v));
                }
            }
            let (_, v) = best.unwrap();
            order.push(v);
            remaining.retain(|&r| r != v);
        }
        (order, false)
    };
    ContractionPlan {
        order,
        level1_slices: slices.to_vec(),
        level2_slices: Vec::new(),
        optimal_order: optimal,
    }
}

/// Exact storage and multiplication counts for a plan.
pub fn predict_cost(graph: &ComputeGraph, plan: &ContractionPlan) -> CostReport {
    let slices = plan.slices();
    let steps = build_steps(graph, &plan.order, &slices);
    let per_subgraph = steps
        .iter()
        .map(|s| s.multiplications)
        .fold(0u64, u64::saturating_add);
    let subgraph_count = plan.subgraph_count();
    let peak = steps.iter().map(|s| s.result_values).max().unwrap_or(0);

    // naive: every one of the 4^K terms as a chain of outer products
    let k = graph.cut_count() as u32;
    let mut chain = 0u64;
    let mut acc = graph.node_dims[0];
    for &dim in &graph.node_dims[1..] {
        acc = acc.saturating_mul(dim);
        chain = chain.saturating_add(acc);
    }
    let naive = (CUT_DIM as u64).saturating_pow(k).saturating_mul(chain);

    CostReport {
        input_storage: sliced_input_storage(graph, &slices),
        peak_intermediate: peak,
        multiplications: per_subgraph.saturating_mul(subgraph_count),
        per_subgraph_multiplications: per_subgraph,
        subgraph_count,
        steps,
        naive_multiplications: naive,
    }
}

/// Greedily slice the cut whose removal shrinks the stored input tensors the
/// most, until they fit in `memory_limit` values. Returns the slice set and
/// the number of subgraphs it induces.
pub fn slice_level1(
    graph: &ComputeGraph,
    memory_limit: u64,
) -> Result<(Vec<usize>, u64), ContractError> {
    let mut slices: Vec<usize> = Vec::new();
    loop {
        let storage = sliced_input_storage(graph, &slices);
        if storage <= memory_limit {
            let count = (CUT_DIM as u64).saturating_pow(slices.len() as u32);
            return Ok((slices, count));
        }
        let mut best: Option<(u64, usize)> = None;
        for k in 0..graph.cut_count() {
            if slices.contains(&k) {
                continue;
            }
            let mut candidate = slices.clone();
            candidate.push(k);
            let new_storage = sliced_input_storage(graph, &candidate);
            let reduction = storage - new_storage;
            if best.as_ref().is_none_or(|&(b, _)| reduction > b) {
                best = Some((reduction, k));
            }
        }
        match best {
            Some((_, k)) => slices.push(k),
            None => {
                return Err(ContractError::CannotFit {
                    limit: memory_limit,
                    needed: storage,
                });
            }
        }
    }
}

/// Slice cut indices appearing in the largest intermediate until the peak
/// fits. The chosen index is the one in the largest intermediate that lowers
/// the peak most (ties: lowest cut id).
pub fn slice_level2(
    graph: &ComputeGraph,
    plan: &ContractionPlan,
    memory_limit: u64,
) -> Result<ContractionPlan, ContractError> {
    let mut plan = plan.clone();
    loop {
        let slices = plan.slices();
        let steps = build_steps(graph, &plan.order, &slices);
        let peak_step = steps.iter().max_by_key(|s| s.result_values);
        let peak = peak_step.map(|s| s.result_values).unwrap_or(0);
        if peak <= memory_limit {
            return Ok(plan);
        }
        let candidates: Vec<usize> = {
            let s = peak_step.unwrap();
            s.leading_cuts
                .iter()
                .chain(&s.trailing_cuts)
                .copied()
                .collect()
        };
        if candidates.is_empty() {
            return Err(ContractError::CannotFit {
                limit: memory_limit,
                needed: peak,
            });
        }
        let mut best: Option<(u64, usize)> = None;
        for &k in &candidates {
            let mut trial = slices.clone();
            trial.push(k);
            let new_peak = build_steps(graph, &plan.order, &trial)
                .iter()
                .map(|s| s.result_values)
                .max()
                .unwrap_or(0);
            if best.as_ref().is_none_or(|&(b, _)| new_peak < b) {
                best = Some((new_peak, k));
            }
        }
        plan.level2_slices.push(best.unwrap().1);
    }
}

/// Level-1 slicing, order search on the sliced graph, then level-2 slicing.
pub fn plan_contraction(
    graph: &ComputeGraph,
    memory_limit: u64,
) -> Result<ContractionPlan, ContractError> {
    let (slices, _) = slice_level1(graph, memory_limit)?;
    let plan = find_order_sliced(graph, &slices);
    slice_level2(graph, &plan, memory_limit)
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Dimension-4 cut index.
    Cut(usize),
    /// Output index of a node: 2^qubits entries, or the node's bin count.
    Block { node: usize, dim: usize },
}

impl Axis {
    pub fn dim(&self) -> usize {
        match *self {
            Axis::Cut(_) => CUT_DIM,
            Axis::Block { dim, .. } => dim,
        }
    }
}

/// Dense row-major tensor with labeled axes (first axis most significant).
#[derive(Debug, Clone)]
pub struct LabeledTensor {
    pub axes: Vec<Axis>,
    pub data: Vec<f64>,
}

impl LabeledTensor {
    pub fn new(axes: Vec<Axis>, data: Vec<f64>) -> LabeledTensor {
        debug_assert_eq!(axes.iter().map(Axis::dim).product::<usize>(), data.len());
        LabeledTensor { axes, data }
    }

    /// Axis layout the contraction expects for a node's entry tensor:
    /// its attached cuts ascending, then one output block.
    pub fn node_axes(graph: &ComputeGraph, node: usize) -> Vec<Axis> {
        let mut axes: Vec<Axis> = graph.cuts_of(node).into_iter().map(Axis::Cut).collect();
        axes.push(Axis::Block {
            node,
            dim: graph.node_dims[node] as usize,
        });
        axes
    }

    pub fn scalar(value: f64) -> LabeledTensor {
        LabeledTensor {
            axes: Vec::new(),
            data: vec![value],
        }
    }

    fn dims(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::dim).collect()
    }

    /// Reorder axes; `perm[i]` is the old position moved to position i.
    fn permute(&self, perm: &[usize]) -> LabeledTensor {
        debug_assert_eq!(perm.len(), self.axes.len());
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            return self.clone();
        }
        let old_dims = self.dims();
        let mut old_strides = vec![1usize; old_dims.len()];
        for i in (0..old_dims.len().saturating_sub(1)).rev() {
            old_strides[i] = old_strides[i + 1] * old_dims[i + 1];
        }
        let new_axes: Vec<Axis> = perm.iter().map(|&p| self.axes[p]).collect();
        let new_dims: Vec<usize> = new_axes.iter().map(Axis::dim).collect();
        let mut data = vec![0.0; self.data.len()];
        for (new_flat, slot) in data.iter_mut().enumerate() {
            let mut rem = new_flat;
            let mut old_flat = 0;
            for (i, &d) in new_dims.iter().enumerate().rev() {
                let coord = rem % d;
                rem /= d;
                old_flat += coord * old_strides[perm[i]];
            }
            *slot = self.data[old_flat];
        }
        LabeledTensor {
            axes: new_axes,
            data,
        }
    }

    /// Fix a cut axis to one basis digit, dropping the axis.
    fn restrict(&self, cut: usize, digit: usize) -> LabeledTensor {
        let pos = self
            .axes
            .iter()
            .position(|a| *a == Axis::Cut(cut))
            .expect("restrict: cut axis present");
        let dims = self.dims();
        let inner: usize = dims[pos + 1..].iter().product();
        let outer: usize = dims[..pos].iter().product();
        let mut data = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            let base = (o * CUT_DIM + digit) * inner;
            data.extend_from_slice(&self.data[base..base + inner]);
        }
        let mut axes = self.axes.clone();
        axes.remove(pos);
        LabeledTensor { axes, data }
    }

    /// Sum over a cut axis, dropping it.
    fn sum_cut(&self, cut: usize) -> LabeledTensor {
        let pos = self
            .axes
            .iter()
            .position(|a| *a == Axis::Cut(cut))
            .expect("sum_cut: cut axis present");
        let dims = self.dims();
        let inner: usize = dims[pos + 1..].iter().product();
        let outer: usize = dims[..pos].iter().product();
        let mut data = vec![0.0; outer * inner];
        for o in 0..outer {
            for d in 0..CUT_DIM {
                let base = (o * CUT_DIM + d) * inner;
                for i in 0..inner {
                    data[o * inner + i] += self.data[base + i];
                }
            }
        }
        let mut axes = self.axes.clone();
        axes.remove(pos);
        LabeledTensor { axes, data }
    }

    /// Reorder so cut axes come first ascending, then blocks by node id.
    pub fn canonical(&self) -> LabeledTensor {
        let mut order: Vec<usize> = (0..self.axes.len()).collect();
        order.sort_by_key(|&i| match self.axes[i] {
            Axis::Cut(k) => (0, k),
            Axis::Block { node, .. } => (1, node),
        });
        self.permute(&order)
    }
}

#[derive(Debug, Clone)]
pub struct ContractionOutput {
    pub tensor: LabeledTensor,
    /// Instrumented count: exactly the scalar multiplications performed by
    /// the step matrix products.
    pub multiplications: u64,
}

fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let crow = &mut c[i * n..(i + 1) * n];
        for (l, &av) in arow.iter().enumerate() {
            let brow = &b[l * n..(l + 1) * n];
            for j in 0..n {
                crow[j] += av * brow[j];
            }
        }
    }
    c
}

fn contract_single(
    graph: &ComputeGraph,
    tensors: &[LabeledTensor],
    order: &[usize],
    slices: &[(usize, usize)], // (cut, digit)
    scale_first: f64,
) -> (LabeledTensor, u64) {
    let prepare = |node: usize| -> LabeledTensor {
        let mut t = tensors[node].clone();
        for &(cut, digit) in slices {
            if t.axes.contains(&Axis::Cut(cut)) {
                t = t.restrict(cut, digit);
            }
        }
        for cut in graph.self_cuts_of(node) {
            if t.axes.contains(&Axis::Cut(cut)) {
                t = t.sum_cut(cut);
            }
        }
        t
    };

    let mut cluster = prepare(order[0]);
    if scale_first != 1.0 {
        for v in cluster.data.iter_mut() {
            *v *= scale_first;
        }
    }
    let mut mults = 0u64;
    for &node in &order[1..] {
        let fresh = prepare(node);
        let shared: Vec<usize> = fresh
            .axes
            .iter()
            .filter_map(|a| match a {
                Axis::Cut(k) if cluster.axes.contains(a) => Some(*k),
                _ => None,
            })
            .collect();

        // leading matrix: rows = kept node axes, cols = contraction bases
        let node_kept: Vec<usize> = (0..fresh.axes.len())
            .filter(|&i| !matches!(fresh.axes[i], Axis::Cut(k) if shared.contains(&k)))
            .collect();
        let node_shared: Vec<usize> = shared
            .iter()
            .map(|&k| fresh.axes.iter().position(|a| *a == Axis::Cut(k)).unwrap())
            .collect();
        let perm_a: Vec<usize> = node_kept.iter().chain(&node_shared).copied().collect();
        let a = fresh.permute(&perm_a);

        // trailing matrix: rows = contraction bases, cols = kept cluster axes
        let cluster_shared: Vec<usize> = shared
            .iter()
            .map(|&k| {
                cluster
                    .axes
                    .iter()
                    .position(|a| *a == Axis::Cut(k))
                    .unwrap()
            })
            .collect();
        let cluster_kept: Vec<usize> = (0..cluster.axes.len())
            .filter(|&i| !matches!(cluster.axes[i], Axis::Cut(k) if shared.contains(&k)))
            .collect();
        let perm_b: Vec<usize> = cluster_shared
            .iter()
            .chain(&cluster_kept)
            .copied()
            .collect();
        let b = cluster.permute(&perm_b);

        let m: usize = node_kept.iter().map(|&i| fresh.axes[i].dim()).product();
        let kdim: usize = CUT_DIM.pow(shared.len() as u32);
        let n: usize = cluster_kept
            .iter()
            .map(|&i| cluster.axes[i].dim())
            .product();
        let data = matmul(&a.data, &b.data, m, kdim, n);
        mults = mults.saturating_add(
            (m as u64)
                .saturating_mul(kdim as u64)
                .saturating_mul(n as u64),
        );

        let mut axes: Vec<Axis> = node_kept.iter().map(|&i| fresh.axes[i]).collect();
        axes.extend(cluster_kept.iter().map(|&i| cluster.axes[i]));
        let merged = LabeledTensor { axes, data };

        // canonical layout: cuts ascending, then blocks in arrival order
        // (newest node first)
        let mut perm: Vec<usize> = (0..merged.axes.len()).collect();
        perm.sort_by_key(|&i| match merged.axes[i] {
            Axis::Cut(k) => (0, k, 0),
            Axis::Block { .. } => (1, 0, i),
        });
        cluster = merged.permute(&perm);
    }
    (cluster, mults)
}

/// Execute the plan. Entry tensors are indexed by node and must carry the
/// `node_axes` layout. Sliced subgraphs contract independently (in parallel)
/// and are summed in ascending slice order.
pub fn contract(
    graph: &ComputeGraph,
    tensors: &[LabeledTensor],
    plan: &ContractionPlan,
) -> Result<ContractionOutput, ContractError> {
    if plan.order.len() != graph.node_count() {
        return Err(ContractError::BadPlan(format!(
            "order covers {} of {} nodes",
            plan.order.len(),
            graph.node_count()
        )));
    }
    for node in 0..graph.node_count() {
        let t = tensors.get(node).ok_or(ContractError::MissingEntry(node))?;
        let want: usize = LabeledTensor::node_axes(graph, node)
            .iter()
            .map(Axis::dim)
            .product();
        if t.data.len() != want {
            return Err(ContractError::DimensionMismatch {
                node,
                got: t.data.len(),
                want,
            });
        }
        if t.axes != LabeledTensor::node_axes(graph, node) {
            return Err(ContractError::BadPlan(format!(
                "node {node}: unexpected axis layout"
            )));
        }
    }

    let slice_cuts = plan.slices();
    let n_subgraphs = (CUT_DIM as u64).pow(slice_cuts.len() as u32) as usize;
    let results: Vec<(LabeledTensor, u64)> = (0..n_subgraphs)
        .into_par_iter()
        .map(|s| {
            let assignment: Vec<(usize, usize)> = slice_cuts
                .iter()
                .enumerate()
                .map(|(j, &cut)| (cut, (s >> (2 * j)) & 3))
                .collect();
            contract_single(graph, tensors, &plan.order, &assignment, 1.0)
        })
        .collect();

    let mut iter = results.into_iter();
    let (mut tensor, mut mults) = iter.next().expect("at least one subgraph");
    for (t, m) in iter {
        debug_assert_eq!(t.axes, tensor.axes);
        for (acc, v) in tensor.data.iter_mut().zip(&t.data) {
            *acc += v;
        }
        mults = mults.saturating_add(m);
    }
    Ok(ContractionOutput {
        tensor,
        multiplications: mults,
    })
}

/// Contract one summation term: every cut is fixed to the digit given in
/// `assignment`, and the first node's (restricted) entry is scaled by
/// `scale_first` on the way in.
pub fn contract_term(
    graph: &ComputeGraph,
    tensors: &[LabeledTensor],
    order: &[usize],
    assignment: &[(usize, usize)],
    scale_first: f64,
) -> Result<ContractionOutput, ContractError> {
    if order.len() != graph.node_count() {
        return Err(ContractError::BadPlan(format!(
            "order covers {} of {} nodes",
            order.len(),
            graph.node_count()
        )));
    }
    for k in 0..graph.cut_count() {
        if !assignment.iter().any(|&(cut, _)| cut == k) {
            return Err(ContractError::BadPlan(format!(
                "cut {k} has no fixed basis"
            )));
        }
    }
    let (tensor, multiplications) = contract_single(graph, tensors, order, assignment, scale_first);
    Ok(ContractionOutput {
        tensor,
        multiplications,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn worked_example() -> ComputeGraph {
        ComputeGraph::new(vec![2, 1, 16], vec![(0, 1), (0, 2), (0, 2), (1, 2)]).unwrap()
    }

    fn random_tensor(graph: &ComputeGraph, node: usize, rng: &mut ChaCha8Rng) -> LabeledTensor {
        let axes = LabeledTensor::node_axes(graph, node);
        let len: usize = axes.iter().map(Axis::dim).product();
        LabeledTensor::new(axes, (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> ComputeGraph {
        let n = rng.gen_range(2..=max_nodes);
        let dims: Vec<u64> = (0..n).map(|_| 1 << rng.gen_range(0..3)).collect();
        let n_edges = rng.gen_range(1..=2 * n);
        let edges: Vec<(usize, usize)> = (0..n_edges)
            .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
            .collect();
        ComputeGraph::new(dims, edges).unwrap()
    }

    /// Brute-force oracle: sum over every global cut assignment of the
    /// product of node entries, indexed by output blocks.
    fn brute_force(graph: &ComputeGraph, tensors: &[LabeledTensor]) -> Vec<f64> {
        let n = graph.node_count();
        let k = graph.cut_count();
        let out_len: usize = graph.node_dims.iter().map(|&d| d as usize).product();
        let mut result = vec![0.0; out_len];
        for assignment in 0..(CUT_DIM as u64).pow(k as u32) {
            let digit = |cut: usize| ((assignment >> (2 * cut)) & 3) as usize;
            for out in 0..out_len {
                // decompose out into per-node block indices, node 0 most significant
                let mut rem = out;
                let mut blocks = vec![0usize; n];
                for i in (0..n).rev() {
                    blocks[i] = rem % graph.node_dims[i] as usize;
                    rem /= graph.node_dims[i] as usize;
                }
                let mut term = 1.0;
                for node in 0..n {
                    let mut idx = 0usize;
                    for cut in graph.cuts_of(node) {
                        idx = idx * CUT_DIM + digit(cut);
                    }
                    idx = idx * graph.node_dims[node] as usize + blocks[node];
                    term *= tensors[node].data[idx];
                }
                result[out] += term;
            }
        }
        result
    }

    fn as_block_order(tensor: &LabeledTensor, n: usize) -> Vec<f64> {
        // reorder result blocks to node 0 major for comparison
        let canon = tensor.canonical();
        let nodes: Vec<usize> = canon
            .axes
            .iter()
            .map(|a| match a {
                Axis::Block { node, .. } => *node,
                _ => panic!("cut axis survived contraction"),
            })
            .collect();
        assert_eq!(nodes, (0..n).collect::<Vec<_>>());
        canon.data
    }

    #[test]
    fn golden_input_storage_and_step_costs() {
        let graph = worked_example();
        let plan = ContractionPlan::single(vec![0, 1, 2]);
        let cost = predict_cost(&graph, &plan);
        assert_eq!(cost.input_storage, 1168);
        assert_eq!(cost.steps.len(), 2);
        assert_eq!(cost.steps[0].multiplications, 512);
        assert_eq!(cost.steps[1].multiplications, 2048);
        assert_eq!(cost.multiplications, 2560);
        assert_eq!(cost.naive_multiplications, 8704);
        let ratio = cost.naive_multiplications as f64 / cost.multiplications as f64;
        assert!((ratio - 3.4).abs() < 0.01);
    }

    #[test]
    fn find_order_prefers_golden_staging() {
        let graph = worked_example();
        let plan = find_order(&graph);
        assert!(plan.optimal_order);
        assert_eq!(plan.order, vec![0, 1, 2]);
    }

    #[test]
    fn single_node_plan_is_empty() {
        let graph = ComputeGraph::new(vec![8], vec![]).unwrap();
        let plan = find_order(&graph);
        assert_eq!(plan.order, vec![0]);
        let cost = predict_cost(&graph, &plan);
        assert_eq!(cost.multiplications, 0);
        assert_eq!(cost.naive_multiplications, 0);
    }

    #[test]
    fn exhaustive_order_matches_factorial_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let graph = random_graph(&mut rng, 4);
            let plan = find_order(&graph);
            let best = permutations_lex(graph.node_count())
                .into_iter()
                .map(|p| order_multiplications(&graph, &p, &[]))
                .min()
                .unwrap();
            assert_eq!(order_multiplications(&graph, &plan.order, &[]), best);
        }
    }

    #[test]
    fn golden_slicing_example() {
        let graph = worked_example();
        let (slices, subgraphs) = slice_level1(&graph, 400).unwrap();
        assert_eq!(slices, vec![1]); // an edge between nodes 0 and 2
        assert_eq!(subgraphs, 4);
        assert_eq!(sliced_input_storage(&graph, &slices), 304);
    }

    #[test]
    fn no_slicing_when_it_already_fits() {
        let graph = worked_example();
        let (slices, subgraphs) = slice_level1(&graph, 1168).unwrap();
        assert!(slices.is_empty());
        assert_eq!(subgraphs, 1);
    }

    #[test]
    fn slicing_errors_when_nothing_fits() {
        let graph = worked_example();
        // even with all cuts sliced the outputs need 2 + 1 + 16 = 19 values
        let err = slice_level1(&graph, 10).unwrap_err();
        assert!(matches!(err, ContractError::CannotFit { .. }));
    }

    #[test]
    fn instrumented_count_matches_prediction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for round in 0..20 {
            let graph = random_graph(&mut rng, 5);
            let tensors: Vec<LabeledTensor> = (0..graph.node_count())
                .map(|i| random_tensor(&graph, i, &mut rng))
                .collect();
            let plan = find_order(&graph);
            let cost = predict_cost(&graph, &plan);
            let out = contract(&graph, &tensors, &plan).unwrap();
            assert_eq!(out.multiplications, cost.multiplications, "round {round}");
        }
    }

    #[test]
    fn contraction_matches_brute_force_and_any_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..8 {
            let graph = random_graph(&mut rng, 4);
            let tensors: Vec<LabeledTensor> = (0..graph.node_count())
                .map(|i| random_tensor(&graph, i, &mut rng))
                .collect();
            let expected = brute_force(&graph, &tensors);
            for perm in permutations_lex(graph.node_count()) {
                let plan = ContractionPlan::single(perm);
                let out = contract(&graph, &tensors, &plan).unwrap();
                let got = as_block_order(&out.tensor, graph.node_count());
                for (a, b) in got.iter().zip(&expected) {
                    assert!((a - b).abs() < 1e-9, "order variant disagrees");
                }
            }
        }
    }

    #[test]
    fn sliced_and_unsliced_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let graph = random_graph(&mut rng, 4);
            if graph.cut_count() < 2 {
                continue;
            }
            let tensors: Vec<LabeledTensor> = (0..graph.node_count())
                .map(|i| random_tensor(&graph, i, &mut rng))
                .collect();
            let base = find_order(&graph);
            let unsliced = contract(&graph, &tensors, &base).unwrap();
            let mut sliced_plan = base.clone();
            sliced_plan.level1_slices = vec![0, graph.cut_count() / 2];
            sliced_plan.level1_slices.dedup();
            let sliced = contract(&graph, &tensors, &sliced_plan).unwrap();
            for (a, b) in unsliced.tensor.data.iter().zip(&sliced.tensor.data) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn level2_slicing_reduces_peak_and_preserves_results() {
        let graph = worked_example();
        let plan = find_order(&graph);
        let base_cost = predict_cost(&graph, &plan);
        // limit at half the peak forces at least one level-2 slice
        let refined = slice_level2(&graph, &plan, base_cost.peak_intermediate / 2).unwrap();
        assert!(!refined.slices().is_empty());
        let refined_cost = predict_cost(&graph, &refined);
        assert!(refined_cost.peak_intermediate <= base_cost.peak_intermediate / 2);

        // unchanged when the limit is already met
        let same = slice_level2(&graph, &plan, base_cost.peak_intermediate).unwrap();
        assert!(same.slices().is_empty());

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tensors: Vec<LabeledTensor> = (0..graph.node_count())
            .map(|i| random_tensor(&graph, i, &mut rng))
            .collect();
        let a = contract(&graph, &tensors, &plan).unwrap();
        let b = contract(&graph, &tensors, &refined).unwrap();
        for (x, y) in a.tensor.data.iter().zip(&b.tensor.data) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn greedy_kicks_in_beyond_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = EXHAUSTIVE_ORDER_LIMIT + 1;
        let dims: Vec<u64> = vec![2; n];
        let edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        let graph = ComputeGraph::new(dims, edges).unwrap();
        let plan = find_order(&graph);
        assert!(!plan.optimal_order);
        assert_eq!(plan.order.len(), n);
        let tensors: Vec<LabeledTensor> =
            (0..n).map(|i| random_tensor(&graph, i, &mut rng)).collect();
        let out = contract(&graph, &tensors, &plan).unwrap();
        assert_eq!(
            out.multiplications,
            predict_cost(&graph, &plan).multiplications
        );
    }

    #[test]
    fn self_edges_are_summed_locally() {
        let graph = ComputeGraph::new(vec![2, 2], vec![(0, 0), (0, 1)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let tensors: Vec<LabeledTensor> =
            (0..2).map(|i| random_tensor(&graph, i, &mut rng)).collect();
        let plan = find_order(&graph);
        let out = contract(&graph, &tensors, &plan).unwrap();
        let expected = brute_force(&graph, &tensors);
        let got = as_block_order(&out.tensor, 2);
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
