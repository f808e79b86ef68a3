//! Importance sampling over the 4^K summation terms.
//!
//! Sampling c terms with replacement from any probability vector q gives the
//! unbiased estimator P~ = sum_k lambda_k (outer product of entries at k) /
//! (c q_k) with expected squared error
//!     E[eps] = (1/c) sum_k (1/q_k) prod_i |p_{i,k}|^2 - |P|^2 / c.
//! Choosing q_k proportional to prod_i |p_{i,k}| minimizes the error;
//! uniform sampling needs no entry knowledge; essential sampling draws from
//! one narrow subcircuit's per-term norms. Norms are Euclidean and computed
//! once per (subcircuit, local tuple), exploiting the entry repetition
//! across terms.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contraction::{contract_term, LabeledTensor};
use crate::fragments::PartitionedCircuit;
use crate::graph::{ComputeGraph, CUT_DIM};
use crate::subsim::{restore_full_state, EvalError};

#[derive(Debug, Error, PartialEq)]
pub enum SampleError {
    #[error("term {k} has zero sampling probability but non-zero weight")]
    ZeroProbabilityTerm { k: usize },
    #[error("all term weights are zero")]
    AllZeroWeights,
    #[error("narrow subcircuit norm vanishes at term {k} with non-zero weight")]
    EssentialUndefined { k: usize },
    #[error("probability vector has {got} entries, expected {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Per-term product norms w_k = prod_i ||p_{i,k}|| and their squares,
/// assembled from per-subcircuit norms per local basis tuple.
#[derive(Debug, Clone)]
pub struct TermWeights {
    pub cut_count: usize,
    /// Attached cuts per node, ascending (tensor axis order).
    pub node_cuts: Vec<Vec<usize>>,
    /// Euclidean norm of each node's entry vector per local tuple.
    pub node_norms: Vec<Vec<f64>>,
    /// w_k, length 4^K.
    pub weights: Vec<f64>,
    /// prod_i ||p_{i,k}||^2, length 4^K.
    pub weights_sq: Vec<f64>,
}

/// Local tuple index of a node for the global term k. Cut 0 is the most
/// significant global digit; a node's tuple uses its attached cuts ascending.
pub fn local_tuple(k: usize, cut_count: usize, node_cuts: &[usize]) -> usize {
    node_cuts.iter().fold(0usize, |acc, &cut| {
        let digit = (k / CUT_DIM.pow((cut_count - 1 - cut) as u32)) % CUT_DIM;
        acc * CUT_DIM + digit
    })
}

impl TermWeights {
    /// Combine per-node local-tuple norms into global term weights.
    pub fn from_node_norms(
        cut_count: usize,
        node_cuts: Vec<Vec<usize>>,
        node_norms: Vec<Vec<f64>>,
    ) -> TermWeights {
        let n_terms = CUT_DIM.pow(cut_count as u32);
        let mut weights = vec![1.0; n_terms];
        let mut weights_sq = vec![1.0; n_terms];
        for k in 0..n_terms {
            for (cuts, norms) in node_cuts.iter().zip(&node_norms) {
                let norm = norms[local_tuple(k, cut_count, cuts)];
                weights[k] *= norm;
                weights_sq[k] *= norm * norm;
            }
        }
        TermWeights {
            cut_count,
            node_cuts,
            node_norms,
            weights,
            weights_sq,
        }
    }

    pub fn term_count(&self) -> usize {
        self.weights.len()
    }
}

/// Euclidean norms of every subcircuit entry, combined per global term.
pub fn compute_weights(graph: &ComputeGraph, tensors: &[LabeledTensor]) -> TermWeights {
    let node_cuts: Vec<Vec<usize>> = (0..graph.node_count()).map(|i| graph.cuts_of(i)).collect();
    let node_norms: Vec<Vec<f64>> = (0..graph.node_count())
        .map(|i| {
            let out_dim = graph.node_dims[i] as usize;
            let tuples = tensors[i].data.len() / out_dim;
            (0..tuples)
                .map(|t| {
                    tensors[i].data[t * out_dim..(t + 1) * out_dim]
                        .iter()
                        .map(|v| v * v)
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        })
        .collect();
    TermWeights::from_node_norms(graph.cut_count(), node_cuts, node_norms)
}

/// q_k = w_k / sum w (the error-minimizing distribution).
pub fn optimal_probabilities(weights: &TermWeights) -> Result<Vec<f64>, SampleError> {
    let total: f64 = weights.weights.iter().sum();
    if total <= 0.0 {
        return Err(SampleError::AllZeroWeights);
    }
    Ok(weights.weights.iter().map(|w| w / total).collect())
}

pub fn uniform_probabilities(term_count: usize) -> Vec<f64> {
    vec![1.0 / term_count as f64; term_count]
}

/// q_k proportional to the narrow subcircuit's per-term entry norm.
pub fn essential_probabilities(
    weights: &TermWeights,
    narrow: usize,
) -> Result<Vec<f64>, SampleError> {
    let cuts = &weights.node_cuts[narrow];
    let norms = &weights.node_norms[narrow];
    let per_term: Vec<f64> = (0..weights.term_count())
        .map(|k| norms[local_tuple(k, weights.cut_count, cuts)])
        .collect();
    for (k, (&n, &w)) in per_term.iter().zip(&weights.weights).enumerate() {
        if n == 0.0 && w > 0.0 {
            return Err(SampleError::EssentialUndefined { k });
        }
    }
    let total: f64 = per_term.iter().sum();
    if total <= 0.0 {
        return Err(SampleError::AllZeroWeights);
    }
    Ok(per_term.into_iter().map(|n| n / total).collect())
}

/// Narrow subcircuit default: the node with the smallest entry table
/// 4^cuts * dim (ties: lowest id).
pub fn default_narrow_subcircuit(graph: &ComputeGraph) -> usize {
    (0..graph.node_count())
        .min_by_key(|&i| (graph.node_storage(i), i))
        .unwrap()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplingPlan {
    /// Sample count; may exceed the number of terms.
    pub c: u64,
    pub q: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleCounts {
    pub lambda: Vec<u64>,
    pub distinct: usize,
}

/// c independent categorical draws with replacement.
pub fn sample_terms(plan: &SamplingPlan) -> SampleCounts {
    let mut cumulative = Vec::with_capacity(plan.q.len());
    let mut acc = 0.0;
    for &p in &plan.q {
        acc += p;
        cumulative.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut lambda = vec![0u64; plan.q.len()];
    for _ in 0..plan.c {
        let u: f64 = rng.gen_range(0.0..acc.max(f64::MIN_POSITIVE));
        let k = cumulative
            .partition_point(|&x| x <= u)
            .min(plan.q.len() - 1);
        lambda[k] += 1;
    }
    let distinct = lambda.iter().filter(|&&l| l > 0).count();
    SampleCounts { lambda, distinct }
}

#[derive(Debug, Clone)]
pub struct EstimateOutput {
    /// P~ in original qubit order; an unbiased estimate, entries may be
    /// negative.
    pub probabilities: Vec<f64>,
    pub distinct_terms: usize,
    pub multiplications: u64,
}

/// Reconstruct P~ from the sampled counters: each distinct term contracts the
/// fully sliced graph with the first node's entry scaled by
/// lambda_k / (c q_k), summed in ascending term order.
pub fn estimate(
    partitioned: &PartitionedCircuit,
    tensors: &[LabeledTensor],
    plan: &SamplingPlan,
    counts: &SampleCounts,
) -> Result<EstimateOutput, SampleError> {
    let graph = ComputeGraph::from_partition(partitioned);
    let n_terms = CUT_DIM.pow(graph.cut_count() as u32);
    if plan.q.len() != n_terms || counts.lambda.len() != n_terms {
        return Err(SampleError::LengthMismatch {
            got: plan.q.len().min(counts.lambda.len()),
            want: n_terms,
        });
    }
    let order: Vec<usize> = (0..graph.node_count()).collect();
    let cut_count = graph.cut_count();
    let mut acc: Option<LabeledTensor> = None;
    let mut mults = 0u64;
    let mut distinct = 0usize;
    for (k, &l) in counts.lambda.iter().enumerate() {
        if l == 0 {
            continue;
        }
        if plan.q[k] <= 0.0 {
            return Err(SampleError::ZeroProbabilityTerm { k });
        }
        distinct += 1;
        let assignment: Vec<(usize, usize)> = (0..cut_count)
            .map(|cut| {
                (
                    cut,
                    (k / CUT_DIM.pow((cut_count - 1 - cut) as u32)) % CUT_DIM,
                )
            })
            .collect();
        let scale = l as f64 / (plan.c as f64 * plan.q[k]);
        let out =
            contract_term(&graph, tensors, &order, &assignment, scale).map_err(EvalError::from)?;
        mults = mults.saturating_add(out.multiplications);
        match &mut acc {
            None => acc = Some(out.tensor),
            Some(t) => {
                debug_assert_eq!(t.axes, out.tensor.axes);
                for (a, v) in t.data.iter_mut().zip(&out.tensor.data) {
                    *a += v;
                }
            }
        }
    }
    let tensor = match acc {
        Some(t) => t,
        None => {
            return Ok(EstimateOutput {
                probabilities: vec![0.0; 1 << partitioned.n_qubits],
                distinct_terms: 0,
                multiplications: 0,
            })
        }
    };
    Ok(EstimateOutput {
        probabilities: restore_full_state(&tensor, partitioned),
        distinct_terms: distinct,
        multiplications: mults,
    })
}

/// Closed-form expected squared error for sampling probabilities q:
/// (sum_k prod_i |p_{i,k}|^2 / q_k - |P|^2) / c. Pass the oracle |P|^2 when
/// available; omitting it reports the first term alone.
pub fn expected_error(
    q: &[f64],
    weights: &TermWeights,
    c: u64,
    p_norm_sq: Option<f64>,
) -> Result<f64, SampleError> {
    if q.len() != weights.term_count() {
        return Err(SampleError::LengthMismatch {
            got: q.len(),
            want: weights.term_count(),
        });
    }
    let mut sum = 0.0;
    for (k, (&qk, &wsq)) in q.iter().zip(&weights.weights_sq).enumerate() {
        if wsq == 0.0 {
            continue;
        }
        if qk <= 0.0 {
            return Err(SampleError::ZeroProbabilityTerm { k });
        }
        sum += wsq / qk;
    }
    Ok((sum - p_norm_sq.unwrap_or(0.0)) / c as f64)
}

/// The essential-sampling error evaluated by its own double-sum formula:
/// (1/c) sum_{k,k'} (|C_{1,k'}| / |C_{1,k}|) prod_i |C_{i,k}|^2 - |P|^2 / c.
pub fn essential_error(
    weights: &TermWeights,
    narrow: usize,
    c: u64,
    p_norm_sq: Option<f64>,
) -> Result<f64, SampleError> {
    let cuts = &weights.node_cuts[narrow];
    let norms = &weights.node_norms[narrow];
    let narrow_norm = |k: usize| norms[local_tuple(k, weights.cut_count, cuts)];
    let total: f64 = (0..weights.term_count()).map(narrow_norm).sum();
    let mut sum = 0.0;
    for k in 0..weights.term_count() {
        let wsq = weights.weights_sq[k];
        if wsq == 0.0 {
            continue;
        }
        let n = narrow_norm(k);
        if n == 0.0 {
            return Err(SampleError::EssentialUndefined { k });
        }
        sum += total / n * wsq;
    }
    Ok((sum - p_norm_sq.unwrap_or(0.0)) / c as f64)
}

/// Mean over estimator runs of the squared L2 distance to the ground truth.
pub fn empirical_mse(runs: &[Vec<f64>], truth: &[f64]) -> f64 {
    let total: f64 = runs
        .iter()
        .map(|run| {
            run.iter()
                .zip(truth)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum();
    total / runs.len() as f64
}
