//! Per-basis subcircuit variant generation and evaluation.
//!
//! Each cut contributes a {I, X, Y, Z} basis label. On the measurement side
//! the severed qubit is rotated into the labeled basis at the end of its
//! segment (nothing touches it afterwards) and summed out of the simulated
//! probabilities with eigenvalue signs; the per-cut factor 1/2 lives here.
//! On the initialization side the labeled operator is realized as a signed
//! combination of pure-state preparations:
//!   I -> |0><0| + |1><1|,   Z -> |0><0| - |1><1|,
//!   X -> 2|+><+| - |0><0| - |1><1|,  Y -> 2|+i><+i| - |0><0| - |1><1|.
//! Entries are real vectors over the fragment's output qubits, indexed by the
//! local basis tuple of its attached cuts; they are computed once and reused
//! across every global summation term that shares the tuple.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;

use thiserror::Error;

use crate::circuit::{Circuit, Gate};
use crate::contraction::{Axis, ContractError, LabeledTensor};
use crate::fragments::{CutSide, Fragment, PartitionedCircuit};
use crate::graph::CUT_DIM;
use crate::sim::{simulate_full, SimError};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Contract(#[from] ContractError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    I,
    X,
    Y,
    Z,
}

impl Basis {
    pub fn from_digit(d: usize) -> Basis {
        match d {
            0 => Basis::I,
            1 => Basis::X,
            2 => Basis::Y,
            _ => Basis::Z,
        }
    }

    pub fn digit(&self) -> usize {
        match self {
            Basis::I => 0,
            Basis::X => 1,
            Basis::Y => 2,
            Basis::Z => 3,
        }
    }
}

/// Basis labels for an ordered list of cuts, convertible to/from the linear
/// term index (first cut most significant).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisAssignment {
    pub labels: Vec<Basis>,
}

impl BasisAssignment {
    pub fn from_index(index: usize, n_cuts: usize) -> BasisAssignment {
        let mut labels = vec![Basis::I; n_cuts];
        let mut rem = index;
        for i in (0..n_cuts).rev() {
            labels[i] = Basis::from_digit(rem % CUT_DIM);
            rem /= CUT_DIM;
        }
        BasisAssignment { labels }
    }

    pub fn to_index(&self) -> usize {
        self.labels
            .iter()
            .fold(0, |acc, b| acc * CUT_DIM + b.digit())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Prep {
    Zero,
    One,
    Plus,
    PlusI,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Rotation {
    None,
    XBasis,
    YBasis,
}

fn rotation_for(basis: Basis) -> Rotation {
    match basis {
        Basis::I | Basis::Z => Rotation::None,
        Basis::X => Rotation::XBasis,
        Basis::Y => Rotation::YBasis,
    }
}

/// Outcome sign of a measured qubit: +1 always for the trace (I), else
/// (-1)^bit.
fn measure_sign(basis: Basis, bit: bool) -> f64 {
    match basis {
        Basis::I => 1.0,
        _ => {
            if bit {
                -1.0
            } else {
                1.0
            }
        }
    }
}

fn init_runs(basis: Basis) -> &'static [(Prep, f64)] {
    match basis {
        Basis::I => &[(Prep::Zero, 1.0), (Prep::One, 1.0)],
        Basis::Z => &[(Prep::Zero, 1.0), (Prep::One, -1.0)],
        Basis::X => &[(Prep::Plus, 2.0), (Prep::Zero, -1.0), (Prep::One, -1.0)],
        Basis::Y => &[(Prep::PlusI, 2.0), (Prep::Zero, -1.0), (Prep::One, -1.0)],
    }
}

/// One concrete runnable circuit contributing to an entry.
#[derive(Debug, Clone)]
pub struct RunVariant {
    pub circuit: Circuit,
    /// Signed weight, including the 1/2 per attached cut (measurement side).
    pub weight: f64,
    /// Post-processing: measured local qubits with their basis (the measured
    /// bits are summed out of the run's probabilities with eigenvalue signs).
    pub measured: Vec<(usize, Basis)>,
}

/// All concrete circuits and weights for one local basis tuple.
#[derive(Debug, Clone)]
pub struct VariantGroup {
    pub assignment: BasisAssignment,
    pub runs: Vec<RunVariant>,
}

fn dressed_circuit(
    fragment: &Fragment,
    preps: &[(usize, Prep)],
    rotations: &[(usize, Rotation)],
) -> Circuit {
    let mut c = Circuit::new(fragment.circuit.n_qubits);
    for &(q, prep) in preps {
        match prep {
            Prep::Zero => {}
            Prep::One => c.push(Gate::x(q)),
            Prep::Plus => c.push(Gate::h(q)),
            Prep::PlusI => {
                c.push(Gate::h(q));
                c.push(Gate::s(q));
            }
        }
    }
    c.gates.extend(fragment.circuit.gates.iter().cloned());
    for &(q, rot) in rotations {
        match rot {
            Rotation::None => {}
            Rotation::XBasis => c.push(Gate::h(q)),
            Rotation::YBasis => {
                // s-dagger up to global phase, then h
                c.push(Gate::rz(q, -FRAC_PI_2));
                c.push(Gate::h(q));
            }
        }
    }
    c
}

/// Enumerate every local basis tuple of the fragment with its runnable
/// circuits and recombination weights.
pub fn enumerate_variants(fragment: &Fragment) -> Vec<VariantGroup> {
    let cuts = fragment.attached_cuts();
    let measure_roles: Vec<_> = fragment
        .roles
        .iter()
        .filter(|r| r.side == CutSide::Measure)
        .collect();
    let init_roles: Vec<_> = fragment
        .roles
        .iter()
        .filter(|r| r.side == CutSide::Init)
        .collect();
    let half = 0.5f64.powi(measure_roles.len() as i32);

    let mut groups = Vec::with_capacity(CUT_DIM.pow(cuts.len() as u32));
    for index in 0..CUT_DIM.pow(cuts.len() as u32) {
        let assignment = BasisAssignment::from_index(index, cuts.len());
        let label = |cut: usize| assignment.labels[cuts.iter().position(|&c| c == cut).unwrap()];

        let rotations: Vec<(usize, Rotation)> = measure_roles
            .iter()
            .map(|r| (r.local_qubit, rotation_for(label(r.cut))))
            .collect();
        let measured: Vec<(usize, Basis)> = measure_roles
            .iter()
            .map(|r| (r.local_qubit, label(r.cut)))
            .collect();

        let mut runs = vec![RunVariant {
            circuit: Circuit::new(0),
            weight: half,
            measured: measured.clone(),
        }];
        let mut preps: Vec<Vec<(usize, Prep)>> = vec![Vec::new()];
        for role in &init_roles {
            let choices = init_runs(label(role.cut));
            let mut next_runs = Vec::with_capacity(runs.len() * choices.len());
            let mut next_preps = Vec::with_capacity(runs.len() * choices.len());
            for (run, prep) in runs.iter().zip(&preps) {
                for &(p, w) in choices {
                    let mut np = prep.clone();
                    np.push((role.local_qubit, p));
                    next_preps.push(np);
                    next_runs.push(RunVariant {
                        circuit: Circuit::new(0),
                        weight: run.weight * w,
                        measured: measured.clone(),
                    });
                }
            }
            runs = next_runs;
            preps = next_preps;
        }
        for (run, prep) in runs.iter_mut().zip(&preps) {
            run.circuit = dressed_circuit(fragment, prep, &rotations);
        }
        groups.push(VariantGroup { assignment, runs });
    }
    groups
}

/// Per-subcircuit binning used by merge mode: `states` are the output states
/// under analysis in enumeration order, `bins[j]` the bin of the j-th state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeBinning {
    pub states: Vec<u64>,
    pub bins: Vec<usize>,
    pub bin_count: usize,
}

impl NodeBinning {
    /// Round-robin assignment: state j goes to bin j mod bin_count.
    pub fn round_robin(states: Vec<u64>, bin_count: usize) -> NodeBinning {
        let bins = (0..states.len()).map(|j| j % bin_count).collect();
        NodeBinning {
            states,
            bins,
            bin_count,
        }
    }

    /// States of one bin, in enumeration order.
    pub fn bin_states(&self, bin: usize) -> Vec<u64> {
        self.states
            .iter()
            .zip(&self.bins)
            .filter(|&(_, &b)| b == bin)
            .map(|(&s, _)| s)
            .collect()
    }
}

/// Evaluates all subcircuit entries once (full output vectors per local basis
/// tuple) and derives bin-merged tensors on demand.
pub struct EntryEvaluator<'a> {
    partitioned: &'a PartitionedCircuit,
    full: Vec<LabeledTensor>,
}

impl<'a> EntryEvaluator<'a> {
    pub fn new(partitioned: &'a PartitionedCircuit) -> Result<EntryEvaluator<'a>, SimError> {
        let full = partitioned
            .fragments
            .par_iter()
            .map(evaluate_fragment)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(EntryEvaluator { partitioned, full })
    }

    /// Entry tensors in full-state mode: axes [cuts ascending..., output block].
    pub fn full_tensors(&self) -> &[LabeledTensor] {
        &self.full
    }

    /// Entry tensors with output states merged into bins per the assignment.
    pub fn binned_tensors(&self, binning: &[NodeBinning]) -> Vec<LabeledTensor> {
        assert_eq!(binning.len(), self.full.len());
        self.full
            .iter()
            .zip(binning)
            .map(|(tensor, nb)| {
                let (cut_axes, out_dim, node) = split_axes(tensor);
                let tuples = tensor.data.len() / out_dim;
                let mut data = vec![0.0; tuples * nb.bin_count];
                for t in 0..tuples {
                    let src = &tensor.data[t * out_dim..(t + 1) * out_dim];
                    let dst = &mut data[t * nb.bin_count..(t + 1) * nb.bin_count];
                    for (&state, &bin) in nb.states.iter().zip(&nb.bins) {
                        dst[bin] += src[state as usize];
                    }
                }
                let mut axes = cut_axes;
                axes.push(Axis::Block {
                    node,
                    dim: nb.bin_count,
                });
                LabeledTensor::new(axes, data)
            })
            .collect()
    }

    pub fn partitioned(&self) -> &PartitionedCircuit {
        self.partitioned
    }

    /// Debug dump: per subcircuit, the entry vector of every local basis
    /// tuple keyed by its label string (e.g. "XZ" for two attached cuts).
    pub fn entries_json(&self) -> String {
        let mut nodes = Vec::new();
        for (fragment, tensor) in self.partitioned.fragments.iter().zip(&self.full) {
            let cuts = fragment.attached_cuts();
            let out_dim = 1usize << fragment.outputs.len();
            let mut entries = serde_json::Map::new();
            for index in 0..tensor.data.len() / out_dim {
                let labels: String = BasisAssignment::from_index(index, cuts.len())
                    .labels
                    .iter()
                    .map(|b| match b {
                        Basis::I => 'I',
                        Basis::X => 'X',
                        Basis::Y => 'Y',
                        Basis::Z => 'Z',
                    })
                    .collect();
                entries.insert(
                    labels,
                    serde_json::json!(tensor.data[index * out_dim..(index + 1) * out_dim]),
                );
            }
            nodes.push(serde_json::json!({
                "subcircuit": fragment.subcircuit,
                "cuts": cuts,
                "entries": entries,
            }));
        }
        serde_json::to_string_pretty(&nodes).expect("entries serialize")
    }
}

fn split_axes(tensor: &LabeledTensor) -> (Vec<Axis>, usize, usize) {
    let mut cut_axes = tensor.axes.clone();
    let last = cut_axes.pop().expect("entry tensor has a block axis");
    match last {
        Axis::Block { node, dim } => (cut_axes, dim, node),
        Axis::Cut(_) => panic!("entry tensor must end with its output block"),
    }
}

fn evaluate_fragment(fragment: &Fragment) -> Result<LabeledTensor, SimError> {
    let cuts = fragment.attached_cuts();
    let measure_roles: Vec<_> = fragment
        .roles
        .iter()
        .filter(|r| r.side == CutSide::Measure)
        .collect();
    let init_roles: Vec<_> = fragment
        .roles
        .iter()
        .filter(|r| r.side == CutSide::Init)
        .collect();
    let width = fragment.circuit.n_qubits;
    let out_dim = 1usize << fragment.outputs.len();
    let half = 0.5f64.powi(measure_roles.len() as i32);

    // distinct physical runs: rotations per measure role x preps per init role
    let mut run_keys: Vec<(Vec<Rotation>, Vec<Prep>)> = vec![(
        measure_roles.iter().map(|_| Rotation::None).collect(),
        init_roles.iter().map(|_| Prep::Zero).collect(),
    )];
    for i in 0..measure_roles.len() {
        run_keys = run_keys
            .into_iter()
            .flat_map(|(rots, preps)| {
                [Rotation::None, Rotation::XBasis, Rotation::YBasis]
                    .into_iter()
                    .map(move |r| {
                        let mut rots = rots.clone();
                        rots[i] = r;
                        (rots, preps.clone())
                    })
            })
            .collect();
    }
    for i in 0..init_roles.len() {
        run_keys = run_keys
            .into_iter()
            .flat_map(|(rots, preps)| {
                [Prep::Zero, Prep::One, Prep::Plus, Prep::PlusI]
                    .into_iter()
                    .map(move |p| {
                        let mut preps = preps.clone();
                        preps[i] = p;
                        (rots.clone(), preps)
                    })
            })
            .collect();
    }

    let probs: Vec<Vec<f64>> = run_keys
        .par_iter()
        .map(|(rots, preps)| {
            let prep_list: Vec<(usize, Prep)> = init_roles
                .iter()
                .zip(preps)
                .map(|(r, &p)| (r.local_qubit, p))
                .collect();
            let rot_list: Vec<(usize, Rotation)> = measure_roles
                .iter()
                .zip(rots)
                .map(|(r, &rot)| (r.local_qubit, rot))
                .collect();
            simulate_full(&dressed_circuit(fragment, &prep_list, &rot_list))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let run_index: HashMap<(Vec<Rotation>, Vec<Prep>), usize> =
        run_keys.iter().cloned().zip(0..).collect();

    // bit extraction masks in fragment-sim convention (qubit 0 = MSB)
    let out_masks: Vec<usize> = fragment
        .outputs
        .iter()
        .map(|&(local, _)| 1usize << (width - 1 - local))
        .collect();
    let measure_masks: Vec<usize> = measure_roles
        .iter()
        .map(|r| 1usize << (width - 1 - r.local_qubit))
        .collect();

    let n_tuples = CUT_DIM.pow(cuts.len() as u32);
    let entries: Vec<Vec<f64>> = (0..n_tuples)
        .into_par_iter()
        .map(|index| {
            let assignment = BasisAssignment::from_index(index, cuts.len());
            let label =
                |cut: usize| assignment.labels[cuts.iter().position(|&c| c == cut).unwrap()];
            let rots: Vec<Rotation> = measure_roles
                .iter()
                .map(|r| rotation_for(label(r.cut)))
                .collect();
            let measure_bases: Vec<Basis> = measure_roles.iter().map(|r| label(r.cut)).collect();

            let mut values = vec![0.0; out_dim];
            // cartesian product over per-init-role run choices
            let choices: Vec<&[(Prep, f64)]> =
                init_roles.iter().map(|r| init_runs(label(r.cut))).collect();
            let mut combo = vec![0usize; init_roles.len()];
            loop {
                let mut weight = half;
                let preps: Vec<Prep> = combo
                    .iter()
                    .zip(&choices)
                    .map(|(&i, c)| {
                        weight *= c[i].1;
                        c[i].0
                    })
                    .collect();
                let p = &probs[run_index[&(rots.clone(), preps)]];
                for (state, &pr) in p.iter().enumerate() {
                    if pr == 0.0 {
                        continue;
                    }
                    let mut sign = 1.0;
                    for (mask, &basis) in measure_masks.iter().zip(&measure_bases) {
                        sign *= measure_sign(basis, state & mask != 0);
                    }
                    let mut out = 0usize;
                    for mask in &out_masks {
                        out = (out << 1) | usize::from(state & mask != 0);
                    }
                    values[out] += weight * sign * pr;
                }
                // advance
                let mut pos = init_roles.len();
                loop {
                    if pos == 0 {
                        break;
                    }
                    pos -= 1;
                    combo[pos] += 1;
                    if combo[pos] < choices[pos].len() {
                        break;
                    }
                    combo[pos] = 0;
                    if pos == 0 {
                        break;
                    }
                }
                if combo.iter().all(|&c| c == 0) {
                    break;
                }
            }
            values
        })
        .collect();

    let mut axes: Vec<Axis> = cuts.iter().map(|&c| Axis::Cut(c)).collect();
    axes.push(Axis::Block {
        node: fragment.subcircuit,
        dim: out_dim,
    });
    let mut data = Vec::with_capacity(n_tuples * out_dim);
    for e in entries {
        data.extend(e);
    }
    Ok(LabeledTensor::new(axes, data))
}

/// Map a contracted all-blocks tensor back to original qubit order.
pub fn restore_full_state(tensor: &LabeledTensor, partitioned: &PartitionedCircuit) -> Vec<f64> {
    let n = partitioned.n_qubits;
    // per axis: bit positions (from MSB of the global index) of its qubits
    let mut axis_bits: Vec<Vec<usize>> = Vec::with_capacity(tensor.axes.len());
    for axis in &tensor.axes {
        match *axis {
            Axis::Block { node, dim } => {
                let outputs = &partitioned.fragments[node].outputs;
                assert_eq!(dim, 1 << outputs.len());
                axis_bits.push(outputs.iter().map(|&(_, q)| n - 1 - q).collect());
            }
            Axis::Cut(_) => panic!("cut axis survived contraction"),
        }
    }
    let dims: Vec<usize> = tensor.axes.iter().map(Axis::dim).collect();
    let mut out = vec![0.0; 1 << n];
    for (flat, &v) in tensor.data.iter().enumerate() {
        let mut rem = flat;
        let mut global = 0usize;
        for (i, &d) in dims.iter().enumerate().rev() {
            let coord = rem % d;
            rem /= d;
            for (j, &shift) in axis_bits[i].iter().rev().enumerate() {
                if coord >> j & 1 == 1 {
                    global |= 1 << shift;
                }
            }
        }
        out[global] = v;
    }
    out
}

/// Exact reconstruction: evaluate entries, contract per plan, restore qubit
/// order. Returns the probability vector and the instrumented multiplication
/// count.
pub fn reconstruct_probabilities(
    partitioned: &PartitionedCircuit,
    plan: &crate::contraction::ContractionPlan,
) -> Result<(Vec<f64>, u64), EvalError> {
    let graph = crate::graph::ComputeGraph::from_partition(partitioned);
    let evaluator = EntryEvaluator::new(partitioned)?;
    let out = crate::contraction::contract(&graph, evaluator.full_tensors(), plan)?;
    Ok((
        restore_full_state(&out.tensor, partitioned),
        out.multiplications,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;
    use crate::contraction::find_order;
    use crate::dag::build_dag;
    use crate::fragments::partition_circuit;
    use crate::graph::ComputeGraph;

    fn reconstruct(circuit: &Circuit, assignment: &[usize], n_c: usize) -> Vec<f64> {
        let dag = build_dag(circuit);
        let part = partition_circuit(&dag, assignment, n_c).unwrap();
        let graph = ComputeGraph::from_partition(&part);
        let plan = find_order(&graph);
        let (probs, _) = reconstruct_probabilities(&part, &plan).unwrap();
        probs
    }

    fn l_inf(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn no_cut_fragment_reproduces_simulation() {
        let c = parse_circuit("qubits 3\nh 0\ncx 0 1\ncx 1 2\nt 2\n").unwrap();
        let dag = build_dag(&c);
        let part = partition_circuit(&dag, &[0, 0], 1).unwrap();
        let groups = enumerate_variants(&part.fragments[0]);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].runs.len(), 1);
        assert_eq!(groups[0].runs[0].weight, 1.0);
        let evaluator = EntryEvaluator::new(&part).unwrap();
        let tensor = &evaluator.full_tensors()[0];
        let expected = simulate_full(&c).unwrap();
        // outputs of the single fragment are the original qubits in order
        assert!(l_inf(&tensor.data, &expected) < 1e-12);
    }

    #[test]
    fn one_cut_reconstruction_matches_oracle() {
        let c = parse_circuit("qubits 3\nh 0\ncx 0 1\nz 1\ncx 1 2\nh 2\n").unwrap();
        let got = reconstruct(&c, &[0, 1], 2);
        let want = simulate_full(&c).unwrap();
        assert!(l_inf(&got, &want) < 1e-9, "L_inf = {}", l_inf(&got, &want));
        let sum: f64 = got.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_cut_reconstruction_matches_oracle() {
        // line 1 cut twice: subcircuit 0 holds both endpoints of the middle
        let c =
            parse_circuit("qubits 3\nh 0\nh 1\nh 2\ncx 0 1\nrz 1 0.7\ncx 1 2\nry 2 1.3\ncx 0 1\n")
                .unwrap();
        for assignment in [[0usize, 1, 0], [0, 1, 1]] {
            let got = reconstruct(&c, &assignment, 2);
            let want = simulate_full(&c).unwrap();
            assert!(
                l_inf(&got, &want) < 1e-9,
                "{assignment:?}: {}",
                l_inf(&got, &want)
            );
        }
    }

    #[test]
    fn three_subcircuits_match_oracle() {
        let c = parse_circuit("qubits 4\nh 0\ncx 0 1\nt 1\ncx 1 2\ns 2\ncx 2 3\nh 3\ncx 0 1\n")
            .unwrap();
        let got = reconstruct(&c, &[0, 1, 2, 0], 3);
        let want = simulate_full(&c).unwrap();
        assert!(l_inf(&got, &want) < 1e-9, "L_inf = {}", l_inf(&got, &want));
    }

    #[test]
    fn all_identity_entries_normalize_per_convention() {
        // with the 1/2 on the measurement side, the all-I entry sums to
        // 2^(-measure roles) * 2^(init roles): the identity operator injected
        // per init cut carries trace 2
        let c = parse_circuit("qubits 3\nh 0\ncx 0 1\ncx 1 2\n").unwrap();
        let dag = build_dag(&c);
        let part = partition_circuit(&dag, &[0, 1], 2).unwrap();
        let evaluator = EntryEvaluator::new(&part).unwrap();
        for fragment in &part.fragments {
            let tensor = &evaluator.full_tensors()[fragment.subcircuit];
            let out_dim = 1 << fragment.outputs.len();
            let all_i = &tensor.data[..out_dim];
            assert!(
                all_i.iter().all(|&v| v >= -1e-12),
                "all-I entries stay non-negative"
            );
            let measures = fragment
                .roles
                .iter()
                .filter(|r| r.side == CutSide::Measure)
                .count();
            let inits = fragment
                .roles
                .iter()
                .filter(|r| r.side == CutSide::Init)
                .count();
            let expected = 0.5f64.powi(measures as i32) * 2.0f64.powi(inits as i32);
            let sum: f64 = all_i.iter().sum();
            assert!(
                (sum - expected).abs() < 1e-9,
                "fragment {}: all-I sum {} vs {}",
                fragment.subcircuit,
                sum,
                expected
            );
        }
    }

    #[test]
    fn entries_are_reproducible_bit_for_bit() {
        let c = parse_circuit("qubits 3\nh 0\ncx 0 1\nrz 1 0.3\ncx 1 2\n").unwrap();
        let dag = build_dag(&c);
        let part = partition_circuit(&dag, &[0, 1], 2).unwrap();
        let a = EntryEvaluator::new(&part).unwrap();
        let b = EntryEvaluator::new(&part).unwrap();
        for (ta, tb) in a.full_tensors().iter().zip(b.full_tensors()) {
            assert_eq!(ta.data, tb.data);
        }
    }

    #[test]
    fn binned_entries_are_partial_sums() {
        let c = parse_circuit("qubits 3\nh 0\ncx 0 1\ncx 1 2\nry 2 0.9\n").unwrap();
        let dag = build_dag(&c);
        let part = partition_circuit(&dag, &[0, 1], 2).unwrap();
        let evaluator = EntryEvaluator::new(&part).unwrap();
        let binning: Vec<NodeBinning> = part
            .fragments
            .iter()
            .map(|f| NodeBinning::round_robin((0..1u64 << f.outputs.len()).collect(), 2))
            .collect();
        let binned = evaluator.binned_tensors(&binning);
        for (full, merged) in evaluator.full_tensors().iter().zip(&binned) {
            let (_, out_dim, _) = split_axes(full);
            let (_, bins, _) = split_axes(merged);
            let tuples = full.data.len() / out_dim;
            for t in 0..tuples {
                for b in 0..bins {
                    let direct: f64 = (0..out_dim)
                        .filter(|s| s % bins == b)
                        .map(|s| full.data[t * out_dim + s])
                        .sum();
                    let got = merged.data[t * bins + b];
                    assert!((direct - got).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_bin_collapses_to_vector_sum() {
        let c = parse_circuit("qubits 2\nh 0\ncx 0 1\ncx 0 1\n").unwrap();
        let dag = build_dag(&c);
        let part = partition_circuit(&dag, &[0, 1], 2).unwrap();
        let evaluator = EntryEvaluator::new(&part).unwrap();
        let binning: Vec<NodeBinning> = part
            .fragments
            .iter()
            .map(|f| NodeBinning::round_robin((0..1u64 << f.outputs.len()).collect(), 1))
            .collect();
        for (full, merged) in evaluator
            .full_tensors()
            .iter()
            .zip(evaluator.binned_tensors(&binning))
        {
            let (_, out_dim, _) = split_axes(full);
            let tuples = full.data.len() / out_dim;
            for t in 0..tuples {
                let s: f64 = full.data[t * out_dim..(t + 1) * out_dim].iter().sum();
                assert!((merged.data[t] - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn variant_counts_match_decomposition() {
        let c = parse_circuit("qubits 3\ncx 0 1\ncx 1 2\n").unwrap();
        let dag = build_dag(&c);
        let part = partition_circuit(&dag, &[0, 1], 2).unwrap();
        // measurement side: one group per basis, one run each
        let measure_frag = &part.fragments[0];
        let groups = enumerate_variants(measure_frag);
        assert_eq!(groups.len(), 4);
        assert!(groups.iter().all(|g| g.runs.len() == 1));
        assert!(groups.iter().all(|g| g.runs[0].weight == 0.5));
        // initialization side: I/Z need 2 runs, X/Y need 3
        let init_frag = &part.fragments[1];
        let groups = enumerate_variants(init_frag);
        let sizes: Vec<usize> = groups.iter().map(|g| g.runs.len()).collect();
        assert_eq!(sizes, vec![2, 3, 3, 2]); // I, X, Y, Z tuple order
        let z_weights: Vec<f64> = groups[3].runs.iter().map(|r| r.weight).collect();
        assert_eq!(z_weights, vec![1.0, -1.0]);
    }

    #[test]
    fn basis_assignment_is_a_bijection() {
        for n_cuts in 0..=3usize {
            for index in 0..CUT_DIM.pow(n_cuts as u32) {
                let a = BasisAssignment::from_index(index, n_cuts);
                assert_eq!(a.labels.len(), n_cuts);
                assert_eq!(a.to_index(), index);
            }
        }
        // first cut is the most significant digit
        let a = BasisAssignment::from_index(0b0100, 2); // 4 = digits (1, 0)
        assert_eq!(a.labels, vec![Basis::X, Basis::I]);
    }
}
