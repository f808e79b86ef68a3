//! Rebuilds subcircuit fragments from a vertex partition.
//!
//! Every cut severs one qubit line between two two-qubit gates, splitting the
//! line into segments. A segment becomes one local qubit of the subcircuit
//! that owns its gates: it either starts at the circuit start or at a cut
//! (initialization side), and either ends at the circuit end (an output
//! qubit) or at a cut (measurement side). Single-qubit gates between the two
//! endpoint gates of a cut fall on the side of their attachment vertex.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::Circuit;
use crate::dag::GateDag;

/// A cut location in circuit terms: the qubit line between two gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutEdgeRef {
    pub gate_a: usize,
    pub gate_b: usize,
    pub qubit: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegStart {
    /// Line begins at the circuit start.
    Open,
    /// Line begins at a cut: initialization side of that cut.
    Cut(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegEnd {
    /// Line runs to the circuit end: contributes an output qubit.
    Open,
    /// Line ends at a cut: measurement side of that cut.
    Cut(usize),
}

#[derive(Debug, Clone)]
pub struct Segment {
    pub qubit: usize,
    pub subcircuit: usize,
    pub start: SegStart,
    pub end: SegEnd,
    /// Gate indices on this line within the segment, in circuit order.
    pub gates: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutSide {
    Measure,
    Init,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutRole {
    pub cut: usize,
    pub side: CutSide,
    pub subcircuit: usize,
    pub local_qubit: usize,
}

/// One subcircuit rebuilt as a standalone circuit.
#[derive(Debug, Clone)]
pub struct Fragment {
    pub subcircuit: usize,
    /// Bare fragment: owned gates in global order, remapped to local qubits.
    /// Variant dressing (preparations, rotations) is applied at evaluation.
    pub circuit: Circuit,
    pub roles: Vec<CutRole>,
    /// (local qubit, original qubit) for every line segment reaching the
    /// circuit end; these carry the subcircuit's output bits.
    pub outputs: Vec<(usize, usize)>,
}

impl Fragment {
    pub fn width(&self) -> usize {
        self.circuit.n_qubits
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    /// Distinct cuts attached to this fragment, ascending.
    pub fn attached_cuts(&self) -> Vec<usize> {
        let mut cuts: Vec<usize> = self.roles.iter().map(|r| r.cut).collect();
        cuts.sort_unstable();
        cuts.dedup();
        cuts
    }
}

#[derive(Debug, Clone)]
pub struct PartitionedCircuit {
    pub n_qubits: usize,
    pub n_subcircuits: usize,
    /// Cut locations indexed by cut id.
    pub cuts: Vec<CutEdgeRef>,
    pub fragments: Vec<Fragment>,
}

impl PartitionedCircuit {
    pub fn cut_count(&self) -> usize {
        self.cuts.len()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum FragmentError {
    #[error("assignment length {got} does not match vertex count {want}")]
    AssignmentLength { got: usize, want: usize },
    #[error("cut {cut} is missing a {side:?} role")]
    MissingRole { cut: usize, side: CutSide },
}

/// Quick per-subcircuit (width, output count) without building fragments;
/// used by the solver's feasibility checks. Matches `partition_circuit`.
pub fn subcircuit_stats(
    dag: &GateDag,
    assignment: &[usize],
    n_subcircuits: usize,
) -> Vec<(usize, usize)> {
    let segments = compute_segments(dag, assignment, n_subcircuits);
    let mut stats = vec![(0usize, 0usize); n_subcircuits];
    for seg in &segments {
        stats[seg.subcircuit].0 += 1;
        if seg.end == SegEnd::Open {
            stats[seg.subcircuit].1 += 1;
        }
    }
    stats
}

/// Cut edges implied by an assignment, in cut-id order.
pub fn cut_edges_of(dag: &GateDag, assignment: &[usize]) -> Vec<CutEdgeRef> {
    let mut cuts: Vec<CutEdgeRef> = dag
        .edges
        .iter()
        .filter(|e| assignment[e.source] != assignment[e.dest])
        .map(|e| CutEdgeRef {
            gate_a: dag.vertices[e.source].gate_index,
            gate_b: dag.vertices[e.dest].gate_index,
            qubit: e.qubit,
        })
        .collect();
    cuts.sort_unstable_by_key(|c| (c.gate_a, c.gate_b, c.qubit));
    cuts
}

/// Split every qubit line into segments at the cut points and attribute free
/// lines (no two-qubit gate) to the narrowest subcircuit so far.
fn compute_segments(dag: &GateDag, assignment: &[usize], n_subcircuits: usize) -> Vec<Segment> {
    let circuit = &dag.circuit;
    let cuts = cut_edges_of(dag, assignment);
    let cut_id = |gate_a: usize, gate_b: usize, qubit: usize| -> Option<usize> {
        cuts.iter()
            .position(|c| c.gate_a == gate_a && c.gate_b == gate_b && c.qubit == qubit)
    };

    // ordered touches per line: (gate index, vertex id or None)
    let mut line_touches: Vec<Vec<(usize, Option<usize>)>> = vec![Vec::new(); circuit.n_qubits];
    let mut vertex_of_gate = vec![None; circuit.gates.len()];
    for (vid, v) in dag.vertices.iter().enumerate() {
        vertex_of_gate[v.gate_index] = Some(vid);
    }
    for (gi, gate) in circuit.gates.iter().enumerate() {
        for &q in &gate.qubits {
            line_touches[q].push((gi, vertex_of_gate[gi]));
        }
    }

    let mut segments = Vec::new();
    let mut widths = vec![0usize; n_subcircuits];

    for q in 0..circuit.n_qubits {
        let touches = &line_touches[q];
        if touches.is_empty() {
            continue;
        }
        if dag.free_lines.contains(&q) {
            continue; // assigned below, after widths of vertexed lines are known
        }
        let mut current = Segment {
            qubit: q,
            subcircuit: usize::MAX,
            start: SegStart::Open,
            end: SegEnd::Open,
            gates: Vec::new(),
        };
        let mut prev_vertex: Option<(usize, usize)> = None; // (touch pos, vertex id)
        for (pos, &(gi, vid)) in touches.iter().enumerate() {
            if let Some(vid) = vid {
                if let Some((ppos, pvid)) = prev_vertex {
                    if assignment[pvid] != assignment[vid] {
                        // cut on this line between pvid and vid; single-qubit
                        // gates in between follow their attachment
                        let id = cut_id(
                            dag.vertices[pvid].gate_index,
                            dag.vertices[vid].gate_index,
                            q,
                        )
                        .expect("cut edge present for differing assignment");
                        let split: Vec<usize> = current
                            .gates
                            .iter()
                            .copied()
                            .filter(|&g| {
                                touches.iter().position(|&(tg, _)| tg == g).unwrap() > ppos
                                    && dag.attachment[g] == Some(vid)
                            })
                            .collect();
                        current.gates.retain(|g| !split.contains(g));
                        current.end = SegEnd::Cut(id);
                        current.subcircuit = assignment[pvid];
                        widths[assignment[pvid]] += 1;
                        segments.push(std::mem::replace(
                            &mut current,
                            Segment {
                                qubit: q,
                                subcircuit: usize::MAX,
                                start: SegStart::Cut(id),
                                end: SegEnd::Open,
                                gates: split,
                            },
                        ));
                    }
                }
                prev_vertex = Some((pos, vid));
                current.gates.push(gi);
            } else {
                current.gates.push(gi);
            }
        }
        let (_, last_vid) = prev_vertex.expect("non-free line has a vertex");
        current.subcircuit = assignment[last_vid];
        widths[assignment[last_vid]] += 1;
        segments.push(current);
    }

    // whole free lines go to the narrowest subcircuit (ties: lowest id)
    for &q in &dag.free_lines {
        let target = (0..n_subcircuits).min_by_key(|&c| (widths[c], c)).unwrap();
        widths[target] += 1;
        segments.push(Segment {
            qubit: q,
            subcircuit: target,
            start: SegStart::Open,
            end: SegEnd::Open,
            gates: line_touches[q].iter().map(|&(gi, _)| gi).collect(),
        });
    }

    segments
}

/// Rebuild all subcircuit fragments for an assignment.
pub fn partition_circuit(
    dag: &GateDag,
    assignment: &[usize],
    n_subcircuits: usize,
) -> Result<PartitionedCircuit, FragmentError> {
    if assignment.len() != dag.vertices.len() {
        return Err(FragmentError::AssignmentLength {
            got: assignment.len(),
            want: dag.vertices.len(),
        });
    }
    let circuit = &dag.circuit;
    let cuts = cut_edges_of(dag, assignment);
    let mut segments = compute_segments(dag, assignment, n_subcircuits);
    // deterministic local qubit order: by (original qubit, position on line)
    segments.sort_by_key(|s| (s.qubit, s.gates.first().copied().unwrap_or(usize::MAX)));

    let mut fragments: Vec<Fragment> = (0..n_subcircuits)
        .map(|c| Fragment {
            subcircuit: c,
            circuit: Circuit::new(0),
            roles: Vec::new(),
            outputs: Vec::new(),
        })
        .collect();

    // local qubit of each segment + per (gate, qubit) -> local qubit map
    let mut local_of_segment = vec![0usize; segments.len()];
    let mut gate_line_local: Vec<Vec<(usize, usize)>> = vec![Vec::new(); circuit.gates.len()];
    for (sid, seg) in segments.iter().enumerate() {
        let frag = &mut fragments[seg.subcircuit];
        let local = frag.circuit.n_qubits;
        frag.circuit.n_qubits += 1;
        local_of_segment[sid] = local;
        match seg.start {
            SegStart::Cut(id) => frag.roles.push(CutRole {
                cut: id,
                side: CutSide::Init,
                subcircuit: seg.subcircuit,
                local_qubit: local,
            }),
            SegStart::Open => {}
        }
        match seg.end {
            SegEnd::Cut(id) => frag.roles.push(CutRole {
                cut: id,
                side: CutSide::Measure,
                subcircuit: seg.subcircuit,
                local_qubit: local,
            }),
            SegEnd::Open => frag.outputs.push((local, seg.qubit)),
        }
        for &gi in &seg.gates {
            gate_line_local[gi].push((seg.qubit, local));
        }
    }

    // owned gates in global order, operands remapped through their segment
    for (gi, gate) in circuit.gates.iter().enumerate() {
        if gate_line_local[gi].is_empty() {
            continue;
        }
        let owner = segments
            .iter()
            .find(|s| s.gates.contains(&gi))
            .map(|s| s.subcircuit)
            .unwrap();
        let mut remapped = gate.clone();
        for q in remapped.qubits.iter_mut() {
            let (_, local) = gate_line_local[gi]
                .iter()
                .find(|&&(line, _)| line == *q)
                .copied()
                .expect("gate line has a segment");
            *q = local;
        }
        fragments[owner].circuit.gates.push(remapped);
    }

    for frag in &mut fragments {
        frag.roles.sort_by_key(|r| (r.cut, r.side == CutSide::Init));
    }

    // every cut must expose exactly one measure and one init role
    for (id, _) in cuts.iter().enumerate() {
        for side in [CutSide::Measure, CutSide::Init] {
            let count: usize = fragments
                .iter()
                .flat_map(|f| &f.roles)
                .filter(|r| r.cut == id && r.side == side)
                .count();
            if count != 1 {
                return Err(FragmentError::MissingRole { cut: id, side });
            }
        }
    }

    Ok(PartitionedCircuit {
        n_qubits: circuit.n_qubits,
        n_subcircuits,
        cuts,
        fragments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{parse_circuit, Gate};
    use crate::dag::build_dag;

    #[test]
    fn two_gate_chain_cut_in_middle() {
        let c = parse_circuit("qubits 3\nh 0\ncx 0 1\nz 1\ncx 1 2\nh 2\n").unwrap();
        let dag = build_dag(&c);
        let part = partition_circuit(&dag, &[0, 1], 2).unwrap();
        assert_eq!(part.cut_count(), 1);
        assert_eq!(
            part.cuts[0],
            CutEdgeRef {
                gate_a: 1,
                gate_b: 3,
                qubit: 1
            }
        );

        let f0 = &part.fragments[0];
        let f1 = &part.fragments[1];
        // fragment 0: qubit 0 line + front of line 1 (h, cx, z)
        assert_eq!(f0.width(), 2);
        assert_eq!(f0.circuit.gates.len(), 3);
        assert_eq!(f0.outputs.len(), 1);
        assert_eq!(f0.outputs[0].1, 0);
        assert_eq!(
            f0.roles,
            vec![CutRole {
                cut: 0,
                side: CutSide::Measure,
                subcircuit: 0,
                local_qubit: 1
            }]
        );
        // fragment 1: back of line 1 (cx) + line 2 (cx, h)
        assert_eq!(f1.width(), 2);
        assert_eq!(f1.circuit.gates.len(), 2);
        assert_eq!(
            f1.roles,
            vec![CutRole {
                cut: 0,
                side: CutSide::Init,
                subcircuit: 1,
                local_qubit: 0
            }]
        );
        let outs: Vec<usize> = f1.outputs.iter().map(|&(_, q)| q).collect();
        assert_eq!(outs, vec![1, 2]);
    }

    #[test]
    fn single_qubit_gates_follow_attachment_across_cut() {
        // z attaches to the earlier cx (tie), y to the later one
        let c = parse_circuit("qubits 3\ncx 0 1\nz 1\ny 1\ncx 1 2\n").unwrap();
        let dag = build_dag(&c);
        assert_eq!(dag.attachment[1], Some(0));
        assert_eq!(dag.attachment[2], Some(1));
        let part = partition_circuit(&dag, &[0, 1], 2).unwrap();
        let f0 = &part.fragments[0];
        let f1 = &part.fragments[1];
        assert!(f0
            .circuit
            .gates
            .iter()
            .any(|g| g.kind == crate::circuit::GateKind::Z));
        assert!(f1
            .circuit
            .gates
            .iter()
            .any(|g| g.kind == crate::circuit::GateKind::Y));
    }

    #[test]
    fn free_lines_go_to_narrowest_subcircuit() {
        let mut c = Circuit::new(4);
        c.push(Gate::cx(0, 1));
        c.push(Gate::cx(1, 2));
        c.push(Gate::h(3)); // line 3 has no two-qubit gate
        let dag = build_dag(&c);
        let part = partition_circuit(&dag, &[0, 1], 2).unwrap();
        // before the free line: sub 0 has 2 segments (lines 0, front 1),
        // sub 1 has 2 (back of 1, line 2) -> tie, free line lands in sub 0
        assert_eq!(part.fragments[0].width(), 3);
        let f0_outputs: Vec<usize> = part.fragments[0].outputs.iter().map(|&(_, q)| q).collect();
        assert!(f0_outputs.contains(&3));
        assert!(part.fragments[0]
            .circuit
            .gates
            .iter()
            .any(|g| g.kind == crate::circuit::GateKind::H));
    }

    #[test]
    fn double_cut_line_produces_three_segments() {
        // line 1 is cut twice: sub0 -> sub1 -> sub0
        let c = parse_circuit("qubits 3\ncx 0 1\ncx 1 2\ncx 0 1\n").unwrap();
        let dag = build_dag(&c);
        let part = partition_circuit(&dag, &[0, 1, 0], 2).unwrap();
        assert_eq!(part.cut_count(), 2);
        let f0 = &part.fragments[0];
        let f1 = &part.fragments[1];
        // sub 0 lines: 0 (whole), 1 front, 1 back -> width 3
        assert_eq!(f0.width(), 3);
        assert_eq!(f1.width(), 2);
        // sub 0 has one measure (cut 0) and one init (cut 1)
        let sides: Vec<(usize, CutSide)> = f0.roles.iter().map(|r| (r.cut, r.side)).collect();
        assert_eq!(sides, vec![(0, CutSide::Measure), (1, CutSide::Init)]);
        // outputs: sub0 owns lines 0 and 1-latest; sub1 owns line 2
        let f0_outs: Vec<usize> = f0.outputs.iter().map(|&(_, q)| q).collect();
        assert_eq!(f0_outs, vec![0, 1]);
        let f1_outs: Vec<usize> = f1.outputs.iter().map(|&(_, q)| q).collect();
        assert_eq!(f1_outs, vec![2]);
    }

    #[test]
    fn stats_match_partition() {
        let c = parse_circuit("qubits 4\nh 0\ncx 0 1\ncx 1 2\ncx 2 3\nz 3\ncx 0 1\n").unwrap();
        let dag = build_dag(&c);
        for assignment in [[0, 0, 1, 0], [0, 1, 1, 1], [0, 1, 0, 1]] {
            let stats = subcircuit_stats(&dag, &assignment, 2);
            let part = partition_circuit(&dag, &assignment, 2).unwrap();
            for c in 0..2 {
                assert_eq!(stats[c].0, part.fragments[c].width(), "{assignment:?}");
                assert_eq!(
                    stats[c].1,
                    part.fragments[c].output_count(),
                    "{assignment:?}"
                );
            }
        }
    }

    #[test]
    fn every_output_qubit_appears_once() {
        let c = parse_circuit("qubits 5\ncx 0 1\ncx 1 2\ncx 2 3\ncx 3 4\ncx 0 2\n").unwrap();
        let dag = build_dag(&c);
        let part = partition_circuit(&dag, &[0, 0, 1, 1, 0], 2).unwrap();
        let mut seen: Vec<usize> = part
            .fragments
            .iter()
            .flat_map(|f| f.outputs.iter().map(|&(_, q)| q))
            .collect();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3, 4]);
    }
}
