//! Two-qubit-gate DAG used by the cut solver.
//!
//! Vertices are the two-qubit gates in circuit order. Each qubit line
//! contributes one directed edge per consecutive pair of two-qubit gates on
//! that line. Single-qubit gates do not affect connectivity; each is attached
//! to its closest two-qubit gate on the same line (earlier gate on a distance
//! tie). Lines with no two-qubit gate at all are tracked separately and
//! attributed to a subcircuit when fragments are rebuilt.

use crate::circuit::Circuit;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DagVertex {
    pub gate_index: usize,
    pub qubits: (usize, usize),
}

/// Directed qubit-line segment between two vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DagEdge {
    pub source: usize,
    pub dest: usize,
    pub qubit: usize,
}

#[derive(Debug, Clone)]
pub struct GateDag {
    pub circuit: Circuit,
    pub vertices: Vec<DagVertex>,
    pub edges: Vec<DagEdge>,
    /// Per gate index: the vertex a single-qubit gate is attached to.
    /// `None` for two-qubit gates themselves and for gates on free lines.
    pub attachment: Vec<Option<usize>>,
    /// Qubit lines with no two-qubit gate.
    pub free_lines: Vec<usize>,
    /// Per qubit: vertex ids touching that line, in circuit order.
    pub line_vertices: Vec<Vec<usize>>,
}

impl GateDag {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }
}

pub fn build_dag(circuit: &Circuit) -> GateDag {
    let n = circuit.n_qubits;
    let mut vertices = Vec::new();
    let mut vertex_of_gate = vec![None; circuit.gates.len()];
    // per line: (circuit position within the line, gate index, vertex id or None)
    let mut line_touches: Vec<Vec<(usize, Option<usize>)>> = vec![Vec::new(); n];

    for (gi, gate) in circuit.gates.iter().enumerate() {
        if gate.is_two_qubit() {
            let v = vertices.len();
            vertices.push(DagVertex {
                gate_index: gi,
                qubits: (gate.qubits[0], gate.qubits[1]),
            });
            vertex_of_gate[gi] = Some(v);
            for &q in &gate.qubits {
                line_touches[q].push((gi, Some(v)));
            }
        } else {
            line_touches[gate.qubits[0]].push((gi, None));
        }
    }

    let mut edges = Vec::new();
    let mut attachment = vec![None; circuit.gates.len()];
    let mut free_lines = Vec::new();
    let mut line_vertices = vec![Vec::new(); n];

    for q in 0..n {
        let touches = &line_touches[q];
        let vertex_positions: Vec<usize> = touches
            .iter()
            .enumerate()
            .filter_map(|(pos, &(_, v))| v.map(|_| pos))
            .collect();
        if vertex_positions.is_empty() {
            if !touches.is_empty() {
                free_lines.push(q);
            }
            continue;
        }
        line_vertices[q] = vertex_positions
            .iter()
            .map(|&p| touches[p].1.unwrap())
            .collect();
        for w in vertex_positions.windows(2) {
            edges.push(DagEdge {
                source: touches[w[0]].1.unwrap(),
                dest: touches[w[1]].1.unwrap(),
                qubit: q,
            });
        }
        // attach single-qubit gates to the nearest vertex on this line,
        // measured in positions along the line; earlier wins ties
        for (pos, &(gi, v)) in touches.iter().enumerate() {
            if v.is_some() {
                continue;
            }
            let prev = vertex_positions.iter().rev().find(|&&p| p < pos).copied();
            let next = vertex_positions.iter().find(|&&p| p > pos).copied();
            let chosen = match (prev, next) {
                (Some(a), Some(b)) => {
                    if pos - a <= b - pos {
                        a
                    } else {
                        b
                    }
                }
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => unreachable!(),
            };
            attachment[gi] = touches[chosen].1;
        }
    }

    GateDag {
        circuit: circuit.clone(),
        vertices,
        edges,
        attachment,
        free_lines,
        line_vertices,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{parse_circuit, Gate};

    #[test]
    fn single_cx_is_one_vertex_no_edges() {
        let c = parse_circuit("qubits 2\ncx 0 1\n").unwrap();
        let dag = build_dag(&c);
        assert_eq!(dag.vertex_count(), 1);
        assert!(dag.edges.is_empty());
        assert!(dag.free_lines.is_empty());
    }

    #[test]
    fn chain_shares_line_one() {
        let c = parse_circuit("qubits 3\ncx 0 1\ncx 1 2\n").unwrap();
        let dag = build_dag(&c);
        assert_eq!(dag.vertex_count(), 2);
        assert_eq!(
            dag.edges,
            vec![DagEdge {
                source: 0,
                dest: 1,
                qubit: 1
            }]
        );
    }

    #[test]
    fn no_two_qubit_gates_yields_empty_dag() {
        let c = parse_circuit("qubits 2\nh 0\nh 1\n").unwrap();
        let dag = build_dag(&c);
        assert_eq!(dag.vertex_count(), 0);
        assert_eq!(dag.free_lines, vec![0, 1]);
    }

    #[test]
    fn attachment_prefers_earlier_on_tie() {
        // h sits exactly between the two cx gates on line 1
        let c = parse_circuit("qubits 3\ncx 0 1\nh 1\ncx 1 2\n").unwrap();
        let dag = build_dag(&c);
        assert_eq!(dag.attachment[1], Some(0));
    }

    #[test]
    fn attachment_uses_line_distance() {
        // on line 1: cx, h, h, cx -> first h attaches to vertex 0, second to vertex 1
        let c = parse_circuit("qubits 3\ncx 0 1\nh 1\nz 1\ncx 1 2\n").unwrap();
        let dag = build_dag(&c);
        assert_eq!(dag.attachment[1], Some(0));
        assert_eq!(dag.attachment[2], Some(1));
    }

    #[test]
    fn attachment_with_only_one_side() {
        let c = parse_circuit("qubits 2\nh 0\ncx 0 1\nz 1\n").unwrap();
        let dag = build_dag(&c);
        assert_eq!(dag.attachment[0], Some(0));
        assert_eq!(dag.attachment[2], Some(0));
    }

    #[test]
    fn five_qubit_qaoa_style_vertices_are_exactly_two_qubit_gates() {
        // interaction gadgets along a line, two cx each
        let mut c = Circuit::new(5);
        for q in 0..5 {
            c.push(Gate::h(q));
        }
        for (u, v) in [(0usize, 1usize), (1, 2), (2, 3), (3, 4)] {
            c.push(Gate::cx(u, v));
            c.push(Gate::rz(v, 0.4));
            c.push(Gate::cx(u, v));
        }
        let dag = build_dag(&c);
        assert_eq!(dag.vertex_count(), c.two_qubit_gate_count());
        assert_eq!(dag.vertex_count(), 8);
        // every single-qubit gate attached somewhere
        for (gi, gate) in c.gates.iter().enumerate() {
            if !gate.is_two_qubit() {
                assert!(dag.attachment[gi].is_some());
            }
        }
    }

    #[test]
    fn edge_count_matches_per_line_formula() {
        let c = parse_circuit("qubits 4\ncx 0 1\ncx 1 2\ncx 2 3\ncx 0 1\nh 3\n").unwrap();
        let dag = build_dag(&c);
        let mut expected = 0;
        for q in 0..c.n_qubits {
            let touches = c
                .gates
                .iter()
                .filter(|g| g.is_two_qubit() && g.qubits.contains(&q))
                .count();
            expected += touches.saturating_sub(1);
        }
        assert_eq!(dag.edges.len(), expected);
    }
}
