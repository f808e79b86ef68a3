//! Dense statevector simulator.
//!
//! Amplitudes are `Complex64`; basis state `j` is read MSB-first, so qubit 0
//! maps to the highest-order bit of the index and the bitstring of `j`
//! (zero-padded to n bits) lines up with qubit order.

use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::{Circuit, Gate, GateKind};

/// Widest register the simulator will evaluate.
pub const SIM_WIDTH_CAP: usize = 24;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("circuit has {n} qubits, simulator cap is {cap}")]
    WidthCap { n: usize, cap: usize },
}

#[derive(Debug, Clone)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |0...0> on n qubits.
    pub fn zero(n: usize) -> StateVector {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        StateVector { n, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    fn mask(&self, qubit: usize) -> usize {
        1 << (self.n - 1 - qubit)
    }

    fn apply_single(&mut self, qubit: usize, m: [Complex64; 4]) {
        let mask = self.mask(qubit);
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let a = self.amps[i];
                let b = self.amps[j];
                self.amps[i] = m[0] * a + m[1] * b;
                self.amps[j] = m[2] * a + m[3] * b;
            }
        }
    }

    pub fn apply(&mut self, gate: &Gate) {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        match gate.kind {
            GateKind::H => {
                let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                self.apply_single(gate.qubits[0], [h, h, h, -h]);
            }
            GateKind::X => self.apply_single(gate.qubits[0], [zero, one, one, zero]),
            GateKind::Y => {
                let i = Complex64::new(0.0, 1.0);
                self.apply_single(gate.qubits[0], [zero, -i, i, zero]);
            }
            GateKind::Z => self.apply_single(gate.qubits[0], [one, zero, zero, -one]),
            GateKind::S => {
                let i = Complex64::new(0.0, 1.0);
                self.apply_single(gate.qubits[0], [one, zero, zero, i]);
            }
            GateKind::T => {
                let t = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
                self.apply_single(gate.qubits[0], [one, zero, zero, t]);
            }
            GateKind::Rx => {
                let half = gate.params[0] / 2.0;
                let c = Complex64::new(half.cos(), 0.0);
                let s = Complex64::new(0.0, -half.sin());
                self.apply_single(gate.qubits[0], [c, s, s, c]);
            }
            GateKind::Ry => {
                let half = gate.params[0] / 2.0;
                let c = Complex64::new(half.cos(), 0.0);
                let s = Complex64::new(half.sin(), 0.0);
                self.apply_single(gate.qubits[0], [c, -s, s, c]);
            }
            GateKind::Rz => {
                let half = gate.params[0] / 2.0;
                let p0 = Complex64::from_polar(1.0, -half);
                let p1 = Complex64::from_polar(1.0, half);
                self.apply_single(gate.qubits[0], [p0, zero, zero, p1]);
            }
            GateKind::Cx => {
                let c_mask = self.mask(gate.qubits[0]);
                let t_mask = self.mask(gate.qubits[1]);
                for i in 0..self.amps.len() {
                    if i & c_mask != 0 && i & t_mask == 0 {
                        self.amps.swap(i, i | t_mask);
                    }
                }
            }
            GateKind::Cz => {
                let a_mask = self.mask(gate.qubits[0]);
                let b_mask = self.mask(gate.qubits[1]);
                let both = a_mask | b_mask;
                for i in 0..self.amps.len() {
                    if i & both == both {
                        self.amps[i] = -self.amps[i];
                    }
                }
            }
        }
    }

    /// |amplitude|^2 per computational-basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Run the circuit from |0...0> and return the output probability vector.
pub fn simulate_full(circuit: &Circuit) -> Result<Vec<f64>, SimError> {
    if circuit.n_qubits > SIM_WIDTH_CAP {
        return Err(SimError::WidthCap {
            n: circuit.n_qubits,
            cap: SIM_WIDTH_CAP,
        });
    }
    let mut state = StateVector::zero(circuit.n_qubits);
    for gate in &circuit.gates {
        state.apply(gate);
    }
    Ok(state.probabilities())
}
