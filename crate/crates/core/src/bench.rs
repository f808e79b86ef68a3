//! Benchmark circuit generators: hidden-string search (bv), QAOA on random
//! 3-regular and Erdos-Renyi graphs, grid-pattern random circuits, and the
//! approximate quantum Fourier transform.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::{Circuit, Gate};

#[derive(Debug, Error, PartialEq)]
pub enum BenchError {
    #[error("secret must be a non-empty bitstring of 0/1, got `{0}`")]
    BadSecret(String),
    #[error("{0}")]
    UnsupportedSize(String),
}

/// Hidden-string circuit on `secret.len()` qubits. The last qubit doubles as
/// the kickback ancilla; the oracle is one cx per set bit among the first
/// n-1 positions, and the ancilla's deterministic final value is set to the
/// last secret bit. Simulating puts probability 1 on the state `secret`.
pub fn bv(secret: &str) -> Result<Circuit, BenchError> {
    let n = secret.len();
    if n < 2 || !secret.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(BenchError::BadSecret(secret.to_string()));
    }
    let bits: Vec<bool> = secret.bytes().map(|b| b == b'1').collect();
    let ancilla = n - 1;
    let mut c = Circuit::new(n);
    c.push(Gate::x(ancilla));
    for q in 0..n {
        c.push(Gate::h(q));
    }
    for (q, &bit) in bits[..n - 1].iter().enumerate() {
        if bit {
            c.push(Gate::cx(q, ancilla));
        }
    }
    for q in 0..n {
        c.push(Gate::h(q));
    }
    // ancilla is now |1>; flip when the last secret bit is 0
    if !bits[n - 1] {
        c.push(Gate::x(ancilla));
    }
    Ok(c)
}

/// Random n-bit secret with at least one set bit among the first n-1
/// positions, so the oracle contains at least one two-qubit gate.
pub fn random_secret(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let secret: String = (0..n)
            .map(|_| if rng.gen::<bool>() { '1' } else { '0' })
            .collect();
        if secret[..n - 1].contains('1') {
            return secret;
        }
    }
}

fn zz_interaction(c: &mut Circuit, u: usize, v: usize, gamma: f64) {
    c.push(Gate::cx(u, v));
    c.push(Gate::rz(v, 2.0 * gamma));
    c.push(Gate::cx(u, v));
}

fn qaoa_from_edges(
    n: usize,
    edges: &[(usize, usize)],
    rng: &mut ChaCha8Rng,
    rounds: usize,
) -> Circuit {
    let mut c = Circuit::new(n);
    for q in 0..n {
        c.push(Gate::h(q));
    }
    for _ in 0..rounds {
        let gamma: f64 = rng.gen_range(0.0..2.0 * PI);
        let beta: f64 = rng.gen_range(0.0..2.0 * PI);
        for &(u, v) in edges {
            zz_interaction(&mut c, u, v, gamma);
        }
        for q in 0..n {
            c.push(Gate::rx(q, 2.0 * beta));
        }
    }
    c
}

/// Random 3-regular graph via the configuration model, resampled until it is
/// simple. Requires even n >= 4.
fn random_regular_edges(n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>, BenchError> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(BenchError::UnsupportedSize(format!(
            "3-regular graph needs even n >= 4, got {n}"
        )));
    }
    'attempt: for _ in 0..10_000 {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| [v, v, v]).collect();
        stubs.shuffle(rng);
        let mut edges = Vec::with_capacity(3 * n / 2);
        for pair in stubs.chunks(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || edges.contains(&(u, v)) {
                continue 'attempt;
            }
            edges.push((u, v));
        }
        edges.sort_unstable();
        return Ok(edges);
    }
    Err(BenchError::UnsupportedSize(format!(
        "no simple 3-regular graph found for n = {n}"
    )))
}

/// QAOA ansatz over a random 3-regular interaction graph with random angles.
pub fn qaoa_regular(n: usize, seed: u64, rounds: usize) -> Result<Circuit, BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = random_regular_edges(n, &mut rng)?;
    Ok(qaoa_from_edges(n, &edges, &mut rng, rounds.max(1)))
}

/// QAOA ansatz over an Erdos-Renyi G(n, p) interaction graph.
pub fn qaoa_erdos(n: usize, seed: u64, p: f64, rounds: usize) -> Result<Circuit, BenchError> {
    if n < 2 {
        return Err(BenchError::UnsupportedSize(format!(
            "qaoa needs n >= 2, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    if edges.is_empty() {
        // keep the circuit cuttable
        edges.push((0, 1));
    }
    Ok(qaoa_from_edges(n, &edges, &mut rng, rounds.max(1)))
}

/// Grid-edge set activated by entangling layer `layer` on a rows x cols grid:
/// cycles horizontal-even, horizontal-odd, vertical-even, vertical-odd.
pub fn grid_pattern(rows: usize, cols: usize, layer: usize) -> Vec<(usize, usize)> {
    let at = |r: usize, c: usize| r * cols + c;
    let mut pairs = Vec::new();
    match layer % 4 {
        0 => {
            for r in 0..rows {
                for c in (0..cols.saturating_sub(1)).step_by(2) {
                    pairs.push((at(r, c), at(r, c + 1)));
                }
            }
        }
        1 => {
            for r in 0..rows {
                for c in (1..cols.saturating_sub(1)).step_by(2) {
                    pairs.push((at(r, c), at(r, c + 1)));
                }
            }
        }
        2 => {
            for c in 0..cols {
                for r in (0..rows.saturating_sub(1)).step_by(2) {
                    pairs.push((at(r, c), at(r + 1, c)));
                }
            }
        }
        _ => {
            for c in 0..cols {
                for r in (1..rows.saturating_sub(1)).step_by(2) {
                    pairs.push((at(r, c), at(r + 1, c)));
                }
            }
        }
    }
    pairs
}

/// Scaled-down grid random circuit with the (1 + layers + 1) depth pattern:
/// an h layer, `layers` entangling layers (cz along the cycling grid pattern,
/// preceded by a random single-qubit gate on every qubit), and a final h
/// layer. Gate count is rows*cols*(layers + 2) + sum of pattern sizes.
pub fn supremacy_grid(
    rows: usize,
    cols: usize,
    layers: usize,
    seed: u64,
) -> Result<Circuit, BenchError> {
    let n = rows * cols;
    if rows == 0 || cols == 0 || n < 2 {
        return Err(BenchError::UnsupportedSize(format!(
            "grid {rows}x{cols} too small"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(n);
    for q in 0..n {
        c.push(Gate::h(q));
    }
    for layer in 0..layers {
        for q in 0..n {
            match rng.gen_range(0..3) {
                0 => c.push(Gate::t(q)),
                1 => c.push(Gate::rx(q, FRAC_PI_2)),
                _ => c.push(Gate::ry(q, FRAC_PI_2)),
            }
        }
        for (u, v) in grid_pattern(rows, cols, layer) {
            c.push(Gate::cz(u, v));
        }
    }
    for q in 0..n {
        c.push(Gate::h(q));
    }
    Ok(c)
}

/// Controlled phase via rz/cx, up to global phase.
fn controlled_phase(c: &mut Circuit, control: usize, target: usize, theta: f64) {
    c.push(Gate::rz(control, theta / 2.0));
    c.push(Gate::rz(target, theta / 2.0));
    c.push(Gate::cx(control, target));
    c.push(Gate::rz(target, -theta / 2.0));
    c.push(Gate::cx(control, target));
}

/// Approximate QFT: controlled phases with distance up to `degree` are kept
/// (degree >= n gives the full QFT, without the final bit-reversal swaps).
pub fn aqft(n: usize, degree: usize) -> Result<Circuit, BenchError> {
    if n < 2 {
        return Err(BenchError::UnsupportedSize(format!(
            "aqft needs n >= 2, got {n}"
        )));
    }
    let mut c = Circuit::new(n);
    for j in 0..n {
        c.push(Gate::h(j));
        for k in j + 1..n {
            let dist = k - j;
            if dist < degree.max(1) {
                controlled_phase(&mut c, k, j, PI / (1 << dist) as f64);
            }
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchKind {
    Bv,
    QaoaRegular,
    QaoaErdos,
    SupremacyGrid,
    Aqft,
}

impl BenchKind {
    pub fn from_name(name: &str) -> Option<BenchKind> {
        Some(match name {
            "bv" => BenchKind::Bv,
            "qaoa-regular" => BenchKind::QaoaRegular,
            "qaoa-erdos" => BenchKind::QaoaErdos,
            "supremacy-grid" => BenchKind::SupremacyGrid,
            "aqft" => BenchKind::Aqft,
            _ => return None,
        })
    }
}
