//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use qnes::ansatz::{build_rpqc, CircuitTemplate};
use qnes::numerics::SeededRng;
use qnes::simulator::{Angle, Gate, Pauli, PauliSum, PauliTerm, StateVector};

type CMatrix = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli_matrix(p: Option<Pauli>) -> CMatrix {
    let o = c(0.0, 0.0);
    let entries = match p {
        None => [c(1.0, 0.0), o, o, c(1.0, 0.0)],
        Some(Pauli::X) => [o, c(1.0, 0.0), c(1.0, 0.0), o],
        Some(Pauli::Y) => [o, c(0.0, -1.0), c(0.0, 1.0), o],
        Some(Pauli::Z) => [c(1.0, 0.0), o, o, c(-1.0, 0.0)],
    };
    CMatrix::from_row_slice(2, 2, &entries)
}

/// `ops[q]` acts on qubit `q`; qubit 0 is the least significant bit of a
/// basis index, so it is the rightmost Kronecker factor.
pub fn kron_all(ops: &[CMatrix]) -> CMatrix {
    ops.iter()
        .rev()
        .fold(CMatrix::identity(1, 1), |acc, op| acc.kronecker(op))
}

fn embed(num_qubits: usize, qubit: usize, op: CMatrix) -> CMatrix {
    let mut ops = vec![pauli_matrix(None); num_qubits];
    ops[qubit] = op;
    kron_all(&ops)
}

/// `exp(−iθP/2) = cos(θ/2) I − i sin(θ/2) P` on the full register.
pub fn rotation_unitary(num_qubits: usize, axis: Pauli, qubit: usize, theta: f64) -> CMatrix {
    let local =
        pauli_matrix(None) * c((theta / 2.0).cos(), 0.0) - pauli_matrix(Some(axis)) * c(0.0, (theta / 2.0).sin());
    embed(num_qubits, qubit, local)
}

/// `|0⟩⟨0|_a ⊗ I + |1⟩⟨1|_a ⊗ Z_b`.
pub fn cz_unitary(num_qubits: usize, a: usize, b: usize) -> CMatrix {
    let o = c(0.0, 0.0);
    let p0 = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), o, o, o]);
    let p1 = CMatrix::from_row_slice(2, 2, &[o, o, o, c(1.0, 0.0)]);
    let mut with_z = vec![pauli_matrix(None); num_qubits];
    with_z[a] = p1;
    with_z[b] = pauli_matrix(Some(Pauli::Z));
    embed(num_qubits, a, p0) + kron_all(&with_z)
}

/// Full `2^Q × 2^Q` unitary of a template, by dense multiplication.
pub fn dense_unitary(template: &CircuitTemplate, params: &[f64]) -> CMatrix {
    let q = template.num_qubits();
    let dim = 1 << q;
    template.gates().iter().fold(CMatrix::identity(dim, dim), |u, gate| {
        let g = match *gate {
            Gate::Rotation { axis, qubit, angle } => {
                let theta = match angle {
                    Angle::Slot(s) => params[s],
                    Angle::Fixed(a) => a,
                };
                rotation_unitary(q, axis, qubit, theta)
            }
            Gate::Cz(a, b) => cz_unitary(q, a, b),
        };
        g * u
    })
}

/// First column of the dense unitary: `U|0…0⟩`.
pub fn dense_state(template: &CircuitTemplate, params: &[f64]) -> DVector<Complex64> {
    dense_unitary(template, params).column(0).into_owned()
}

pub fn dense_hamiltonian(h: &PauliSum) -> CMatrix {
    let q = h.num_qubits();
    let dim = 1 << q;
    h.terms().iter().fold(CMatrix::zeros(dim, dim), |acc, term| {
        let ops: Vec<CMatrix> = (0..q).map(|i| pauli_matrix(term.factors.get(&i).copied())).collect();
        acc + kron_all(&ops) * c(term.coefficient, 0.0)
    })
}

/// `ψ† H ψ` by dense algebra.
pub fn dense_expectation(h: &PauliSum, state: &StateVector) -> f64 {
    let psi = DVector::from_column_slice(state.amplitudes());
    (psi.adjoint() * dense_hamiltonian(h) * &psi)[(0, 0)].re
}

pub fn random_params(rng: &mut SeededRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.0..TAU)).collect()
}

fn random_axis(rng: &mut SeededRng) -> Pauli {
    [Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..3)]
}

/// Layers of random rotations (slot or fixed angle) and CZs between
/// arbitrary, not necessarily adjacent, qubit pairs.
pub fn random_layered_circuit(rng: &mut SeededRng, num_qubits: usize, num_layers: usize) -> CircuitTemplate {
    let mut slot = 0;
    let mut layers = Vec::new();
    for _ in 0..num_layers {
        let mut layer = Vec::new();
        for _ in 0..rng.random_range(1..=2 * num_qubits) {
            let qubit = rng.random_range(0..num_qubits);
            if num_qubits > 1 && rng.random_bool(0.3) {
                let other = (qubit + rng.random_range(1..num_qubits)) % num_qubits;
                layer.push(Gate::Cz(qubit, other));
            } else {
                let angle = if rng.random_bool(0.8) {
                    slot += 1;
                    Angle::Slot(slot - 1)
                } else {
                    Angle::Fixed(rng.random_range(-TAU..TAU))
                };
                layer.push(Gate::Rotation {
                    axis: random_axis(rng),
                    qubit,
                    angle,
                });
            }
        }
        layers.push(layer);
    }
    CircuitTemplate::from_layers(num_qubits, Vec::new(), layers).unwrap()
}

/// A random RPQC or random layered circuit with `Q ≤ 3`, `L ≤ 3`.
pub fn random_small_circuit(rng: &mut SeededRng, index: usize) -> CircuitTemplate {
    let q = rng.random_range(1..=3);
    let l = rng.random_range(1..=3);
    if index.is_multiple_of(2) && q >= 2 {
        build_rpqc(q, l, rng.random())
    } else {
        Ok(random_layered_circuit(rng, q, l))
    }
    .unwrap()
}

/// Random Hermitian Pauli sum with `num_terms` strings plus an identity.
pub fn random_pauli_sum(rng: &mut SeededRng, num_qubits: usize, num_terms: usize) -> PauliSum {
    let mut terms = vec![PauliTerm::new(rng.random_range(-1.0..1.0), [])];
    for _ in 0..num_terms {
        let mut factors = Vec::new();
        for q in 0..num_qubits {
            if rng.random_bool(0.5) {
                factors.push((q, random_axis(rng)));
            }
        }
        terms.push(PauliTerm::new(rng.random_range(-1.0..1.0), factors));
    }
    PauliSum::new(num_qubits, terms).unwrap()
}
