//! Pauli-sum Hamiltonian files and exact diagonalization.
//!
//! File format, one item per line:
//!
//! ```text
//! # comment
//! qubits 2
//! 0.5 Z0 Z1
//! -1.0 I
//! ```
//!
//! The first non-comment line declares the qubit count. Every other
//! non-comment line is a coefficient followed by Pauli factors `<P><q>` with
//! `P ∈ {X, Y, Z}`, or the single token `I` for a constant term.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::ansatz::CircuitTemplate;
use crate::error::{Error, Result};
use crate::simulator::{pauli_expectation, run_circuit, Pauli, PauliSum, PauliTerm};

/// Largest register [`exact_ground_energy`] will densify.
pub const MAX_DENSE_QUBITS: usize = 12;

const BUNDLED_H2: &str = include_str!("../data/h2_sto3g.ham");

/// The 4-qubit H₂ Hamiltonian shipped with the crate.
pub fn bundled_h2() -> PauliSum {
    parse_pauli_file(BUNDLED_H2).expect("bundled Hamiltonian parses")
}

pub fn bundled_h2_text() -> &'static str {
    BUNDLED_H2
}

pub fn parse_pauli_file(text: &str) -> Result<PauliSum> {
    let mut num_qubits: Option<usize> = None;
    let mut terms = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| Error::Parse { line: line_no, message };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let first = tokens.next().unwrap();
        let Some(declared) = num_qubits else {
            if first != "qubits" {
                return Err(err(format!("expected `qubits <N>`, found `{line}`")));
            }
            let n = tokens
                .next()
                .ok_or_else(|| err("missing qubit count".into()))?
                .parse::<usize>()
                .map_err(|e| err(format!("bad qubit count: {e}")))?;
            if n == 0 {
                return Err(err("qubit count must be positive".into()));
            }
            if tokens.next().is_some() {
                return Err(err("trailing tokens after qubit count".into()));
            }
            num_qubits = Some(n);
            continue;
        };
        let coefficient: f64 = first
            .parse()
            .map_err(|_| err(format!("malformed coefficient `{first}`")))?;
        if !coefficient.is_finite() {
            return Err(err(format!("non-finite coefficient `{first}`")));
        }
        let rest: Vec<&str> = tokens.collect();
        let mut factors = BTreeMap::new();
        match rest.as_slice() {
            [] => return Err(err("term has no Pauli factors (use `I` for a constant)".into())),
            ["I"] => {}
            factor_tokens => {
                for tok in factor_tokens {
                    let (letter, index) = tok.split_at(tok.char_indices().nth(1).map_or(tok.len(), |(i, _)| i));
                    let pauli = letter
                        .parse::<Pauli>()
                        .map_err(|_| err(format!("unknown Pauli letter in `{tok}`")))?;
                    let q: usize = index.parse().map_err(|_| err(format!("bad qubit index in `{tok}`")))?;
                    if q >= declared {
                        return Err(err(format!("qubit {q} out of range for {declared} qubits")));
                    }
                    if factors.insert(q, pauli).is_some() {
                        return Err(err(format!("qubit {q} appears twice in one term")));
                    }
                }
            }
        }
        terms.push(PauliTerm { coefficient, factors });
    }
    let n = num_qubits.ok_or(Error::Parse {
        line: 0,
        message: "missing `qubits <N>` header".into(),
    })?;
    PauliSum::new(n, terms)
}

pub fn read_pauli_file(path: &Path) -> Result<PauliSum> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pauli_file(&text)
}

/// Writes `h` in the file format, coefficients at full precision.
pub fn serialize_pauli_sum(h: &PauliSum) -> String {
    let mut out = format!("qubits {}\n", h.num_qubits());
    for t in h.terms() {
        let _ = write!(out, "{:?}", t.coefficient);
        if t.factors.is_empty() {
            out.push_str(" I");
        }
        for (q, p) in &t.factors {
            let _ = write!(out, " {p}{q}");
        }
        out.push('\n');
    }
    out
}

/// Dense `2^Q × 2^Q` matrix of `h`.
pub fn dense_matrix(h: &PauliSum) -> Result<DMatrix<Complex64>> {
    let q = h.num_qubits();
    if q > MAX_DENSE_QUBITS {
        return Err(Error::Size(q));
    }
    let dim = 1usize << q;
    let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for term in h.terms() {
        let (flip, phase) = term.phase_table();
        for col in 0..dim {
            m[(col ^ flip, col)] += phase(col) * term.coefficient;
        }
    }
    Ok(m)
}

/// Smallest eigenvalue of `h`.
pub fn exact_ground_energy(h: &PauliSum) -> Result<f64> {
    let m = dense_matrix(h)?;
    let eigenvalues = SymmetricEigen::new(m).eigenvalues;
    Ok(eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Energy `⟨ψ(θ)|H|ψ(θ)⟩`.
pub fn vqe_fitness(template: &CircuitTemplate, params: &[f64], h: &PauliSum) -> Result<f64> {
    pauli_expectation(&run_circuit(template, params)?, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{Angle, Gate};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn parses_two_qubit_term() {
        let h = parse_pauli_file("qubits 2\n0.5 Z0 Z1").unwrap();
        assert_eq!(h.num_qubits(), 2);
        assert_eq!(h.terms().len(), 1);
        assert_eq!(h.terms()[0].coefficient, 0.5);
        assert_eq!(h.terms()[0].factors, BTreeMap::from([(0, Pauli::Z), (1, Pauli::Z)]));
    }

    #[test]
    fn parses_identity() {
        let h = parse_pauli_file("qubits 1\n-1.0 I").unwrap();
        assert_eq!(h.terms()[0].coefficient, -1.0);
        assert!(h.terms()[0].factors.is_empty());
    }

    #[test]
    fn comments_and_blank_lines() {
        let h = parse_pauli_file("# header\n\nqubits 3 # three\n  \n1e-3 X2 # tail\n+2 Y0\n").unwrap();
        assert_eq!(h.terms().len(), 2);
        assert_eq!(h.terms()[0].coefficient, 1e-3);
    }

    fn parse_error_line(text: &str) -> usize {
        match parse_pauli_file(text) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors_report_line() {
        assert_eq!(parse_error_line("qubits 2\n0.3 Q0"), 2);
        assert_eq!(parse_error_line("qubits 2\nabc Z0"), 2);
        assert_eq!(parse_error_line("qubits 2\n\n1.0 Z0 X0"), 3);
        assert_eq!(parse_error_line("qubits 2\n1.0 Z2"), 2);
        assert_eq!(parse_error_line("0.5 Z0"), 1);
        assert_eq!(parse_error_line("qubits 2\n1.0"), 2);
        assert_eq!(parse_error_line("qubits 2\nnan Z0"), 2);
    }

    #[test]
    fn ground_energies() {
        let z = parse_pauli_file("qubits 1\n1 Z0").unwrap();
        assert_abs_diff_eq!(exact_ground_energy(&z).unwrap(), -1.0, epsilon = 1e-12);
        let xz = parse_pauli_file("qubits 1\n1 X0\n1 Z0").unwrap();
        assert_abs_diff_eq!(exact_ground_energy(&xz).unwrap(), -2f64.sqrt(), epsilon = 1e-12);
        let zz = parse_pauli_file("qubits 2\n0.5 Z0 Z1").unwrap();
        assert_abs_diff_eq!(exact_ground_energy(&zz).unwrap(), -0.5, epsilon = 1e-12);
    }

    #[test]
    fn size_limit() {
        let h = PauliSum::new(13, vec![]).unwrap();
        assert!(matches!(exact_ground_energy(&h), Err(Error::Size(13))));
    }

    #[test]
    fn vqe_fitness_examples() {
        let z = parse_pauli_file("qubits 1\n1 Z0").unwrap();
        let empty = CircuitTemplate::new(1, vec![]).unwrap();
        assert_abs_diff_eq!(vqe_fitness(&empty, &[], &z).unwrap(), 1.0);
        let ry = CircuitTemplate::new(
            1,
            vec![Gate::Rotation {
                axis: Pauli::Y,
                qubit: 0,
                angle: Angle::Slot(0),
            }],
        )
        .unwrap();
        assert_abs_diff_eq!(vqe_fitness(&ry, &[PI], &z).unwrap(), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn dense_matrix_is_hermitian() {
        let m = dense_matrix(&bundled_h2()).unwrap();
        assert!((&m - m.adjoint()).iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn bundled_h2_ground_energy() {
        // Full-CI energy of H2/STO-3G at 0.7414 Å computed with pyscf.
        let e = exact_ground_energy(&bundled_h2()).unwrap();
        assert!((e - -1.137_270_174_660_903).abs() < 1e-10, "ground energy {e}");
    }

    fn arb_pauli_sum() -> impl Strategy<Value = PauliSum> {
        let factor = (0usize..4, 0usize..4).prop_map(|(q, p)| (q, p));
        let term = (-10.0f64..10.0, proptest::collection::vec(factor, 0..4)).prop_map(|(c, fs)| {
            let mut factors = BTreeMap::new();
            for (q, p) in fs {
                match p {
                    0 => {}
                    1 => {
                        factors.insert(q, Pauli::X);
                    }
                    2 => {
                        factors.insert(q, Pauli::Y);
                    }
                    _ => {
                        factors.insert(q, Pauli::Z);
                    }
                }
            }
            PauliTerm {
                coefficient: c,
                factors,
            }
        });
        proptest::collection::vec(term, 0..8).prop_map(|terms| PauliSum::new(4, terms).unwrap())
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(h in arb_pauli_sum()) {
            let back = parse_pauli_file(&serialize_pauli_sum(&h)).unwrap();
            prop_assert_eq!(back, h);
        }

        #[test]
        fn variational_bound(seed in 0u64..1000, params in proptest::collection::vec(0.0f64..6.3, 18)) {
            let h = bundled_h2();
            let t = crate::ansatz::build_rpqc(4, 4, seed).unwrap();
            let lower = exact_ground_energy(&h).unwrap();
            let e = vqe_fitness(&t, &params[..16], &h).unwrap();
            prop_assert!(e >= lower - 1e-9);
        }
    }
}
