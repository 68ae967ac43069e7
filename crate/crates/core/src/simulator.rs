//! Exact statevector simulation.
//!
//! Qubit `q` is bit `q` of the amplitude index, so qubit 0 is the least
//! significant bit. Rotations follow `R_P(θ) = exp(−iθP/2)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::ansatz::CircuitTemplate;
use crate::error::{Error, Result};

/// Imaginary residue above which an expectation value is rejected.
pub const IMAGINARY_TOLERANCE: f64 = 1e-8;

/// Single-qubit Pauli operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
        })
    }
}

impl FromStr for Pauli {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "X" => Ok(Pauli::X),
            "Y" => Ok(Pauli::Y),
            "Z" => Ok(Pauli::Z),
            other => Err(format!("unknown Pauli `{other}`")),
        }
    }
}

/// Source of a rotation angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Angle {
    /// Index into the parameter vector.
    Slot(usize),
    /// Fixed angle in radians.
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    Rotation { axis: Pauli, qubit: usize, angle: Angle },
    Cz(usize, usize),
}

impl Gate {
    pub(crate) fn validate(&self, num_qubits: usize) -> Result<()> {
        let check = |index: usize| {
            if index < num_qubits {
                Ok(())
            } else {
                Err(Error::QubitIndex { index, num_qubits })
            }
        };
        match *self {
            Gate::Rotation { qubit, angle, .. } => {
                check(qubit)?;
                if let Angle::Fixed(a) = angle {
                    if !a.is_finite() {
                        return Err(Error::InvalidSpec(format!("non-finite fixed angle {a}")));
                    }
                }
                Ok(())
            }
            Gate::Cz(a, b) => {
                check(a)?;
                check(b)?;
                if a == b {
                    return Err(Error::InvalidSpec(format!("CZ targets must differ, got ({a}, {b})")));
                }
                Ok(())
            }
        }
    }
}

/// `2^Q` complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// The all-zeros state `|0…0⟩`.
    pub fn zero_state(num_qubits: usize) -> Self {
        assert!(
            num_qubits >= 1 && num_qubits < usize::BITS as usize,
            "unsupported qubit count"
        );
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self { num_qubits, amplitudes }
    }

    /// Wraps explicit amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n = amplitudes.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidDimension(format!("{n} amplitudes is not 2^Q with Q ≥ 1")));
        }
        Ok(Self {
            num_qubits: n.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn rotate(&mut self, axis: Pauli, qubit: usize, theta: f64) {
        let (s, c) = (0.5 * theta).sin_cos();
        let stride = 1usize << qubit;
        let amps = &mut self.amplitudes;
        match axis {
            Pauli::X => {
                // [[c, -is], [-is, c]]
                for block in (0..amps.len()).step_by(2 * stride) {
                    for i in block..block + stride {
                        let a0 = amps[i];
                        let a1 = amps[i + stride];
                        amps[i] = Complex64::new(c * a0.re + s * a1.im, c * a0.im - s * a1.re);
                        amps[i + stride] = Complex64::new(c * a1.re + s * a0.im, c * a1.im - s * a0.re);
                    }
                }
            }
            Pauli::Y => {
                // [[c, -s], [s, c]]
                for block in (0..amps.len()).step_by(2 * stride) {
                    for i in block..block + stride {
                        let a0 = amps[i];
                        let a1 = amps[i + stride];
                        amps[i] = a0 * c - a1 * s;
                        amps[i + stride] = a0 * s + a1 * c;
                    }
                }
            }
            Pauli::Z => {
                let lower = Complex64::new(c, -s);
                let upper = Complex64::new(c, s);
                for block in (0..amps.len()).step_by(2 * stride) {
                    for i in block..block + stride {
                        amps[i] *= lower;
                        amps[i + stride] *= upper;
                    }
                }
            }
        }
    }

    /// Applies a run of CZ gates in one pass over the amplitudes.
    fn cz_layer(&mut self, pairs: &[(usize, usize)]) {
        if pairs.is_empty() {
            return;
        }
        let mut chain_mask = 0usize;
        let mut is_chain = true;
        for &(a, b) in pairs {
            let low = a.min(b);
            if a.abs_diff(b) != 1 || chain_mask & (1 << low) != 0 {
                is_chain = false;
                break;
            }
            chain_mask |= 1 << low;
        }
        if is_chain {
            for (i, amp) in self.amplitudes.iter_mut().enumerate() {
                if (i & (i >> 1) & chain_mask).count_ones() & 1 == 1 {
                    *amp = -*amp;
                }
            }
        } else {
            for (i, amp) in self.amplitudes.iter_mut().enumerate() {
                let parity = pairs
                    .iter()
                    .fold(0usize, |acc, &(a, b)| acc ^ ((i >> a) & (i >> b) & 1));
                if parity == 1 {
                    *amp = -*amp;
                }
            }
        }
    }
}

/// Applies one gate in place. `angle` is ignored for CZ.
pub fn apply_gate(state: &mut StateVector, gate: &Gate, angle: f64) -> Result<()> {
    gate.validate(state.num_qubits)?;
    match *gate {
        Gate::Rotation { axis, qubit, .. } => {
            if !angle.is_finite() {
                return Err(Error::Evaluation(format!("non-finite rotation angle {angle}")));
            }
            state.rotate(axis, qubit, angle)
        }
        Gate::Cz(a, b) => state.cz_layer(&[(a, b)]),
    }
    Ok(())
}

/// `U(θ)|0…0⟩`, applying gates in template order.
pub fn run_circuit(template: &CircuitTemplate, params: &[f64]) -> Result<StateVector> {
    if params.len() != template.num_params() {
        return Err(Error::Arity {
            expected: template.num_params(),
            actual: params.len(),
        });
    }
    if let Some((i, v)) = params.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Evaluation(format!("parameter {i} is {v}")));
    }
    let mut state = StateVector::zero_state(template.num_qubits());
    let mut pending_cz: Vec<(usize, usize)> = Vec::new();
    for gate in template.gates() {
        match *gate {
            Gate::Cz(a, b) => pending_cz.push((a, b)),
            Gate::Rotation { axis, qubit, angle } => {
                state.cz_layer(&pending_cz);
                pending_cz.clear();
                let theta = match angle {
                    Angle::Slot(s) => params[s],
                    Angle::Fixed(a) => a,
                };
                state.rotate(axis, qubit, theta);
            }
        }
    }
    state.cz_layer(&pending_cz);
    Ok(state)
}

/// `|⟨0…0|ψ⟩|²`.
pub fn vacuum_projector_expectation(state: &StateVector) -> f64 {
    state.amplitudes[0].norm_sqr().min(1.0)
}

/// State-preparation loss `(1 − |⟨0…0|ψ⟩|²)²`.
pub fn stateprep_fitness(template: &CircuitTemplate, params: &[f64]) -> Result<f64> {
    let e = vacuum_projector_expectation(&run_circuit(template, params)?);
    Ok((1.0 - e).powi(2))
}

/// One weighted Pauli string. Identity factors are omitted from `factors`.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub factors: BTreeMap<usize, Pauli>,
}

impl PauliTerm {
    pub fn new(coefficient: f64, factors: impl IntoIterator<Item = (usize, Pauli)>) -> Self {
        Self {
            coefficient,
            factors: factors.into_iter().collect(),
        }
    }

    /// `P|i⟩ = phase · |i ^ flip⟩` as (flip mask, sign mask, number of Y factors).
    fn masks(&self) -> (usize, usize, u32) {
        let mut flip = 0;
        let mut sign = 0;
        let mut num_y = 0;
        for (&q, p) in &self.factors {
            match p {
                Pauli::X => flip |= 1 << q,
                Pauli::Y => {
                    flip |= 1 << q;
                    sign |= 1 << q;
                    num_y += 1;
                }
                Pauli::Z => sign |= 1 << q,
            }
        }
        (flip, sign, num_y)
    }

    pub(crate) fn phase_table(&self) -> (usize, impl Fn(usize) -> Complex64) {
        let (flip, sign, num_y) = self.masks();
        let base = match num_y % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        (
            flip,
            move |i: usize| {
                if (i & sign).count_ones() & 1 == 1 {
                    -base
                } else {
                    base
                }
            },
        )
    }
}

/// Weighted sum of Pauli strings over `num_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    num_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl PauliSum {
    pub fn new(num_qubits: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        for t in &terms {
            if !t.coefficient.is_finite() {
                return Err(Error::InvalidSpec(format!("non-finite coefficient {}", t.coefficient)));
            }
            if let Some((&q, _)) = t.factors.iter().next_back() {
                if q >= num_qubits {
                    return Err(Error::QubitIndex { index: q, num_qubits });
                }
            }
        }
        Ok(Self { num_qubits, terms })
    }

    /// `Z_a Z_b`, the local cost used in variance experiments.
    pub fn zz(num_qubits: usize, a: usize, b: usize) -> Result<Self> {
        Self::new(num_qubits, vec![PauliTerm::new(1.0, [(a, Pauli::Z), (b, Pauli::Z)])])
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }
}

/// `⟨ψ|H|ψ⟩` for a Pauli sum.
pub fn pauli_expectation(state: &StateVector, h: &PauliSum) -> Result<f64> {
    if h.num_qubits > state.num_qubits {
        return Err(Error::QubitIndex {
            index: h.num_qubits - 1,
            num_qubits: state.num_qubits,
        });
    }
    let amps = &state.amplitudes;
    let mut total = Complex64::new(0.0, 0.0);
    for term in &h.terms {
        let (flip, phase) = term.phase_table();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, a) in amps.iter().enumerate() {
            acc += amps[i ^ flip].conj() * phase(i) * a;
        }
        total += acc * term.coefficient;
    }
    let scale = h.terms.iter().map(|t| t.coefficient.abs()).sum::<f64>().max(1.0);
    if total.im.abs() > IMAGINARY_TOLERANCE * scale {
        return Err(Error::Consistency(total.im));
    }
    Ok(total.re)
}

/// An expectation value the circuits are trained against.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    /// `|0…0⟩⟨0…0|`
    VacuumProjector,
    Pauli(PauliSum),
}

impl Observable {
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        match self {
            Observable::VacuumProjector => Ok(vacuum_projector_expectation(state)),
            Observable::Pauli(h) => pauli_expectation(state, h),
        }
    }
}
