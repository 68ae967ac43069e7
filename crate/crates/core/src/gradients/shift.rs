use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;

use super::Differentiable;
use crate::ansatz::CircuitTemplate;
use crate::error::{Error, Result};
use crate::nes::Objective;
use crate::simulator::{run_circuit, vacuum_projector_expectation, Observable, PauliSum};

fn expectation(template: &CircuitTemplate, params: &[f64], observable: &Observable) -> Result<f64> {
    observable.expectation(&run_circuit(template, params)?)
}

/// `∂E/∂θ_j = [E(θ_j + π/2) − E(θ_j − π/2)] / 2` for a single slot.
/// Costs two circuit evaluations.
pub fn parameter_shift_component(
    template: &CircuitTemplate,
    params: &[f64],
    observable: &Observable,
    j: usize,
) -> Result<f64> {
    if j >= params.len() {
        return Err(Error::Arity {
            expected: j + 1,
            actual: params.len(),
        });
    }
    let mut shifted = params.to_vec();
    shifted[j] = params[j] + FRAC_PI_2;
    let plus = expectation(template, &shifted, observable)?;
    shifted[j] = params[j] - FRAC_PI_2;
    let minus = expectation(template, &shifted, observable)?;
    Ok(0.5 * (plus - minus))
}

/// Gradient of `⟨ψ(θ)|O|ψ(θ)⟩` by the two-term shift rule. Exact for
/// circuits whose slots each feed one Pauli rotation; uses exactly
/// `2·num_params` circuit evaluations.
pub fn parameter_shift_expectation_gradient(
    template: &CircuitTemplate,
    params: &[f64],
    observable: &Observable,
) -> Result<Vec<f64>> {
    if params.len() != template.num_params() {
        return Err(Error::Arity {
            expected: template.num_params(),
            actual: params.len(),
        });
    }
    parameter_shift_gradient(|x| expectation(template, x, observable), params)
}

/// Two-term shift rule applied to an arbitrary expectation function, one
/// call at `θ_j ± π/2` per slot. Components are computed in parallel.
pub fn parameter_shift_gradient<F>(f: F, params: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    (0..params.len())
        .into_par_iter()
        .map(|j| {
            let mut shifted = params.to_vec();
            shifted[j] = params[j] + FRAC_PI_2;
            let plus = f(&shifted)?;
            shifted[j] = params[j] - FRAC_PI_2;
            let minus = f(&shifted)?;
            Ok(0.5 * (plus - minus))
        })
        .collect()
}

/// Gradient of `(1 − E)²` with `E = |⟨0…0|ψ(θ)⟩|²`.
pub fn stateprep_loss_gradient(template: &CircuitTemplate, params: &[f64]) -> Result<Vec<f64>> {
    let e = vacuum_projector_expectation(&run_circuit(template, params)?);
    let de = parameter_shift_expectation_gradient(template, params, &Observable::VacuumProjector)?;
    Ok(de.into_iter().map(|d| -2.0 * (1.0 - e) * d).collect())
}

/// `[f(θ + h e_j) − f(θ − h e_j)] / (2h)` for every `j`.
pub fn central_difference_gradient<F>(f: F, params: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut x = params.to_vec();
    (0..params.len())
        .map(|j| {
            x[j] = params[j] + h;
            let plus = f(&x)?;
            x[j] = params[j] - h;
            let minus = f(&x)?;
            x[j] = params[j];
            Ok((plus - minus) / (2.0 * h))
        })
        .collect()
}

/// What a circuit is trained to minimize.
#[derive(Clone, Debug, PartialEq)]
pub enum LossKind {
    /// `(1 − |⟨0…0|ψ⟩|²)²`
    StatePrep,
    /// `⟨ψ|H|ψ⟩`
    Energy(PauliSum),
}

/// A circuit together with its loss; usable by every optimizer.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitLoss {
    template: CircuitTemplate,
    kind: LossKind,
}

impl CircuitLoss {
    pub fn state_prep(template: CircuitTemplate) -> Self {
        Self {
            template,
            kind: LossKind::StatePrep,
        }
    }

    pub fn energy(template: CircuitTemplate, hamiltonian: PauliSum) -> Result<Self> {
        if hamiltonian.num_qubits() != template.num_qubits() {
            return Err(Error::InvalidSpec(format!(
                "hamiltonian acts on {} qubits but the circuit has {}",
                hamiltonian.num_qubits(),
                template.num_qubits()
            )));
        }
        Ok(Self {
            template,
            kind: LossKind::Energy(hamiltonian),
        })
    }

    pub fn template(&self) -> &CircuitTemplate {
        &self.template
    }

    pub fn kind(&self) -> &LossKind {
        &self.kind
    }

    pub fn num_params(&self) -> usize {
        self.template.num_params()
    }

    pub fn loss(&self, params: &[f64]) -> Result<f64> {
        let state = run_circuit(&self.template, params)?;
        match &self.kind {
            LossKind::StatePrep => Ok((1.0 - vacuum_projector_expectation(&state)).powi(2)),
            LossKind::Energy(h) => crate::simulator::pauli_expectation(&state, h),
        }
    }
}

impl Objective for CircuitLoss {
    fn evaluate(&self, params: &[f64]) -> Result<f64> {
        self.loss(params)
    }
}

impl Differentiable for CircuitLoss {
    fn gradient(&self, params: &[f64]) -> Result<Vec<f64>> {
        match &self.kind {
            LossKind::StatePrep => stateprep_loss_gradient(&self.template, params),
            LossKind::Energy(h) => {
                parameter_shift_expectation_gradient(&self.template, params, &Observable::Pauli(h.clone()))
            }
        }
    }

    fn gradient_evaluations(&self) -> u64 {
        2 * self.num_params() as u64
    }
}
