use crate::error::{Error, Result};
use crate::nes::Objective;
use crate::trace::{RunTrace, TraceRecord, TraceSink};

/// An objective with an analytical gradient.
pub trait Differentiable: Objective {
    fn gradient(&self, params: &[f64]) -> Result<Vec<f64>>;

    /// Objective evaluations one gradient call costs.
    fn gradient_evaluations(&self) -> u64;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GdConfig {
    pub learning_rate: f64,
    pub max_iterations: usize,
    /// Stop once the gradient's Euclidean norm falls below this.
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GdOutcome {
    pub params: Vec<f64>,
    pub trace: RunTrace,
    pub iterations: usize,
    /// The gradient norm fell below the tolerance.
    pub converged: bool,
}

/// Vanilla descent `θ ← θ − η ∇f(θ)`.
///
/// Each iteration costs one gradient plus the loss at the new point, and the
/// trace counts both. `spread_max` is recorded as 0.
pub fn gradient_descent<D, S>(objective: &D, initial: &[f64], config: &GdConfig, sink: &mut S) -> Result<GdOutcome>
where
    D: Differentiable + ?Sized,
    S: TraceSink + ?Sized,
{
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::Config(format!(
            "learning rate must be positive and finite, got {}",
            config.learning_rate
        )));
    }
    let per_iteration = objective.gradient_evaluations() + 1;
    let mut params = initial.to_vec();
    let mut trace = RunTrace::new();
    let mut emit = |trace: &mut RunTrace, r: TraceRecord| {
        sink.record(&r);
        trace.push(r);
    };
    let loss = objective.evaluate(&params)?;
    if !loss.is_finite() {
        return Err(Error::Divergence(0));
    }
    emit(
        &mut trace,
        TraceRecord {
            iteration: 0,
            evaluations: 0,
            loss,
            spread_max: 0.0,
            batch_cursor: 0,
        },
    );

    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        let grad = objective.gradient(&params)?;
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm < config.tolerance {
            converged = true;
            break;
        }
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= config.learning_rate * g;
        }
        iterations += 1;
        let loss = objective.evaluate(&params)?;
        if !loss.is_finite() {
            return Err(Error::Divergence(iterations));
        }
        emit(
            &mut trace,
            TraceRecord {
                iteration: iterations,
                evaluations: per_iteration * iterations as u64,
                loss,
                spread_max: 0.0,
                batch_cursor: 0,
            },
        );
    }
    Ok(GdOutcome {
        params,
        trace,
        iterations,
        converged,
    })
}
