//! Analytical gradients and the gradient-based side of the experiments:
//! parameter-shift rules, plain gradient descent, surrogate-gradient variance
//! scans and the sNES warm-up hybrid.

mod descent;
mod hybrid;
mod shift;
mod variance;

pub use descent::{gradient_descent, Differentiable, GdConfig, GdOutcome};
pub use hybrid::{hybrid_optimize, interquartile_range, GradientSnapshot, HybridConfig, HybridOutcome};
pub use shift::{
    central_difference_gradient, parameter_shift_component, parameter_shift_expectation_gradient,
    parameter_shift_gradient, stateprep_loss_gradient, CircuitLoss, LossKind,
};
pub use variance::{surrogate_gradient_variance_scan, SurrogateForm, VarianceRow, VarianceScanConfig};
