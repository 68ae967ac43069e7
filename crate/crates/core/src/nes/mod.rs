//! Natural evolution strategies.
//!
//! Three search distributions are supported:
//!
//! * canonical ES over an isotropic Gaussian with a fixed width, driven by the
//!   raw Monte-Carlo search gradient (optionally Fisher preconditioned);
//! * sNES over a diagonal Gaussian;
//! * xNES over a full Gaussian factored as `σ·B` with `|det B| = 1`.
//!
//! All optimizers minimize. Walkers are ranked by ascending fitness, so the
//! best walker receives the largest utility.

mod distribution;
mod optimize;
mod shaping;
mod step;

pub use distribution::{
    sample_walkers, FullGaussian, IsotropicGaussian, SearchDistribution, SeparableGaussian, WalkerBatch,
};
pub use optimize::{optimize, run_blocks, Block, OptimizeOutcome};
pub use shaping::{compute_utilities, rank_ascending};
pub use step::{
    canonical_gradient_estimate, canonical_step, estimate_fisher, natural_gradient, snes_step, xnes_step, FISHER_RIDGE,
};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Default stopping threshold on the distribution spread.
pub const DEFAULT_STOP_THRESHOLD: f64 = 1e-8;
/// Walker count used by the experiment presets.
pub const PRESET_POPULATION: usize = 16;

/// A function to minimize.
pub trait Objective: Sync {
    fn evaluate(&self, params: &[f64]) -> Result<f64>;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, params: &[f64]) -> Result<f64> {
        Ok(self(params))
    }
}

/// Learning rates of one update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningRates {
    /// η_μ
    pub mean: f64,
    /// η_σ (sNES)
    pub sigma: f64,
    /// η_s (xNES scale)
    pub scale: f64,
    /// η_B (xNES shape)
    pub shape: f64,
}

/// Default rates for a `d`-dimensional (batch) distribution.
///
/// `η_μ = 1`, `η_s = η_B = (9 + 3 ln d)/(5 d √d)`, `η_σ = (3 + ln d)/(5 d √d)`.
pub fn default_learning_rates(d: usize) -> LearningRates {
    assert!(d >= 1, "dimension must be positive");
    let d = d as f64;
    let denom = 5.0 * d * d.sqrt();
    let scale = (9.0 + 3.0 * d.ln()) / denom;
    LearningRates {
        mean: 1.0,
        sigma: (3.0 + d.ln()) / denom,
        scale,
        shape: scale,
    }
}

/// `round(4 + 3 ln d)`.
pub fn default_population(d: usize) -> usize {
    assert!(d >= 1, "dimension must be positive");
    (4.0 + 3.0 * (d as f64).ln()).round() as usize
}

/// How learning rates are chosen for a distribution of dimension `d`.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub enum RateSchedule {
    /// [`default_learning_rates`] evaluated at the dimension being updated.
    #[default]
    Standard,
    Fixed(LearningRates),
}

impl RateSchedule {
    pub fn resolve(&self, d: usize) -> LearningRates {
        match self {
            RateSchedule::Standard => default_learning_rates(d),
            RateSchedule::Fixed(r) => *r,
        }
    }
}

/// Which search distribution to evolve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Canonical,
    Snes,
    Xnes,
}

impl Variant {
    /// Starting distribution centered at `mean` with every width equal to `init_std`.
    pub fn initial_distribution(self, mean: Vec<f64>, init_std: f64) -> SearchDistribution {
        match self {
            Variant::Canonical => SearchDistribution::Isotropic(IsotropicGaussian { mean, sigma: init_std }),
            Variant::Snes => {
                let sigma = vec![init_std; mean.len()];
                SearchDistribution::Separable(SeparableGaussian { mean, sigma })
            }
            Variant::Xnes => SearchDistribution::Full(FullGaussian::isotropic(mean, init_std)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NesConfig {
    /// Walkers per iteration, k.
    pub population: usize,
    pub rates: RateSchedule,
    pub max_iterations: usize,
    pub stop_threshold: f64,
    /// Evaluate walkers on the rayon pool. Results do not depend on it.
    pub parallel: bool,
    /// Canonical ES only: precondition with the empirical Fisher matrix.
    pub natural_gradient: bool,
}

impl Default for NesConfig {
    fn default() -> Self {
        Self {
            population: PRESET_POPULATION,
            rates: RateSchedule::Standard,
            max_iterations: 1000,
            stop_threshold: DEFAULT_STOP_THRESHOLD,
            parallel: true,
            natural_gradient: false,
        }
    }
}

impl NesConfig {
    /// Population from [`default_population`], standard rates.
    pub fn for_dimension(d: usize) -> Self {
        Self {
            population: default_population(d),
            ..Self::default()
        }
    }
}
