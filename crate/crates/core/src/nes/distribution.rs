use rand::RngCore;
use rayon::prelude::*;

use super::Objective;
use crate::error::{Error, Result};
use crate::numerics::{sample_standard_normal_vector, scale_from_factor, DenseMatrix, SeededRng};

/// Canonical ES distribution: fixed isotropic width.
#[derive(Clone, Debug, PartialEq)]
pub struct IsotropicGaussian {
    pub mean: Vec<f64>,
    pub sigma: f64,
}

/// sNES distribution: independent per-coordinate widths.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableGaussian {
    pub mean: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// xNES distribution `N(μ, σ² B Bᵀ)` with `|det B| = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct FullGaussian {
    pub mean: Vec<f64>,
    pub sigma: f64,
    pub shape: DenseMatrix,
}

impl FullGaussian {
    /// Isotropic start: `σ = sigma`, `B = I`.
    pub fn isotropic(mean: Vec<f64>, sigma: f64) -> Self {
        let d = mean.len();
        Self {
            mean,
            sigma,
            shape: DenseMatrix::identity(d),
        }
    }

    /// Starts from a covariance factor `A` with `Σ = A Aᵀ`.
    pub fn from_factor(mean: Vec<f64>, factor: &DenseMatrix) -> Result<Self> {
        if factor.rows() != mean.len() {
            return Err(Error::InvalidDimension(format!(
                "factor is {}x{} but mean has {} entries",
                factor.rows(),
                factor.cols(),
                mean.len()
            )));
        }
        let (sigma, shape) = scale_from_factor(factor)?;
        Ok(Self { mean, sigma, shape })
    }

    /// `σ² B Bᵀ`
    pub fn covariance(&self) -> DenseMatrix {
        let b = self.shape.as_nalgebra();
        DenseMatrix::from_nalgebra(b * b.transpose() * (self.sigma * self.sigma))
            .expect("covariance of a finite distribution is finite")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SearchDistribution {
    Isotropic(IsotropicGaussian),
    Separable(SeparableGaussian),
    Full(FullGaussian),
}

impl SearchDistribution {
    pub fn mean(&self) -> &[f64] {
        match self {
            SearchDistribution::Isotropic(d) => &d.mean,
            SearchDistribution::Separable(d) => &d.mean,
            SearchDistribution::Full(d) => &d.mean,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean().len()
    }

    /// The statistic compared against the stopping threshold: the width for
    /// canonical ES, the largest σ component for sNES, and the largest
    /// absolute covariance entry for xNES.
    pub fn spread(&self) -> f64 {
        match self {
            SearchDistribution::Isotropic(d) => d.sigma,
            SearchDistribution::Separable(d) => d.sigma.iter().copied().fold(0.0, f64::max),
            SearchDistribution::Full(d) => d.covariance().max_abs(),
        }
    }

    /// Maps a local-coordinate sample `s` to task coordinates `z`.
    pub fn map_sample(&self, s: &[f64]) -> Vec<f64> {
        match self {
            SearchDistribution::Isotropic(d) => d.mean.iter().zip(s).map(|(m, s)| m + d.sigma * s).collect(),
            SearchDistribution::Separable(d) => d
                .mean
                .iter()
                .zip(&d.sigma)
                .zip(s)
                .map(|((m, sig), s)| m + sig * s)
                .collect(),
            SearchDistribution::Full(d) => {
                let bs = d.shape.apply(s);
                d.mean.iter().zip(bs).map(|(m, v)| m + d.sigma * v).collect()
            }
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let finite_mean = self.mean().iter().all(|m| m.is_finite());
        if !finite_mean {
            return Err(Error::InvalidDimension("distribution mean must be finite".into()));
        }
        if self.dim() == 0 {
            return Err(Error::InvalidDimension(
                "distribution must have at least one coordinate".into(),
            ));
        }
        let positive = match self {
            SearchDistribution::Isotropic(d) => d.sigma > 0.0,
            SearchDistribution::Separable(d) => {
                d.sigma.len() == d.mean.len() && d.sigma.iter().all(|s| *s > 0.0 && s.is_finite())
            }
            SearchDistribution::Full(d) => d.sigma > 0.0 && d.shape.rows() == d.mean.len() && d.shape.is_square(),
        };
        if !positive {
            return Err(Error::InvalidScale(
                "widths must be positive and match the mean's dimension".into(),
            ));
        }
        Ok(())
    }
}

/// One iteration's walkers.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkerBatch {
    /// `s_n`, local coordinates.
    pub samples: Vec<Vec<f64>>,
    /// `z_n`, task coordinates.
    pub points: Vec<Vec<f64>>,
    /// `f(z_n)`; empty until evaluated.
    pub fitness: Vec<f64>,
}

impl WalkerBatch {
    /// Wraps given local samples, mapping them through `dist`.
    pub fn from_samples(dist: &SearchDistribution, samples: Vec<Vec<f64>>) -> Self {
        let points = samples.iter().map(|s| dist.map_sample(s)).collect();
        Self {
            samples,
            points,
            fitness: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Evaluates every walker. `embed` turns a task-space point into the full
    /// parameter vector handed to the objective.
    pub fn evaluate_with<O, E>(&mut self, objective: &O, parallel: bool, embed: E) -> Result<()>
    where
        O: Objective + ?Sized,
        E: Fn(&[f64]) -> Vec<f64> + Sync,
    {
        let eval = |z: &Vec<f64>| objective.evaluate(&embed(z));
        let fitness: Result<Vec<f64>> = if parallel {
            self.points.par_iter().map(eval).collect()
        } else {
            self.points.iter().map(eval).collect()
        };
        self.fitness = fitness?;
        Ok(())
    }

    pub fn evaluate<O: Objective + ?Sized>(&mut self, objective: &O, parallel: bool) -> Result<()> {
        self.evaluate_with(objective, parallel, |z| z.to_vec())
    }

    pub(crate) fn checked_fitness(&self) -> Result<&[f64]> {
        if self.fitness.len() != self.samples.len() {
            return Err(Error::Evaluation(format!(
                "{} fitness values for {} walkers",
                self.fitness.len(),
                self.samples.len()
            )));
        }
        Ok(&self.fitness)
    }
}

/// Draws `k` walkers. One value is taken from `rng` to key the iteration;
/// walker `n` then reads its own stream `n`, so the batch is independent of
/// evaluation order.
pub fn sample_walkers(dist: &SearchDistribution, k: usize, rng: &mut SeededRng) -> Result<WalkerBatch> {
    if k == 0 {
        return Err(Error::InvalidPopulation("at least one walker is required".into()));
    }
    let iteration_key = rng.next_u64();
    let samples = (0..k)
        .map(|n| sample_standard_normal_vector(&mut SeededRng::new(iteration_key, n as u64), dist.dim()))
        .collect::<Result<Vec<_>>>()?;
    Ok(WalkerBatch::from_samples(dist, samples))
}
