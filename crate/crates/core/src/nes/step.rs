use nalgebra::{DMatrix, DVector};

use super::distribution::{FullGaussian, IsotropicGaussian, SeparableGaussian, WalkerBatch};
use super::shaping::{compute_utilities, rank_ascending};
use super::NesConfig;
use crate::error::{Error, Result};
use crate::numerics::{matrix_exponential_symmetric, DenseMatrix};

/// Ridge added to the empirical Fisher matrix when it is ill-conditioned.
pub const FISHER_RIDGE: f64 = 1e-8;

/// `(1/(k σ)) Σ f(z_n) s_n`: the Monte-Carlo gradient of the Gaussian-smoothed
/// objective with respect to the mean.
pub fn canonical_gradient_estimate(batch: &WalkerBatch, sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidScale(format!("sigma must be positive, got {sigma}")));
    }
    let fitness = batch.checked_fitness()?;
    if let Some(f) = fitness.iter().find(|f| !f.is_finite()) {
        return Err(Error::Evaluation(format!("non-finite fitness {f}")));
    }
    let k = batch.len();
    let d = batch.samples.first().map_or(0, Vec::len);
    let mut grad = vec![0.0; d];
    for (s, f) in batch.samples.iter().zip(fitness) {
        for (g, si) in grad.iter_mut().zip(s) {
            *g += f * si;
        }
    }
    let norm = 1.0 / (k as f64 * sigma);
    grad.iter_mut().for_each(|g| *g *= norm);
    Ok(grad)
}

/// `(1/k) Σ ∇_μ log π ∇_μ log πᵀ` with `∇_μ log π(z_n) = s_n / σ`.
pub fn estimate_fisher(samples: &[Vec<f64>], sigma: f64) -> Result<DenseMatrix> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidScale(format!("sigma must be positive, got {sigma}")));
    }
    let d = samples
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::InvalidPopulation("no samples".into()))?;
    let mut f = DMatrix::<f64>::zeros(d, d);
    for s in samples {
        let v = DVector::from_iterator(d, s.iter().map(|x| x / sigma));
        f += &v * v.transpose();
    }
    f /= samples.len() as f64;
    DenseMatrix::from_nalgebra(f)
}

/// Solves `F x = g`, adding [`FISHER_RIDGE`] to the diagonal when `F` is
/// singular or badly conditioned.
pub fn natural_gradient(fisher: &DenseMatrix, grad: &[f64]) -> Result<Vec<f64>> {
    let f = fisher.as_nalgebra();
    if f.nrows() != grad.len() || !fisher.is_square() {
        return Err(Error::InvalidMatrix("Fisher matrix does not match gradient".into()));
    }
    let g = DVector::from_column_slice(grad);
    let well_conditioned = f.clone().cholesky().filter(|c| {
        let diag = c.l_dirty().diagonal();
        let (lo, hi) = diag
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), v| (lo.min(v * v), hi.max(v * v)));
        lo > 1e-12 * hi
    });
    let chol = match well_conditioned {
        Some(c) => c,
        None => {
            let d = f.nrows();
            (f + DMatrix::<f64>::identity(d, d) * FISHER_RIDGE)
                .cholesky()
                .ok_or_else(|| Error::InvalidMatrix("Fisher matrix is not positive semi-definite".into()))?
        }
    };
    Ok(chol.solve(&g).iter().copied().collect())
}

/// Canonical ES descent step `μ ← μ − η_μ ∇J`, with `∇J` optionally
/// preconditioned by the inverse empirical Fisher matrix.
pub fn canonical_step(dist: &IsotropicGaussian, batch: &WalkerBatch, config: &NesConfig) -> Result<IsotropicGaussian> {
    let mut grad = canonical_gradient_estimate(batch, dist.sigma)?;
    if config.natural_gradient {
        let fisher = estimate_fisher(&batch.samples, dist.sigma)?;
        grad = natural_gradient(&fisher, &grad)?;
    }
    let eta = config.rates.resolve(dist.mean.len()).mean;
    let mean = dist.mean.iter().zip(&grad).map(|(m, g)| m - eta * g).collect();
    Ok(IsotropicGaussian {
        mean,
        sigma: dist.sigma,
    })
}

/// Utility weights in rank order paired with the walker they belong to.
fn ranked_utilities(batch: &WalkerBatch) -> Result<Vec<(f64, usize)>> {
    let fitness = batch.checked_fitness()?;
    let order = rank_ascending(fitness)?;
    let utilities = compute_utilities(batch.len())?;
    Ok(utilities.into_iter().zip(order).collect())
}

/// sNES update.
pub fn snes_step(dist: &SeparableGaussian, batch: &WalkerBatch, config: &NesConfig) -> Result<SeparableGaussian> {
    let weights = ranked_utilities(batch)?;
    let d = dist.mean.len();
    let rates = config.rates.resolve(d);
    let mut grad_mean = vec![0.0; d];
    let mut grad_sigma = vec![0.0; d];
    for &(u, n) in &weights {
        for (i, s) in batch.samples[n].iter().enumerate() {
            grad_mean[i] += u * s;
            grad_sigma[i] += u * (s * s - 1.0);
        }
    }
    let mean = (0..d)
        .map(|i| dist.mean[i] + rates.mean * dist.sigma[i] * grad_mean[i])
        .collect();
    let sigma = (0..d)
        .map(|i| dist.sigma[i] * (0.5 * rates.sigma * grad_sigma[i]).exp())
        .collect();
    Ok(SeparableGaussian { mean, sigma })
}

/// xNES update in exponential coordinates.
pub fn xnes_step(dist: &FullGaussian, batch: &WalkerBatch, config: &NesConfig) -> Result<FullGaussian> {
    let weights = ranked_utilities(batch)?;
    let d = dist.mean.len();
    let rates = config.rates.resolve(d);
    let identity = DMatrix::<f64>::identity(d, d);
    let mut grad_mean = DVector::<f64>::zeros(d);
    let mut grad_m = DMatrix::<f64>::zeros(d, d);
    for &(u, n) in &weights {
        let s = DVector::from_column_slice(&batch.samples[n]);
        grad_mean += &s * u;
        grad_m += (&s * s.transpose() - &identity) * u;
    }
    let grad_sigma = grad_m.trace() / d as f64;
    let grad_b = &grad_m - &identity * grad_sigma;

    let b = dist.shape.as_nalgebra();
    let step = b * &grad_mean * (rates.mean * dist.sigma);
    let mean = dist.mean.iter().zip(step.iter()).map(|(m, v)| m + v).collect();
    let sigma = dist.sigma * (0.5 * rates.scale * grad_sigma).exp();
    let rotation = matrix_exponential_symmetric(&DenseMatrix::from_nalgebra(grad_b * (0.5 * rates.shape))?)?;
    let shape = dist.shape.matmul(&rotation)?;
    Ok(FullGaussian { mean, sigma, shape })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nes::{LearningRates, RateSchedule, SearchDistribution};
    use approx::assert_abs_diff_eq;

    fn batch(samples: Vec<Vec<f64>>, fitness: Vec<f64>) -> WalkerBatch {
        WalkerBatch {
            points: samples.clone(),
            samples,
            fitness,
        }
    }

    fn unit_rates() -> NesConfig {
        NesConfig {
            rates: RateSchedule::Fixed(LearningRates {
                mean: 1.0,
                sigma: 0.3,
                scale: 0.3,
                shape: 0.2,
            }),
            ..NesConfig::default()
        }
    }

    #[test]
    fn canonical_zero_fitness() {
        let b = batch(vec![vec![1.0, 2.0], vec![-0.5, 0.1]], vec![0.0, 0.0]);
        assert_eq!(canonical_gradient_estimate(&b, 0.3).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn canonical_single_walker() {
        let b = batch(vec![vec![1.0, 0.0]], vec![2.0]);
        assert_eq!(canonical_gradient_estimate(&b, 0.5).unwrap(), vec![4.0, 0.0]);
    }

    #[test]
    fn canonical_symmetric_cancellation() {
        let b = batch(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], vec![1.0, 1.0]);
        assert_eq!(canonical_gradient_estimate(&b, 0.2).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn canonical_rejects_bad_sigma() {
        let b = batch(vec![vec![1.0]], vec![1.0]);
        assert!(matches!(
            canonical_gradient_estimate(&b, 0.0),
            Err(Error::InvalidScale(_))
        ));
    }

    #[test]
    fn fisher_single_outer_product() {
        let f = estimate_fisher(&[vec![1.0, 0.0]], 1.0).unwrap();
        assert_eq!(f.as_nalgebra().as_slice(), &[1.0, 0.0, 0.0, 0.0]);
        // singular: solved through the ridge
        let x = natural_gradient(&f, &[2.0, 0.0]).unwrap();
        assert_abs_diff_eq!(x[0], 2.0 / (1.0 + FISHER_RIDGE), epsilon = 1e-12);
        assert_eq!(x[1], 0.0);
    }

    #[test]
    fn fisher_scales_with_inverse_sigma_squared() {
        let s = vec![vec![0.3, -1.1], vec![1.4, 0.2], vec![-0.7, 0.9]];
        let f1 = estimate_fisher(&s, 1.0).unwrap();
        let f2 = estimate_fisher(&s, 2.0).unwrap();
        for (a, b) in f1.as_nalgebra().iter().zip(f2.as_nalgebra().iter()) {
            assert_abs_diff_eq!(*b, a / 4.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn fisher_converges_to_identity() {
        let mut rng = crate::numerics::SeededRng::new(1, 0);
        let samples: Vec<Vec<f64>> = (0..20_000)
            .map(|_| crate::numerics::sample_standard_normal_vector(&mut rng, 3).unwrap())
            .collect();
        let f = estimate_fisher(&samples, 1.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((f.get(i, j) - id).abs() < 0.05);
            }
        }
    }

    #[test]
    fn snes_hand_example() {
        let dist = SeparableGaussian {
            mean: vec![1.0],
            sigma: vec![0.5],
        };
        let samples = vec![vec![1.0], vec![-1.0]];
        let fitness: Vec<f64> = samples.iter().map(|s: &Vec<f64>| (1.0 + 0.5 * s[0]).powi(2)).collect();
        let next = snes_step(&dist, &batch(samples, fitness), &unit_rates()).unwrap();
        assert_abs_diff_eq!(next.mean[0], 0.5, epsilon = 1e-15);
        assert_eq!(next.sigma, vec![0.5]);
    }

    #[test]
    fn snes_equal_fitness_is_bounded() {
        let dist = SeparableGaussian {
            mean: vec![0.0, 0.0],
            sigma: vec![0.1, 0.1],
        };
        let samples = vec![vec![0.5, -0.2], vec![1.0, 0.3], vec![-0.4, 0.8], vec![0.1, 0.1]];
        let next = snes_step(&dist, &batch(samples, vec![1.0; 4]), &unit_rates()).unwrap();
        assert!(next.mean.iter().all(|m| m.abs() < 0.2));
        assert!(next.sigma.iter().all(|s| *s > 0.0));
    }

    #[test]
    fn snes_unit_samples_keep_sigma() {
        let dist = SeparableGaussian {
            mean: vec![0.0, 0.0],
            sigma: vec![0.3, 0.7],
        };
        let samples = vec![vec![1.0, -1.0], vec![-1.0, 1.0], vec![1.0, 1.0]];
        let next = snes_step(&dist, &batch(samples, vec![0.2, 0.1, 0.5]), &unit_rates()).unwrap();
        assert_eq!(next.sigma, dist.sigma);
    }

    #[test]
    fn snes_rejects_non_finite() {
        let dist = SeparableGaussian {
            mean: vec![0.0],
            sigma: vec![1.0],
        };
        let b = batch(vec![vec![1.0], vec![0.0]], vec![f64::INFINITY, 0.0]);
        assert!(matches!(snes_step(&dist, &b, &unit_rates()), Err(Error::Evaluation(_))));
    }

    #[test]
    fn xnes_zero_gradient_keeps_shape() {
        // Equal and opposite utility mass on identical outer products.
        let dist = FullGaussian::isotropic(vec![0.0, 0.0], 0.4);
        let samples = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let next = xnes_step(&dist, &batch(samples, vec![0.0, 1.0]), &unit_rates()).unwrap();
        assert_abs_diff_eq!(next.sigma, 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(
            (next.shape.as_nalgebra() - DMatrix::<f64>::identity(2, 2)).amax(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn xnes_matches_snes_in_one_dimension() {
        let samples = vec![vec![0.3], vec![-1.2], vec![2.1], vec![0.7], vec![-0.1]];
        let fitness = vec![0.5, 0.1, 0.9, 0.3, 0.05];
        let b = batch(samples, fitness);
        let cfg = unit_rates();
        let s = snes_step(
            &SeparableGaussian {
                mean: vec![1.0],
                sigma: vec![0.2],
            },
            &b,
            &cfg,
        )
        .unwrap();
        let x = xnes_step(&FullGaussian::isotropic(vec![1.0], 0.2), &b, &cfg).unwrap();
        assert_abs_diff_eq!(s.mean[0], x.mean[0], epsilon = 1e-15);
        assert_abs_diff_eq!(s.sigma[0], x.sigma, epsilon = 1e-15);
        assert_abs_diff_eq!(x.shape.get(0, 0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn canonical_descends_linear_function() {
        let dist = IsotropicGaussian {
            mean: vec![0.0],
            sigma: 1.0,
        };
        let samples = vec![vec![1.0], vec![-1.0]];
        let b = batch(samples, vec![1.0, -1.0]);
        let next = canonical_step(&dist, &b, &unit_rates()).unwrap();
        assert!(next.mean[0] < 0.0);
        let _ = SearchDistribution::Isotropic(next);
    }
}
