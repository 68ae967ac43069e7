use std::f64::consts::TAU;

use rand::{Rng, RngCore};
use rayon::prelude::*;

use super::shift::parameter_shift_component;
use crate::ansatz::CircuitTemplate;
use crate::error::{Error, Result};
use crate::numerics::{sample_standard_normal_vector, SeededRng};
use crate::simulator::{run_circuit, Observable};

/// Monte-Carlo estimator of the search gradient.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateForm {
    /// `(1/(kσ)) Σ f(θ + σ s_n) s_n`
    #[default]
    SingleSided,
    /// `(1/(2kσ)) Σ [f(θ + σ s_n) − f(θ − σ s_n)] s_n`
    Symmetric,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarianceScanConfig {
    pub template: CircuitTemplate,
    pub observable: Observable,
    pub num_inits: usize,
    pub sigma_inits: Vec<f64>,
    pub walker_counts: Vec<usize>,
    /// Gradient component whose variance is measured.
    pub parameter_index: usize,
    pub form: SurrogateForm,
    pub parallel: bool,
}

/// One `(σ_init, k)` cell. `variance_exact` is the same in every row.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VarianceRow {
    pub sigma_init: f64,
    pub k: usize,
    pub variance_surrogate: f64,
    pub variance_exact: f64,
}

fn sample_variance(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Variance across random initializations of the surrogate gradient and of
/// the parameter-shift gradient, for every `(σ_init, k)` pair.
///
/// Each initialization draws its parameters uniformly from `[0, 2π)` and owns
/// a private random stream, so results do not depend on scheduling.
pub fn surrogate_gradient_variance_scan(config: &VarianceScanConfig, rng: &mut SeededRng) -> Result<Vec<VarianceRow>> {
    let p = config.template.num_params();
    if config.num_inits < 2 {
        return Err(Error::Config("a variance needs at least 2 initializations".into()));
    }
    if config.parameter_index >= p {
        return Err(Error::Config(format!(
            "parameter index {} outside a circuit with {p} parameters",
            config.parameter_index
        )));
    }
    if config.sigma_inits.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidScale("every sigma_init must be positive".into()));
    }
    if config.walker_counts.contains(&0) {
        return Err(Error::InvalidPopulation("walker counts must be at least 1".into()));
    }
    let cells: Vec<(f64, usize)> = config
        .sigma_inits
        .iter()
        .flat_map(|&s| config.walker_counts.iter().map(move |&k| (s, k)))
        .collect();
    let key = rng.next_u64();
    let j = config.parameter_index;
    let f = |x: &[f64]| config.observable.expectation(&run_circuit(&config.template, x)?);

    // Per initialization: exact component, then one surrogate per cell.
    let per_init = |i: usize| -> Result<(f64, Vec<f64>)> {
        let mut init_rng = SeededRng::new(key, i as u64);
        let theta: Vec<f64> = (0..p).map(|_| init_rng.random_range(0.0..TAU)).collect();
        let exact = parameter_shift_component(&config.template, &theta, &config.observable, j)?;
        let mut estimates = Vec::with_capacity(cells.len());
        for (c, &(sigma, k)) in cells.iter().enumerate() {
            let mut walker_rng = init_rng.derive(c as u64);
            let mut acc = 0.0;
            for _ in 0..k {
                let s = sample_standard_normal_vector(&mut walker_rng, p)?;
                let plus: Vec<f64> = theta.iter().zip(&s).map(|(t, v)| t + sigma * v).collect();
                acc += match config.form {
                    SurrogateForm::SingleSided => f(&plus)? * s[j],
                    SurrogateForm::Symmetric => {
                        let minus: Vec<f64> = theta.iter().zip(&s).map(|(t, v)| t - sigma * v).collect();
                        0.5 * (f(&plus)? - f(&minus)?) * s[j]
                    }
                };
            }
            estimates.push(acc / (k as f64 * sigma));
        }
        Ok((exact, estimates))
    };
    let results: Vec<(f64, Vec<f64>)> = if config.parallel {
        (0..config.num_inits)
            .into_par_iter()
            .map(per_init)
            .collect::<Result<_>>()?
    } else {
        (0..config.num_inits).map(per_init).collect::<Result<_>>()?
    };

    let variance_exact = sample_variance(results.iter().map(|r| r.0));
    Ok(cells
        .iter()
        .enumerate()
        .map(|(c, &(sigma_init, k))| VarianceRow {
            sigma_init,
            k,
            variance_surrogate: sample_variance(results.iter().map(|r| r.1[c])),
            variance_exact,
        })
        .collect())
}
