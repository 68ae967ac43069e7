use super::descent::{gradient_descent, Differentiable, GdConfig};
use crate::error::{Error, Result};
use crate::nes::{optimize, NesConfig, SearchDistribution, SeparableGaussian};
use crate::numerics::SeededRng;
use crate::trace::{NullSink, RunTrace, TraceRecord, TraceSink};

/// Analytical gradient of the loss at the current center.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSnapshot {
    pub iteration: usize,
    pub components: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridConfig {
    /// sNES iterations before switching to gradient descent.
    pub warmup_iterations: usize,
    /// Initial sNES width in every coordinate.
    pub init_std: f64,
    pub nes: NesConfig,
    pub gd: GdConfig,
    /// Also snapshot the gradient every this many descent iterations.
    pub snapshot_interval: Option<usize>,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            warmup_iterations: 5,
            init_std: 0.1,
            nes: NesConfig::default(),
            gd: GdConfig {
                learning_rate: 0.1,
                max_iterations: 500,
                tolerance: 1e-8,
            },
            snapshot_interval: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridOutcome {
    pub params: Vec<f64>,
    pub trace: RunTrace,
    pub snapshots: Vec<GradientSnapshot>,
    /// sNES iterations actually performed before the switch.
    pub warmup_iterations: usize,
}

/// sNES warm-up followed by gradient descent from the sNES mean.
///
/// Gradient snapshots are taken at iteration 0, at the switch, every
/// `snapshot_interval` descent iterations and at the end. They are
/// diagnostics and are not counted as evaluations in the trace.
pub fn hybrid_optimize<D, S>(
    objective: &D,
    initial: &[f64],
    config: &HybridConfig,
    rng: &mut SeededRng,
    sink: &mut S,
) -> Result<HybridOutcome>
where
    D: Differentiable,
    S: TraceSink + ?Sized,
{
    if config.snapshot_interval == Some(0) {
        return Err(Error::Config("snapshot interval must be positive".into()));
    }
    let mut snapshots = vec![GradientSnapshot {
        iteration: 0,
        components: objective.gradient(initial)?,
    }];
    let snapshot = |snapshots: &mut Vec<GradientSnapshot>, iteration: usize, params: &[f64]| -> Result<()> {
        if snapshots.last().is_some_and(|s| s.iteration == iteration) {
            return Ok(());
        }
        snapshots.push(GradientSnapshot {
            iteration,
            components: objective.gradient(params)?,
        });
        Ok(())
    };

    let mut trace = RunTrace::new();
    let mut params = initial.to_vec();
    let mut warmup = 0;
    if config.warmup_iterations > 0 {
        let dist = SearchDistribution::Separable(SeparableGaussian {
            mean: params.clone(),
            sigma: vec![config.init_std; params.len()],
        });
        let nes = NesConfig {
            max_iterations: config.warmup_iterations,
            ..config.nes.clone()
        };
        let out = optimize(objective, dist, &nes, rng, sink)?;
        trace = out.trace;
        params = out.params;
        warmup = out.iterations;
        snapshot(&mut snapshots, warmup, &params)?;
    }

    let mut base_iteration = warmup;
    let mut base_evaluations = trace.last().map_or(0, |r| r.evaluations);
    let mut remaining = config.gd.max_iterations;
    loop {
        let chunk = config.snapshot_interval.map_or(remaining, |n| n.min(remaining));
        let gd = GdConfig {
            max_iterations: chunk,
            ..config.gd
        };
        let out = gradient_descent(objective, &params, &gd, &mut NullSink)?;
        let skip = usize::from(!trace.records.is_empty());
        for r in &out.trace.records[skip..] {
            let shifted = TraceRecord {
                iteration: r.iteration + base_iteration,
                evaluations: r.evaluations + base_evaluations,
                ..*r
            };
            sink.record(&shifted);
            trace.push(shifted);
        }
        params = out.params;
        base_iteration += out.iterations;
        base_evaluations = trace.last().map_or(0, |r| r.evaluations);
        remaining -= out.iterations;
        if config.snapshot_interval.is_some() || out.converged || remaining == 0 {
            snapshot(&mut snapshots, base_iteration, &params)?;
        }
        if out.converged || remaining == 0 {
            break;
        }
    }

    Ok(HybridOutcome {
        params,
        trace,
        snapshots,
        warmup_iterations: warmup,
    })
}

/// Difference between the third and first quartiles, with linear
/// interpolation between order statistics.
pub fn interquartile_range(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let quantile = |p: f64| {
        let h = (v.len() - 1) as f64 * p;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(v.len() - 1);
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    };
    quantile(0.75) - quantile(0.25)
}
