use super::distribution::{sample_walkers, SearchDistribution};
use super::step::{canonical_step, snes_step, xnes_step};
use super::{NesConfig, Objective};
use crate::error::{Error, Result};
use crate::numerics::SeededRng;
use crate::trace::{RunTrace, TraceRecord, TraceSink};

/// A subset of coordinates with its own search distribution. The
/// distribution's mean holds the current values of those coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub indices: Vec<usize>,
    pub distribution: SearchDistribution,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeOutcome {
    /// Final full parameter vector (the distribution means).
    pub params: Vec<f64>,
    pub blocks: Vec<Block>,
    pub trace: RunTrace,
    /// Distribution updates performed.
    pub iterations: usize,
    /// The spread fell below the stopping threshold.
    pub converged: bool,
}

impl OptimizeOutcome {
    pub fn final_loss(&self) -> f64 {
        self.trace.final_loss().unwrap_or(f64::NAN)
    }
}

fn step(dist: &SearchDistribution, batch: &super::WalkerBatch, config: &NesConfig) -> Result<SearchDistribution> {
    Ok(match dist {
        SearchDistribution::Isotropic(d) => SearchDistribution::Isotropic(canonical_step(d, batch, config)?),
        SearchDistribution::Separable(d) => SearchDistribution::Separable(snes_step(d, batch, config)?),
        SearchDistribution::Full(d) => SearchDistribution::Full(xnes_step(d, batch, config)?),
    })
}

fn max_spread(blocks: &[Block]) -> f64 {
    blocks.iter().map(|b| b.distribution.spread()).fold(0.0, f64::max)
}

/// Minimizes `objective` with a single search distribution over all
/// coordinates.
pub fn optimize<O, S>(
    objective: &O,
    initial: SearchDistribution,
    config: &NesConfig,
    rng: &mut SeededRng,
    sink: &mut S,
) -> Result<OptimizeOutcome>
where
    O: Objective + ?Sized,
    S: TraceSink + ?Sized,
{
    let d = initial.dim();
    let params = initial.mean().to_vec();
    let blocks = vec![Block {
        indices: (0..d).collect(),
        distribution: initial,
    }];
    run_blocks(objective, params, blocks, config, rng, sink, || 0)
}

/// Block-coordinate NES. Each iteration updates the block returned by
/// `choose` while every other coordinate stays frozen at its current value.
///
/// The first trace record (iteration 0) reports the loss of the starting
/// point with zero evaluations. Each iteration then spends `k` evaluations
/// on walkers; the loss reported at the new center is not counted.
pub fn run_blocks<O, S, C>(
    objective: &O,
    mut params: Vec<f64>,
    mut blocks: Vec<Block>,
    config: &NesConfig,
    rng: &mut SeededRng,
    sink: &mut S,
    mut choose: C,
) -> Result<OptimizeOutcome>
where
    O: Objective + ?Sized,
    S: TraceSink + ?Sized,
    C: FnMut() -> usize,
{
    if blocks.is_empty() {
        return Err(Error::InvalidBatch("no blocks to optimize".into()));
    }
    for b in &blocks {
        b.distribution.validate()?;
        if b.indices.len() != b.distribution.dim() {
            return Err(Error::InvalidBatch(format!(
                "block has {} indices but a {}-dimensional distribution",
                b.indices.len(),
                b.distribution.dim()
            )));
        }
        for (&i, &m) in b.indices.iter().zip(b.distribution.mean()) {
            *params
                .get_mut(i)
                .ok_or_else(|| Error::InvalidBatch(format!("index {i} out of range")))? = m;
        }
    }
    let k = config.population;
    if k == 0 {
        return Err(Error::InvalidPopulation("at least one walker is required".into()));
    }

    let mut trace = RunTrace::new();
    let mut emit = |trace: &mut RunTrace, r: TraceRecord| {
        sink.record(&r);
        trace.push(r);
    };
    let mut evaluations = 0_u64;
    emit(
        &mut trace,
        TraceRecord {
            iteration: 0,
            evaluations,
            loss: objective.evaluate(&params)?,
            spread_max: max_spread(&blocks),
            batch_cursor: 0,
        },
    );

    let mut iterations = 0;
    let mut converged = max_spread(&blocks) < config.stop_threshold;
    while !converged && iterations < config.max_iterations {
        let cursor = choose();
        let block = blocks
            .get(cursor)
            .ok_or_else(|| Error::InvalidBatch(format!("block {cursor} does not exist")))?;
        let mut batch = sample_walkers(&block.distribution, k, rng)?;
        let frozen = &params;
        batch.evaluate_with(objective, config.parallel, |z| {
            let mut full = frozen.clone();
            for (&i, &v) in block.indices.iter().zip(z) {
                full[i] = v;
            }
            full
        })?;
        let next = step(&block.distribution, &batch, config)?;
        for (&i, &m) in block.indices.iter().zip(next.mean()) {
            params[i] = m;
        }
        blocks[cursor].distribution = next;
        evaluations += k as u64;
        iterations += 1;

        let spread = max_spread(&blocks);
        emit(
            &mut trace,
            TraceRecord {
                iteration: iterations,
                evaluations,
                loss: objective.evaluate(&params)?,
                spread_max: spread,
                batch_cursor: cursor,
            },
        );
        converged = spread < config.stop_threshold;
    }

    Ok(OptimizeOutcome {
        params,
        blocks,
        trace,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nes::{FullGaussian, IsotropicGaussian, SeparableGaussian};
    use crate::trace::NullSink;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn converged_start_returns_immediately() {
        let dist = SearchDistribution::Separable(SeparableGaussian {
            mean: vec![1.0, 2.0],
            sigma: vec![1e-9, 1e-9],
        });
        let out = optimize(
            &sphere,
            dist,
            &NesConfig::default(),
            &mut SeededRng::new(0, 0),
            &mut NullSink,
        )
        .unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.converged);
        assert_eq!(out.params, vec![1.0, 2.0]);
        assert_eq!(out.trace.records.len(), 1);
    }

    #[test]
    fn evaluation_accounting() {
        let dist = SearchDistribution::Separable(SeparableGaussian {
            mean: vec![1.0; 3],
            sigma: vec![0.1; 3],
        });
        let cfg = NesConfig {
            population: 8,
            max_iterations: 5,
            ..NesConfig::default()
        };
        let mut seen = Vec::new();
        let mut sink = |r: &TraceRecord| seen.push(r.evaluations);
        let out = optimize(&sphere, dist, &cfg, &mut SeededRng::new(1, 0), &mut sink).unwrap();
        assert_eq!(seen, vec![0, 8, 16, 24, 32, 40]);
        assert_eq!(
            out.trace.records.iter().map(|r| r.evaluations).collect::<Vec<_>>(),
            seen
        );
    }

    #[test]
    fn snes_and_xnes_reduce_sphere() {
        let cfg = NesConfig {
            max_iterations: 300,
            ..NesConfig::for_dimension(5)
        };
        for dist in [
            SearchDistribution::Separable(SeparableGaussian {
                mean: vec![1.0; 5],
                sigma: vec![0.5; 5],
            }),
            SearchDistribution::Full(FullGaussian::isotropic(vec![1.0; 5], 0.5)),
        ] {
            let out = optimize(&sphere, dist, &cfg, &mut SeededRng::new(2, 0), &mut NullSink).unwrap();
            assert!(out.final_loss() < 1e-3, "final loss {}", out.final_loss());
        }
    }

    #[test]
    fn canonical_reduces_sphere() {
        let cfg = NesConfig {
            population: 64,
            max_iterations: 200,
            rates: crate::nes::RateSchedule::Fixed(crate::nes::LearningRates {
                mean: 0.02,
                sigma: 0.0,
                scale: 0.0,
                shape: 0.0,
            }),
            ..NesConfig::default()
        };
        let dist = SearchDistribution::Isotropic(IsotropicGaussian {
            mean: vec![1.0; 3],
            sigma: 0.1,
        });
        let out = optimize(&sphere, dist, &cfg, &mut SeededRng::new(3, 0), &mut NullSink).unwrap();
        assert!(out.final_loss() < 0.1 * 3.0);
    }

    #[test]
    fn failing_objective_propagates() {
        let obj = |x: &[f64]| if x[0] > 1.05 { f64::NAN } else { x[0] };
        let dist = SearchDistribution::Separable(SeparableGaussian {
            mean: vec![1.0],
            sigma: vec![0.5],
        });
        let cfg = NesConfig::for_dimension(1);
        let res = optimize(&obj, dist, &cfg, &mut SeededRng::new(4, 0), &mut NullSink);
        assert!(matches!(res, Err(Error::Evaluation(_))));
    }
}
