//! Block-coordinate optimization of deep circuits.
//!
//! The parameters are split once into disjoint batches. Every NES iteration
//! then updates a single batch with its own sub-distribution while all other
//! parameters stay at their current values.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{group_slots, CircuitTemplate};
use crate::error::{Error, Result};
use crate::nes::{run_blocks, Block, NesConfig, Objective, OptimizeOutcome, Variant};
use crate::numerics::SeededRng;
use crate::trace::TraceSink;

const ORDER_STREAM: u64 = 0x0bad_c0de;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionStrategy {
    /// Shuffled indices cut into chunks of `batch_size`.
    Random { batch_size: usize },
    /// One batch per layer.
    LayerWise,
    /// One batch per qubit.
    QubitWise,
    /// Consecutive layers merged while the batch stays within `batch_size`.
    LayerBlock { batch_size: usize },
    /// Consecutive qubits merged while the batch stays within `batch_size`.
    QubitBlock { batch_size: usize },
}

impl PartitionStrategy {
    pub fn batch_size(&self) -> Option<usize> {
        match *self {
            PartitionStrategy::Random { batch_size }
            | PartitionStrategy::LayerBlock { batch_size }
            | PartitionStrategy::QubitBlock { batch_size } => Some(batch_size),
            PartitionStrategy::LayerWise | PartitionStrategy::QubitWise => None,
        }
    }
}

/// Order in which batches are visited.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchOrder {
    #[default]
    RoundRobin,
    /// Uniformly random batch each iteration.
    Random,
}

/// A fixed partition of the parameter indices.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchSchedule {
    /// Sorted index sets; together they cover `0..num_params` exactly once.
    pub batches: Vec<Vec<usize>>,
    /// Next batch for round-robin order.
    pub cursor: usize,
    pub order: BatchOrder,
}

impl BatchSchedule {
    pub fn new(mut batches: Vec<Vec<usize>>, order: BatchOrder) -> Result<Self> {
        if batches.is_empty() || batches.iter().any(Vec::is_empty) {
            return Err(Error::InvalidBatch("batches must be non-empty".into()));
        }
        let n: usize = batches.iter().map(Vec::len).sum();
        let mut seen = vec![false; n];
        for b in &mut batches {
            b.sort_unstable();
            for &i in b.iter() {
                match seen.get_mut(i) {
                    Some(s) if !*s => *s = true,
                    _ => return Err(Error::InvalidBatch(format!("index {i} is repeated or outside 0..{n}"))),
                }
            }
        }
        Ok(Self {
            batches,
            cursor: 0,
            order,
        })
    }

    pub fn num_params(&self) -> usize {
        self.batches.iter().map(Vec::len).sum()
    }

    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }
}

fn merge_groups(groups: Vec<Vec<usize>>, batch_size: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut current = Vec::new();
    for g in groups {
        if !current.is_empty() && current.len() + g.len() > batch_size {
            out.push(std::mem::take(&mut current));
        }
        current.extend(g);
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// Splits the template's parameters according to `strategy`. Only the random
/// strategy draws from `rng`.
pub fn make_partition(
    template: &CircuitTemplate,
    strategy: PartitionStrategy,
    rng: &mut SeededRng,
) -> Result<BatchSchedule> {
    let p = template.num_params();
    if p == 0 {
        return Err(Error::InvalidBatch("template has no parameters".into()));
    }
    if let Some(size) = strategy.batch_size() {
        if size < 1 || size > p {
            return Err(Error::InvalidBatch(format!("batch size {size} outside 1..={p}")));
        }
    }
    let batches = match strategy {
        PartitionStrategy::Random { batch_size } => {
            let mut idx: Vec<usize> = (0..p).collect();
            idx.shuffle(rng);
            idx.chunks(batch_size).map(<[usize]>::to_vec).collect()
        }
        PartitionStrategy::LayerWise => group_slots(template, |s| s.layer),
        PartitionStrategy::QubitWise => group_slots(template, |s| s.qubit),
        PartitionStrategy::LayerBlock { batch_size } => merge_groups(group_slots(template, |s| s.layer), batch_size),
        PartitionStrategy::QubitBlock { batch_size } => merge_groups(group_slots(template, |s| s.qubit), batch_size),
    };
    BatchSchedule::new(batches, BatchOrder::RoundRobin)
}

/// Runs block-coordinate NES over `schedule`.
///
/// Every batch owns a sub-distribution of `variant` started at the matching
/// entries of `initial` with width `init_std`. Its widths (and shape matrix
/// for xNES) persist between visits. Learning rates resolve with `d` equal to
/// the batch size. Each trace record's `batch_cursor` names the batch updated
/// in that iteration.
#[allow(clippy::too_many_arguments)]
pub fn batch_optimize<O, S>(
    objective: &O,
    initial: &[f64],
    schedule: &BatchSchedule,
    variant: Variant,
    init_std: f64,
    config: &NesConfig,
    rng: &mut SeededRng,
    sink: &mut S,
) -> Result<OptimizeOutcome>
where
    O: Objective + ?Sized,
    S: TraceSink + ?Sized,
{
    if schedule.num_params() != initial.len() {
        return Err(Error::InvalidBatch(format!(
            "schedule covers {} parameters but {} were given",
            schedule.num_params(),
            initial.len()
        )));
    }
    let blocks: Vec<Block> = schedule
        .batches
        .iter()
        .map(|b| Block {
            indices: b.clone(),
            distribution: variant.initial_distribution(b.iter().map(|&i| initial[i]).collect(), init_std),
        })
        .collect();
    let n = blocks.len();
    let mut cursor = schedule.cursor % n;
    let mut order_rng = rng.derive(ORDER_STREAM);
    let order = schedule.order;
    let choose = move || match order {
        BatchOrder::RoundRobin => {
            let c = cursor;
            cursor = (cursor + 1) % n;
            c
        }
        BatchOrder::Random => order_rng.random_range(0..n),
    };
    run_blocks(objective, initial.to_vec(), blocks, config, rng, sink, choose)
}
