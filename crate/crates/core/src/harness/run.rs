use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind, OptimizerKind};
use crate::batching::{batch_optimize, make_partition};
use crate::error::{Error, Result};
use crate::gradients::{
    gradient_descent, hybrid_optimize, surrogate_gradient_variance_scan, CircuitLoss, GradientSnapshot, HybridConfig,
    VarianceRow, VarianceScanConfig,
};
use crate::hamiltonian::exact_ground_energy;
use crate::nes::optimize;
use crate::numerics::SeededRng;
use crate::trace::{
    pad_to_common_grid, summarize, write_comment_header, write_summary_csv, RunTrace, TraceRecord, TraceSink,
    TRACE_SCHEMA,
};

/// Schema tag of variance-scan CSVs.
pub const VARIANCE_SCHEMA: &str = "# qnes-variance v1";
/// Schema tag of gradient-snapshot CSVs.
pub const SNAPSHOT_SCHEMA: &str = "# qnes-snapshots v1";

const INIT_STREAM: u64 = 0x1417;
const PARTITION_STREAM: u64 = 0x9a27;

/// Files written by [`run_experiment`] plus lines worth showing the user.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub notes: Vec<String>,
}

fn version_line() -> String {
    format!("qnes {}", env!("CARGO_PKG_VERSION"))
}

fn header(config: &ExperimentConfig, seed: Option<u64>, extra: &[String]) -> Vec<String> {
    let mut h = vec![version_line()];
    if let Some(s) = seed {
        h.push(format!("seed = {s}"));
    }
    h.extend(extra.iter().cloned());
    h.push("config:".into());
    h.push(config.to_toml());
    h
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

/// Writes records to disk as they arrive, so a failing run leaves the
/// iterations it completed behind.
struct StreamingTrace {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
    error: Option<Error>,
}

impl StreamingTrace {
    fn create(path: PathBuf, header: &[String]) -> Result<Self> {
        let mut out = create(&path)?;
        write_comment_header(&mut out, TRACE_SCHEMA, header)?;
        Ok(Self {
            writer: csv::Writer::from_writer(out),
            path,
            error: None,
        })
    }

    fn finish(mut self) -> Result<PathBuf> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.writer.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.path)
    }
}

impl TraceSink for StreamingTrace {
    fn record(&mut self, record: &TraceRecord) {
        if self.error.is_none() {
            if let Err(e) = self.writer.serialize(record) {
                self.error = Some(e.into());
            }
        }
    }
}

/// Runs `f` with a streaming sink, flushing whatever was written even if
/// `f` fails.
fn with_trace<T>(
    path: PathBuf,
    header: &[String],
    f: impl FnOnce(&mut StreamingTrace) -> Result<T>,
) -> Result<(T, PathBuf)> {
    let mut sink = StreamingTrace::create(path, header)?;
    let result = f(&mut sink);
    let path = sink.finish();
    let value = result?;
    Ok((value, path?))
}

fn uniform_init(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = SeededRng::new(seed, INIT_STREAM);
    (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect()
}

fn write_snapshots(path: &Path, snapshots: &[GradientSnapshot], header: &[String]) -> Result<()> {
    let mut out = create(path)?;
    write_comment_header(&mut out, SNAPSHOT_SCHEMA, header)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "param_index", "gradient"])?;
    for s in snapshots {
        for (j, g) in s.components.iter().enumerate() {
            w.serialize((s.iteration, j, g))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_variance_csv<W: Write>(rows: &[VarianceRow], mut out: W, header: &[String]) -> Result<()> {
    write_comment_header(&mut out, VARIANCE_SCHEMA, header)?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<variance>", e))?;
    Ok(())
}

/// Output of one seed: traces keyed by label, plus files written.
struct SeedOutput {
    traces: Vec<(String, RunTrace)>,
    files: Vec<PathBuf>,
    notes: Vec<String>,
}

fn run_optimizer(
    config: &ExperimentConfig,
    loss: &CircuitLoss,
    optimizer: OptimizerKind,
    seed: u64,
    dir: &Path,
    label: &str,
    extra_header: &[String],
) -> Result<SeedOutput> {
    let init = uniform_init(loss.num_params(), seed);
    let mut rng = SeededRng::new(seed, 0);
    let head = header(config, Some(seed), extra_header);
    let trace_path = dir.join(format!("trace{label}_seed{seed}.csv"));
    let mut files = Vec::new();
    let trace = match optimizer {
        OptimizerKind::Canonical | OptimizerKind::Snes | OptimizerKind::Xnes => {
            let variant = optimizer.variant().expect("NES optimizer");
            let nes = config.nes_config();
            let schedule = match &config.batch {
                Some(b) if config.experiment == ExperimentKind::Batch => {
                    let mut s = make_partition(loss.template(), b.strategy()?, &mut rng.derive(PARTITION_STREAM))?;
                    s.order = b.order;
                    Some(s)
                }
                _ => None,
            };
            let (out, path) = with_trace(trace_path, &head, |sink| {
                if let Some(schedule) = &schedule {
                    batch_optimize(
                        loss,
                        &init,
                        schedule,
                        variant,
                        config.nes.init_std,
                        &nes,
                        &mut rng,
                        sink,
                    )
                } else {
                    let dist = variant.initial_distribution(init.clone(), config.nes.init_std);
                    optimize(loss, dist, &nes, &mut rng, sink)
                }
            })?;
            files.push(path);
            out.trace
        }
        OptimizerKind::Gd => {
            let gd = config.gd_config(config.max_iterations)?;
            let (out, path) = with_trace(trace_path, &head, |sink| gradient_descent(loss, &init, &gd, sink))?;
            files.push(path);
            out.trace
        }
        OptimizerKind::Hybrid => {
            let warmup = config.hybrid.warmup.min(config.max_iterations);
            let hybrid = HybridConfig {
                warmup_iterations: warmup,
                init_std: config.nes.init_std,
                nes: config.nes_config(),
                gd: config.gd_config(config.max_iterations - warmup)?,
                snapshot_interval: config.hybrid.snapshot_interval,
            };
            let (out, path) = with_trace(trace_path, &head, |sink| {
                hybrid_optimize(loss, &init, &hybrid, &mut rng, sink)
            })?;
            files.push(path);
            let snap_path = dir.join(format!("snapshots{label}_seed{seed}.csv"));
            write_snapshots(&snap_path, &out.snapshots, &head)?;
            files.push(snap_path);
            out.trace
        }
    };
    let notes = vec![format!(
        "seed {seed}{label}: final loss {:.6e} after {} iterations",
        trace.final_loss().unwrap_or(f64::NAN),
        trace.last().map_or(0, |r| r.iteration)
    )];
    Ok(SeedOutput {
        traces: vec![(label.to_string(), trace)],
        files,
        notes,
    })
}

fn run_seed(config: &ExperimentConfig, seed: u64, dir: &Path, extra_header: &[String]) -> Result<SeedOutput> {
    let template = config.template()?;
    match config.experiment {
        ExperimentKind::VarianceScan => {
            let v = config.variance.as_ref().expect("validated");
            let scan = VarianceScanConfig {
                template,
                observable: config.observable()?,
                num_inits: v.num_inits,
                sigma_inits: v.sigma_inits.clone(),
                walker_counts: v.walker_counts.clone(),
                parameter_index: v.parameter_index,
                form: v.form,
                parallel: config.parallel,
            };
            let rows = surrogate_gradient_variance_scan(&scan, &mut SeededRng::new(seed, 0))?;
            let path = dir.join(format!("variance_seed{seed}.csv"));
            write_variance_csv(&rows, create(&path)?, &header(config, Some(seed), extra_header))?;
            Ok(SeedOutput {
                traces: Vec::new(),
                files: vec![path],
                notes: Vec::new(),
            })
        }
        ExperimentKind::Vqe => {
            let loss = CircuitLoss::energy(template, config.hamiltonian()?)?;
            run_optimizer(config, &loss, config.optimizer, seed, dir, "", extra_header)
        }
        ExperimentKind::Stateprep | ExperimentKind::Batch => {
            let loss = CircuitLoss::state_prep(template);
            run_optimizer(config, &loss, config.optimizer, seed, dir, "", extra_header)
        }
        ExperimentKind::Hybrid => {
            let loss = CircuitLoss::state_prep(template);
            run_optimizer(config, &loss, OptimizerKind::Hybrid, seed, dir, "", extra_header)
        }
        ExperimentKind::CompareGd => {
            let loss = CircuitLoss::state_prep(template);
            let label = format!("_{}", config.optimizer.name());
            let mut nes = run_optimizer(config, &loss, config.optimizer, seed, dir, &label, extra_header)?;
            let gd = run_optimizer(config, &loss, OptimizerKind::Gd, seed, dir, "_gd", extra_header)?;
            nes.traces.extend(gd.traces);
            nes.files.extend(gd.files);
            nes.notes.extend(gd.notes);
            Ok(nes)
        }
    }
}

/// Runs the experiment once per seed, seeds in parallel, and writes one trace
/// per seed and optimizer plus a summary across seeds. Runs that stopped early
/// are padded with their final record before summarizing.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let dir = config.output_dir();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut report = RunReport::default();
    let mut extra = Vec::new();
    if config.experiment == ExperimentKind::Vqe {
        let e0 = exact_ground_energy(&config.hamiltonian()?)?;
        let line = format!("exact_ground_energy = {e0:?}");
        report.notes.push(line.clone());
        extra.push(line);
    }

    let results: Vec<Result<SeedOutput>> = if config.parallel {
        config
            .seeds
            .par_iter()
            .map(|&s| run_seed(config, s, &dir, &extra))
            .collect()
    } else {
        config
            .seeds
            .iter()
            .map(|&s| run_seed(config, s, &dir, &extra))
            .collect()
    };
    let outputs = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut labels: Vec<String> = Vec::new();
    for out in &outputs {
        for (label, _) in &out.traces {
            if !labels.contains(label) {
                labels.push(label.clone());
            }
        }
    }
    for out in &outputs {
        report.files.extend(out.files.iter().cloned());
        report.notes.extend(out.notes.iter().cloned());
    }
    for label in labels {
        let traces: Vec<RunTrace> = outputs
            .iter()
            .flat_map(|o| o.traces.iter().filter(|(l, _)| *l == label).map(|(_, t)| t.clone()))
            .collect();
        let rows = summarize(&pad_to_common_grid(&traces))?;
        let path = dir.join(format!("summary{label}.csv"));
        let mut head = header(config, None, &extra);
        head.insert(1, format!("seeds = {:?}", config.seeds));
        write_summary_csv(&rows, create(&path)?, &head)?;
        report.files.push(path);
    }
    Ok(report)
}

/// Summarizes trace files that share one iteration grid.
pub fn summarize_files(paths: &[PathBuf], out: &Path) -> Result<()> {
    let traces = paths
        .iter()
        .map(|p| RunTrace::read_csv_file(p))
        .collect::<Result<Vec<_>>>()?;
    let rows = summarize(&traces)?;
    let head: Vec<String> = std::iter::once(version_line())
        .chain(paths.iter().map(|p| format!("trace = {}", p.display())))
        .collect();
    write_summary_csv(&rows, create(out)?, &head)
}
