use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ansatz::{AnsatzSpec, CircuitTemplate};
use crate::batching::{make_partition, BatchOrder, PartitionStrategy};
use crate::error::{Error, Result};
use crate::gradients::{GdConfig, SurrogateForm};
use crate::hamiltonian::read_pauli_file;
use crate::nes::{LearningRates, NesConfig, RateSchedule, Variant, DEFAULT_STOP_THRESHOLD, PRESET_POPULATION};
use crate::numerics::SeededRng;
use crate::simulator::{Observable, PauliSum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Stateprep,
    Vqe,
    VarianceScan,
    Batch,
    Hybrid,
    CompareGd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Canonical,
    Snes,
    Xnes,
    Gd,
    Hybrid,
}

impl OptimizerKind {
    pub fn variant(self) -> Option<Variant> {
        match self {
            OptimizerKind::Canonical => Some(Variant::Canonical),
            OptimizerKind::Snes => Some(Variant::Snes),
            OptimizerKind::Xnes => Some(Variant::Xnes),
            OptimizerKind::Gd | OptimizerKind::Hybrid => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Canonical => "canonical",
            OptimizerKind::Snes => "snes",
            OptimizerKind::Xnes => "xnes",
            OptimizerKind::Gd => "gd",
            OptimizerKind::Hybrid => "hybrid",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NesSection {
    #[serde(default = "default_population")]
    pub population: usize,
    #[serde(default = "default_init_std")]
    pub init_std: f64,
    #[serde(default = "default_stop_threshold")]
    pub stop_threshold: f64,
    #[serde(default)]
    pub natural_gradient: bool,
    /// Fixed rates; the dimension-dependent standard rates is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<LearningRates>,
}

fn default_population() -> usize {
    PRESET_POPULATION
}

fn default_init_std() -> f64 {
    0.1
}

fn default_stop_threshold() -> f64 {
    DEFAULT_STOP_THRESHOLD
}

impl Default for NesSection {
    fn default() -> Self {
        Self {
            population: default_population(),
            init_std: default_init_std(),
            stop_threshold: default_stop_threshold(),
            natural_gradient: false,
            rates: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GdSection {
    /// Required whenever gradient descent runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default)]
    pub tolerance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Random,
    LayerWise,
    QubitWise,
    LayerBlock,
    QubitBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchSection {
    pub strategy: StrategyKind,
    /// Ignored by `layer_wise` and `qubit_wise`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(default)]
    pub order: BatchOrder,
}

impl BatchSection {
    pub fn strategy(&self) -> Result<PartitionStrategy> {
        let size = || {
            self.size
                .ok_or_else(|| Error::Config(format!("batch.size is required for {:?} partitions", self.strategy)))
        };
        Ok(match self.strategy {
            StrategyKind::Random => PartitionStrategy::Random { batch_size: size()? },
            StrategyKind::LayerWise => PartitionStrategy::LayerWise,
            StrategyKind::QubitWise => PartitionStrategy::QubitWise,
            StrategyKind::LayerBlock => PartitionStrategy::LayerBlock { batch_size: size()? },
            StrategyKind::QubitBlock => PartitionStrategy::QubitBlock { batch_size: size()? },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HybridSection {
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_interval: Option<usize>,
}

fn default_warmup() -> usize {
    5
}

impl Default for HybridSection {
    fn default() -> Self {
        Self {
            warmup: default_warmup(),
            snapshot_interval: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    /// `Z₀Z₁`
    #[default]
    Z0z1,
    /// `|0…0⟩⟨0…0|`
    Vacuum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceSection {
    pub num_inits: usize,
    pub sigma_inits: Vec<f64>,
    pub walker_counts: Vec<usize>,
    #[serde(default)]
    pub observable: ObservableKind,
    #[serde(default)]
    pub parameter_index: usize,
    #[serde(default)]
    pub form: SurrogateForm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqeSection {
    /// Pauli-sum file, relative to the configuration file.
    pub hamiltonian: PathBuf,
}

/// One experiment as read from a TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerKind,
    pub seeds: Vec<u64>,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Output directory, relative to the configuration file.
    #[serde(default = "default_output", skip_serializing)]
    pub output: PathBuf,
    #[serde(default = "default_parallel")]
    pub parallel: bool,
    pub ansatz: AnsatzSpec,
    #[serde(default)]
    pub nes: NesSection,
    #[serde(default)]
    pub gd: GdSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch: Option<BatchSection>,
    #[serde(default)]
    pub hybrid: HybridSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<VarianceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vqe: Option<VqeSection>,
    #[serde(skip)]
    base_dir: PathBuf,
}

fn default_optimizer() -> OptimizerKind {
    OptimizerKind::Snes
}

fn default_max_iterations() -> usize {
    1000
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_parallel() -> bool {
    true
}

/// Splits `key=value`.
pub fn parse_override(raw: &str) -> Result<(String, String)> {
    let (k, v) = raw
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{raw}` is not of the form key=value")))?;
    let key = k.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("override `{raw}` has an empty key")));
    }
    Ok((key.to_string(), v.trim().to_string()))
}

fn override_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_override(table: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("split yields at least one part");
    let mut cur = table;
    for p in parts {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{p}` is not a section")))?;
    }
    cur.insert(last.to_string(), override_value(raw));
    Ok(())
}

impl ExperimentConfig {
    /// Parses TOML text. Relative paths resolve against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for (k, v) in overrides {
            apply_override(&mut table, k, v)?;
        }
        let mut config: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        config.base_dir = base_dir.to_path_buf();
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base, overrides)
    }

    /// Resolves a configured path against the configuration file's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output)
    }

    /// Overrides the output directory with a path used as given.
    pub fn set_output_dir(&mut self, dir: PathBuf) {
        self.output = std::path::absolute(&dir).unwrap_or(dir);
    }

    /// The configuration as TOML, for echoing into output headers.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn template(&self) -> Result<CircuitTemplate> {
        self.ansatz.build()
    }

    pub fn nes_config(&self) -> NesConfig {
        NesConfig {
            population: self.nes.population,
            rates: self.nes.rates.map_or(RateSchedule::Standard, RateSchedule::Fixed),
            max_iterations: self.max_iterations,
            stop_threshold: self.nes.stop_threshold,
            parallel: self.parallel,
            natural_gradient: self.nes.natural_gradient,
        }
    }

    pub fn gd_config(&self, max_iterations: usize) -> Result<GdConfig> {
        let learning_rate = self
            .gd
            .learning_rate
            .ok_or_else(|| Error::Config("gd.learning_rate is required for gradient descent".into()))?;
        Ok(GdConfig {
            learning_rate,
            max_iterations,
            tolerance: self.gd.tolerance,
        })
    }

    pub fn hamiltonian(&self) -> Result<PauliSum> {
        let vqe = self
            .vqe
            .as_ref()
            .ok_or_else(|| Error::Config("the vqe experiment needs a [vqe] section".into()))?;
        let path = self.resolve(&vqe.hamiltonian);
        if !path.is_file() {
            return Err(Error::Config(format!(
                "hamiltonian file {} does not exist",
                path.display()
            )));
        }
        read_pauli_file(&path)
    }

    pub fn observable(&self) -> Result<Observable> {
        let v = self
            .variance
            .as_ref()
            .ok_or_else(|| Error::Config("the variance_scan experiment needs a [variance] section".into()))?;
        Ok(match v.observable {
            ObservableKind::Z0z1 => Observable::Pauli(PauliSum::zz(self.ansatz.qubits, 0, 1)?),
            ObservableKind::Vacuum => Observable::VacuumProjector,
        })
    }

    fn uses_gd(&self) -> bool {
        matches!(self.experiment, ExperimentKind::CompareGd | ExperimentKind::Hybrid)
            || matches!(self.optimizer, OptimizerKind::Gd | OptimizerKind::Hybrid)
    }

    fn uses_nes(&self) -> bool {
        self.experiment != ExperimentKind::VarianceScan && self.optimizer != OptimizerKind::Gd
    }

    /// Checks everything that can be checked before running.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        let template = self.template()?;
        if self.uses_gd() {
            match self.gd.learning_rate {
                Some(lr) if lr > 0.0 && lr.is_finite() => {}
                _ => return bad("gd.learning_rate must be set to a positive finite value".into()),
            }
        }
        if self.uses_nes() {
            let min = if self.optimizer == OptimizerKind::Canonical {
                1
            } else {
                2
            };
            if self.nes.population < min {
                return bad(format!("nes.population must be at least {min}"));
            }
            if !(self.nes.init_std > 0.0) {
                return bad("nes.init_std must be positive".into());
            }
        }
        match self.experiment {
            ExperimentKind::Stateprep => {}
            ExperimentKind::Vqe => {
                let h = self.hamiltonian()?;
                if h.num_qubits() != template.num_qubits() {
                    return bad(format!(
                        "hamiltonian acts on {} qubits but the ansatz has {}",
                        h.num_qubits(),
                        template.num_qubits()
                    ));
                }
            }
            ExperimentKind::VarianceScan => {
                let v = self.variance.as_ref().expect("checked by observable()");
                self.observable()?;
                if v.num_inits < 2 {
                    return bad("variance.num_inits must be at least 2".into());
                }
                if v.sigma_inits.is_empty() || v.walker_counts.is_empty() {
                    return bad("variance.sigma_inits and variance.walker_counts must not be empty".into());
                }
                if v.parameter_index >= template.num_params() {
                    return bad(format!(
                        "variance.parameter_index {} is outside {} parameters",
                        v.parameter_index,
                        template.num_params()
                    ));
                }
            }
            ExperimentKind::Batch => {
                let b = self
                    .batch
                    .as_ref()
                    .ok_or_else(|| Error::Config("the batch experiment needs a [batch] section".into()))?;
                // Partition shapes do not depend on the rng beyond the random
                // shuffle, so any stream validates the sizes.
                make_partition(&template, b.strategy()?, &mut SeededRng::new(0, 0))?;
                if self.optimizer.variant().is_none() {
                    return bad("batch optimization needs optimizer canonical, snes or xnes".into());
                }
            }
            ExperimentKind::Hybrid => {
                if self.optimizer != OptimizerKind::Hybrid && self.optimizer != OptimizerKind::Snes {
                    return bad(
                        "the hybrid experiment runs sNES then gradient descent; set optimizer = \"hybrid\"".into(),
                    );
                }
                if self.hybrid.snapshot_interval == Some(0) {
                    return bad("hybrid.snapshot_interval must be positive".into());
                }
            }
            ExperimentKind::CompareGd => {
                if self.optimizer.variant().is_none() {
                    return bad(
                        "compare_gd compares an NES optimizer (canonical, snes or xnes) with gradient descent".into(),
                    );
                }
            }
        }
        Ok(())
    }
}
