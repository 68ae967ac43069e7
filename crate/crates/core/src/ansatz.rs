//! Circuit templates and the two layered circuit families.
//!
//! Both families start with a fixed `RY(π/4)` layer on every qubit that rotates
//! the input out of the computational basis. That layer carries no parameter
//! slots. Each subsequent layer owns its own slots, numbered in gate order.
//!
//! * RPQC: per layer, one rotation per qubit whose axis is drawn uniformly
//!   from {X, Y, Z}, then CZ on the linear chain `(0,1), (1,2), …`.
//! * ALPQC: per layer, RY on qubits `0..Q-1`, CZ on even pairs, RY on qubits
//!   `1..Q`, CZ on odd pairs.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_4;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::SeededRng;
use crate::simulator::{Angle, Gate, Pauli};

/// Where a parameter slot sits in the circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SlotInfo {
    pub layer: usize,
    pub qubit: usize,
}

/// An ordered gate list with parameter slots: the unitary `U(θ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitTemplate {
    num_qubits: usize,
    num_layers: usize,
    gates: Vec<Gate>,
    /// Indexed by slot.
    slots: Vec<SlotInfo>,
}

impl CircuitTemplate {
    /// A single-layer template over arbitrary gates.
    pub fn new(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        Self::from_layers(num_qubits, Vec::new(), vec![gates])
    }

    /// Builds a template from a fixed prefix followed by layers. Slots are
    /// attributed to the layer whose gate list references them.
    pub fn from_layers(num_qubits: usize, prefix: Vec<Gate>, layers: Vec<Vec<Gate>>) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::InvalidSpec("a circuit needs at least one qubit".into()));
        }
        let mut slot_map: Vec<Option<SlotInfo>> = Vec::new();
        let mut record = |gate: &Gate, layer: Option<usize>| -> Result<()> {
            gate.validate(num_qubits)?;
            if let Gate::Rotation {
                qubit,
                angle: Angle::Slot(slot),
                ..
            } = *gate
            {
                let layer =
                    layer.ok_or_else(|| Error::InvalidSpec("prefix gates cannot reference parameter slots".into()))?;
                if slot >= slot_map.len() {
                    slot_map.resize(slot + 1, None);
                }
                if slot_map[slot].is_some() {
                    return Err(Error::InvalidSpec(format!("parameter slot {slot} used twice")));
                }
                slot_map[slot] = Some(SlotInfo { layer, qubit });
            }
            Ok(())
        };
        for g in &prefix {
            record(g, None)?;
        }
        for (l, layer) in layers.iter().enumerate() {
            for g in layer {
                record(g, Some(l))?;
            }
        }
        let slots = slot_map
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.ok_or_else(|| Error::InvalidSpec(format!("parameter slot {i} is never used"))))
            .collect::<Result<Vec<_>>>()?;
        let num_layers = layers.len();
        let gates = prefix.into_iter().chain(layers.into_iter().flatten()).collect();
        Ok(Self {
            num_qubits,
            num_layers,
            gates,
            slots,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    pub fn num_params(&self) -> usize {
        self.slots.len()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn slots(&self) -> &[SlotInfo] {
        &self.slots
    }

    /// Line-based text form: a `qubits N` header, `layer L` markers and one
    /// gate per line (`RY 3 slot 7`, `RY 0 fixed 0.785…`, `CZ 0 1`).
    pub fn to_text(&self) -> String {
        let mut out = format!("qubits {}\n", self.num_qubits);
        let mut current_layer = None;
        for gate in &self.gates {
            let layer = match gate {
                Gate::Rotation {
                    angle: Angle::Slot(s), ..
                } => Some(self.slots[*s].layer),
                _ => current_layer,
            };
            if layer != current_layer {
                let _ = writeln!(out, "layer {}", layer.unwrap());
                current_layer = layer;
            }
            match gate {
                Gate::Rotation { axis, qubit, angle } => {
                    let _ = match angle {
                        Angle::Slot(s) => writeln!(out, "R{axis} {qubit} slot {s}"),
                        Angle::Fixed(a) => writeln!(out, "R{axis} {qubit} fixed {a:?}"),
                    };
                }
                Gate::Cz(a, b) => {
                    let _ = writeln!(out, "CZ {a} {b}");
                }
            }
        }
        out
    }

    /// Parses the output of [`CircuitTemplate::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut num_qubits = None;
        let mut prefix = Vec::new();
        let mut layers: Vec<Vec<Gate>> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |message: String| Error::Parse { line: line_no, message };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let int = |s: &str| s.parse::<usize>().map_err(|e| err(format!("bad integer `{s}`: {e}")));
            match tokens.as_slice() {
                ["qubits", n] if num_qubits.is_none() => num_qubits = Some(int(n)?),
                _ if num_qubits.is_none() => return Err(err("expected `qubits <N>` header".into())),
                ["layer", l] => {
                    let l = int(l)?;
                    if l != layers.len() {
                        return Err(err(format!("layer {l} out of order")));
                    }
                    layers.push(Vec::new());
                }
                ["CZ", a, b] => {
                    let g = Gate::Cz(int(a)?, int(b)?);
                    layers.last_mut().unwrap_or(&mut prefix).push(g);
                }
                [kind, q, mode, value] if kind.len() == 2 && kind.starts_with('R') => {
                    let axis = kind[1..]
                        .parse::<Pauli>()
                        .map_err(|_| err(format!("unknown gate `{kind}`")))?;
                    let angle = match *mode {
                        "slot" => Angle::Slot(int(value)?),
                        "fixed" => Angle::Fixed(value.parse().map_err(|e| err(format!("bad angle `{value}`: {e}")))?),
                        other => return Err(err(format!("expected `slot` or `fixed`, got `{other}`"))),
                    };
                    let g = Gate::Rotation {
                        axis,
                        qubit: int(q)?,
                        angle,
                    };
                    layers.last_mut().unwrap_or(&mut prefix).push(g);
                }
                _ => return Err(err(format!("unrecognized line `{line}`"))),
            }
        }
        let num_qubits = num_qubits.ok_or(Error::Parse {
            line: 0,
            message: "missing `qubits <N>` header".into(),
        })?;
        Self::from_layers(num_qubits, prefix, layers)
    }
}

/// Circuit family selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnsatzFamily {
    Rpqc,
    Alpqc,
}

/// Reproducible description of a circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub family: AnsatzFamily,
    pub qubits: usize,
    pub layers: usize,
    /// Only RPQC gate kinds depend on it.
    #[serde(default)]
    pub structure_seed: u64,
}

impl AnsatzSpec {
    pub fn build(&self) -> Result<CircuitTemplate> {
        match self.family {
            AnsatzFamily::Rpqc => build_rpqc(self.qubits, self.layers, self.structure_seed),
            AnsatzFamily::Alpqc => build_alpqc(self.qubits, self.layers),
        }
    }
}

// Stream reserved for structure randomness so it never collides with
// initialization or sampling streams keyed on the same seed.
const STRUCTURE_STREAM: u64 = 0x5354_5255_4354;

fn basis_rotation(num_qubits: usize) -> Vec<Gate> {
    (0..num_qubits)
        .map(|q| Gate::Rotation {
            axis: Pauli::Y,
            qubit: q,
            angle: Angle::Fixed(FRAC_PI_4),
        })
        .collect()
}

/// Random parameterized circuit with `Q·L` parameters.
pub fn build_rpqc(num_qubits: usize, num_layers: usize, structure_seed: u64) -> Result<CircuitTemplate> {
    if num_qubits < 2 {
        return Err(Error::InvalidSpec(format!(
            "RPQC needs at least 2 qubits, got {num_qubits}"
        )));
    }
    if num_layers < 1 {
        return Err(Error::InvalidSpec("RPQC needs at least 1 layer".into()));
    }
    let mut rng = SeededRng::new(structure_seed, STRUCTURE_STREAM);
    let axes = [Pauli::X, Pauli::Y, Pauli::Z];
    let mut slot = 0;
    let layers = (0..num_layers)
        .map(|_| {
            let mut layer = Vec::with_capacity(2 * num_qubits - 1);
            for q in 0..num_qubits {
                layer.push(Gate::Rotation {
                    axis: axes[rng.random_range(0..3)],
                    qubit: q,
                    angle: Angle::Slot(slot),
                });
                slot += 1;
            }
            layer.extend((0..num_qubits - 1).map(|q| Gate::Cz(q, q + 1)));
            layer
        })
        .collect();
    CircuitTemplate::from_layers(num_qubits, basis_rotation(num_qubits), layers)
}

/// Alternating-layer circuit with `2(Q−1)·L` RY parameters.
pub fn build_alpqc(num_qubits: usize, num_layers: usize) -> Result<CircuitTemplate> {
    if num_qubits < 3 {
        return Err(Error::InvalidSpec(format!(
            "ALPQC needs at least 3 qubits, got {num_qubits}"
        )));
    }
    if num_layers < 1 {
        return Err(Error::InvalidSpec("ALPQC needs at least 1 layer".into()));
    }
    let mut slot = 0;
    let mut ry_block = |qubits: std::ops::Range<usize>| -> Vec<Gate> {
        qubits
            .map(|q| {
                let g = Gate::Rotation {
                    axis: Pauli::Y,
                    qubit: q,
                    angle: Angle::Slot(slot),
                };
                slot += 1;
                g
            })
            .collect()
    };
    let mut layers = Vec::with_capacity(num_layers);
    for _ in 0..num_layers {
        let mut layer = ry_block(0..num_qubits - 1);
        layer.extend((0..num_qubits - 1).step_by(2).map(|q| Gate::Cz(q, q + 1)));
        layer.extend(ry_block(1..num_qubits));
        layer.extend((1..num_qubits - 1).step_by(2).map(|q| Gate::Cz(q, q + 1)));
        layers.push(layer);
    }
    CircuitTemplate::from_layers(num_qubits, basis_rotation(num_qubits), layers)
}

/// Slot indices grouped by an arbitrary key, keys in ascending order.
pub(crate) fn group_slots(template: &CircuitTemplate, key: impl Fn(&SlotInfo) -> usize) -> Vec<Vec<usize>> {
    let keys: BTreeSet<usize> = template.slots().iter().map(&key).collect();
    keys.into_iter()
        .map(|k| {
            template
                .slots()
                .iter()
                .enumerate()
                .filter(|(_, s)| key(s) == k)
                .map(|(i, _)| i)
                .collect()
        })
        .collect()
}
