//! Natural evolution strategies (canonical ES, xNES, sNES) for optimizing
//! parameterized quantum circuits on an exact statevector simulator.
//!
//! * [`simulator`]: statevectors, Pauli rotations, CZ, Pauli-sum expectations.
//! * [`ansatz`]: RPQC and ALPQC circuit templates.
//! * [`hamiltonian`]: Pauli-sum files and exact ground energies.
//! * [`nes`]: search distributions, fitness shaping and the optimizers.
//! * [`batching`]: block-coordinate NES for deep circuits.
//! * [`gradients`]: parameter-shift gradients, gradient descent, variance scans
//!   and the sNES/gradient-descent hybrid.
//! * [`harness`]: TOML experiments and CSV traces behind the `qnes` binary.
//!
//! ```
//! use qnes::ansatz::build_rpqc;
//! use qnes::gradients::CircuitLoss;
//! use qnes::nes::{optimize, NesConfig, Variant};
//! use qnes::numerics::SeededRng;
//! use qnes::trace::NullSink;
//!
//! let loss = CircuitLoss::state_prep(build_rpqc(3, 2, 0)?);
//! let start = Variant::Snes.initial_distribution(vec![1.0; 6], 0.1);
//! let config = NesConfig { max_iterations: 200, ..NesConfig::default() };
//! let out = optimize(&loss, start, &config, &mut SeededRng::new(0, 0), &mut NullSink)?;
//! assert!(out.final_loss() < out.trace.records[0].loss);
//! # Ok::<(), qnes::Error>(())
//! ```

// `!(x > 0.0)` is used throughout to reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ansatz;
pub mod batching;
pub mod error;
pub mod gradients;
pub mod hamiltonian;
pub mod harness;
pub mod nes;
pub mod numerics;
pub mod simulator;
pub mod trace;

pub use error::{Error, Result};

// The guide's snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/simulator.md")]
    mod simulator {}
    #[doc = include_str!("../../../book/src/ansatz.md")]
    mod ansatz {}
    #[doc = include_str!("../../../book/src/evolution_strategies.md")]
    mod evolution_strategies {}
    #[doc = include_str!("../../../book/src/batching.md")]
    mod batching {}
    #[doc = include_str!("../../../book/src/gradients.md")]
    mod gradients {}
    #[doc = include_str!("../../../book/src/hamiltonians.md")]
    mod hamiltonians {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
