//! Stochastic-thermodynamic simulation of single-electron NAND/XOR logic.
//!
//! A NAND gate is modelled as four single-electron transistors (two P-type
//! in parallel between the supply and the output node, two N-type in series
//! between the output node and ground) exchanging electrons with three
//! electrodes. The electron configuration of one gate is a 16-state
//! continuous-time Markov process; the output node is a capacitor charged
//! and discharged by the electrode currents.
//!
//! The crate is organised bottom-up:
//!
//! - [`constants`] / [`device`]: physical constants, gate parameterisation,
//!   occupation statistics, and the voltage-to-level map.
//! - [`master`]: the 16x16 generator, master-equation propagation with node
//!   feedback, steady states, currents, dissipated work, propagation delay.
//! - [`gillespie`]: exact stochastic simulation of the same jump process.
//! - [`gate`]: the four-NAND XOR network, ternary logic readout, energy and
//!   input-transition matrices, the switching-model baseline.
//! - [`info`]: the Gaussian readout channel, error probabilities, mutual
//!   information, capacity, and the entropy decomposition.
//! - [`efficiency`]: information-energy ratio, its genetic-algorithm
//!   optimization, and the two-XOR parity-check circuit.

pub mod constants;
pub mod device;
pub mod efficiency;
pub mod error;
pub mod gate;
pub mod gillespie;
pub mod info;
pub mod master;

pub use constants::PhysicalConstants;
pub use device::{GateState, LevelMap, NandParams};
pub use error::{Error, Result};
