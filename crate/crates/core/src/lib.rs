//! Entanglement accumulation between remote nuclear-spin qudits.
//!
//! Each node holds a qudit (a nuclear spin) coupled to an electron spin
//! through an Ising interaction. Electron pairs are entangled remotely,
//! their entanglement is transferred onto the qudits by conditional phase
//! rotations and X-basis measurements, and the process is iterated.

pub mod cli;
pub mod conditions;
pub mod defects;
pub mod error;
pub mod gates;
pub mod kernel;
pub mod network;
pub mod schemes;
pub mod states;

pub use error::{Error, Result};
pub use kernel::{CMatrix, C64};
