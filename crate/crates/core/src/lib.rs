//! Simulation library for L²-orthogonal space-time coded continuous phase
//! modulation with two and three transmit antennas.

pub mod analysis;
pub mod channel;
pub mod cpm;
pub mod error;
pub mod experiments;
pub mod receiver;
pub mod stc;

pub use cpm::{CpmParams, Pulse, Waveform};
pub use error::{Error, Result};
pub use stc::{Correction, StcCodeSpec};
