//! Small-signal nodal analysis and phase-noise workbench for active-mode MEMS
//! resonator oscillators.

pub mod checks;
pub mod error;
pub mod linalg;
pub mod mna;
pub mod netlist;
pub mod oscillator;
pub mod phase_noise;
pub mod resonator;
pub mod response;

pub use error::{Error, ParseError, Result};
pub use mna::{BOLTZMANN, DEFAULT_TEMPERATURE};
pub use netlist::{parse_netlist, validate_netlist, Netlist};
pub use response::{FrequencyGrid, FrequencyResponse};
