//! Linear-optical multiports with cavity feedback.
//!
//! Build scattering matrices for beam-splitters and Grover coins, seal or
//! link their ports, and study the resulting tunable interferometers.

pub mod analysis;
pub mod cli;
pub mod closure;
pub mod devices;
pub mod error;
pub mod linalg;
pub mod netlist;
pub mod phase_expr;
pub mod report;
pub mod scattering;

pub use error::{Error, Result};
