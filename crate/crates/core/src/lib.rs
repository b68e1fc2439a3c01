//! Periods of closed Hamiltonian flows, iso-energetic period surveys and
//! semiclassical difference spectra.

pub mod error;
pub mod experiments;
pub mod integrate;
pub mod period;
pub mod phase;
pub mod semiclassical;
pub mod systems;

pub use error::{Error, Result};
pub use phase::PhasePoint;

/// Crate version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
