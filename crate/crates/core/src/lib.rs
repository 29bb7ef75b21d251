//! Simulation of MIMO links that combine over-the-air antennas with contacts
//! on a shared conductive surface.

pub mod analysis;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod propagation;

pub use error::{Error, ErrorCategory, Result};
