//! Time-optimal control synthesis and auditing for a driven qubit.

pub mod dynamics;
mod error;
pub mod optim;
pub mod pmp;
pub mod smoothing;
pub mod state_prep;
pub mod xgate;

pub use error::{Error, Result};
