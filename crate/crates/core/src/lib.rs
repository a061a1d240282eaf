//! Minimum-energy control of linear network systems from local state information.

pub mod control;
pub mod decay;
pub mod error;
pub mod experiment;
pub mod network;
pub mod powergrid;
pub mod scenario;
pub mod sparse;

pub use error::{Error, Result};
