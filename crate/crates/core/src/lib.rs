//! Maximal load delivery for joint gas and power transmission networks.

pub mod analyze;
pub mod micp;
pub mod netmodel;
pub mod scenario;
pub mod solve;
pub mod verify;
