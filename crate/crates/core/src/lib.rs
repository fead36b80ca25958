//! Simulation and placement search for a UAV aerial base station assisted by
//! an intelligent reflecting surface carried on a ground vehicle (M-IRS).
//!
//! The crate is layered bottom-up:
//!
//! * [`scenario`]: configuration schema, unit conversions and seed derivation.
//! * [`mobility`]: Random Waypoint user movement sampled at slot boundaries.
//! * [`channel`]: air-to-ground pathloss with human-body blockage and the
//!   coherently combined IRS reflected link.
//! * [`noma`]: strong/weak pairing, fractional transmit power allocation,
//!   SIC SINRs and the OMA baseline.
//! * [`optimizer`]: binary-coded genetic algorithm over UAV and IRS positions.
//! * [`experiment`]: multi-seed comparison of the M-IRS, static-IRS and
//!   no-IRS systems, plus CSV/JSON output.

pub mod channel;
pub mod error;
pub mod experiment;
pub mod mobility;
pub mod noma;
pub mod optimizer;
pub mod scenario;

pub use error::{Error, Result};
