//! Seedable simulator of distributed power allocation in a cognitive
//! femtocell network.
//!
//! Each femtocell learns per-subcarrier transmit powers with tabular
//! Q-learning, either independently or cooperatively by sharing
//! current-state Q-rows and acting on the summed values. The crate
//! provides the radio environment (topology, path-loss gains, SINR
//! capacities), the learning core, the episode harness, run metrics and
//! experiment sweeps; the `femtoq` binary fronts it all from config
//! files.
//!
//! Everything is deterministic for a fixed seed: same config, same trace,
//! byte for byte.

pub mod agent;
pub mod error;
pub mod mdp;
pub mod metrics;
pub mod qlearn;
pub mod radio;
pub mod sim;
pub mod sweep;

pub use error::{Error, Result};
