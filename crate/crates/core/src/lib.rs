//! Desk-scale SIMO physical-layer simulator and device identification toolkit.
//!
//! A single-antenna UE sends one OFDM pilot symbol to a two-antenna base
//! station. Each UE carries its own hardware impairments (IQ imbalance,
//! oscillator offset, memory-polynomial PA), the two uplink paths are
//! independent tapped-delay-line channels, and the base station recovers a
//! channel-robust fingerprint from the pair of least-squares channel
//! estimates with the sub-band Log-Linear Delta Ratio (LLDR) extractor.
//!
//! The crate is organised bottom-up:
//!
//! - [`impairments`]: per-device hardware profiles and the transmit/receive
//!   distortion chain, plus the ground-truth transmit response oracle.
//! - [`channel`]: TDL channel realisation, frequency response and AWGN.
//! - [`link`]: pilot grids, the end-to-end frame simulator and LS estimation.
//! - [`extractor`]: LLDR and the three baseline extractors.
//! - [`classifier`]: a from-scratch CNN with Adam and early stopping, and a
//!   nearest-centroid baseline.
//! - [`latency`]: Roofline latency model and pipeline workload accounting.
//! - [`harness`]: dataset generation and persistence, experiments, sweeps and
//!   the command-line front end.

pub mod channel;
pub mod classifier;
pub mod error;
pub mod extractor;
pub mod harness;
pub mod impairments;
pub mod latency;
pub mod link;
pub mod seed;

pub use error::{Error, Result};

/// Complex baseband sample type used throughout the crate.
pub type C64 = num_complex::Complex64;
