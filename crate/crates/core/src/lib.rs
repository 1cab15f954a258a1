//! Simulation and symbol detection for MIMO-OFDM links.
//!
//! The crate models a block-fading multipath MIMO-OFDM link and detects
//! 16-QAM symbols with three engines:
//!
//! * a reservoir-computing binary detector whose ±1 decisions are turned
//!   into 4-level posteriors by shifting the received signal along the
//!   channel response of one constellation axis ([`detector`]);
//! * per-subcarrier LMMSE equalization with hard slicing ([`baselines`]);
//! * per-subcarrier exhaustive maximum-likelihood search ([`baselines`]).
//!
//! [`harness`] runs Monte Carlo symbol-error-rate sweeps over SNR with
//! perfect or pilot-estimated channel state information.
//!
//! The runnable programs under `examples/` walk through each capability.

pub mod baselines;
pub mod channel;
pub mod detector;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod realmap;
pub mod reservoir;
pub mod waveform;

pub use error::{Error, Result};

/// Dense complex matrix, rows × columns (antennas × subcarriers or samples).
pub type ComplexMat = ndarray::Array2<num_complex::Complex64>;
