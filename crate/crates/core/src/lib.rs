//! Simulation and analysis of optical memories built on stimulated
//! (three-pulse) photon echoes.
//!
//! The crate is organised bottom-up:
//!
//! * [`ensemble`] discretises an inhomogeneously broadened two-level line.
//! * [`bloch`] propagates Bloch vectors exactly through rectangular pulses and
//!   damped free evolution, and sums the ensemble into an emitted field.
//! * [`pathways`] is an independent perturbative oracle that enumerates
//!   coherence-order histories and predicts echo times, phases and amplitudes.
//! * [`qubit`] holds the analytic time-bin qubit model and its decoherence
//!   channel.
//! * [`experiment`] strings the pieces together into the five-pulse
//!   echo-interference experiment: phase scans, echo areas, fringe fits.
//!
//! Units are fixed crate-wide: times in ns, phases in rad, angular
//! frequencies in rad/ns.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod bloch;
pub mod conventions;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod pathways;
pub mod qubit;

pub use bloch::{BlochState, Pulse, PulseSequence, Signal};
pub use ensemble::{DetuningGrid, EnsembleSpec, GridScheme};
pub use error::{EchoError, Result};
pub use experiment::{Background, EchoBin, Fig1Params, FringeFit, FringeScan, PulseAreas, ScannedPhase, VisibilityPoint};
pub use pathways::{Order, Pathway};
pub use qubit::{RetrievedState, TimeBinQubit};

pub use num_complex::Complex64;
