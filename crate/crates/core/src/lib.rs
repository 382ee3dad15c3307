//! Simulation library for networks of two-level atoms coupled to a
//! one-dimensional waveguide, where field propagation delays make the
//! dynamics non-Markovian.
//!
//! The crate is organized around a single representation: every memory
//! kernel in the input-output and noise algebra of such a network is a
//! finite weighted sum of Dirac deltas in a time-difference variable
//! ([`kernel::DelayKernel`]). From that representation the crate derives,
//! exactly and symbolically,
//!
//! - the commutators of the input quantum-noise channels seen by each atom,
//! - the channel Itô table at a given integration step,
//! - a Markovianity classification with a witness,
//! - the delay-activated Lindblad coefficients of the averaged master
//!   equation under the Markovian (phase-folding) approximation,
//!
//! and then integrates the resulting master equation ([`dynamics`]) and the
//! homodyne-conditioned stochastic master equation ([`filtering`]).
//!
//! The crate is `no_std` (with `alloc`); all IO, configuration and the
//! multi-worker ensemble driver live in the companion CLI crate.
//!
//! Units: rates in MHz, times in μs, so products rate × time are
//! dimensionless. Phases are in radians.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dynamics;
pub mod filtering;
pub mod io_relations;
pub mod kernel;
pub mod network;
pub mod operator;

pub use num_complex::Complex64;
