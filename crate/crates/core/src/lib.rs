//! Random-circuit-sampling workbench.
//!
//! The crate is organised bottom-up:
//!
//! - [`topology`]: the qubit lattice, couplers and the A/B/C/D activation patterns.
//! - [`circuit`]: gate definitions, random circuit generation and the patch/elided variants.
//! - [`simulator`]: exact state-vector simulation, ideal and noisy sampling, predicted fidelity.
//! - [`xeb`]: linear cross-entropy benchmarking and its statistics (Porter-Thomas law,
//!   Kolmogorov-Smirnov, bootstrap, inverse-variance weighting, speckle purity).
//! - [`optimize`]: finite-difference gradients and a BFGS minimiser.
//! - [`calibration`]: patch-wise refitting of two-qubit gate parameters.
//! - [`costmodel`]: tensor-network contraction cost and Schrödinger-Feynman cut analysis.
//!
//! Conventions shared by every module: qubit 0 is the most significant bit of a basis-state
//! index and of a bitstring, and all randomness flows from an explicit 64-bit seed through
//! [`rng::stream_rng`].

pub mod calibration;
pub mod circuit;
pub mod costmodel;
pub mod error;
pub mod optimize;
pub mod rng;
pub mod samples;
pub mod simulator;
pub mod topology;
pub mod xeb;

mod numeric;

pub use error::{Error, Result};
