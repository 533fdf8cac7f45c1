//! Device-agnostic beam selection for multi-panel mmWave terminals.
//!
//! A generic network predicts optimality probabilities over a fixed
//! spherical Fibonacci grid of arrival directions instead of over one
//! device's beams. A per-device map from grid points to best beams then
//! collapses those probabilities onto the device codebook, so one trained
//! model serves terminals with different antenna placements.
//!
//! Module layout:
//! - [`sphgrid`]: Fibonacci grids and direction arithmetic.
//! - [`antenna`]: array responses, DFT codebooks, E/F/EF devices, grid-to-beam maps.
//! - [`channel`]: poses, the image-method path tracer, narrowband and OFDM channels.
//! - [`beamcore`]: RSS sweeps, labels, post-processing, candidate lists, beam training.
//! - [`neural`]: from-scratch MLPs, cross-entropy training, inference pipelines.
//! - [`evalkit`]: misalignment, effective spectral efficiency, Top-n metrics.
//! - [`harness`]: configs, dataset generation, experiments, exporters, CLI commands.
//!
//! All beam and grid indices are 0-based.

pub mod antenna;
pub mod beamcore;
pub mod channel;
pub mod error;
pub mod evalkit;
pub mod harness;
pub mod neural;
pub mod sphgrid;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
