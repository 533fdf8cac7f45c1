//! Geometric channels.
//!
//! [`scene`] replaces a ray tracer with a deterministic image-method tracer
//! for a rectangular room; [`narrowband`] and [`ofdm`] turn the resulting
//! [`PathSet`] into array-domain channel matrices.

pub mod narrowband;
pub mod ofdm;
pub mod pose;
pub mod scene;

pub use narrowband::{narrowband_channel, CMatrix};
pub use ofdm::{ofdm_channels, OfdmChannels, OfdmConfig};
pub use pose::{gcs_to_lcs, lcs_to_gcs, rotation_matrix, Pose, Rotation};
pub use scene::{sample_pose, trace_paths, Band, Path, PathSet, Scene};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
