//! Near-field and far-field binaural signal matching (BSM) for microphone
//! arrays mounted on a rigid sphere.
//!
//! - [`sphmath`]: spherical Bessel/Hankel functions and spherical harmonics
//! - [`field`]: rigid-sphere pressure for point sources and plane waves, distance ratios
//! - [`hrtf`]: analytic sphere HRTFs, distance transforms and a tabular file format
//! - [`bsm`]: steering matrices, filter design and reproduction error
//! - [`experiment`]: configuration, distance × frequency sweeps and CSV output

pub mod bsm;
pub mod error;
pub mod experiment;
pub mod field;
pub mod hrtf;
pub mod sphmath;

pub use error::{Error, Result};
