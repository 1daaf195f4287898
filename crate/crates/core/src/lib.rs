//! Noiseless parametric amplification of optical images in planar and
//! confocal degenerate optical parametric amplifiers.
//!
//! The crate evaluates the closed-form frequency-domain response of a
//! below-threshold parametric cavity and carries it through a 4f imaging
//! telescope to pixel photocount statistics:
//!
//! - [`params`]: physical parameters, derived scales, regime checks.
//! - [`field`]: the sampled transverse plane.
//! - [`transfer`]: Bogoliubov coefficients U, V, gain, squeezing, noise figure.
//! - [`propagation`]: pupil impulse response and object-to-image maps.
//! - [`modes`]: Gauss-Laguerre basis for the confocal cavity.
//! - [`detection`]: photocount means, variances, SNR and Monte Carlo sampling.

pub mod detection;
pub mod field;
pub mod modes;
pub mod params;
pub mod propagation;
pub mod transfer;

use thiserror::Error;

pub use field::{ComplexField, Field, RealField, TransverseGrid};
pub use params::{CavityParams, DetectorParams, Geometry, OpticalTrain, PupilSpec};

/// Any error raised by the library, tagged by the module it came from.
#[derive(Debug, Error)]
pub enum Error {
    #[error("params: {0}")]
    Params(#[from] params::ParamsError),
    #[error("grid: {0}")]
    Grid(#[from] field::GridError),
    #[error("transfer: {0}")]
    Transfer(#[from] transfer::TransferError),
    #[error("propagation: {0}")]
    Propagation(#[from] propagation::PropagationError),
    #[error("modes: {0}")]
    Modes(#[from] modes::ModesError),
    #[error("detection: {0}")]
    Detection(#[from] detection::DetectionError),
}
