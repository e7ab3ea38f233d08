//! Sampled-field wave optics: slit aperture, ideal lens Fourier transform,
//! imaging, detection, calibration and profile classification.
//!
//! All operations are pure functions over immutable values; identical inputs
//! give bit-identical outputs.

mod classify;
mod detect;
mod export;
mod field;
mod fourier;

pub use classify::{calibrate, classify, Calibration, ClassLabel, Classification};
pub use detect::{add_gaussian_noise, detect, DetectorProfile};
pub use export::{write_profile_csv, write_profile_pgm, PGM_BAND_HEIGHT};
pub use field::{slit_field, Grid, OpticsConfig, Plane, SampledField};
pub use fourier::{image_of, optical_fourier};

use thiserror::Error;

/// Errors from grid construction, field preparation and classification.
#[derive(Debug, Error)]
pub enum OpticsError {
    #[error("grid size {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("grid size {0} is below the {min}-sample minimum", min = field::MIN_GRID_SAMPLES)]
    GridTooSmall(usize),
    #[error("{name} must be positive (got {value})")]
    NotPositive { name: &'static str, value: f64 },
    #[error(
        "slit [{lo:.6e}, {hi:.6e}] m extends past the grid half-window {half_window:.6e} m"
    )]
    SlitOutsideWindow { lo: f64, hi: f64, half_window: f64 },
    #[error("grid pitch {dx:.3e} m does not resolve the {slit_width:.3e} m slit (need dx <= width/10)")]
    SlitUnresolved { dx: f64, slit_width: f64 },
    #[error("grid window {window:.3e} m is narrower than 100x the slit width {slit_width:.3e} m")]
    WindowTooNarrow { window: f64, slit_width: f64 },
    #[error("profile has {got} samples, calibration references have {expected}")]
    ProfileLengthMismatch { expected: usize, got: usize },
}
