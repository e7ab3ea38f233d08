//! Ideal thin-lens propagation between the conjugate planes.
//!
//! The lens focal plane carries the spatial Fourier transform of the input
//! aperture field, with the frequency axis mapped onto a physical detector
//! coordinate by `x' = lambda * f * nu`. The discrete transform used here is
//! the centered DFT (zero frequency at the grid center) scaled by
//! `dx / sqrt(lambda * f)`, which makes the transform unitary in the physical
//! measure: `sum |amp|^2 dx` is conserved exactly, and applying the transform
//! twice reproduces the input field mirrored through the axis with unit
//! amplitude. The overall normalization never reaches a classification
//! decision because profiles are peak-normalized before matching.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::field::{Grid, SampledField};
use super::OpticsConfig;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Swap the two halves of an even-length buffer, moving the center sample to
/// index 0 and back (fftshift; its own inverse for even lengths).
fn rotate_half<T>(buf: &mut [T]) {
    debug_assert!(buf.len() % 2 == 0);
    let half = buf.len() / 2;
    buf.rotate_left(half);
}

/// Lens Fourier transform of `field` through the `f_fourier` lens.
///
/// The output grid pitch is `lambda * f / (n * dx)`; the plane tag toggles.
pub fn optical_fourier(field: &SampledField, cfg: &OpticsConfig) -> SampledField {
    let n = field.grid.n();
    let dx = field.grid.dx();
    let mut amp = field.amp.clone();

    rotate_half(&mut amp);
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n));
    fft.process(&mut amp);
    rotate_half(&mut amp);

    let lambda_f = cfg.wavelength * cfg.f_fourier;
    let scale = Complex64::new(dx / lambda_f.sqrt(), 0.0);
    for a in &mut amp {
        *a *= scale;
    }

    SampledField {
        grid: Grid::from_pitch(n, lambda_f / (n as f64 * dx)),
        amp,
        plane: field.plane.toggled(),
    }
}

/// Ideal unit-magnification upright imaging: identity on amplitudes.
///
/// The physical image path (the `f_image` lens) would invert and rescale the
/// field, but calibration would absorb both, so the simplest model is used.
pub fn image_of(field: &SampledField) -> SampledField {
    field.clone()
}
