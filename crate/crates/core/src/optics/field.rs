//! Sampling grid, complex field values and the slit aperture source.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::OpticsError;

/// Smallest grid that keeps the diffraction pattern adequately sampled.
pub(crate) const MIN_GRID_SAMPLES: usize = 1024;

/// Uniform centered 1-D sampling grid.
///
/// Sample `j` sits at the physical coordinate `x_j = (j - n/2) * dx`, so the
/// grid center (`j = n/2`) is exactly at the optical axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    dx: f64,
}

impl Grid {
    /// Build a grid of `n` samples spanning `window` metres (`dx = window/n`).
    ///
    /// `n` must be a power of two of at least [`MIN_GRID_SAMPLES`] so the
    /// transform stage stays exact and well resolved.
    pub fn new(n: usize, window: f64) -> Result<Self, OpticsError> {
        if !n.is_power_of_two() {
            return Err(OpticsError::NotPowerOfTwo(n));
        }
        if n < MIN_GRID_SAMPLES {
            return Err(OpticsError::GridTooSmall(n));
        }
        if !(window > 0.0) {
            return Err(OpticsError::NotPositive {
                name: "window",
                value: window,
            });
        }
        Ok(Self {
            n,
            dx: window / n as f64,
        })
    }

    /// Grid with an explicit pitch, used when a transform changes the pitch.
    pub(crate) fn from_pitch(n: usize, dx: f64) -> Self {
        Self { n, dx }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sample pitch in metres.
    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Full spatial window `n * dx` in metres.
    pub fn window(&self) -> f64 {
        self.n as f64 * self.dx
    }

    /// Physical coordinate of sample `j` in metres.
    pub fn position(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.dx
    }

    /// All sample coordinates in ascending order.
    pub fn positions(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.position(j)).collect()
    }
}

/// Which conjugate plane a field lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plane {
    /// The slit/image plane (position basis).
    Slit,
    /// The lens focal plane (momentum basis).
    Fourier,
}

impl Plane {
    /// The conjugate plane; one lens Fourier transform toggles it.
    pub fn toggled(self) -> Self {
        match self {
            Plane::Slit => Plane::Fourier,
            Plane::Fourier => Plane::Slit,
        }
    }
}

/// Complex scalar amplitude sampled on a [`Grid`]; the optical state that
/// travels the quantum channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub grid: Grid,
    pub amp: Vec<Complex64>,
    pub plane: Plane,
}

impl SampledField {
    /// Field with zero amplitude everywhere (a blocked channel).
    pub fn zero(grid: Grid, plane: Plane) -> Self {
        Self {
            amp: vec![Complex64::new(0.0, 0.0); grid.n()],
            grid,
            plane,
        }
    }

    /// Total power `sum |amp|^2 * dx`.
    pub fn power(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx()
    }
}

/// Physical parameters of the optical bench.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticsConfig {
    /// Laser wavelength in metres.
    pub wavelength: f64,
    /// Focal length of the Fourier-path lens in metres.
    pub f_fourier: f64,
    /// Focal length of the image-path lens in metres (documentation only:
    /// imaging is modelled as ideal unit magnification).
    pub f_image: f64,
    /// Slit aperture width in metres.
    pub slit_width: f64,
    /// Number of grid samples (power of two).
    pub grid_n: usize,
    /// Spatial window covered by the grid in metres.
    pub grid_window: f64,
}

impl Default for OpticsConfig {
    fn default() -> Self {
        Self {
            wavelength: 532e-9,
            f_fourier: 0.500,
            f_image: 0.250,
            slit_width: 100e-6,
            grid_n: 4096,
            grid_window: 20e-3,
        }
    }
}

impl OpticsConfig {
    /// Check positivity, slit resolution (`dx <= width/10`) and window
    /// coverage (`window >= 100 * width`).
    pub fn validate(&self) -> Result<(), OpticsError> {
        for (name, value) in [
            ("wavelength", self.wavelength),
            ("f_fourier", self.f_fourier),
            ("f_image", self.f_image),
            ("slit_width", self.slit_width),
            ("grid_window", self.grid_window),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(OpticsError::NotPositive { name, value });
            }
        }
        let grid = self.grid()?;
        if grid.dx() > self.slit_width / 10.0 {
            return Err(OpticsError::SlitUnresolved {
                dx: grid.dx(),
                slit_width: self.slit_width,
            });
        }
        if self.grid_window < 100.0 * self.slit_width {
            return Err(OpticsError::WindowTooNarrow {
                window: self.grid_window,
                slit_width: self.slit_width,
            });
        }
        Ok(())
    }

    /// The slit-plane grid described by this configuration.
    pub fn grid(&self) -> Result<Grid, OpticsError> {
        Grid::new(self.grid_n, self.grid_window)
    }
}

/// Uniformly illuminated slit aperture centered at `center` metres.
///
/// The center is snapped to the nearest grid sample, so every slit field is
/// an exact integer-sample translation of the centered one; the Fourier-plane
/// intensity is then rigorously independent of the slit position. Edge
/// samples take the fractional overlap of their cell with the aperture, which
/// keeps the effective aperture width equal to `width` rather than a whole
/// number of samples.
pub fn slit_field(grid: &Grid, center: f64, width: f64) -> Result<SampledField, OpticsError> {
    if !(width > 0.0) || !width.is_finite() {
        return Err(OpticsError::NotPositive {
            name: "slit width",
            value: width,
        });
    }
    if !center.is_finite() {
        return Err(OpticsError::NotPositive {
            name: "slit center",
            value: center,
        });
    }
    let n = grid.n();
    let dx = grid.dx();
    let half = width / 2.0;
    let steps = (center / dx).round();
    let snapped = steps * dx;
    if snapped.abs() + half >= grid.window() / 2.0 {
        return Err(OpticsError::SlitOutsideWindow {
            lo: snapped - half,
            hi: snapped + half,
            half_window: grid.window() / 2.0,
        });
    }

    let center_idx = (n / 2) as i64 + steps as i64;
    let mut amp = vec![Complex64::new(0.0, 0.0); n];
    let mut offset: i64 = 0;
    loop {
        // Overlap of the cell centered |offset| samples from the slit center
        // with the aperture; computed on the absolute offset so the profile
        // is exactly symmetric.
        let t = offset as f64 * dx;
        let lo = (t - dx / 2.0).max(-half);
        let hi = (t + dx / 2.0).min(half);
        let overlap = hi - lo;
        if overlap <= 0.0 {
            break;
        }
        let value = Complex64::new(overlap / dx, 0.0);
        for idx in [center_idx + offset, center_idx - offset] {
            debug_assert!(idx >= 0 && (idx as usize) < n);
            if idx >= 0 && (idx as usize) < n {
                amp[idx as usize] = value;
            }
        }
        offset += 1;
    }

    Ok(SampledField {
        grid: *grid,
        amp,
        plane: Plane::Slit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_pitch_matches_window_over_n() {
        let g = Grid::new(4096, 20e-3).unwrap();
        assert_eq!(g.dx(), 4.8828125e-6);
        let g = Grid::new(1024, 20e-3).unwrap();
        assert_eq!(g.dx(), 1.953125e-5);
    }

    #[test]
    fn grid_rejects_non_power_of_two() {
        assert!(matches!(
            Grid::new(4095, 20e-3),
            Err(OpticsError::NotPowerOfTwo(4095))
        ));
    }

    #[test]
    fn grid_rejects_undersized_or_empty_window() {
        assert!(matches!(
            Grid::new(512, 20e-3),
            Err(OpticsError::GridTooSmall(512))
        ));
        assert!(matches!(
            Grid::new(4096, 0.0),
            Err(OpticsError::NotPositive { .. })
        ));
        assert!(matches!(
            Grid::new(4096, -1.0),
            Err(OpticsError::NotPositive { .. })
        ));
    }

    #[test]
    fn grid_is_centered() {
        let g = Grid::new(4096, 20e-3).unwrap();
        assert_eq!(g.position(2048), 0.0);
        assert_eq!(g.position(0), -10e-3);
        assert!(g.position(4095) < 10e-3);
    }

    #[test]
    fn centered_slit_samples_and_power() {
        // Oracle: count of samples with |x_j| <= w/2 on the default grid.
        let g = Grid::new(4096, 20e-3).unwrap();
        let w = 100e-6;
        let expected_count = (0..4096)
            .filter(|&j| g.position(j).abs() <= w / 2.0)
            .count();
        assert_eq!(expected_count, 21);

        let f = slit_field(&g, 0.0, w).unwrap();
        let nonzero = f.amp.iter().filter(|a| a.norm_sqr() > 0.0).count();
        assert_eq!(nonzero, expected_count);
        // Power is close to the aperture width (edge cells are fractional).
        assert!((f.power() - w).abs() < 0.05 * w, "power {}", f.power());
        assert_eq!(f.plane, Plane::Slit);
        // Interior samples transmit fully.
        assert_eq!(f.amp[2048], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn translated_slit_preserves_power_and_moves_centroid() {
        let g = Grid::new(4096, 20e-3).unwrap();
        let centered = slit_field(&g, 0.0, 100e-6).unwrap();
        let shifted = slit_field(&g, 1e-3, 100e-6).unwrap();
        assert_eq!(centered.power(), shifted.power());

        let centroid: f64 = shifted
            .amp
            .iter()
            .enumerate()
            .map(|(j, a)| g.position(j) * a.norm_sqr())
            .sum::<f64>()
            / shifted.amp.iter().map(|a| a.norm_sqr()).sum::<f64>();
        // Snapped to the nearest sample: 205 * dx.
        let snapped = 205.0 * g.dx();
        assert!((centroid - snapped).abs() < 1e-12);
        assert!((centroid - 1e-3).abs() < g.dx());
    }

    #[test]
    fn translated_slit_is_exact_integer_shift_of_centered() {
        let g = Grid::new(4096, 20e-3).unwrap();
        let centered = slit_field(&g, 0.0, 100e-6).unwrap();
        let shifted = slit_field(&g, 1e-3, 100e-6).unwrap();
        for j in 0..4096 - 205 {
            assert_eq!(centered.amp[j], shifted.amp[j + 205]);
        }
    }

    #[test]
    fn slit_outside_window_is_rejected() {
        let g = Grid::new(4096, 20e-3).unwrap();
        assert!(matches!(
            slit_field(&g, 10.1e-3, 100e-6),
            Err(OpticsError::SlitOutsideWindow { .. })
        ));
        assert!(slit_field(&g, 9.9e-3, 100e-6).is_ok());
    }

    #[test]
    fn default_config_validates() {
        let cfg = OpticsConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.wavelength, 532e-9);
        assert_eq!(cfg.f_fourier, 0.500);
        assert_eq!(cfg.f_image, 0.250);
        assert_eq!(cfg.slit_width, 100e-6);
    }

    #[test]
    fn config_rejects_unresolved_slit() {
        let cfg = OpticsConfig {
            grid_n: 1024,
            ..OpticsConfig::default()
        };
        // dx = 19.5 um > 10 um = width/10.
        assert!(matches!(
            cfg.validate(),
            Err(OpticsError::SlitUnresolved { .. })
        ));
    }

    #[test]
    fn config_rejects_narrow_window() {
        let cfg = OpticsConfig {
            grid_window: 5e-3,
            ..OpticsConfig::default()
        };
        assert!(matches!(
            cfg.validate(),
            Err(OpticsError::WindowTooNarrow { .. })
        ));
    }

    #[test]
    fn zero_field_has_zero_power() {
        let g = Grid::new(4096, 20e-3).unwrap();
        assert_eq!(SampledField::zero(g, Plane::Slit).power(), 0.0);
    }
}
