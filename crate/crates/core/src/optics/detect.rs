//! Intensity detection: the camera screen at the end of either path.

use rand::Rng;

use super::field::SampledField;

/// Detected intensity profile on a uniformly spaced detector.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorProfile {
    positions: Vec<f64>,
    intensity: Vec<f64>,
    total_power: f64,
}

impl DetectorProfile {
    pub(crate) fn from_samples(positions: Vec<f64>, intensity: Vec<f64>) -> Self {
        debug_assert_eq!(positions.len(), intensity.len());
        debug_assert!(positions.len() >= 2);
        let pitch = positions[1] - positions[0];
        let total_power = intensity.iter().sum::<f64>() * pitch;
        Self {
            positions,
            intensity,
            total_power,
        }
    }

    pub fn len(&self) -> usize {
        self.intensity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensity.is_empty()
    }

    /// Detector coordinates in metres, strictly increasing, uniform pitch.
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Non-negative intensity per sample.
    pub fn intensity(&self) -> &[f64] {
        &self.intensity
    }

    /// `sum intensity * pitch`.
    pub fn total_power(&self) -> f64 {
        self.total_power
    }

    pub fn pitch(&self) -> f64 {
        self.positions[1] - self.positions[0]
    }

    /// Intensity-weighted mean position; 0 for an all-dark profile.
    pub fn centroid(&self) -> f64 {
        let total: f64 = self.intensity.iter().sum();
        if total <= 0.0 {
            return 0.0;
        }
        self.positions
            .iter()
            .zip(&self.intensity)
            .map(|(x, i)| x * i)
            .sum::<f64>()
            / total
    }

    /// Full width at half maximum, with linear interpolation at the two
    /// outermost half-level crossings; 0 for an all-dark profile.
    pub fn fwhm(&self) -> f64 {
        let (peak_idx, &peak) = match self
            .intensity
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
        {
            Some(p) => p,
            None => return 0.0,
        };
        if peak <= 0.0 {
            return 0.0;
        }
        let half = peak / 2.0;
        let pitch = self.pitch();

        let mut left = self.positions[peak_idx];
        let mut j = peak_idx;
        while j > 0 && self.intensity[j] >= half {
            j -= 1;
        }
        if self.intensity[j] < half {
            let frac = (half - self.intensity[j]) / (self.intensity[j + 1] - self.intensity[j]);
            left = self.positions[j] + frac * pitch;
        }

        let mut right = self.positions[peak_idx];
        let mut j = peak_idx;
        while j < self.len() - 1 && self.intensity[j] >= half {
            j += 1;
        }
        if self.intensity[j] < half {
            let frac = (half - self.intensity[j]) / (self.intensity[j - 1] - self.intensity[j]);
            right = self.positions[j] - frac * pitch;
        }

        right - left
    }

    /// Copy scaled so the peak intensity is 1; all-dark profiles unchanged.
    pub fn peak_normalized(&self) -> DetectorProfile {
        let peak = self.intensity.iter().fold(0.0_f64, |m, &v| m.max(v));
        if peak <= 0.0 {
            return self.clone();
        }
        let intensity: Vec<f64> = self.intensity.iter().map(|i| i / peak).collect();
        DetectorProfile::from_samples(self.positions.clone(), intensity)
    }
}

/// Read the intensity `|amp|^2` off the field, with detector coordinates
/// taken from the plane the field lives in.
pub fn detect(field: &SampledField) -> DetectorProfile {
    let intensity: Vec<f64> = field.amp.iter().map(|a| a.norm_sqr()).collect();
    DetectorProfile::from_samples(field.grid.positions(), intensity)
}

/// Additive Gaussian detector noise for robustness experiments; intensities
/// are clamped at zero. Not used by the protocol path, which is noise-free.
pub fn add_gaussian_noise<R: Rng + ?Sized>(
    profile: &DetectorProfile,
    sigma: f64,
    rng: &mut R,
) -> DetectorProfile {
    let intensity: Vec<f64> = profile
        .intensity
        .iter()
        .map(|i| (i + sigma * standard_normal(rng)).max(0.0))
        .collect();
    DetectorProfile::from_samples(profile.positions.clone(), intensity)
}

/// Box-Muller standard normal draw (two uniforms per sample).
fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
