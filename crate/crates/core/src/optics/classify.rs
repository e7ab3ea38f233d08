//! Matched-filter classification of detector profiles against calibration
//! references.

use serde::{Deserialize, Serialize};

use super::detect::{detect, DetectorProfile};
use super::field::{slit_field, OpticsConfig};
use super::fourier::{image_of, optical_fourier};
use super::OpticsError;

/// Match threshold below which a profile is not attributed to any reference.
pub const MIN_MATCH_SCORE: f64 = 0.9;
/// Fraction of the calibration frame power below which a profile counts as
/// no signal at all.
pub const NO_SIGNAL_POWER_FRACTION: f64 = 1e-6;
/// Floor for the centroid tolerance in metres.
pub const CENTROID_TOL_FLOOR: f64 = 0.25e-3;

/// Detector verdict for one measured frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassLabel {
    /// Line at the bit-0 encoding position.
    LineNeg,
    /// Line at the bit-1 encoding position.
    LinePos,
    /// Static diffraction dot: conjugate-basis measurement, no bit carried.
    Dot,
    /// No light, or nothing resembling a calibration reference.
    NoSignal,
}

/// Classification of one detector profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub label: ClassLabel,
    /// Intensity centroid in metres (detector coordinates).
    pub centroid: f64,
    /// Full width at half maximum in metres.
    pub fwhm: f64,
    /// Normalized cross-correlation against the best-matching reference.
    pub score: f64,
}

/// Reference profiles and decision thresholds synthesized from a config.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// Imaged slit at the bit-0 position, peak-normalized.
    pub ref_line_neg: DetectorProfile,
    /// Imaged slit at the bit-1 position, peak-normalized.
    pub ref_line_pos: DetectorProfile,
    /// Fourier transform of the centered slit, peak-normalized.
    pub ref_dot: DetectorProfile,
    /// Tolerance for centroid-based checks in metres.
    pub centroid_tol: f64,
    /// Minimum matched-filter score for a positive label.
    pub min_match_score: f64,
    /// Encoding positions `(bit 0, bit 1)` in metres.
    pub decode_positions: (f64, f64),
    /// Power of an unattenuated calibration frame, the reference for the
    /// no-signal threshold.
    pub ref_power: f64,
}

/// Synthesize the three detector references for the given encoding positions
/// and freeze the decision thresholds.
pub fn calibrate(
    cfg: &OpticsConfig,
    decode_positions: (f64, f64),
) -> Result<Calibration, OpticsError> {
    let grid = cfg.grid()?;
    let (pos0, pos1) = decode_positions;

    let line_neg = detect(&image_of(&slit_field(&grid, pos0, cfg.slit_width)?));
    let line_pos = detect(&image_of(&slit_field(&grid, pos1, cfg.slit_width)?));
    let dot_src = slit_field(&grid, 0.0, cfg.slit_width)?;
    let dot = detect(&optical_fourier(&dot_src, cfg));
    let ref_power = dot_src.power();

    Ok(Calibration {
        ref_line_neg: line_neg.peak_normalized(),
        ref_line_pos: line_pos.peak_normalized(),
        ref_dot: dot.peak_normalized(),
        centroid_tol: CENTROID_TOL_FLOOR.max(3.0 * grid.dx()),
        min_match_score: MIN_MATCH_SCORE,
        decode_positions,
        ref_power,
    })
}

/// Zero-lag normalized cross-correlation of two equal-length profiles.
fn match_score(profile: &DetectorProfile, reference: &DetectorProfile) -> f64 {
    let mut dot = 0.0;
    let mut pp = 0.0;
    let mut rr = 0.0;
    for (p, r) in profile.intensity().iter().zip(reference.intensity()) {
        dot += p * r;
        pp += p * p;
        rr += r * r;
    }
    if pp <= 0.0 || rr <= 0.0 {
        return 0.0;
    }
    dot / (pp.sqrt() * rr.sqrt())
}

/// Classify a detector profile against the calibration references.
///
/// The references are fixed; no shifting or fitting is done. A profile whose
/// power falls below [`NO_SIGNAL_POWER_FRACTION`] of the calibration frame
/// power, or whose best score misses `min_match_score`, is labelled
/// [`ClassLabel::NoSignal`].
pub fn classify(
    profile: &DetectorProfile,
    calib: &Calibration,
) -> Result<Classification, OpticsError> {
    if profile.len() != calib.ref_dot.len() {
        return Err(OpticsError::ProfileLengthMismatch {
            expected: calib.ref_dot.len(),
            got: profile.len(),
        });
    }

    let centroid = profile.centroid();
    let fwhm = profile.fwhm();

    if profile.total_power() < NO_SIGNAL_POWER_FRACTION * calib.ref_power {
        return Ok(Classification {
            label: ClassLabel::NoSignal,
            centroid,
            fwhm,
            score: 0.0,
        });
    }

    let normalized = profile.peak_normalized();
    let candidates = [
        (ClassLabel::LineNeg, &calib.ref_line_neg),
        (ClassLabel::LinePos, &calib.ref_line_pos),
        (ClassLabel::Dot, &calib.ref_dot),
    ];
    let mut best = (ClassLabel::NoSignal, 0.0_f64);
    for (label, reference) in candidates {
        let score = match_score(&normalized, reference);
        if score > best.1 {
            best = (label, score);
        }
    }

    let label = if best.1 >= calib.min_match_score {
        best.0
    } else {
        ClassLabel::NoSignal
    };
    Ok(Classification {
        label,
        centroid,
        fwhm,
        score: best.1,
    })
}
