//! Session analytics: sift rate, dot rate, detection probabilities, key rate.

use serde::Serialize;
use thiserror::Error;

use crate::protocol::{run_session, ProtocolConfig, ProtocolError, Transcript, Verdict};
use crate::OpticsConfig;

/// Minimum number of seeds for an empirical detection-rate estimate.
pub const MIN_EMPIRICAL_SEEDS: usize = 100;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("transcript is incomplete: {0}")]
    IncompleteTranscript(String),
    #[error("need at least {MIN_EMPIRICAL_SEEDS} seeds (got {0})")]
    TooFewSeeds(usize),
    #[error(transparent)]
    Session(#[from] ProtocolError),
}

/// Exact per-session counts and fractions.
///
/// A *detection event* is a matched-basis slot whose outcome carries no bit
/// (a dot or no signal at all): the literal tamper evidence of the protocol.
/// Disclosed-bit mismatches are counted separately and occur only with
/// detector noise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStats {
    pub n_frames: usize,
    pub sifted_count: usize,
    pub sift_fraction: f64,
    /// Information-absent outcomes among sifted slots.
    pub dot_count_sifted: usize,
    /// `dot_count_sifted / sifted_count` (0 when nothing sifted).
    pub dot_fraction_sifted: f64,
    /// `dot_count_sifted / n_frames`: detection events per sent frame.
    pub detection_event_fraction: f64,
    /// Disclosed bits that disagreed with Bob's decoded bit.
    pub disclosed_mismatch_count: usize,
    /// "secure" | "tampered" | "inconclusive".
    pub verdict: String,
    pub key_length: usize,
}

/// Fold a completed transcript into exact counts.
pub fn summarize(transcript: &Transcript) -> Result<RunStats, StatsError> {
    if transcript.slots.len() != transcript.protocol.n_frames {
        return Err(StatsError::IncompleteTranscript(format!(
            "{} slots recorded, config says {}",
            transcript.slots.len(),
            transcript.protocol.n_frames
        )));
    }
    let verdict = transcript
        .verdict
        .as_ref()
        .ok_or_else(|| StatsError::IncompleteTranscript("verdict missing".into()))?;

    let n_frames = transcript.slots.len();
    let sifted: Vec<_> = transcript.slots.iter().filter(|s| s.sifted).collect();
    let sifted_count = sifted.len();
    let dot_count_sifted = sifted.iter().filter(|s| s.decoded_bit.is_none()).count();

    let disclosed_mismatch_count = transcript
        .slots
        .iter()
        .filter(|s| s.disclosed)
        .filter(|s| matches!(s.decoded_bit, Some(d) if d != s.alice_bit))
        .count();

    let (verdict_name, key_length) = match verdict {
        Verdict::Secure { key } => ("secure", key.len()),
        Verdict::Tampered { .. } => ("tampered", 0),
        Verdict::Inconclusive { .. } => ("inconclusive", 0),
    };

    Ok(RunStats {
        n_frames,
        sifted_count,
        sift_fraction: sifted_count as f64 / n_frames as f64,
        dot_count_sifted,
        dot_fraction_sifted: if sifted_count == 0 {
            0.0
        } else {
            dot_count_sifted as f64 / sifted_count as f64
        },
        detection_event_fraction: dot_count_sifted as f64 / n_frames as f64,
        disclosed_mismatch_count,
        verdict: verdict_name.to_string(),
        key_length,
    })
}

/// Probability that an always-intercepting eavesdropper causes at least one
/// detection event among `n` sent frames: `1 - (3/4)^n`.
///
/// Per frame, the three independent uniform basis draws leave a 1/4
/// probability for the only detectable pattern (Alice and Bob matched, Eve
/// mismatched).
pub fn analytic_detection_probability(n: u32) -> f64 {
    1.0 - 0.75f64.powi(n as i32)
}

/// Monte Carlo estimate of the detection probability over `trials` sessions
/// of `n` frames each, drawing only the three per-frame basis choices.
///
/// The per-slot rule — a matched-basis slot yields an information-absent
/// outcome exactly when the interceptor guessed the other basis — is the
/// deterministic, noise-free behaviour of the optics pipeline, verified by
/// the protocol tests; this reduction makes million-session estimates cheap.
pub fn simulated_detection_probability(n: usize, trials: usize, seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut detected = 0usize;
    for _ in 0..trials {
        let mut hit = false;
        for _ in 0..n {
            let alice: bool = rng.random();
            let eve: bool = rng.random();
            let bob: bool = rng.random();
            if alice == bob && eve != alice {
                hit = true;
            }
        }
        if hit {
            detected += 1;
        }
    }
    detected as f64 / trials as f64
}

/// Fraction of sessions with a tampered verdict over the given seeds.
pub fn empirical_detection_rate(
    seeds: &[u64],
    optics: &OpticsConfig,
    proto: &ProtocolConfig,
) -> Result<f64, StatsError> {
    if seeds.len() < MIN_EMPIRICAL_SEEDS {
        return Err(StatsError::TooFewSeeds(seeds.len()));
    }
    let mut tampered = 0usize;
    for &seed in seeds {
        let transcript = run_session(optics, &ProtocolConfig { seed, ..*proto })?;
        if matches!(transcript.verdict, Some(Verdict::Tampered { .. })) {
            tampered += 1;
        }
    }
    Ok(tampered as f64 / seeds.len() as f64)
}
