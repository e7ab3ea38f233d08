//! Alice/Bob/Eve behaviour and session orchestration for the BB84 variant.
//!
//! A bit is a slit position; a basis is a choice of detection path. Measuring
//! a frame in the basis it was prepared in shows a line at one of the two
//! encoding positions, carrying the bit. Measuring in the conjugate basis
//! shows a static diffraction dot carrying nothing, which is exactly what
//! makes an intercept-resend eavesdropper visible: whenever Eve guesses the
//! wrong basis she destroys the position information, and a matched-basis
//! slot that yields a dot is evidence of tampering.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelError, ClassicalChannel, ClassicalMessage, Party, QuantumChannel};
use crate::optics::{
    calibrate, classify, detect, image_of, optical_fourier, slit_field, Calibration, ClassLabel,
    Classification, OpticsConfig, OpticsError, SampledField,
};

/// A classical bit, 0 or 1.
pub type Bit = u8;

/// Conjugate measurement/preparation bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    /// Position basis: the imaging path ("x").
    #[serde(rename = "x")]
    Image,
    /// Momentum basis: the Fourier-lens path ("p").
    #[serde(rename = "p")]
    Fourier,
}

impl Basis {
    pub fn other(self) -> Self {
        match self {
            Basis::Image => Basis::Fourier,
            Basis::Fourier => Basis::Image,
        }
    }
}

/// Eve's interception policy for a session.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvePolicy {
    Never,
    Always,
    /// Intercept each frame independently with the given probability.
    Prob(f64),
}

impl EvePolicy {
    /// Decide whether to intercept the next frame. Draws from `rng` only for
    /// the probabilistic policy, so `Never`/`Always` sessions consume no Eve
    /// randomness at the tap.
    pub fn fires<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        match self {
            EvePolicy::Never => false,
            EvePolicy::Always => true,
            EvePolicy::Prob(q) => rng.random::<f64>() < *q,
        }
    }
}

impl fmt::Display for EvePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvePolicy::Never => f.write_str("never"),
            EvePolicy::Always => f.write_str("always"),
            EvePolicy::Prob(q) => write!(f, "prob:{q}"),
        }
    }
}

/// Error parsing an [`EvePolicy`] from its string form.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid eve policy {input:?}: expected \"never\", \"always\" or \"prob:Q\" with Q in [0, 1]")]
pub struct ParseEvePolicyError {
    input: String,
}

impl FromStr for EvePolicy {
    type Err = ParseEvePolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseEvePolicyError {
            input: s.to_string(),
        };
        match s {
            "never" => Ok(EvePolicy::Never),
            "always" => Ok(EvePolicy::Always),
            _ => {
                let q: f64 = s.strip_prefix("prob:").ok_or_else(err)?.parse().map_err(|_| err())?;
                if q.is_finite() && (0.0..=1.0).contains(&q) {
                    Ok(EvePolicy::Prob(q))
                } else {
                    Err(err())
                }
            }
        }
    }
}

impl Serialize for EvePolicy {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EvePolicy {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Session parameters shared by both parties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Number of frames Alice sends.
    pub n_frames: usize,
    /// Announced time interval between frames, in seconds (simulated).
    pub slot_seconds: f64,
    /// Slit position encoding bit 0, in metres.
    pub pos_bit0: f64,
    /// Slit position encoding bit 1, in metres.
    pub pos_bit1: f64,
    /// Number of sifted bits Alice discloses for verification.
    pub verify_k: usize,
    pub eve_policy: EvePolicy,
    /// Session seed; Alice, Bob and Eve draw from independent streams derived
    /// from it, so toggling the eve policy never perturbs the honest parties.
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            n_frames: 1000,
            slot_seconds: 5.0,
            pos_bit0: -1e-3,
            pos_bit1: 1e-3,
            verify_k: 10,
            eve_policy: EvePolicy::Never,
            seed: 0,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.n_frames == 0 {
            return Err(ProtocolError::NoFrames);
        }
        if self.n_frames < self.verify_k {
            return Err(ProtocolError::TooFewFrames {
                n_frames: self.n_frames,
                verify_k: self.verify_k,
            });
        }
        if !(self.slot_seconds > 0.0) || !self.slot_seconds.is_finite() {
            return Err(ProtocolError::InvalidSlotSeconds(self.slot_seconds));
        }
        // The Fourier-basis round trip mirrors the encoding position through
        // the axis, so the two positions must be opposite and distinct for
        // the fixed line references to decode both bases.
        if !self.pos_bit0.is_finite()
            || !self.pos_bit1.is_finite()
            || self.pos_bit0 == self.pos_bit1
            || self.pos_bit0 != -self.pos_bit1
        {
            return Err(ProtocolError::InvalidPositions {
                pos_bit0: self.pos_bit0,
                pos_bit1: self.pos_bit1,
            });
        }
        if let EvePolicy::Prob(q) = self.eve_policy {
            if !q.is_finite() || !(0.0..=1.0).contains(&q) {
                return Err(ProtocolError::InvalidProbability(q));
            }
        }
        Ok(())
    }

    /// Encoding positions as `(bit 0, bit 1)`.
    pub fn positions(&self) -> (f64, f64) {
        (self.pos_bit0, self.pos_bit1)
    }

    pub fn position_of(&self, bit: Bit) -> f64 {
        if bit == 0 {
            self.pos_bit0
        } else {
            self.pos_bit1
        }
    }
}

/// One quantum-channel transmission. Deliberately not `Clone`: a frame can be
/// measured or forwarded, never duplicated.
#[derive(Debug)]
pub struct Frame {
    pub field: SampledField,
    pub frame_id: u64,
}

/// Everything that happened in one time slot, as seen by an omniscient
/// observer of the simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub slot: usize,
    pub alice_bit: Bit,
    pub alice_basis: Basis,
    /// Basis Eve measured in, when she intercepted this slot.
    pub eve_basis: Option<Basis>,
    /// What Eve saw. Simulation-internal: not part of the wire format.
    pub eve_outcome: Option<ClassLabel>,
    pub bob_basis: Basis,
    pub bob_class: Classification,
    pub decoded_bit: Option<Bit>,
    pub sifted: bool,
    pub disclosed: bool,
}

/// Outcome of the verification step.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// No evidence of interception; `key` is the undisclosed sifted bits.
    Secure { key: Vec<Bit> },
    /// At least one sifted slot betrayed interception; `evidence` lists them.
    Tampered { evidence: Vec<usize> },
    /// Too few sifted slots to verify.
    Inconclusive { reason: String },
}

/// Complete record of one session: configuration, per-slot outcomes, verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub optics: OpticsConfig,
    pub protocol: ProtocolConfig,
    pub seed: u64,
    pub slots: Vec<SlotRecord>,
    pub verdict: Option<Verdict>,
}

impl Transcript {
    /// Matched-basis slots in slot order.
    pub fn sifted(&self) -> Vec<SiftedSlot> {
        sift(self)
    }

    /// Alice's undisclosed sifted bits (her side of the key).
    pub fn alice_key(&self) -> Vec<Bit> {
        let sifted = self.sifted();
        let k = self.protocol.verify_k.min(sifted.len());
        sifted[k..].iter().map(|s| s.alice_bit).collect()
    }

    /// Bob's key, present when the verdict is [`Verdict::Secure`].
    pub fn bob_key(&self) -> Option<&[Bit]> {
        match &self.verdict {
            Some(Verdict::Secure { key }) => Some(key),
            _ => None,
        }
    }
}

/// One sifted slot: the slot index, Alice's bit, and what Bob decoded (absent
/// when his matched-basis measurement carried no information).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiftedSlot {
    pub slot: usize,
    pub alice_bit: Bit,
    pub decoded_bit: Option<Bit>,
}

/// Errors from configuration validation and session execution.
#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("bit value {0} is not 0 or 1")]
    InvalidBit(Bit),
    #[error("n_frames must be at least 1")]
    NoFrames,
    #[error("n_frames ({n_frames}) must be at least verify_k ({verify_k})")]
    TooFewFrames { n_frames: usize, verify_k: usize },
    #[error("slot_seconds must be positive (got {0})")]
    InvalidSlotSeconds(f64),
    #[error(
        "encoding positions must be distinct opposite values (got {pos_bit0}, {pos_bit1})"
    )]
    InvalidPositions { pos_bit0: f64, pos_bit1: f64 },
    #[error("interception probability must lie in [0, 1] (got {0})")]
    InvalidProbability(f64),
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

const ALICE_STREAM: u64 = 1;
const BOB_STREAM: u64 = 2;
const EVE_STREAM: u64 = 3;

/// Party RNG stream derived from the session seed.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn random_bit<R: Rng + ?Sized>(rng: &mut R) -> Bit {
    rng.random::<bool>() as Bit
}

fn random_basis<R: Rng + ?Sized>(rng: &mut R) -> Basis {
    if rng.random::<bool>() {
        Basis::Image
    } else {
        Basis::Fourier
    }
}

fn prepare_field(
    bit: Bit,
    basis: Basis,
    optics: &OpticsConfig,
    proto: &ProtocolConfig,
) -> Result<SampledField, ProtocolError> {
    if bit > 1 {
        return Err(ProtocolError::InvalidBit(bit));
    }
    let grid = optics.grid()?;
    let slit = slit_field(&grid, proto.position_of(bit), optics.slit_width)?;
    Ok(match basis {
        Basis::Image => slit,
        Basis::Fourier => optical_fourier(&slit, optics),
    })
}

/// Prepare the frame encoding `bit` in `basis`: the slit field at the bit's
/// position, passed through the Fourier lens when the momentum basis is
/// chosen.
pub fn prepare(
    bit: Bit,
    basis: Basis,
    frame_id: u64,
    optics: &OpticsConfig,
    proto: &ProtocolConfig,
) -> Result<Frame, ProtocolError> {
    Ok(Frame {
        field: prepare_field(bit, basis, optics, proto)?,
        frame_id,
    })
}

/// The four preparable states of a session, computed once.
///
/// `prepare` is a pure function of `(bit, basis)` for a fixed configuration,
/// so a session memoizes its four outputs and clones them per frame.
#[derive(Debug, Clone)]
pub struct PreparedStates {
    // Indexed [basis][bit] with Image = 0, Fourier = 1.
    fields: [[SampledField; 2]; 2],
}

impl PreparedStates {
    pub fn new(optics: &OpticsConfig, proto: &ProtocolConfig) -> Result<Self, ProtocolError> {
        Ok(Self {
            fields: [
                [
                    prepare_field(0, Basis::Image, optics, proto)?,
                    prepare_field(1, Basis::Image, optics, proto)?,
                ],
                [
                    prepare_field(0, Basis::Fourier, optics, proto)?,
                    prepare_field(1, Basis::Fourier, optics, proto)?,
                ],
            ],
        })
    }

    pub fn field(&self, bit: Bit, basis: Basis) -> &SampledField {
        let b = match basis {
            Basis::Image => 0,
            Basis::Fourier => 1,
        };
        &self.fields[b][bit as usize & 1]
    }

    pub fn frame(&self, bit: Bit, basis: Basis, frame_id: u64) -> Frame {
        Frame {
            field: self.field(bit, basis).clone(),
            frame_id,
        }
    }
}

/// Measure a frame in `basis`: imaging path for the position basis, Fourier
/// lens for the momentum basis, then detection and classification. Consumes
/// the frame — a measured state is gone.
pub fn measure(
    frame: Frame,
    basis: Basis,
    optics: &OpticsConfig,
    calib: &Calibration,
) -> Result<Classification, OpticsError> {
    let observed = match basis {
        Basis::Image => image_of(&frame.field),
        Basis::Fourier => optical_fourier(&frame.field, optics),
    };
    classify(&detect(&observed), calib)
}

/// Map a classification label to a bit, given the basis the measurement was
/// made in. The Fourier-path measurement applies a second transform, which
/// mirrors the line through the axis, so its mapping is inverted.
pub fn decode(label: ClassLabel, meas_basis: Basis) -> Option<Bit> {
    match (label, meas_basis) {
        (ClassLabel::LineNeg, Basis::Image) => Some(0),
        (ClassLabel::LinePos, Basis::Image) => Some(1),
        (ClassLabel::LineNeg, Basis::Fourier) => Some(1),
        (ClassLabel::LinePos, Basis::Fourier) => Some(0),
        (ClassLabel::Dot | ClassLabel::NoSignal, _) => None,
    }
}

fn eve_intercept_with<R, F>(
    frame: Frame,
    eve_basis: Basis,
    rng: &mut R,
    optics: &OpticsConfig,
    calib: &Calibration,
    mut reprepare: F,
) -> Result<(Frame, ClassLabel), ProtocolError>
where
    R: Rng + ?Sized,
    F: FnMut(Bit, Basis, u64) -> Result<Frame, ProtocolError>,
{
    let frame_id = frame.frame_id;
    let class = measure(frame, eve_basis, optics, calib)?;
    // A dot (or nothing at all) gives Eve no bit, so she forwards a fresh
    // uniformly random one; anything else she resends faithfully.
    let bit = match decode(class.label, eve_basis) {
        Some(bit) => bit,
        None => random_bit(rng),
    };
    Ok((reprepare(bit, eve_basis, frame_id)?, class.label))
}

/// Intercept-resend: Eve measures the frame in `eve_basis` and deposits a
/// freshly prepared replacement consistent with what she saw. The original
/// frame is consumed. Returns the replacement and Eve's observed label.
pub fn eve_intercept<R: Rng + ?Sized>(
    frame: Frame,
    eve_basis: Basis,
    rng: &mut R,
    optics: &OpticsConfig,
    proto: &ProtocolConfig,
    calib: &Calibration,
) -> Result<(Frame, ClassLabel), ProtocolError> {
    eve_intercept_with(frame, eve_basis, rng, optics, calib, |bit, basis, id| {
        prepare(bit, basis, id, optics, proto)
    })
}

/// Run one complete session: timing announcement, per-slot quantum
/// transmission with optional interception, basis reveal, sifting,
/// disclosure and verification.
pub fn run_session(
    optics: &OpticsConfig,
    proto: &ProtocolConfig,
) -> Result<Transcript, ProtocolError> {
    optics.validate()?;
    proto.validate()?;
    let calib = calibrate(optics, proto.positions())?;
    let prepared = PreparedStates::new(optics, proto)?;

    let mut alice_rng = stream_rng(proto.seed, ALICE_STREAM);
    let mut bob_rng = stream_rng(proto.seed, BOB_STREAM);

    let mut quantum = QuantumChannel::open(1)?;
    if proto.eve_policy != EvePolicy::Never {
        quantum.install_tap(proto.eve_policy, stream_rng(proto.seed, EVE_STREAM))?;
    }
    let mut classical = ClassicalChannel::new();
    classical.send(ClassicalMessage::TimingAnnounce {
        slot_seconds: proto.slot_seconds,
    });

    let mut slots: Vec<SlotRecord> = Vec::with_capacity(proto.n_frames);
    for slot in 0..proto.n_frames {
        let alice_bit = random_bit(&mut alice_rng);
        let alice_basis = random_basis(&mut alice_rng);
        quantum.deposit(prepared.frame(alice_bit, alice_basis, slot as u64))?;

        let mut eve_basis = None;
        let mut eve_outcome = None;
        while let Some(intercepted) = quantum.take_intercepted() {
            let rng = quantum
                .tap_rng_mut()
                .expect("an installed tap intercepted this frame");
            let basis = random_basis(rng);
            let (replacement, label) =
                eve_intercept_with(intercepted, basis, rng, optics, &calib, |bit, b, id| {
                    Ok(prepared.frame(bit, b, id))
                })?;
            quantum.replace(replacement)?;
            eve_basis = Some(basis);
            eve_outcome = Some(label);
        }

        let bob_basis = random_basis(&mut bob_rng);
        let frame = quantum.retrieve()?;
        let bob_class = measure(frame, bob_basis, optics, &calib)?;
        let decoded_bit = decode(bob_class.label, bob_basis);
        slots.push(SlotRecord {
            slot,
            alice_bit,
            alice_basis,
            eve_basis,
            eve_outcome,
            bob_basis,
            bob_class,
            decoded_bit,
            sifted: false,
            disclosed: false,
        });
    }

    // Both parties reveal bases (never bits) and keep the matched slots.
    classical.send(ClassicalMessage::BasisReveal {
        who: Party::Alice,
        bases: slots.iter().map(|s| s.alice_basis).collect(),
    });
    classical.send(ClassicalMessage::BasisReveal {
        who: Party::Bob,
        bases: slots.iter().map(|s| s.bob_basis).collect(),
    });
    for s in slots.iter_mut() {
        s.sifted = s.alice_basis == s.bob_basis;
    }

    let sifted = sift_slots(&slots);
    let k = proto.verify_k.min(sifted.len());
    let disclosed: Vec<Bit> = sifted.iter().take(k).map(|s| s.alice_bit).collect();
    for s in sifted.iter().take(k) {
        slots[s.slot].disclosed = true;
    }
    classical.send(ClassicalMessage::Disclosure {
        bits: disclosed.clone(),
    });

    let verdict = verify(&sifted, proto.verify_k, &disclosed);
    classical.send(ClassicalMessage::VerdictMsg {
        verdict: verdict.clone(),
    });

    Ok(Transcript {
        optics: *optics,
        protocol: *proto,
        seed: proto.seed,
        slots,
        verdict: Some(verdict),
    })
}

fn sift_slots(slots: &[SlotRecord]) -> Vec<SiftedSlot> {
    slots
        .iter()
        .filter(|s| s.alice_basis == s.bob_basis)
        .map(|s| SiftedSlot {
            slot: s.slot,
            alice_bit: s.alice_bit,
            decoded_bit: s.decoded_bit,
        })
        .collect()
}

/// The slots where Alice's and Bob's bases matched, in slot order.
pub fn sift(transcript: &Transcript) -> Vec<SiftedSlot> {
    sift_slots(&transcript.slots)
}

/// Bob's verification rule.
///
/// Every sifted slot with an information-absent outcome is evidence of
/// tampering, as is any disclosed bit that disagrees with his decoded bit.
/// With no evidence and at least `verify_k` sifted slots, the undisclosed
/// decoded bits become the key.
pub fn verify(sifted: &[SiftedSlot], verify_k: usize, disclosed: &[Bit]) -> Verdict {
    debug_assert_eq!(disclosed.len(), verify_k.min(sifted.len()));
    let mut evidence: Vec<usize> = sifted
        .iter()
        .filter(|s| s.decoded_bit.is_none())
        .map(|s| s.slot)
        .collect();
    for (s, &bit) in sifted.iter().zip(disclosed) {
        if let Some(decoded) = s.decoded_bit {
            if decoded != bit {
                evidence.push(s.slot);
            }
        }
    }
    evidence.sort_unstable();
    evidence.dedup();

    if !evidence.is_empty() {
        return Verdict::Tampered { evidence };
    }
    if sifted.len() < verify_k {
        return Verdict::Inconclusive {
            reason: format!(
                "only {} sifted slots, verification needs {}",
                sifted.len(),
                verify_k
            ),
        };
    }
    let key = sifted[verify_k..]
        .iter()
        .map(|s| s.decoded_bit.expect("slot with evidence-free outcome"))
        .collect();
    Verdict::Secure { key }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (OpticsConfig, ProtocolConfig, Calibration) {
        let optics = OpticsConfig::default();
        let proto = ProtocolConfig::default();
        let calib = calibrate(&optics, proto.positions()).unwrap();
        (optics, proto, calib)
    }

    #[test]
    fn prepared_planes_and_positions() {
        let (optics, proto, _) = setup();
        let f = prepare(0, Basis::Image, 0, &optics, &proto).unwrap();
        assert_eq!(f.field.plane, crate::optics::Plane::Slit);
        let p = detect(&f.field);
        assert!((p.centroid() + 1e-3).abs() < 2.0 * f.field.grid.dx());

        let f = prepare(1, Basis::Fourier, 0, &optics, &proto).unwrap();
        assert_eq!(f.field.plane, crate::optics::Plane::Fourier);
        assert!(detect(&f.field).centroid().abs() < 1e-6);

        let f = prepare(1, Basis::Image, 0, &optics, &proto).unwrap();
        assert!((detect(&f.field).centroid() - 1e-3).abs() < 2.0 * f.field.grid.dx());
    }

    #[test]
    fn prepare_rejects_non_binary_bit() {
        let (optics, proto, _) = setup();
        assert!(matches!(
            prepare(2, Basis::Image, 0, &optics, &proto),
            Err(ProtocolError::InvalidBit(2))
        ));
    }

    #[test]
    fn prepared_states_match_prepare() {
        let (optics, proto, _) = setup();
        let states = PreparedStates::new(&optics, &proto).unwrap();
        for basis in [Basis::Image, Basis::Fourier] {
            for bit in [0, 1] {
                let direct = prepare(bit, basis, 7, &optics, &proto).unwrap();
                let cached = states.frame(bit, basis, 7);
                assert_eq!(direct.field, cached.field);
            }
        }
    }

    #[test]
    fn round_trip_decodes_every_bit_basis_combination() {
        let (optics, proto, calib) = setup();
        for basis in [Basis::Image, Basis::Fourier] {
            for bit in [0, 1] {
                let frame = prepare(bit, basis, 0, &optics, &proto).unwrap();
                let class = measure(frame, basis, &optics, &calib).unwrap();
                assert_eq!(
                    decode(class.label, basis),
                    Some(bit),
                    "bit {bit} basis {basis:?} gave {:?}",
                    class.label
                );
            }
        }
    }

    #[test]
    fn mismatched_basis_yields_identical_dots() {
        let (optics, proto, calib) = setup();
        for basis in [Basis::Image, Basis::Fourier] {
            let mut profiles = Vec::new();
            for bit in [0, 1] {
                let frame = prepare(bit, basis, 0, &optics, &proto).unwrap();
                let observed = match basis.other() {
                    Basis::Image => image_of(&frame.field),
                    Basis::Fourier => optical_fourier(&frame.field, &optics),
                };
                let profile = detect(&observed);
                let class = classify(&profile, &calib).unwrap();
                assert_eq!(class.label, ClassLabel::Dot, "bit {bit} basis {basis:?}");
                assert_eq!(decode(class.label, basis.other()), None);
                profiles.push(profile);
            }
            // The two dots are indistinguishable: no bit leaks.
            let peak = profiles[0].intensity().iter().fold(0.0_f64, f64::max);
            let worst = profiles[0]
                .intensity()
                .iter()
                .zip(profiles[1].intensity())
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(worst / peak <= 1e-9, "dot leakage {:.3e}", worst / peak);
        }
    }

    #[test]
    fn fourier_prepared_fourier_measured_is_mirrored_line() {
        let (optics, proto, calib) = setup();
        let frame = prepare(1, Basis::Fourier, 0, &optics, &proto).unwrap();
        let class = measure(frame, Basis::Fourier, &optics, &calib).unwrap();
        assert_eq!(class.label, ClassLabel::LineNeg);
        assert!((class.centroid + 1e-3).abs() < calib.centroid_tol);
        assert_eq!(decode(class.label, Basis::Fourier), Some(1));
    }

    #[test]
    fn correct_basis_interception_is_transparent() {
        let (optics, proto, calib) = setup();
        let mut rng = stream_rng(3, EVE_STREAM);
        for basis in [Basis::Image, Basis::Fourier] {
            for bit in [0, 1] {
                let frame = prepare(bit, basis, 0, &optics, &proto).unwrap();
                let (resent, _) =
                    eve_intercept(frame, basis, &mut rng, &optics, &proto, &calib).unwrap();
                let original = prepare(bit, basis, 0, &optics, &proto).unwrap();
                assert_eq!(resent.field, original.field);
            }
        }
    }

    #[test]
    fn wrong_basis_interception_hides_the_bit_from_bob() {
        let (optics, proto, calib) = setup();
        let mut rng = stream_rng(3, EVE_STREAM);
        // Alice sends bit 1 in the image basis; Eve measures Fourier.
        let frame = prepare(1, Basis::Image, 0, &optics, &proto).unwrap();
        let (resent, seen) =
            eve_intercept(frame, Basis::Fourier, &mut rng, &optics, &proto, &calib).unwrap();
        assert_eq!(seen, ClassLabel::Dot);
        // Bob measures the correct (Alice's) basis and sees a dot.
        let class = measure(resent, Basis::Image, &optics, &calib).unwrap();
        assert_eq!(class.label, ClassLabel::Dot);
        assert_eq!(decode(class.label, Basis::Image), None);
    }

    #[test]
    fn eve_resends_random_bit_on_no_signal() {
        let (optics, proto, calib) = setup();
        let grid = optics.grid().unwrap();
        let mut rng = stream_rng(5, EVE_STREAM);
        let dark = Frame {
            field: SampledField::zero(grid, crate::optics::Plane::Slit),
            frame_id: 9,
        };
        let (resent, seen) =
            eve_intercept(dark, Basis::Image, &mut rng, &optics, &proto, &calib).unwrap();
        assert_eq!(seen, ClassLabel::NoSignal);
        assert_eq!(resent.frame_id, 9);
        // The replacement is a genuine prepared state in Eve's basis.
        let class = measure(resent, Basis::Image, &optics, &calib).unwrap();
        assert!(matches!(class.label, ClassLabel::LineNeg | ClassLabel::LinePos));
    }

    #[test]
    fn config_validation_rejects_bad_parameters() {
        let proto = ProtocolConfig {
            n_frames: 5,
            ..ProtocolConfig::default()
        };
        assert!(matches!(
            proto.validate(),
            Err(ProtocolError::TooFewFrames {
                n_frames: 5,
                verify_k: 10
            })
        ));

        let proto = ProtocolConfig {
            pos_bit1: -1e-3,
            ..ProtocolConfig::default()
        };
        assert!(matches!(
            proto.validate(),
            Err(ProtocolError::InvalidPositions { .. })
        ));

        let proto = ProtocolConfig {
            pos_bit0: -0.5e-3,
            ..ProtocolConfig::default()
        };
        assert!(matches!(
            proto.validate(),
            Err(ProtocolError::InvalidPositions { .. })
        ));

        let proto = ProtocolConfig {
            eve_policy: EvePolicy::Prob(1.5),
            ..ProtocolConfig::default()
        };
        assert!(matches!(
            proto.validate(),
            Err(ProtocolError::InvalidProbability(_))
        ));
    }

    #[test]
    fn eve_policy_string_round_trip() {
        for (text, policy) in [
            ("never", EvePolicy::Never),
            ("always", EvePolicy::Always),
            ("prob:0.25", EvePolicy::Prob(0.25)),
        ] {
            assert_eq!(text.parse::<EvePolicy>().unwrap(), policy);
            assert_eq!(policy.to_string(), text);
        }
        assert!("prob:1.5".parse::<EvePolicy>().is_err());
        assert!("prob:nan".parse::<EvePolicy>().is_err());
        assert!("sometimes".parse::<EvePolicy>().is_err());
    }

    fn sifted_fixture(outcomes: &[(usize, Bit, Option<Bit>)]) -> Vec<SiftedSlot> {
        outcomes
            .iter()
            .map(|&(slot, alice_bit, decoded_bit)| SiftedSlot {
                slot,
                alice_bit,
                decoded_bit,
            })
            .collect()
    }

    #[test]
    fn verify_secure_key_excludes_disclosed_prefix() {
        let sifted =
            sifted_fixture(&(0..20).map(|i| (i, (i % 2) as Bit, Some((i % 2) as Bit))).collect::<Vec<_>>());
        let disclosed: Vec<Bit> = sifted.iter().take(10).map(|s| s.alice_bit).collect();
        match verify(&sifted, 10, &disclosed) {
            Verdict::Secure { key } => {
                assert_eq!(key.len(), 10);
                assert_eq!(key, (10..20).map(|i| (i % 2) as Bit).collect::<Vec<_>>());
            }
            other => panic!("expected secure, got {other:?}"),
        }
    }

    #[test]
    fn verify_flags_dot_anywhere_in_sifted_slots() {
        // The dot sits past the disclosed prefix and is still evidence.
        let mut outcomes: Vec<(usize, Bit, Option<Bit>)> =
            (0..20).map(|i| (i, 0, Some(0))).collect();
        outcomes[15] = (15, 0, None);
        let sifted = sifted_fixture(&outcomes);
        let disclosed: Vec<Bit> = vec![0; 10];
        match verify(&sifted, 10, &disclosed) {
            Verdict::Tampered { evidence } => assert_eq!(evidence, vec![15]),
            other => panic!("expected tampered, got {other:?}"),
        }
    }

    #[test]
    fn verify_flags_disclosed_bit_mismatch() {
        let sifted = sifted_fixture(&(0..12).map(|i| (i, 1, Some(1))).collect::<Vec<_>>());
        let mut disclosed: Vec<Bit> = vec![1; 10];
        disclosed[3] = 0;
        match verify(&sifted, 10, &disclosed) {
            Verdict::Tampered { evidence } => assert_eq!(evidence, vec![3]),
            other => panic!("expected tampered, got {other:?}"),
        }
    }

    #[test]
    fn verify_inconclusive_below_verify_k() {
        let sifted = sifted_fixture(&(0..6).map(|i| (i, 0, Some(0))).collect::<Vec<_>>());
        let disclosed: Vec<Bit> = vec![0; 6];
        assert!(matches!(
            verify(&sifted, 10, &disclosed),
            Verdict::Inconclusive { .. }
        ));
    }

    #[test]
    fn sift_keeps_exactly_matched_bases() {
        let optics = OpticsConfig::default();
        let proto = ProtocolConfig {
            n_frames: 40,
            seed: 11,
            ..ProtocolConfig::default()
        };
        let t = run_session(&optics, &proto).unwrap();
        let sifted = sift(&t);
        assert!(!sifted.is_empty());
        let expected: Vec<usize> = t
            .slots
            .iter()
            .filter(|s| s.alice_basis == s.bob_basis)
            .map(|s| s.slot)
            .collect();
        assert_eq!(sifted.iter().map(|s| s.slot).collect::<Vec<_>>(), expected);
        for s in &t.slots {
            assert_eq!(s.sifted, s.alice_basis == s.bob_basis);
        }
    }

    #[test]
    fn no_eve_session_is_secure_and_error_free() {
        let optics = OpticsConfig::default();
        let proto = ProtocolConfig {
            n_frames: 200,
            seed: 42,
            ..ProtocolConfig::default()
        };
        let t = run_session(&optics, &proto).unwrap();
        assert_eq!(t.slots.len(), 200);
        for s in &t.slots {
            assert!(s.eve_basis.is_none());
            if s.sifted {
                assert_eq!(s.decoded_bit, Some(s.alice_bit), "slot {}", s.slot);
            } else {
                assert_eq!(s.decoded_bit, None);
                assert_eq!(s.bob_class.label, ClassLabel::Dot);
            }
        }
        match &t.verdict {
            Some(Verdict::Secure { key }) => {
                assert_eq!(key.as_slice(), t.alice_key().as_slice());
                assert_eq!(key.len(), t.sifted().len() - 10);
            }
            other => panic!("expected secure, got {other:?}"),
        }
    }

    #[test]
    fn sessions_are_deterministic() {
        let optics = OpticsConfig::default();
        let proto = ProtocolConfig {
            n_frames: 60,
            seed: 7,
            eve_policy: EvePolicy::Prob(0.5),
            ..ProtocolConfig::default()
        };
        let a = run_session(&optics, &proto).unwrap();
        let b = run_session(&optics, &proto).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn toggling_eve_policy_leaves_honest_draws_untouched() {
        let optics = OpticsConfig::default();
        let base = ProtocolConfig {
            n_frames: 60,
            seed: 19,
            ..ProtocolConfig::default()
        };
        let without = run_session(&optics, &base).unwrap();
        let with = run_session(
            &optics,
            &ProtocolConfig {
                eve_policy: EvePolicy::Always,
                ..base
            },
        )
        .unwrap();
        for (a, b) in without.slots.iter().zip(&with.slots) {
            assert_eq!(a.alice_bit, b.alice_bit);
            assert_eq!(a.alice_basis, b.alice_basis);
            assert_eq!(a.bob_basis, b.bob_basis);
        }
    }

    #[test]
    fn eve_always_session_is_detected_and_dots_align_with_wrong_guesses() {
        let optics = OpticsConfig::default();
        let proto = ProtocolConfig {
            n_frames: 300,
            seed: 23,
            eve_policy: EvePolicy::Always,
            ..ProtocolConfig::default()
        };
        let t = run_session(&optics, &proto).unwrap();
        assert!(matches!(t.verdict, Some(Verdict::Tampered { .. })));
        for s in &t.slots {
            let eve_basis = s.eve_basis.expect("always-intercepting Eve");
            if s.sifted {
                // Sifted slot is informationless exactly when Eve guessed wrong.
                assert_eq!(
                    s.decoded_bit.is_none(),
                    eve_basis != s.alice_basis,
                    "slot {}",
                    s.slot
                );
                if eve_basis == s.alice_basis {
                    assert_eq!(s.decoded_bit, Some(s.alice_bit));
                }
            }
        }
    }
}
