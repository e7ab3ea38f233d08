//! Quantum and classical channel abstractions.
//!
//! The quantum channel hands each deposited frame out exactly once, in
//! deposit order — the interface-level stand-in for no-cloning. An optional
//! tap diverts frames to an eavesdropper, who must deposit a replacement
//! before the receiver can retrieve that position.

pub mod wire;

pub use wire::{
    parse_record, read_transcript, serialize_record, write_transcript, HeaderRecord, Record,
    WireError,
};

use std::collections::VecDeque;

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::protocol::{Basis, Bit, EvePolicy, Frame, Verdict};

/// Channel usage errors.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChannelError {
    #[error("channel capacity must be at least 1")]
    ZeroCapacity,
    #[error("channel full (capacity {0})")]
    Full(usize),
    #[error("channel empty: every deposited frame has already been retrieved")]
    Empty,
    #[error("front frame is diverted to the tap and awaits a replacement")]
    HeldAtTap,
    #[error("a tap is already installed")]
    TapAlreadyInstalled,
    #[error("no intercepted frame is pending replacement")]
    NoPendingIntercept,
}

enum ChannelSlot {
    Ready(Frame),
    /// Diverted to the tap; the slot keeps its queue position until the
    /// eavesdropper deposits a replacement.
    Held,
}

struct TapState {
    policy: EvePolicy,
    rng: ChaCha8Rng,
    pending: VecDeque<Frame>,
}

/// Ordered single-retrieval quantum channel between a sender and a receiver,
/// with an optional eavesdropper tap between them.
pub struct QuantumChannel {
    slots: VecDeque<ChannelSlot>,
    capacity: usize,
    tap: Option<TapState>,
}

impl QuantumChannel {
    /// Open an empty channel holding at most `capacity` in-flight frames.
    pub fn open(capacity: usize) -> Result<Self, ChannelError> {
        if capacity == 0 {
            return Err(ChannelError::ZeroCapacity);
        }
        Ok(Self {
            slots: VecDeque::with_capacity(capacity),
            capacity,
            tap: None,
        })
    }

    /// Number of in-flight frames (including any held at the tap).
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Sender end: deposit a frame. If a tap is installed and its policy
    /// fires (drawing from the tap's RNG stream), the frame is diverted to
    /// the eavesdropper and its queue position is held for the replacement.
    pub fn deposit(&mut self, frame: Frame) -> Result<(), ChannelError> {
        if self.slots.len() >= self.capacity {
            return Err(ChannelError::Full(self.capacity));
        }
        let diverted = match &mut self.tap {
            Some(tap) => tap.policy.fires(&mut tap.rng),
            None => false,
        };
        if diverted {
            let tap = self.tap.as_mut().expect("tap checked above");
            tap.pending.push_back(frame);
            self.slots.push_back(ChannelSlot::Held);
        } else {
            self.slots.push_back(ChannelSlot::Ready(frame));
        }
        Ok(())
    }

    /// Receiver end: retrieve the oldest frame. Each frame is handed out at
    /// most once; retrieving from an empty channel is an error, as is
    /// retrieving a position still held at the tap.
    pub fn retrieve(&mut self) -> Result<Frame, ChannelError> {
        match self.slots.front() {
            None => Err(ChannelError::Empty),
            Some(ChannelSlot::Held) => Err(ChannelError::HeldAtTap),
            Some(ChannelSlot::Ready(_)) => match self.slots.pop_front() {
                Some(ChannelSlot::Ready(frame)) => Ok(frame),
                _ => unreachable!("front checked above"),
            },
        }
    }

    /// Install the eavesdropper tap. `rng` is Eve's own stream; the policy
    /// decision for each frame draws from it.
    pub fn install_tap(&mut self, policy: EvePolicy, rng: ChaCha8Rng) -> Result<(), ChannelError> {
        if self.tap.is_some() {
            return Err(ChannelError::TapAlreadyInstalled);
        }
        self.tap = Some(TapState {
            policy,
            rng,
            pending: VecDeque::new(),
        });
        Ok(())
    }

    /// Eavesdropper end: take the oldest diverted frame, if any.
    pub fn take_intercepted(&mut self) -> Option<Frame> {
        self.tap.as_mut()?.pending.pop_front()
    }

    /// Eavesdropper's RNG stream, for her measurement and re-preparation
    /// draws.
    pub fn tap_rng_mut(&mut self) -> Option<&mut ChaCha8Rng> {
        self.tap.as_mut().map(|t| &mut t.rng)
    }

    /// Eavesdropper end: deposit the replacement for the oldest held
    /// position.
    pub fn replace(&mut self, frame: Frame) -> Result<(), ChannelError> {
        let held = self
            .slots
            .iter_mut()
            .find(|s| matches!(s, ChannelSlot::Held));
        match held {
            Some(slot) => {
                *slot = ChannelSlot::Ready(frame);
                Ok(())
            }
            None => Err(ChannelError::NoPendingIntercept),
        }
    }
}

/// Who sent a classical message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Alice,
    Bob,
}

/// Messages on the authenticated classical channel.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassicalMessage {
    /// Step 1: Alice announces the time interval between frames.
    TimingAnnounce { slot_seconds: f64 },
    /// Step 4: each party reveals the basis used per slot (never the bit).
    BasisReveal { who: Party, bases: Vec<Basis> },
    /// Step 6: Alice disclosed her first sifted bits for verification.
    Disclosure { bits: Vec<Bit> },
    /// Step 7: Bob announces the verdict.
    VerdictMsg { verdict: Verdict },
}

/// Broadcast log of classical messages, readable by everyone.
#[derive(Debug, Default)]
pub struct ClassicalChannel {
    log: Vec<ClassicalMessage>,
}

impl ClassicalChannel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn send(&mut self, message: ClassicalMessage) {
        self.log.push(message);
    }

    pub fn messages(&self) -> &[ClassicalMessage] {
        &self.log
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{OpticsConfig, Plane, SampledField};
    use crate::protocol::stream_rng;
    use rand::SeedableRng;

    fn dummy_frame(id: u64) -> Frame {
        let grid = OpticsConfig::default().grid().unwrap();
        Frame {
            field: SampledField::zero(grid, Plane::Slit),
            frame_id: id,
        }
    }

    #[test]
    fn open_rejects_zero_capacity() {
        assert_eq!(QuantumChannel::open(0).unwrap_err(), ChannelError::ZeroCapacity);
        assert!(QuantumChannel::open(16).unwrap().is_empty());
    }

    #[test]
    fn frames_are_retrieved_once_in_fifo_order() {
        let mut ch = QuantumChannel::open(16).unwrap();
        ch.deposit(dummy_frame(1)).unwrap();
        ch.deposit(dummy_frame(2)).unwrap();
        assert_eq!(ch.retrieve().unwrap().frame_id, 1);
        assert_eq!(ch.retrieve().unwrap().frame_id, 2);
        // The frames are gone; a second retrieval attempt is an error.
        assert_eq!(ch.retrieve().unwrap_err(), ChannelError::Empty);
    }

    #[test]
    fn deposit_beyond_capacity_fails() {
        let mut ch = QuantumChannel::open(1).unwrap();
        ch.deposit(dummy_frame(1)).unwrap();
        assert_eq!(
            ch.deposit(dummy_frame(2)).unwrap_err(),
            ChannelError::Full(1)
        );
    }

    #[test]
    fn never_tap_passes_frames_bit_identically() {
        let mut ch = QuantumChannel::open(4).unwrap();
        ch.install_tap(EvePolicy::Never, ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        let frame = dummy_frame(3);
        let amp_before = frame.field.amp.clone();
        ch.deposit(frame).unwrap();
        assert!(ch.take_intercepted().is_none());
        let out = ch.retrieve().unwrap();
        assert_eq!(out.frame_id, 3);
        assert_eq!(out.field.amp, amp_before);
    }

    #[test]
    fn always_tap_diverts_every_frame_and_blocks_until_replaced() {
        let mut ch = QuantumChannel::open(4).unwrap();
        ch.install_tap(EvePolicy::Always, ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        ch.deposit(dummy_frame(1)).unwrap();
        assert_eq!(ch.retrieve().unwrap_err(), ChannelError::HeldAtTap);
        let taken = ch.take_intercepted().unwrap();
        assert_eq!(taken.frame_id, 1);
        ch.replace(dummy_frame(100)).unwrap();
        assert_eq!(ch.retrieve().unwrap().frame_id, 100);
        assert_eq!(ch.replace(dummy_frame(0)).unwrap_err(), ChannelError::NoPendingIntercept);
    }

    #[test]
    fn double_tap_installation_fails() {
        let mut ch = QuantumChannel::open(4).unwrap();
        ch.install_tap(EvePolicy::Never, ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        assert_eq!(
            ch.install_tap(EvePolicy::Never, ChaCha8Rng::seed_from_u64(0))
                .unwrap_err(),
            ChannelError::TapAlreadyInstalled
        );
    }

    #[test]
    fn probabilistic_tap_intercepts_the_expected_fraction() {
        let mut ch = QuantumChannel::open(1).unwrap();
        ch.install_tap(EvePolicy::Prob(0.5), stream_rng(42, 3)).unwrap();
        let total = 10_000;
        let mut intercepted = 0;
        for i in 0..total {
            ch.deposit(dummy_frame(i)).unwrap();
            if let Some(frame) = ch.take_intercepted() {
                intercepted += 1;
                ch.replace(frame).unwrap();
            }
            ch.retrieve().unwrap();
        }
        let fraction = intercepted as f64 / total as f64;
        assert!(
            (fraction - 0.5).abs() <= 0.02,
            "intercepted fraction {fraction}"
        );
    }

    #[test]
    fn replacement_preserves_queue_order() {
        let mut ch = QuantumChannel::open(4).unwrap();
        ch.install_tap(EvePolicy::Prob(1.0), stream_rng(1, 3)).unwrap();
        ch.deposit(dummy_frame(1)).unwrap();
        ch.deposit(dummy_frame(2)).unwrap();
        let a = ch.take_intercepted().unwrap();
        let b = ch.take_intercepted().unwrap();
        assert_eq!((a.frame_id, b.frame_id), (1, 2));
        // Replacements fill the oldest held position first.
        ch.replace(dummy_frame(11)).unwrap();
        ch.replace(dummy_frame(12)).unwrap();
        assert_eq!(ch.retrieve().unwrap().frame_id, 11);
        assert_eq!(ch.retrieve().unwrap().frame_id, 12);
    }

    #[test]
    fn classical_channel_logs_in_order() {
        let mut ch = ClassicalChannel::new();
        ch.send(ClassicalMessage::TimingAnnounce { slot_seconds: 5.0 });
        ch.send(ClassicalMessage::Disclosure { bits: vec![0, 1] });
        assert_eq!(ch.messages().len(), 2);
        assert!(matches!(
            ch.messages()[0],
            ClassicalMessage::TimingAnnounce { slot_seconds } if slot_seconds == 5.0
        ));
    }
}
