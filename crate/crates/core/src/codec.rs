//! Text/bit conversion and the timed slit-position transmission convention.
//!
//! Characters are sent as 8 bits each, most significant bit first. One bit
//! occupies one time slot; a repeated bit means the slit simply does not move
//! during that interval.

use thiserror::Error;

use crate::protocol::{Bit, ProtocolConfig};

/// Codec errors.
#[derive(Debug, Error, PartialEq)]
pub enum CodecError {
    #[error("character {ch:?} at index {index} is outside the 7-bit repertoire")]
    NonAscii { ch: char, index: usize },
    #[error("bit count {0} is not a multiple of 8")]
    NotByteAligned(usize),
    #[error("bit value {0} is not 0 or 1")]
    InvalidBit(Bit),
    #[error("byte {index} decodes to {code:#04x}, outside the 7-bit repertoire")]
    CodeOutOfRange { index: usize, code: u8 },
    #[error("bit sequence is empty")]
    EmptyBits,
    #[error("step {step} position {position_m} m is not within {tol_m} m of either encoding position")]
    AmbiguousPosition {
        step: usize,
        position_m: f64,
        tol_m: f64,
    },
}

/// Slit position schedule for a bit sequence: one step per slot, starting at
/// time zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Timeline {
    /// `(start_time_s, slit_position_m)` per slot, start times strictly
    /// increasing from 0.
    pub steps: Vec<(f64, f64)>,
    pub total_duration_s: f64,
}

impl Timeline {
    /// Slit position at time `t` seconds: the last step that has started.
    pub fn position_at(&self, t: f64) -> Option<f64> {
        self.steps
            .iter()
            .take_while(|(start, _)| *start <= t)
            .last()
            .map(|&(_, pos)| pos)
    }
}

/// Encode text as 8 bits per character, most significant bit first.
pub fn text_to_bits(text: &str) -> Result<Vec<Bit>, CodecError> {
    let mut bits = Vec::with_capacity(text.len() * 8);
    for (index, ch) in text.chars().enumerate() {
        if !ch.is_ascii() {
            return Err(CodecError::NonAscii { ch, index });
        }
        let code = ch as u8;
        for shift in (0..8).rev() {
            bits.push((code >> shift) & 1);
        }
    }
    Ok(bits)
}

/// Decode a bit sequence produced by [`text_to_bits`].
pub fn bits_to_text(bits: &[Bit]) -> Result<String, CodecError> {
    if bits.len() % 8 != 0 {
        return Err(CodecError::NotByteAligned(bits.len()));
    }
    let mut text = String::with_capacity(bits.len() / 8);
    for (index, byte) in bits.chunks_exact(8).enumerate() {
        let mut code: u8 = 0;
        for &bit in byte {
            if bit > 1 {
                return Err(CodecError::InvalidBit(bit));
            }
            code = (code << 1) | bit;
        }
        if code > 0x7f {
            return Err(CodecError::CodeOutOfRange { index, code });
        }
        text.push(code as char);
    }
    Ok(text)
}

/// Lay a bit sequence out in time: bit `k` occupies the slot starting at
/// `k * slot_seconds`, with the slit at the bit's encoding position.
/// Consecutive equal bits hold the slit still.
pub fn bits_to_timeline(bits: &[Bit], proto: &ProtocolConfig) -> Result<Timeline, CodecError> {
    if bits.is_empty() {
        return Err(CodecError::EmptyBits);
    }
    let mut steps = Vec::with_capacity(bits.len());
    for (k, &bit) in bits.iter().enumerate() {
        if bit > 1 {
            return Err(CodecError::InvalidBit(bit));
        }
        steps.push((k as f64 * proto.slot_seconds, proto.position_of(bit)));
    }
    Ok(Timeline {
        total_duration_s: bits.len() as f64 * proto.slot_seconds,
        steps,
    })
}

/// Read the bit sequence back off a timeline by sampling the slit position at
/// each slot midpoint and matching it to the nearer encoding position within
/// `position_tol` metres.
pub fn timeline_to_bits(
    timeline: &Timeline,
    proto: &ProtocolConfig,
    position_tol: f64,
) -> Result<Vec<Bit>, CodecError> {
    let mut bits = Vec::with_capacity(timeline.steps.len());
    for step in 0..timeline.steps.len() {
        let midpoint = (step as f64 + 0.5) * proto.slot_seconds;
        let position = timeline
            .position_at(midpoint)
            .ok_or(CodecError::EmptyBits)?;
        let bit = if (position - proto.pos_bit0).abs() <= position_tol {
            0
        } else if (position - proto.pos_bit1).abs() <= position_tol {
            1
        } else {
            return Err(CodecError::AmbiguousPosition {
                step,
                position_m: position,
                tol_m: position_tol,
            });
        };
        bits.push(bit);
    }
    Ok(bits)
}
