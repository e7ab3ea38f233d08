//! JSON-lines wire format for transcripts and classical messages.
//!
//! One JSON object per line. A transcript file is UTF-8, newline-delimited:
//! header record first, slot records in slot order, verdict record last.
//! Records keep fixed key order and shortest round-trip float formatting, so
//! identical sessions serialize to byte-identical files.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::optics::{ClassLabel, Classification, OpticsConfig};
use crate::protocol::{
    Basis, Bit, EvePolicy, ProtocolConfig, SlotRecord, Transcript, Verdict,
};

use super::{ClassicalMessage, Party};

/// Parse/serialize errors, with 1-based line numbers where available.
#[derive(Debug, Error)]
pub enum WireError {
    #[error("line {line}: not valid UTF-8")]
    Utf8 { line: usize },
    #[error("line {line}: invalid JSON: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: unknown record type {found:?}")]
    UnknownType { line: usize, found: String },
    #[error("line {line}: missing key {key:?}")]
    MissingKey { line: usize, key: String },
    #[error("line {line}: {reason}")]
    Invalid { line: usize, reason: String },
    #[error("transcript is empty")]
    EmptyTranscript,
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

/// Session header: seed, frame count, timing, policy and the full configs.
#[derive(Debug, Clone, PartialEq)]
pub struct HeaderRecord {
    pub seed: u64,
    pub n_frames: usize,
    pub slot_seconds: f64,
    pub eve_policy: EvePolicy,
    pub optics: OpticsConfig,
    pub protocol: ProtocolConfig,
}

impl HeaderRecord {
    pub fn new(optics: OpticsConfig, protocol: ProtocolConfig) -> Self {
        Self {
            seed: protocol.seed,
            n_frames: protocol.n_frames,
            slot_seconds: protocol.slot_seconds,
            eve_policy: protocol.eve_policy,
            optics,
            protocol,
        }
    }
}

/// Any record that can appear on the wire.
#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Header(HeaderRecord),
    Slot(SlotRecord),
    Verdict(Verdict),
    Classical(ClassicalMessage),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum WireRecord {
    Header {
        seed: u64,
        n_frames: usize,
        slot_seconds: f64,
        eve_policy: EvePolicy,
        optics: OpticsConfig,
        protocol: ProtocolConfig,
    },
    Slot {
        slot: usize,
        alice_bit: Bit,
        alice_basis: Basis,
        eve_basis: Option<Basis>,
        bob_basis: Basis,
        label: ClassLabel,
        centroid_mm: f64,
        fwhm_mm: f64,
        score: f64,
        decoded_bit: Option<Bit>,
        sifted: bool,
        disclosed: bool,
    },
    Verdict {
        verdict: VerdictKind,
        evidence: Option<Vec<usize>>,
        key_bits: Option<Vec<Bit>>,
    },
    Timing {
        slot_seconds: f64,
    },
    BasisReveal {
        who: Party,
        bases: Vec<Basis>,
    },
    Disclosure {
        bits: Vec<Bit>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum VerdictKind {
    Secure,
    Tampered,
    Inconclusive,
}

const KNOWN_TYPES: [&str; 6] = [
    "header",
    "slot",
    "verdict",
    "timing",
    "basis_reveal",
    "disclosure",
];

fn to_wire(record: &Record) -> WireRecord {
    match record {
        Record::Header(h) => WireRecord::Header {
            seed: h.seed,
            n_frames: h.n_frames,
            slot_seconds: h.slot_seconds,
            eve_policy: h.eve_policy,
            optics: h.optics,
            protocol: h.protocol,
        },
        // Eve's private outcome is simulation-internal and stays off the wire.
        Record::Slot(s) => WireRecord::Slot {
            slot: s.slot,
            alice_bit: s.alice_bit,
            alice_basis: s.alice_basis,
            eve_basis: s.eve_basis,
            bob_basis: s.bob_basis,
            label: s.bob_class.label,
            centroid_mm: s.bob_class.centroid * 1e3,
            fwhm_mm: s.bob_class.fwhm * 1e3,
            score: s.bob_class.score,
            decoded_bit: s.decoded_bit,
            sifted: s.sifted,
            disclosed: s.disclosed,
        },
        Record::Verdict(v) => verdict_to_wire(v),
        Record::Classical(m) => match m {
            ClassicalMessage::TimingAnnounce { slot_seconds } => WireRecord::Timing {
                slot_seconds: *slot_seconds,
            },
            ClassicalMessage::BasisReveal { who, bases } => WireRecord::BasisReveal {
                who: *who,
                bases: bases.clone(),
            },
            ClassicalMessage::Disclosure { bits } => WireRecord::Disclosure { bits: bits.clone() },
            ClassicalMessage::VerdictMsg { verdict } => verdict_to_wire(verdict),
        },
    }
}

fn verdict_to_wire(verdict: &Verdict) -> WireRecord {
    match verdict {
        Verdict::Secure { key } => WireRecord::Verdict {
            verdict: VerdictKind::Secure,
            evidence: None,
            key_bits: Some(key.clone()),
        },
        Verdict::Tampered { evidence } => WireRecord::Verdict {
            verdict: VerdictKind::Tampered,
            evidence: Some(evidence.clone()),
            key_bits: None,
        },
        Verdict::Inconclusive { .. } => WireRecord::Verdict {
            verdict: VerdictKind::Inconclusive,
            evidence: None,
            key_bits: None,
        },
    }
}

fn from_wire(wire: WireRecord, line: usize) -> Result<Record, WireError> {
    Ok(match wire {
        WireRecord::Header {
            seed,
            n_frames,
            slot_seconds,
            eve_policy,
            optics,
            protocol,
        } => {
            if seed != protocol.seed
                || n_frames != protocol.n_frames
                || slot_seconds != protocol.slot_seconds
                || eve_policy != protocol.eve_policy
            {
                return Err(WireError::Invalid {
                    line,
                    reason: "header summary fields disagree with the nested protocol config"
                        .into(),
                });
            }
            Record::Header(HeaderRecord {
                seed,
                n_frames,
                slot_seconds,
                eve_policy,
                optics,
                protocol,
            })
        }
        WireRecord::Slot {
            slot,
            alice_bit,
            alice_basis,
            eve_basis,
            bob_basis,
            label,
            centroid_mm,
            fwhm_mm,
            score,
            decoded_bit,
            sifted,
            disclosed,
        } => {
            for (name, bit) in [("alice_bit", Some(alice_bit)), ("decoded_bit", decoded_bit)] {
                if let Some(b) = bit {
                    if b > 1 {
                        return Err(WireError::Invalid {
                            line,
                            reason: format!("{name} must be 0 or 1 (got {b})"),
                        });
                    }
                }
            }
            Record::Slot(SlotRecord {
                slot,
                alice_bit,
                alice_basis,
                eve_basis,
                eve_outcome: None,
                bob_basis,
                bob_class: Classification {
                    label,
                    centroid: centroid_mm * 1e-3,
                    fwhm: fwhm_mm * 1e-3,
                    score,
                },
                decoded_bit,
                sifted,
                disclosed,
            })
        }
        WireRecord::Verdict {
            verdict,
            evidence,
            key_bits,
        } => Record::Verdict(match verdict {
            VerdictKind::Secure => Verdict::Secure {
                key: key_bits.ok_or_else(|| WireError::Invalid {
                    line,
                    reason: "secure verdict requires key_bits".into(),
                })?,
            },
            VerdictKind::Tampered => Verdict::Tampered {
                evidence: evidence.ok_or_else(|| WireError::Invalid {
                    line,
                    reason: "tampered verdict requires evidence".into(),
                })?,
            },
            VerdictKind::Inconclusive => Verdict::Inconclusive {
                reason: String::new(),
            },
        }),
        WireRecord::Timing { slot_seconds } => {
            Record::Classical(ClassicalMessage::TimingAnnounce { slot_seconds })
        }
        WireRecord::BasisReveal { who, bases } => {
            Record::Classical(ClassicalMessage::BasisReveal { who, bases })
        }
        WireRecord::Disclosure { bits } => {
            Record::Classical(ClassicalMessage::Disclosure { bits })
        }
    })
}

/// Serialize one record to its single-line JSON form (no trailing newline).
pub fn serialize_record(record: &Record) -> String {
    serde_json::to_string(&to_wire(record)).expect("wire records always serialize")
}

/// Parse one line (1-based `line` for diagnostics) into a record.
///
/// Note that a parsed verdict message and an [`Record::Verdict`] are the same
/// on the wire; parsing always yields the latter. Eve's private outcome and
/// the inconclusive reason string are not carried on the wire.
pub fn parse_record(line: usize, bytes: &[u8]) -> Result<Record, WireError> {
    let text = std::str::from_utf8(bytes).map_err(|_| WireError::Utf8 { line })?;
    let value: Value = serde_json::from_str(text).map_err(|e| WireError::Json {
        line,
        message: e.to_string(),
    })?;
    let record_type = match value.get("type") {
        None => {
            return Err(WireError::MissingKey {
                line,
                key: "type".into(),
            })
        }
        Some(Value::String(s)) => s.clone(),
        Some(other) => {
            return Err(WireError::Invalid {
                line,
                reason: format!("\"type\" must be a string, got {other}"),
            })
        }
    };
    if !KNOWN_TYPES.contains(&record_type.as_str()) {
        return Err(WireError::UnknownType {
            line,
            found: record_type,
        });
    }
    let wire: WireRecord = serde_json::from_value(value).map_err(|e| {
        let message = e.to_string();
        match message.strip_prefix("missing field `") {
            Some(rest) => WireError::MissingKey {
                line,
                key: rest.trim_end_matches('`').to_string(),
            },
            None => WireError::Invalid {
                line,
                reason: message,
            },
        }
    })?;
    from_wire(wire, line)
}

/// Write a complete transcript: header, slots in order, verdict.
pub fn write_transcript<W: Write>(transcript: &Transcript, out: &mut W) -> io::Result<()> {
    let header = HeaderRecord::new(transcript.optics, transcript.protocol);
    writeln!(out, "{}", serialize_record(&Record::Header(header)))?;
    for slot in &transcript.slots {
        writeln!(out, "{}", serialize_record(&Record::Slot(slot.clone())))?;
    }
    if let Some(verdict) = &transcript.verdict {
        writeln!(out, "{}", serialize_record(&Record::Verdict(verdict.clone())))?;
    }
    Ok(())
}

/// Read a transcript written by [`write_transcript`]: header first, dense
/// slot records, verdict last.
pub fn read_transcript<R: BufRead>(input: &mut R) -> Result<Transcript, WireError> {
    let mut lines = Vec::new();
    let mut buf = Vec::new();
    loop {
        buf.clear();
        let n = input.read_until(b'\n', &mut buf)?;
        if n == 0 {
            break;
        }
        while buf.last() == Some(&b'\n') || buf.last() == Some(&b'\r') {
            buf.pop();
        }
        lines.push(buf.clone());
    }

    let mut records = lines
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| parse_record(i + 1, l));

    let header = match records.next() {
        None => return Err(WireError::EmptyTranscript),
        Some(Ok(Record::Header(h))) => h,
        Some(Ok(_)) => {
            return Err(WireError::Invalid {
                line: 1,
                reason: "transcript must start with a header record".into(),
            })
        }
        Some(Err(e)) => return Err(e),
    };

    let mut slots: Vec<SlotRecord> = Vec::with_capacity(header.n_frames);
    let mut verdict = None;
    for (offset, record) in records.enumerate() {
        let line = offset + 2;
        match record? {
            Record::Slot(s) => {
                if verdict.is_some() {
                    return Err(WireError::Invalid {
                        line,
                        reason: "slot record after the verdict".into(),
                    });
                }
                if s.slot != slots.len() {
                    return Err(WireError::Invalid {
                        line,
                        reason: format!("slot index {} out of order (expected {})", s.slot, slots.len()),
                    });
                }
                slots.push(s);
            }
            Record::Verdict(v) => {
                if verdict.is_some() {
                    return Err(WireError::Invalid {
                        line,
                        reason: "duplicate verdict record".into(),
                    });
                }
                verdict = Some(v);
            }
            Record::Header(_) => {
                return Err(WireError::Invalid {
                    line,
                    reason: "duplicate header record".into(),
                })
            }
            Record::Classical(_) => {
                return Err(WireError::Invalid {
                    line,
                    reason: "classical messages do not belong in a transcript file".into(),
                })
            }
        }
    }

    if slots.len() != header.n_frames {
        return Err(WireError::Invalid {
            line: lines.len(),
            reason: format!(
                "transcript has {} slot records, header says {}",
                slots.len(),
                header.n_frames
            ),
        });
    }

    Ok(Transcript {
        optics: header.optics,
        protocol: header.protocol,
        seed: header.seed,
        slots,
        verdict,
    })
}
