//! Deterministic simulator of a position/momentum quantum key distribution
//! link built on a slit aperture and a lens Fourier transform.
//!
//! A 1-D wave-optics core ([`optics`]) propagates a sampled complex field
//! from the slit plane to the detector through either an imaging path
//! (position basis, "x") or a lens Fourier transform (momentum basis, "p").
//! A bit is encoded in the slit position; measuring in the matched basis
//! shows a line whose position carries the bit, measuring in the conjugate
//! basis shows a static diffraction dot that carries no bit information.
//!
//! On top of the optics sit:
//!
//! - [`protocol`] — Alice/Bob/Eve behaviour for the BB84 variant: frame
//!   preparation, measurement, intercept-resend eavesdropping, sifting and
//!   verification.
//! - [`channel`] — single-retrieval quantum channel with an optional
//!   eavesdropper tap, classical messages, and the JSON-lines transcript
//!   wire format.
//! - [`codec`] — text/bit conversion and the timed slit-position timeline.
//! - [`stats`] — per-session statistics and detection probabilities.
//! - [`config`] — JSON config-file handling shared by the CLI and FFI.
//!
//! Everything is seeded and pure: identical configuration and seed give
//! bit-identical transcripts.

pub mod channel;
pub mod codec;
pub mod config;
pub mod optics;
pub mod protocol;
pub mod stats;

pub use optics::{OpticsConfig, OpticsError};
pub use protocol::{Basis, EvePolicy, ProtocolConfig, ProtocolError, Transcript, Verdict};
pub use stats::RunStats;
