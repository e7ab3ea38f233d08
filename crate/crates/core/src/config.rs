//! JSON configuration handling shared by the CLI and the C ABI.
//!
//! A config document is an object with optional `optics` and `protocol`
//! sections; any field left out keeps its default. Unknown keys are rejected
//! so typos surface instead of silently reverting to defaults.

use serde::Deserialize;

use crate::protocol::{EvePolicy, ProtocolConfig};
use crate::OpticsConfig;

/// Full simulation configuration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimConfig {
    pub optics: OpticsConfig,
    pub protocol: ProtocolConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Overrides {
    optics: Option<OpticsOverrides>,
    protocol: Option<ProtocolOverrides>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OpticsOverrides {
    wavelength: Option<f64>,
    f_fourier: Option<f64>,
    f_image: Option<f64>,
    slit_width: Option<f64>,
    grid_n: Option<usize>,
    grid_window: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProtocolOverrides {
    n_frames: Option<usize>,
    slot_seconds: Option<f64>,
    pos_bit0: Option<f64>,
    pos_bit1: Option<f64>,
    verify_k: Option<usize>,
    eve_policy: Option<EvePolicy>,
    seed: Option<u64>,
}

impl SimConfig {
    /// Parse a config document and apply it over the defaults.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let overrides: Overrides = serde_json::from_str(text)?;
        let mut cfg = SimConfig::default();
        if let Some(o) = overrides.optics {
            let d = &mut cfg.optics;
            d.wavelength = o.wavelength.unwrap_or(d.wavelength);
            d.f_fourier = o.f_fourier.unwrap_or(d.f_fourier);
            d.f_image = o.f_image.unwrap_or(d.f_image);
            d.slit_width = o.slit_width.unwrap_or(d.slit_width);
            d.grid_n = o.grid_n.unwrap_or(d.grid_n);
            d.grid_window = o.grid_window.unwrap_or(d.grid_window);
        }
        if let Some(p) = overrides.protocol {
            let d = &mut cfg.protocol;
            d.n_frames = p.n_frames.unwrap_or(d.n_frames);
            d.slot_seconds = p.slot_seconds.unwrap_or(d.slot_seconds);
            d.pos_bit0 = p.pos_bit0.unwrap_or(d.pos_bit0);
            d.pos_bit1 = p.pos_bit1.unwrap_or(d.pos_bit1);
            d.verify_k = p.verify_k.unwrap_or(d.verify_k);
            d.eve_policy = p.eve_policy.unwrap_or(d.eve_policy);
            d.seed = p.seed.unwrap_or(d.seed);
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = SimConfig::from_json("{}").unwrap();
        assert_eq!(cfg, SimConfig::default());
        assert_eq!(cfg.optics.wavelength, 532e-9);
        assert_eq!(cfg.protocol.verify_k, 10);
    }

    #[test]
    fn partial_overrides_keep_other_defaults() {
        let cfg = SimConfig::from_json(
            r#"{"protocol":{"pos_bit0":-0.5e-3,"pos_bit1":0.5e-3,"eve_policy":"prob:0.3"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.protocol.pos_bit0, -0.5e-3);
        assert_eq!(cfg.protocol.pos_bit1, 0.5e-3);
        assert_eq!(cfg.protocol.eve_policy, EvePolicy::Prob(0.3));
        assert_eq!(cfg.protocol.slot_seconds, 5.0);
        assert_eq!(cfg.optics, OpticsConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let err = SimConfig::from_json(r#"{"optics":{"wavelenth":5e-7}}"#).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("wavelenth"), "{message}");
        assert!(message.contains("line"), "{message}");
    }

    #[test]
    fn malformed_json_is_rejected() {
        assert!(SimConfig::from_json("{").is_err());
    }
}
