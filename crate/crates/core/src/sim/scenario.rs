//! Declarative description of a synthetic environment, loadable from TOML.
//!
//! ```toml
//! duration_s = 60.0
//! sample_rate_hz = 100.0
//! carrier_hz = 5.68e9
//! noise_snr_db = 10.0          # or "none"
//! phase_offset = "per-packet-random"
//! seed = 7
//!
//! [[static_paths]]
//! length_m = 1.5
//! attenuation = 1.0
//!
//! [chest]
//! rate_bpm = 15.0
//! base_path_length_m = 2.2
//! attenuation = 0.3
//! apnea_intervals = [[20.0, 45.0]]
//! ```

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 100.0;
/// Channel used by the pose transceivers.
pub const POSE_CARRIER_HZ: f64 = 5.28e9;
/// Channel used by the respiration transceivers.
pub const RESPIRATION_CARRIER_HZ: f64 = 5.68e9;

pub const MIN_RATE_BPM: f64 = 10.0;
pub const MAX_RATE_BPM: f64 = 37.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseOffset {
    #[default]
    None,
    /// A uniform random phase per packet, common to all antennas and subcarriers.
    PerPacketRandom,
}

/// A time-invariant propagation path (LoS, wall or furniture reflection).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticPath {
    pub length_m: f64,
    pub attenuation: f64,
    /// Arrival angle relative to the array broadside, in degrees.
    #[serde(default)]
    pub aoa_deg: f64,
}

/// A point reflector moving back and forth between two positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MovingReflector {
    pub start_xy_m: [f64; 2],
    pub end_xy_m: [f64; 2],
    pub speed_mps: f64,
    pub attenuation: f64,
    pub tx_xy_m: [f64; 2],
    pub rx_xy_m: [f64; 2],
}

/// A breathing chest: a reflection path whose length follows a sinusoid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChestModel {
    pub rate_bpm: f64,
    #[serde(default = "default_displacement")]
    pub displacement_amp_m: f64,
    pub base_path_length_m: f64,
    pub attenuation: f64,
    #[serde(default)]
    pub aoa_deg: f64,
    /// Breathing phase at t = 0, in radians.
    #[serde(default)]
    pub phase_rad: f64,
    /// Breath-hold periods `[start_s, end_s]`.
    #[serde(default)]
    pub apnea_intervals: Vec<[f64; 2]>,
}

fn default_displacement() -> f64 {
    0.005
}

fn default_sample_rate() -> f64 {
    DEFAULT_SAMPLE_RATE_HZ
}

fn default_carrier() -> f64 {
    POSE_CARRIER_HZ
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub duration_s: f64,
    #[serde(default = "default_sample_rate")]
    pub sample_rate_hz: f64,
    #[serde(default = "default_carrier")]
    pub carrier_hz: f64,
    pub static_paths: Vec<StaticPath>,
    #[serde(default)]
    pub reflectors: Vec<MovingReflector>,
    #[serde(default)]
    pub chest: Option<ChestModel>,
    #[serde(
        default,
        deserialize_with = "snr_de",
        serialize_with = "snr_ser"
    )]
    pub noise_snr_db: Option<f64>,
    #[serde(default)]
    pub phase_offset: PhaseOffset,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub label: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SnrRepr {
    Db(f64),
    Word(String),
}

fn snr_de<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
    match SnrRepr::deserialize(d)? {
        SnrRepr::Db(v) => Ok(Some(v)),
        SnrRepr::Word(w) if w.eq_ignore_ascii_case("none") => Ok(None),
        SnrRepr::Word(w) => Err(serde::de::Error::custom(format!(
            "noise_snr_db must be a number or \"none\", got {w:?}"
        ))),
    }
}

fn snr_ser<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(db) => s.serialize_f64(*db),
        None => s.serialize_str("none"),
    }
}

impl Scenario {
    /// A noiseless, offset-free scenario with a single line-of-sight path.
    pub fn line_of_sight(duration_s: f64, los_length_m: f64) -> Self {
        Self {
            duration_s,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            carrier_hz: POSE_CARRIER_HZ,
            static_paths: vec![StaticPath {
                length_m: los_length_m,
                attenuation: 1.0,
                aoa_deg: 0.0,
            }],
            reflectors: Vec::new(),
            chest: None,
            noise_snr_db: None,
            phase_offset: PhaseOffset::None,
            seed: 0,
            label: String::new(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn frame_count(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Scenario(msg));
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad(format!("duration_s = {} must be positive", self.duration_s));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return bad(format!(
                "sample_rate_hz = {} must be positive",
                self.sample_rate_hz
            ));
        }
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return bad(format!("carrier_hz = {} must be positive", self.carrier_hz));
        }
        if self.frame_count() == 0 {
            return bad("scenario produces no frames".into());
        }
        if self.static_paths.is_empty() {
            return bad("at least one static (line-of-sight) path is required".into());
        }
        for (i, p) in self.static_paths.iter().enumerate() {
            if !(p.length_m.is_finite() && p.length_m > 0.0) {
                return bad(format!("static path {i}: length must be positive"));
            }
            if !(p.attenuation.is_finite() && p.attenuation >= 0.0) {
                return bad(format!("static path {i}: attenuation must be >= 0"));
            }
        }
        for (i, r) in self.reflectors.iter().enumerate() {
            if !(r.speed_mps.is_finite() && r.speed_mps >= 0.0) {
                return bad(format!("reflector {i}: speed must be >= 0"));
            }
            if !(r.attenuation.is_finite() && r.attenuation >= 0.0) {
                return bad(format!("reflector {i}: attenuation must be >= 0"));
            }
            let coords = [r.start_xy_m, r.end_xy_m, r.tx_xy_m, r.rx_xy_m];
            if coords.iter().flatten().any(|c| !c.is_finite()) {
                return bad(format!("reflector {i}: non-finite coordinate"));
            }
        }
        if let Some(chest) = &self.chest {
            if !(MIN_RATE_BPM..=MAX_RATE_BPM).contains(&chest.rate_bpm) {
                return bad(format!(
                    "chest rate {} bpm outside [{MIN_RATE_BPM}, {MAX_RATE_BPM}]",
                    chest.rate_bpm
                ));
            }
            if !(chest.base_path_length_m.is_finite()
                && chest.base_path_length_m > chest.displacement_amp_m.abs())
            {
                return bad("chest path length must exceed the displacement amplitude".into());
            }
            if !(chest.attenuation.is_finite() && chest.attenuation >= 0.0) {
                return bad("chest attenuation must be >= 0".into());
            }
            if !chest.displacement_amp_m.is_finite() {
                return bad("chest displacement must be finite".into());
            }
            let mut intervals = chest.apnea_intervals.clone();
            intervals.sort_by(|a, b| a[0].total_cmp(&b[0]));
            for iv in &intervals {
                if !(0.0 <= iv[0] && iv[0] < iv[1] && iv[1] <= self.duration_s) {
                    return bad(format!(
                        "apnea interval {iv:?} must satisfy 0 <= start < end <= duration"
                    ));
                }
            }
            if intervals.windows(2).any(|w| w[1][0] < w[0][1]) {
                return bad("apnea intervals overlap".into());
            }
        }
        Ok(())
    }
}
