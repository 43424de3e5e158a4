//! Scenario files.
//!
//! A scenario is a TOML document with one table per subsystem. Every key is
//! optional; missing keys take the reference values returned by
//! [`default_scenario`]. Angles are given in degrees, unit and antenna
//! spacings in wavelengths, Ricean weights in dB.
//!
//! ```toml
//! [radio]
//! carrier_hz = 2.4e9
//! k_airs_db = 0.0
//! k_irs_db = 0.0
//!
//! [phase]
//! method = 4
//! bits = 2
//! ```
//!
//! Run `airs-sim print-defaults` for the complete schema.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::channel::{ScenarioConfig, SPEED_OF_LIGHT};
use crate::error::Error as ModelError;
use crate::fading::{AngleLaw, ClusterParams};
use crate::geometry::{
    AzimuthForm, MobileSpec, PanelMotion, RotationAngles, SceneGeometry, SurfacePanel, UlaSpec,
    Vec3,
};
use crate::phase::{PhaseDesign, PhaseMethod};
use crate::stats::AnalysisOptions;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

impl From<ModelError> for ConfigError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidParameter { name, reason } => ConfigError::Invalid {
                key: name.to_string(),
                reason,
            },
            other => ConfigError::Invalid {
                key: "scenario".into(),
                reason: other.to_string(),
            },
        }
    }
}

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Reference carrier, 2.4 GHz.
pub const DEFAULT_CARRIER_HZ: f64 = 2.4e9;

/// The reference scenario.
///
/// Values not fixed by the reference parameter list are artifact defaults:
/// Tx–Rx distance 200 m, Tx height 25 m, 2×2 arrays with half-wavelength
/// spacing, and 38.901-style cluster statistics (r_τ = 2.3, σ_τ = 363 ns,
/// ζ = 4 dB). The IRS is tilted: roll π/6.
pub fn default_scenario() -> ScenarioConfig {
    let lambda = SPEED_OF_LIGHT / DEFAULT_CARRIER_HZ;
    let panel = |anchor: Vec3, rotation: RotationAngles, motion: PanelMotion| SurfacePanel {
        units_h: 10,
        units_v: 10,
        unit_width: 0.5 * lambda,
        unit_height: 0.5 * lambda,
        rotation,
        anchor,
        motion,
    };
    ScenarioConfig {
        carrier_hz: DEFAULT_CARRIER_HZ,
        k_airs: 1.0,
        k_irs: 1.0,
        geometry: SceneGeometry {
            tx: UlaSpec {
                count: 2,
                spacing: 0.5 * lambda,
                azimuth: PI / 5.0,
                elevation: PI / 3.0,
            },
            rx: UlaSpec {
                count: 2,
                spacing: 0.5 * lambda,
                azimuth: PI / 3.0,
                elevation: PI / 12.0,
            },
            irs: panel(
                Vec3::new(100.0, 50.0, 10.0),
                RotationAngles {
                    pitch: PI / 2.0,
                    yaw: PI / 2.0,
                    roll: PI / 6.0,
                },
                PanelMotion::default(),
            ),
            airs: panel(
                Vec3::new(75.0, 75.0, 30.0),
                RotationAngles {
                    pitch: 0.0,
                    yaw: PI / 2.0,
                    roll: PI / 2.0,
                },
                PanelMotion {
                    speed: 5.0,
                    azimuth: PI / 10.0,
                    elevation: PI / 10.0,
                },
            ),
            rx_motion: MobileSpec {
                speed: 30.0,
                azimuth: PI / 6.0,
            },
            distance: 200.0,
            tx_height: 25.0,
            azimuth_form: AzimuthForm::TwoArgument,
        },
        clusters: ClusterParams {
            count: 16,
            rays: 20,
            delay_scaling: 2.3,
            delay_spread: 363e-9,
            shadowing_db: 4.0,
            angle: AngleLaw {
                mean: PI / 6.0,
                std_dev: PI / 18.0,
                low: PI / 12.0,
                high: PI / 3.0,
            },
            initial_range: 60.0,
        },
        phase: PhaseDesign {
            method: PhaseMethod::CoAligned,
            target: 0.0,
        },
        exclude_irs_path: false,
    }
}

/// A loaded scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub scenario: ScenarioConfig,
    pub analysis: AnalysisOptions,
    /// SHA-256 of the canonical (fully populated) file form.
    pub hash: String,
}

/// On-disk form. Every field has a default so partial files parse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub radio: RadioSection,
    pub tx: TxSection,
    pub rx: RxSection,
    pub irs: PanelSection,
    pub airs: PanelSection,
    pub clusters: ClusterSection,
    pub phase: PhaseSection,
    pub geometry: GeometrySection,
    pub analysis: AnalysisSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioSection {
    pub carrier_hz: f64,
    pub k_airs_db: f64,
    pub k_irs_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TxSection {
    pub antennas: usize,
    pub spacing_wavelengths: f64,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    /// H_BS, meters.
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RxSection {
    pub antennas: usize,
    pub spacing_wavelengths: f64,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    /// Horizontal Tx–Rx distance D, meters.
    pub distance: f64,
    pub speed: f64,
    pub direction_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PanelSection {
    pub units_h: usize,
    pub units_v: usize,
    pub unit_width_wavelengths: f64,
    pub unit_height_wavelengths: f64,
    /// x, y, height; meters.
    pub position: [f64; 3],
    pub pitch_deg: f64,
    pub yaw_deg: f64,
    pub roll_deg: f64,
    pub speed: f64,
    pub motion_azimuth_deg: f64,
    pub motion_elevation_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSection {
    pub count: usize,
    pub rays: usize,
    pub delay_scaling: f64,
    pub delay_spread_ns: f64,
    pub shadowing_db: f64,
    pub initial_range: f64,
    pub angle_mean_deg: f64,
    pub angle_std_deg: f64,
    pub angle_low_deg: f64,
    pub angle_high_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSection {
    /// 1 zero, 2 random, 3 co-aligned, 4 quantized co-aligned.
    pub method: u8,
    pub bits: u32,
    pub target_deg: f64,
    pub exclude_irs_path: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AzimuthFormKey {
    TwoArgument,
    Folded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub azimuth_form: AzimuthFormKey,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub fcf_bandwidth_hz: f64,
    pub fcf_points: usize,
    pub capacity_horizon_s: f64,
    pub capacity_time_points: usize,
    pub wideband_capacity: bool,
}

fn db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Degrees rounded to 1e-9 so that the reference angles print exactly.
fn degrees(radians: f64) -> f64 {
    (radians.to_degrees() * 1e9).round() / 1e9
}

fn panel_section(p: &SurfacePanel, lambda: f64) -> PanelSection {
    PanelSection {
        units_h: p.units_h,
        units_v: p.units_v,
        unit_width_wavelengths: p.unit_width / lambda,
        unit_height_wavelengths: p.unit_height / lambda,
        position: [p.anchor.x, p.anchor.y, p.anchor.z],
        pitch_deg: degrees(p.rotation.pitch),
        yaw_deg: degrees(p.rotation.yaw),
        roll_deg: degrees(p.rotation.roll),
        speed: p.motion.speed,
        motion_azimuth_deg: degrees(p.motion.azimuth),
        motion_elevation_deg: degrees(p.motion.elevation),
    }
}

impl ConfigFile {
    /// File form of a scenario.
    pub fn from_scenario(c: &ScenarioConfig, a: &AnalysisOptions) -> Self {
        let lambda = c.wavelength();
        let g = &c.geometry;
        let (method, bits) = match c.phase.method {
            PhaseMethod::Quantized { bits } => (4, bits),
            m => (m.number(), 2),
        };
        ConfigFile {
            radio: RadioSection {
                carrier_hz: c.carrier_hz,
                k_airs_db: db(c.k_airs),
                k_irs_db: db(c.k_irs),
            },
            tx: TxSection {
                antennas: g.tx.count,
                spacing_wavelengths: g.tx.spacing / lambda,
                azimuth_deg: degrees(g.tx.azimuth),
                elevation_deg: degrees(g.tx.elevation),
                height: g.tx_height,
            },
            rx: RxSection {
                antennas: g.rx.count,
                spacing_wavelengths: g.rx.spacing / lambda,
                azimuth_deg: degrees(g.rx.azimuth),
                elevation_deg: degrees(g.rx.elevation),
                distance: g.distance,
                speed: g.rx_motion.speed,
                direction_deg: degrees(g.rx_motion.azimuth),
            },
            irs: panel_section(&g.irs, lambda),
            airs: panel_section(&g.airs, lambda),
            clusters: ClusterSection {
                count: c.clusters.count,
                rays: c.clusters.rays,
                delay_scaling: c.clusters.delay_scaling,
                delay_spread_ns: c.clusters.delay_spread * 1e9,
                shadowing_db: c.clusters.shadowing_db,
                initial_range: c.clusters.initial_range,
                angle_mean_deg: degrees(c.clusters.angle.mean),
                angle_std_deg: degrees(c.clusters.angle.std_dev),
                angle_low_deg: degrees(c.clusters.angle.low),
                angle_high_deg: degrees(c.clusters.angle.high),
            },
            phase: PhaseSection {
                method,
                bits,
                target_deg: degrees(c.phase.target),
                exclude_irs_path: c.exclude_irs_path,
            },
            geometry: GeometrySection {
                azimuth_form: match g.azimuth_form {
                    AzimuthForm::TwoArgument => AzimuthFormKey::TwoArgument,
                    AzimuthForm::Folded => AzimuthFormKey::Folded,
                },
            },
            analysis: AnalysisSection {
                fcf_bandwidth_hz: a.fcf_bandwidth_hz,
                fcf_points: a.fcf_points,
                capacity_horizon_s: a.capacity_horizon_s,
                capacity_time_points: a.capacity_time_points,
                wideband_capacity: a.wideband_capacity,
            },
        }
    }

    /// Converts to model types and validates every key.
    pub fn resolve(&self) -> Result<(ScenarioConfig, AnalysisOptions), ConfigError> {
        let r = &self.radio;
        if !(r.carrier_hz > 0.0) || !r.carrier_hz.is_finite() {
            return Err(bad("radio.carrier_hz", "must be positive"));
        }
        let lambda = SPEED_OF_LIGHT / r.carrier_hz;
        for (key, v) in [("radio.k_airs_db", r.k_airs_db), ("radio.k_irs_db", r.k_irs_db)] {
            if !v.is_finite() {
                return Err(bad(key, "must be finite"));
            }
        }
        let ula = |count: usize, spacing: f64, az: f64, el: f64, s: &str| -> Result<UlaSpec, ConfigError> {
            if count == 0 {
                return Err(bad(&format!("{s}.antennas"), "must be at least 1"));
            }
            if !(spacing > 0.0) {
                return Err(bad(&format!("{s}.spacing_wavelengths"), "must be positive"));
            }
            Ok(UlaSpec {
                count,
                spacing: spacing * lambda,
                azimuth: az.to_radians(),
                elevation: el.to_radians(),
            })
        };
        let tx = ula(
            self.tx.antennas,
            self.tx.spacing_wavelengths,
            self.tx.azimuth_deg,
            self.tx.elevation_deg,
            "tx",
        )?;
        let rx = ula(
            self.rx.antennas,
            self.rx.spacing_wavelengths,
            self.rx.azimuth_deg,
            self.rx.elevation_deg,
            "rx",
        )?;
        let irs = resolve_panel(&self.irs, "irs", lambda)?;
        if irs.motion.speed != 0.0 {
            return Err(bad("irs.speed", "the terrestrial IRS is static; must be 0"));
        }
        let airs = resolve_panel(&self.airs, "airs", lambda)?;
        for (key, warn) in [
            ("irs", irs.unit_size_warning(lambda)),
            ("airs", airs.unit_size_warning(lambda)),
        ] {
            if let Some(w) = warn {
                log::warn!("{key}: {w}");
            }
        }
        if !(self.rx.distance > 0.0) {
            return Err(bad("rx.distance", "must be positive"));
        }
        if !(self.rx.speed >= 0.0) {
            return Err(bad("rx.speed", "must be non-negative"));
        }
        if !self.tx.height.is_finite() {
            return Err(bad("tx.height", "must be finite"));
        }
        let c = &self.clusters;
        if !(c.delay_spread_ns > 0.0) {
            return Err(bad("clusters.delay_spread_ns", "must be positive"));
        }
        let method = PhaseMethod::from_number(self.phase.method, self.phase.bits).map_err(|e| match e {
            ModelError::InvalidParameter { name, reason } => bad(name, reason),
            other => bad("phase.method", other.to_string()),
        })?;
        let target = self.phase.target_deg.to_radians();
        if !(0.0..2.0 * PI).contains(&target) {
            return Err(bad("phase.target_deg", "must lie in [0, 360)"));
        }
        let scenario = ScenarioConfig {
            carrier_hz: r.carrier_hz,
            k_airs: 10f64.powf(r.k_airs_db / 10.0),
            k_irs: 10f64.powf(r.k_irs_db / 10.0),
            geometry: SceneGeometry {
                tx,
                rx,
                irs,
                airs,
                rx_motion: MobileSpec {
                    speed: self.rx.speed,
                    azimuth: self.rx.direction_deg.to_radians(),
                },
                distance: self.rx.distance,
                tx_height: self.tx.height,
                azimuth_form: match self.geometry.azimuth_form {
                    AzimuthFormKey::TwoArgument => AzimuthForm::TwoArgument,
                    AzimuthFormKey::Folded => AzimuthForm::Folded,
                },
            },
            clusters: ClusterParams {
                count: c.count,
                rays: c.rays,
                delay_scaling: c.delay_scaling,
                delay_spread: c.delay_spread_ns * 1e-9,
                shadowing_db: c.shadowing_db,
                angle: AngleLaw {
                    mean: c.angle_mean_deg.to_radians(),
                    std_dev: c.angle_std_deg.to_radians(),
                    low: c.angle_low_deg.to_radians(),
                    high: c.angle_high_deg.to_radians(),
                },
                initial_range: c.initial_range,
            },
            phase: PhaseDesign { method, target },
            exclude_irs_path: self.phase.exclude_irs_path,
        };
        scenario.validate()?;
        let a = &self.analysis;
        let analysis = AnalysisOptions {
            fcf_bandwidth_hz: a.fcf_bandwidth_hz,
            fcf_points: a.fcf_points,
            capacity_horizon_s: a.capacity_horizon_s,
            capacity_time_points: a.capacity_time_points,
            wideband_capacity: a.wideband_capacity,
        };
        analysis.validate().map_err(ConfigError::from)?;
        Ok((scenario, analysis))
    }

    /// SHA-256 over the canonical TOML form.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

fn resolve_panel(p: &PanelSection, s: &str, lambda: f64) -> Result<SurfacePanel, ConfigError> {
    if p.units_h == 0 {
        return Err(bad(&format!("{s}.units_h"), "must be at least 1"));
    }
    if p.units_v == 0 {
        return Err(bad(&format!("{s}.units_v"), "must be at least 1"));
    }
    if !(p.unit_width_wavelengths > 0.0) {
        return Err(bad(&format!("{s}.unit_width_wavelengths"), "must be positive"));
    }
    if !(p.unit_height_wavelengths > 0.0) {
        return Err(bad(&format!("{s}.unit_height_wavelengths"), "must be positive"));
    }
    if !(p.speed >= 0.0) {
        return Err(bad(&format!("{s}.speed"), "must be non-negative"));
    }
    for (k, v) in [("pitch_deg", p.pitch_deg), ("yaw_deg", p.yaw_deg), ("roll_deg", p.roll_deg)] {
        if !(-180.0..180.0).contains(&v) {
            return Err(bad(&format!("{s}.{k}"), "must lie in [-180, 180)"));
        }
    }
    Ok(SurfacePanel {
        units_h: p.units_h,
        units_v: p.units_v,
        unit_width: p.unit_width_wavelengths * lambda,
        unit_height: p.unit_height_wavelengths * lambda,
        rotation: RotationAngles {
            pitch: p.pitch_deg.to_radians(),
            yaw: p.yaw_deg.to_radians(),
            roll: p.roll_deg.to_radians(),
        },
        anchor: Vec3::new(p.position[0], p.position[1], p.position[2]),
        motion: PanelMotion {
            speed: p.speed,
            azimuth: p.motion_azimuth_deg.to_radians(),
            elevation: p.motion_elevation_deg.to_radians(),
        },
    })
}

impl Default for ConfigFile {
    fn default() -> Self {
        ConfigFile::from_scenario(&default_scenario(), &AnalysisOptions::default())
    }
}

macro_rules! section_default {
    ($ty:ident, $field:ident) => {
        impl Default for $ty {
            fn default() -> Self {
                ConfigFile::default().$field
            }
        }
    };
}

section_default!(RadioSection, radio);
section_default!(TxSection, tx);
section_default!(RxSection, rx);
section_default!(ClusterSection, clusters);
section_default!(PhaseSection, phase);
section_default!(GeometrySection, geometry);
section_default!(AnalysisSection, analysis);

impl Default for PanelSection {
    /// The AIRS defaults; the `irs` table is filled from the IRS defaults
    /// by [`parse_config`].
    fn default() -> Self {
        ConfigFile::default().airs
    }
}

/// Parses a scenario document.
pub fn parse_config(text: &str) -> Result<LoadedConfig, ConfigError> {
    let file = parse_file(text)?;
    let (scenario, analysis) = file.resolve()?;
    Ok(LoadedConfig {
        scenario,
        analysis,
        hash: file.hash(),
    })
}

/// Parses the document into its file form; absent keys keep their
/// defaults, per table.
pub fn parse_file(text: &str) -> Result<ConfigFile, ConfigError> {
    let value: toml::Table = toml::from_str(text).map_err(|e| parse_error(text, &e))?;
    // Start from the defaults and overlay what the document sets, so that
    // a partial `[irs]` table keeps the IRS (not AIRS) defaults.
    let mut merged = toml::Table::try_from(ConfigFile::default()).expect("defaults serialize");
    for (section, v) in value {
        match (merged.get_mut(&section), v) {
            (Some(toml::Value::Table(base)), toml::Value::Table(overlay)) => {
                for (k, x) in overlay {
                    base.insert(k, x);
                }
            }
            (_, v) => {
                merged.insert(section, v);
            }
        }
    }
    let doc = toml::to_string(&merged).expect("table serializes");
    toml::from_str::<ConfigFile>(&doc).map_err(|e| {
        // re-parse errors refer to the merged document; report the key
        ConfigError::Parse {
            line: 0,
            column: 0,
            message: e.message().to_string(),
        }
    })
}

fn parse_error(text: &str, e: &toml::de::Error) -> ConfigError {
    let (line, column) = match e.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
            (line, column)
        }
        None => (0, 0),
    };
    ConfigError::Parse {
        line,
        column,
        message: e.message().to_string(),
    }
}

/// Reads and validates a scenario file.
pub fn load_config(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}
