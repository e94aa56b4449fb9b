//! Pipeline configuration: a single JSON document with the top-level keys
//! `radars`, `room`, `bands`, `tracking`, `status`, `sync`, `fps` and
//! `background`. Every section except `radars` and `room` may be omitted and
//! falls back to its defaults.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{BandTable, EnergyBand};
use crate::model::{Interval, RadarPose, RoomBounds, StatusLabel, Triangular};
use crate::status::{BoxAspect, StatusPortrait};

const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config field `{field}`: {reason}")]
    Validation { field: String, reason: String },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Offending field name for validation failures.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Validation { field, .. } => Some(field),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub radars: Vec<RadarPose>,
    pub room: RoomBounds,
    pub bands: Vec<EnergyBand>,
    pub tracking: TrackingConfig,
    pub status: StatusConfig,
    pub sync: SyncConfig,
    pub fps: FpsConfig,
    pub background: BackgroundConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            radars: vec![
                RadarPose::new(1, [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]),
                RadarPose::new(2, [1.6, 2.1, 2.6], [-55.0, 0.0, 90.0]),
                RadarPose::new(3, [0.0, 2.1, 2.6], [-90.0, 0.0, 0.0]),
            ],
            room: RoomBounds::default(),
            bands: EnergyBand::default_table(),
            tracking: TrackingConfig::default(),
            status: StatusConfig::default(),
            sync: SyncConfig::default(),
            fps: FpsConfig::default(),
            background: BackgroundConfig::default(),
        }
    }
}

/// Association (probability matrix) and track lifecycle parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackingConfig {
    /// Weights of (C_pos, C_shape, E_pos, E_shape).
    pub coefficients: [f64; 4],
    /// Z-score beyond which a candidate is an outlier.
    pub z_cutoff: f64,
    /// Lower bound on the per-axis, per-tick centroid displacement deviation (m).
    pub position_sigma_floor: f64,
    /// Lower bound on the box edge-length deviation (m).
    pub shape_sigma_floor: f64,
    /// Number of recent displacements used for motion statistics.
    pub motion_history: usize,
    /// Number of recent clusters used for shape statistics.
    pub shape_history: usize,
    /// Centroid distance under which clusters count as the same person.
    pub neighbor_radius: f64,
    /// New-bin gate on the renormalised expectation score.
    pub spawn_gate: f64,
    /// Leftover clusters closer than this to an active bin never spawn a bin.
    pub spawn_exclusion_radius: f64,
    /// Consecutive assignments needed to confirm a tentative bin.
    pub confirm_hits: u32,
    /// Seconds without assignment before a confirmed bin is lost.
    pub timeout_s: f64,
    /// Expected human centroid height (m).
    pub expected_centroid_z: Triangular,
    /// Expected human bounding-box height (m).
    pub expected_box_height: Triangular,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        Self {
            coefficients: [0.3, 0.3, 0.2, 0.2],
            z_cutoff: 3.0,
            position_sigma_floor: 0.06,
            shape_sigma_floor: 0.4,
            motion_history: 10,
            shape_history: 5,
            neighbor_radius: 0.5,
            spawn_gate: 0.5,
            spawn_exclusion_radius: 0.8,
            confirm_hits: 5,
            timeout_s: 3.0,
            expected_centroid_z: Triangular::new(0.1, 0.9, 1.3),
            expected_box_height: Triangular::new(0.3, 1.5, 2.7),
        }
    }
}

/// Status classification, blur window and posture estimation parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StatusConfig {
    /// Weights of (E_pos, E_shape).
    pub coefficients: [f64; 2],
    pub blur_length: usize,
    /// Centroid-height membership reaches zero this far from a portrait height.
    pub height_half_width: f64,
    /// z-extent / horizontal-extent ratio above which a box is tall.
    pub tall_ratio: f64,
    /// Ratio below which a box is flat.
    pub flat_ratio: f64,
    pub portraits: Vec<StatusPortrait>,
    /// Seconds of post-fall accumulation before a posture report.
    pub posture_horizon_s: f64,
    pub posture_min_points: usize,
    pub posture_histogram_bin: f64,
}

impl Default for StatusConfig {
    fn default() -> Self {
        Self {
            coefficients: [0.7, 0.3],
            blur_length: 20,
            height_half_width: 0.45,
            tall_ratio: 1.2,
            flat_ratio: 0.8,
            portraits: vec![
                StatusPortrait {
                    label: StatusLabel::Standing,
                    centroid_height: 1.0,
                    aspect: BoxAspect::Tall,
                    extents: [0.5, 0.4, 1.7],
                },
                StatusPortrait {
                    label: StatusLabel::Sitting,
                    centroid_height: 0.6,
                    aspect: BoxAspect::Neutral,
                    extents: [0.6, 0.8, 1.2],
                },
                StatusPortrait {
                    label: StatusLabel::Fallen,
                    centroid_height: 0.2,
                    aspect: BoxAspect::Flat,
                    extents: [1.7, 0.5, 0.4],
                },
            ],
            posture_horizon_s: 30.0,
            posture_min_points: 50,
            posture_histogram_bin: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyncConfig {
    /// Merge window length in seconds.
    pub window_s: f64,
    /// Number of merged windows per frame group.
    pub group_length: usize,
    /// Per-radar ingress buffer capacity (packets). Live and paced feeds drop
    /// the oldest packet on overflow; as-fast-as-possible replay blocks instead.
    pub fifo_capacity: usize,
    /// Wall-clock grace, in window lengths, before an open window is force-closed.
    pub grace_windows: f64,
    /// Emit a sync statistics record every this many windows.
    pub stats_every: u64,
}

impl Default for SyncConfig {
    fn default() -> Self {
        Self {
            window_s: 0.05,
            group_length: 10,
            fifo_capacity: 3,
            grace_windows: 2.0,
            stats_every: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FpsConfig {
    pub working: f64,
    pub standby: f64,
    /// Seconds without a confirmed track before entering standby.
    pub standby_delay_s: f64,
}

impl Default for FpsConfig {
    fn default() -> Self {
        Self {
            working: 20.0,
            standby: 1.0,
            standby_delay_s: 30.0,
        }
    }
}

impl FpsConfig {
    /// Windows per processed window in standby mode.
    pub fn standby_stride(&self) -> u64 {
        (self.working / self.standby).round().max(1.0) as u64
    }
}

/// Boundary/energy/speed gate and background voxel grid parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackgroundConfig {
    pub min_energy: f64,
    /// Accepted radial speed magnitude band (m/s).
    pub speed_band: Interval,
    pub voxel_edge: f64,
    /// Trailing window over which noise persistence is measured.
    pub persistence_window_s: f64,
    /// Fraction of ticks in the window a voxel must be seen to be background.
    pub persistence_ratio: f64,
    /// Voxels unseen for this long are forgotten.
    pub decay_horizon_s: f64,
}

impl Default for BackgroundConfig {
    fn default() -> Self {
        Self {
            min_energy: 30.0,
            speed_band: Interval::new(0.0, 8.0),
            voxel_edge: 0.2,
            persistence_window_s: 15.0,
            persistence_ratio: 0.9,
            decay_horizon_s: 60.0,
        }
    }
}

impl PipelineConfig {
    /// Parse and validate a JSON document.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: PipelineConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Ticks per second of the merge clock.
    pub fn ticks_per_second(&self) -> f64 {
        1.0 / self.sync.window_s
    }

    /// Convert a duration to whole ticks (at least one).
    pub fn seconds_to_ticks(&self, seconds: f64) -> u64 {
        (seconds / self.sync.window_s).round().max(1.0) as u64
    }

    pub fn band_table(&self) -> BandTable {
        BandTable::new(self.bands.clone()).expect("validated band table")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.radars.is_empty() {
            return Err(ConfigError::invalid(
                "radars",
                "at least one radar is required",
            ));
        }
        let mut ids = HashSet::new();
        for (i, pose) in self.radars.iter().enumerate() {
            if !ids.insert(pose.radar_id) {
                return Err(ConfigError::invalid(
                    format!("radars[{i}].radar_id"),
                    format!("duplicate radar id {}", pose.radar_id),
                ));
            }
            if pose.radar_id >= 64 {
                return Err(ConfigError::invalid(
                    format!("radars[{i}].radar_id"),
                    "radar ids must be below 64",
                ));
            }
            if pose.position.iter().any(|v| !v.is_finite()) {
                return Err(ConfigError::invalid(
                    format!("radars[{i}].position"),
                    "must be finite",
                ));
            }
            if pose
                .rotation
                .iter()
                .any(|a| !a.is_finite() || *a < -180.0 || *a > 180.0)
            {
                return Err(ConfigError::invalid(
                    format!("radars[{i}].rotation"),
                    "angles must lie in [-180, 180] degrees",
                ));
            }
        }

        for (name, iv) in [
            ("room.x", self.room.x),
            ("room.y", self.room.y),
            ("room.z", self.room.z),
        ] {
            if iv.is_empty() || !iv.low.is_finite() || !iv.high.is_finite() {
                return Err(ConfigError::invalid(
                    name,
                    "interval must be finite and nonempty",
                ));
            }
        }
        if self.room.z.low < 0.0 {
            return Err(ConfigError::invalid(
                "room.z",
                "floor must be at or above 0",
            ));
        }

        BandTable::new(self.bands.clone())
            .map_err(|e| ConfigError::invalid(e.field(), e.to_string()))?;

        let t = &self.tracking;
        check_sum("tracking.coefficients", &t.coefficients)?;
        positive("tracking.z_cutoff", t.z_cutoff)?;
        positive("tracking.position_sigma_floor", t.position_sigma_floor)?;
        positive("tracking.shape_sigma_floor", t.shape_sigma_floor)?;
        positive("tracking.neighbor_radius", t.neighbor_radius)?;
        positive("tracking.timeout_s", t.timeout_s)?;
        if t.spawn_exclusion_radius < 0.0 {
            return Err(ConfigError::invalid(
                "tracking.spawn_exclusion_radius",
                "must be >= 0",
            ));
        }
        if t.confirm_hits == 0 {
            return Err(ConfigError::invalid(
                "tracking.confirm_hits",
                "must be >= 1",
            ));
        }
        if t.motion_history == 0 || t.shape_history == 0 {
            return Err(ConfigError::invalid(
                "tracking.motion_history",
                "history lengths must be >= 1",
            ));
        }
        if !t.expected_centroid_z.is_valid() {
            return Err(ConfigError::invalid(
                "tracking.expected_centroid_z",
                "need low <= peak <= high",
            ));
        }
        if !t.expected_box_height.is_valid() {
            return Err(ConfigError::invalid(
                "tracking.expected_box_height",
                "need low <= peak <= high",
            ));
        }

        let s = &self.status;
        check_sum("status.coefficients", &s.coefficients)?;
        if s.blur_length == 0 {
            return Err(ConfigError::invalid("status.blur_length", "must be >= 1"));
        }
        positive("status.height_half_width", s.height_half_width)?;
        if !(s.flat_ratio > 0.0 && s.flat_ratio <= s.tall_ratio) {
            return Err(ConfigError::invalid(
                "status.flat_ratio",
                "need 0 < flat_ratio <= tall_ratio",
            ));
        }
        for label in StatusLabel::ALL {
            let n = s.portraits.iter().filter(|p| p.label == label).count();
            if n != 1 {
                return Err(ConfigError::invalid(
                    "status.portraits",
                    format!("expected exactly one portrait for {label}, found {n}"),
                ));
            }
        }
        if s.portraits.iter().any(|p| !(p.centroid_height > 0.0)) {
            return Err(ConfigError::invalid(
                "status.portraits",
                "portrait heights must be positive",
            ));
        }
        positive("status.posture_horizon_s", s.posture_horizon_s)?;
        positive("status.posture_histogram_bin", s.posture_histogram_bin)?;

        positive("sync.window_s", self.sync.window_s)?;
        if self.sync.group_length == 0 {
            return Err(ConfigError::invalid("sync.group_length", "must be >= 1"));
        }
        if self.sync.fifo_capacity == 0 {
            return Err(ConfigError::invalid("sync.fifo_capacity", "must be >= 1"));
        }
        positive("sync.grace_windows", self.sync.grace_windows)?;
        if self.sync.stats_every == 0 {
            return Err(ConfigError::invalid("sync.stats_every", "must be >= 1"));
        }

        positive("fps.working", self.fps.working)?;
        positive("fps.standby", self.fps.standby)?;
        if self.fps.standby > self.fps.working {
            return Err(ConfigError::invalid(
                "fps.standby",
                "standby rate cannot exceed the working rate",
            ));
        }
        if self.fps.standby_delay_s < 0.0 {
            return Err(ConfigError::invalid("fps.standby_delay_s", "must be >= 0"));
        }

        let b = &self.background;
        if !(b.min_energy >= 0.0) {
            return Err(ConfigError::invalid(
                "background.min_energy",
                "must be >= 0",
            ));
        }
        if b.speed_band.is_empty() || b.speed_band.low < 0.0 {
            return Err(ConfigError::invalid(
                "background.speed_band",
                "need 0 <= low <= high",
            ));
        }
        positive("background.voxel_edge", b.voxel_edge)?;
        positive("background.persistence_window_s", b.persistence_window_s)?;
        if !(b.persistence_ratio > 0.0 && b.persistence_ratio <= 1.0) {
            return Err(ConfigError::invalid(
                "background.persistence_ratio",
                "must lie in (0, 1]",
            ));
        }
        positive("background.decay_horizon_s", b.decay_horizon_s)?;
        Ok(())
    }
}

fn check_sum(field: &str, coeffs: &[f64]) -> Result<(), ConfigError> {
    if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(ConfigError::invalid(
            field,
            "coefficients must be finite and non-negative",
        ));
    }
    let sum: f64 = coeffs.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(ConfigError::invalid(
            field,
            format!("coefficients sum to {sum}, expected 1"),
        ));
    }
    Ok(())
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(
            field,
            format!("must be positive, got {v}"),
        ))
    }
}

/// Read, parse and validate a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<PipelineConfig, ConfigError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    PipelineConfig::from_json(&text)
}

pub fn save_config(cfg: &PipelineConfig, path: impl AsRef<Path>) -> Result<(), ConfigError> {
    let path = path.as_ref();
    fs::write(path, cfg.to_json()).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.radars[1].position, [1.6, 2.1, 2.6]);
        assert_eq!(cfg.radars[1].rotation, [-55.0, 0.0, 90.0]);
        assert_eq!(cfg.radars[2].rotation, [-90.0, 0.0, 0.0]);
        assert_eq!(cfg.tracking.coefficients, [0.3, 0.3, 0.2, 0.2]);
        assert_eq!(cfg.status.coefficients, [0.7, 0.3]);
        assert_eq!(cfg.status.blur_length, 20);
        assert_eq!(cfg.fps.standby_stride(), 20);
    }

    #[test]
    fn json_roundtrip_and_file_io() {
        let cfg = PipelineConfig::default();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        save_config(&cfg, &path).unwrap();
        let back = load_config(&path).unwrap();
        assert_eq!(back, cfg);
        let reparsed = PipelineConfig::from_json(&back.to_json()).unwrap();
        assert_eq!(reparsed, cfg);
    }

    #[test]
    fn top_level_keys_match_schema() {
        let v: serde_json::Value =
            serde_json::from_str(&PipelineConfig::default().to_json()).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "background",
                "bands",
                "fps",
                "radars",
                "room",
                "status",
                "sync",
                "tracking"
            ]
        );
    }

    #[test]
    fn partial_document_uses_defaults() {
        let cfg = PipelineConfig::from_json(r#"{"sync": {"window_s": 0.1}}"#).unwrap();
        assert_eq!(cfg.sync.window_s, 0.1);
        assert_eq!(cfg.sync.group_length, 10);
        assert_eq!(cfg.radars.len(), 3);
    }

    #[test]
    fn overlapping_bands_rejected() {
        let cfg = PipelineConfig {
            bands: vec![
                EnergyBand::new(0.0, Some(200.0), 0.5, 10),
                EnergyBand::new(200.0, Some(300.0), 0.7, 3),
                EnergyBand::new(250.0, Some(400.0), 1.0, 2),
                EnergyBand::new(400.0, None, 1.0, 2),
            ],
            ..PipelineConfig::default()
        };
        let err = cfg.validate().unwrap_err();
        assert!(err.field().unwrap().starts_with("bands"), "{err}");
    }

    #[test]
    fn coefficient_sum_checked() {
        let mut cfg = PipelineConfig::default();
        cfg.tracking.coefficients = [0.3, 0.3, 0.2, 0.3];
        assert_eq!(
            cfg.validate().unwrap_err().field(),
            Some("tracking.coefficients")
        );
        let mut cfg = PipelineConfig::default();
        cfg.status.coefficients = [0.7, 0.31];
        assert_eq!(
            cfg.validate().unwrap_err().field(),
            Some("status.coefficients")
        );
    }

    #[test]
    fn validation_names_field() {
        let mut cfg = PipelineConfig::default();
        cfg.radars[2].radar_id = 1;
        assert_eq!(
            cfg.validate().unwrap_err().field(),
            Some("radars[2].radar_id")
        );

        let mut cfg = PipelineConfig::default();
        cfg.radars[0].rotation[2] = 190.0;
        assert_eq!(
            cfg.validate().unwrap_err().field(),
            Some("radars[0].rotation")
        );

        let mut cfg = PipelineConfig::default();
        cfg.sync.group_length = 0;
        assert_eq!(
            cfg.validate().unwrap_err().field(),
            Some("sync.group_length")
        );

        let mut cfg = PipelineConfig::default();
        cfg.sync.window_s = 0.0;
        assert_eq!(cfg.validate().unwrap_err().field(), Some("sync.window_s"));

        let mut cfg = PipelineConfig::default();
        cfg.room.z = Interval::new(-0.5, 2.0);
        assert_eq!(cfg.validate().unwrap_err().field(), Some("room.z"));
    }

    #[test]
    fn malformed_text_is_parse_error() {
        assert!(matches!(
            PipelineConfig::from_json("{ radars: "),
            Err(ConfigError::Parse(_))
        ));
        assert!(matches!(
            load_config("/nonexistent/cfg.json"),
            Err(ConfigError::Io { .. })
        ));
    }
}
