//! Scenario scripts: actors with waypoints, status cues and body templates,
//! plus the radar sampling profile.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::body::{default_regions, BodyTemplate, Pose, RegionProfile};
use crate::config::PipelineConfig;
use crate::geometry::FieldOfView;
use crate::model::{RadarPose, RoomBounds, StatusLabel};

#[derive(Debug, Error, PartialEq)]
pub enum ScriptError {
    #[error("actor {actor} at t={t} s: {reason}")]
    Actor { actor: u32, t: f64, reason: String },
    #[error("scenario field `{field}`: {reason}")]
    Scenario { field: String, reason: String },
}

impl ScriptError {
    fn actor(actor: u32, t: f64, reason: impl Into<String>) -> Self {
        ScriptError::Actor {
            actor,
            t,
            reason: reason.into(),
        }
    }

    fn field(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ScriptError::Scenario {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioLoadError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Script(#[from] ScriptError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

/// What an actor does from a cue onwards.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status")]
pub enum StatusAction {
    Standing,
    Sitting,
    /// Already on the ground.
    Fallen {
        #[serde(default)]
        heading: Option<f64>,
    },
    /// Fall from the current pose to lying over `duration` seconds.
    Fall {
        duration: f64,
        /// Degrees from +x; defaults to the walking direction.
        #[serde(default)]
        heading: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatusCue {
    pub t: f64,
    #[serde(flatten)]
    pub action: StatusAction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActorScript {
    pub id: u32,
    pub waypoints: Vec<Waypoint>,
    #[serde(default)]
    pub status: Vec<StatusCue>,
    #[serde(default)]
    pub body: BodyTemplate,
    /// Time the actor leaves the scene; present until the end by default.
    #[serde(default)]
    pub leave: Option<f64>,
}

/// Low-energy persistent emitter (fan, curtain, furniture edge).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClutterSource {
    pub position: [f64; 3],
    /// Mean points per frame per radar.
    pub rate: f64,
    pub energy: f64,
    /// Gaussian spread in meters.
    pub spread: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimProfile {
    /// Field of view used for radars without an entry in `fields_of_view`.
    pub field_of_view: FieldOfView,
    pub fields_of_view: BTreeMap<u32, FieldOfView>,
    /// Mean body points per frame per radar while moving.
    pub moving_rate: f64,
    /// Mean body points per frame per radar while still.
    pub stationary_rate: f64,
    pub stationary_energy_scale: f64,
    /// Ground speed (m/s) below which an actor counts as still.
    pub moving_threshold: f64,
    /// Legs, abdomen, chest, head.
    pub regions: [RegionProfile; 4],
    /// Position noise per point, meters.
    pub jitter: f64,
    /// Radial speed noise, m/s.
    pub speed_noise: f64,
    pub range_resolution: f64,
    pub clutter: Vec<ClutterSource>,
    /// Mean uniformly scattered noise points per frame per radar.
    pub ambient_rate: f64,
    pub drop_probability: f64,
    pub corrupt_probability: f64,
    pub frame_rate: f64,
    /// Upper bound on the random producer timestamp delay, microseconds.
    pub timestamp_jitter_us: u64,
}

impl Default for SimProfile {
    fn default() -> Self {
        Self {
            field_of_view: FieldOfView::default(),
            fields_of_view: BTreeMap::new(),
            moving_rate: 25.0,
            stationary_rate: 6.0,
            stationary_energy_scale: 0.75,
            moving_threshold: 0.1,
            regions: default_regions(),
            jitter: 0.05,
            speed_noise: 0.05,
            range_resolution: 0.0375,
            clutter: vec![ClutterSource {
                position: [1.7, 3.9, 0.5],
                rate: 0.5,
                energy: 60.0,
                spread: 0.04,
            }],
            ambient_rate: 0.3,
            drop_probability: 0.0,
            corrupt_probability: 0.0,
            frame_rate: 20.0,
            timestamp_jitter_us: 3000,
        }
    }
}

impl SimProfile {
    pub fn fov(&self, radar_id: u32) -> FieldOfView {
        self.fields_of_view
            .get(&radar_id)
            .copied()
            .unwrap_or(self.field_of_view)
    }

    pub fn frame_period_us(&self) -> u64 {
        (1e6 / self.frame_rate).round() as u64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub actors: Vec<ActorScript>,
    #[serde(default)]
    pub profile: SimProfile,
    /// Seconds.
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    /// Radar mounting poses; the default pipeline layout when omitted.
    #[serde(default = "default_radars")]
    pub radars: Vec<RadarPose>,
    #[serde(default)]
    pub room: RoomBounds,
}

fn default_radars() -> Vec<RadarPose> {
    PipelineConfig::default().radars
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioLoadError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioLoadError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioLoadError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    /// Number of frames (and ground-truth ticks) generated.
    pub fn frame_count(&self) -> u64 {
        (self.duration * self.profile.frame_rate).round() as u64
    }

    pub fn validate(&self) -> Result<(), ScriptError> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(ScriptError::field("duration", "must be positive"));
        }
        if self.radars.is_empty() {
            return Err(ScriptError::field(
                "radars",
                "at least one radar is required",
            ));
        }
        let p = &self.profile;
        for (name, v) in [
            ("profile.drop_probability", p.drop_probability),
            ("profile.corrupt_probability", p.corrupt_probability),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ScriptError::field(name, "probability must lie in [0, 1]"));
            }
        }
        for (name, v) in [
            ("profile.moving_rate", p.moving_rate),
            ("profile.stationary_rate", p.stationary_rate),
            ("profile.ambient_rate", p.ambient_rate),
            ("profile.jitter", p.jitter),
            ("profile.speed_noise", p.speed_noise),
            ("profile.stationary_energy_scale", p.stationary_energy_scale),
            ("profile.moving_threshold", p.moving_threshold),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ScriptError::field(name, "must be finite and >= 0"));
            }
        }
        if !(p.frame_rate > 0.0 && p.range_resolution > 0.0) {
            return Err(ScriptError::field(
                "profile.frame_rate",
                "frame rate and range resolution must be positive",
            ));
        }
        if p.timestamp_jitter_us * 4 > p.frame_period_us() {
            return Err(ScriptError::field(
                "profile.timestamp_jitter_us",
                "must stay under a quarter frame",
            ));
        }
        for (i, c) in p.clutter.iter().enumerate() {
            if !(c.rate >= 0.0 && c.spread >= 0.0 && c.energy >= 0.0) {
                return Err(ScriptError::field(
                    format!("profile.clutter[{i}]"),
                    "rate, spread and energy must be >= 0",
                ));
            }
        }
        for r in &p.regions {
            if !(r.share >= 0.0 && r.spread > 0.0 && r.energy_sd > 0.0) {
                return Err(ScriptError::field(
                    "profile.regions",
                    "shares >= 0, spreads and energy deviations > 0",
                ));
            }
        }
        if p.regions.iter().map(|r| r.share).sum::<f64>() <= 0.0 {
            return Err(ScriptError::field(
                "profile.regions",
                "shares must not all be zero",
            ));
        }
        if !(p.field_of_view.is_valid() && p.fields_of_view.values().all(FieldOfView::is_valid)) {
            return Err(ScriptError::field(
                "profile.field_of_view",
                "angles in (0, 90] degrees, positive range",
            ));
        }

        let mut ids = std::collections::HashSet::new();
        for a in &self.actors {
            if !ids.insert(a.id) {
                return Err(ScriptError::actor(a.id, 0.0, "duplicate actor id"));
            }
            validate_actor(a, &self.room)?;
        }
        Ok(())
    }
}

fn validate_actor(a: &ActorScript, room: &RoomBounds) -> Result<(), ScriptError> {
    let first = a
        .waypoints
        .first()
        .ok_or_else(|| ScriptError::actor(a.id, 0.0, "no waypoints"))?;
    for w in &a.waypoints {
        if !(w.t.is_finite() && w.t >= 0.0) {
            return Err(ScriptError::actor(a.id, w.t, "waypoint time must be >= 0"));
        }
        if !(room.x.contains(w.x) && room.y.contains(w.y)) {
            return Err(ScriptError::actor(
                a.id,
                w.t,
                format!("waypoint ({}, {}) outside the room", w.x, w.y),
            ));
        }
    }
    for pair in a.waypoints.windows(2) {
        if !(pair[1].t > pair[0].t) {
            return Err(ScriptError::actor(
                a.id,
                pair[1].t,
                "waypoint times must be strictly increasing",
            ));
        }
    }
    for pair in a.status.windows(2) {
        if !(pair[1].t > pair[0].t) {
            return Err(ScriptError::actor(
                a.id,
                pair[1].t,
                "status cue times must be strictly increasing",
            ));
        }
    }
    for (i, c) in a.status.iter().enumerate() {
        if !(c.t.is_finite() && c.t >= 0.0) {
            return Err(ScriptError::actor(a.id, c.t, "cue time must be >= 0"));
        }
        if let StatusAction::Fall { duration, .. } = c.action {
            if !(duration.is_finite() && duration > 0.0) {
                return Err(ScriptError::actor(
                    a.id,
                    c.t,
                    "fall duration must be positive",
                ));
            }
            if let Some(next) = a.status.get(i + 1) {
                if next.t < c.t + duration {
                    return Err(ScriptError::actor(
                        a.id,
                        next.t,
                        "cue interrupts a fall in progress",
                    ));
                }
            }
        }
    }
    if !(a.body.height > 0.5 && a.body.height < 2.5 && a.body.shoulder_width > 0.1) {
        return Err(ScriptError::actor(
            a.id,
            first.t,
            "implausible body template",
        ));
    }
    if let Some(leave) = a.leave {
        if !(leave > first.t) {
            return Err(ScriptError::actor(
                a.id,
                leave,
                "actor leaves before entering",
            ));
        }
    }
    Ok(())
}

/// Pose of one actor at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct ActorState {
    /// Ground position of the actor frame origin.
    pub origin: [f64; 2],
    /// Ground velocity, m/s.
    pub velocity: [f64; 2],
    /// Radians from +x.
    pub heading: f64,
    pub pose: Pose,
    /// Scripted label (nearest portrait during a fall, Fallen after contact).
    pub label: StatusLabel,
    /// Falling right now.
    pub falling: bool,
}

impl ActorScript {
    pub fn is_present(&self, t: f64) -> bool {
        t >= self.waypoints[0].t && self.leave.is_none_or(|l| t < l)
    }

    /// Piecewise-linear ground position and velocity.
    pub fn ground_motion(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        let w = &self.waypoints;
        if t <= w[0].t {
            return ([w[0].x, w[0].y], [0.0, 0.0]);
        }
        for pair in w.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if t <= b.t {
                let f = (t - a.t) / (b.t - a.t);
                let v = [(b.x - a.x) / (b.t - a.t), (b.y - a.y) / (b.t - a.t)];
                return ([a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f], v);
            }
        }
        let last = w[w.len() - 1];
        ([last.x, last.y], [0.0, 0.0])
    }

    /// Direction of the most recent waypoint leg started at or before `t`,
    /// radians; +y when the actor never moves.
    fn walking_heading(&self, t: f64) -> f64 {
        let mut heading = std::f64::consts::FRAC_PI_2;
        for pair in self.waypoints.windows(2) {
            if pair[0].t > t {
                break;
            }
            let (dx, dy) = (pair[1].x - pair[0].x, pair[1].y - pair[0].y);
            if dx.hypot(dy) > 1e-9 {
                heading = dy.atan2(dx);
            }
        }
        heading
    }

    /// Times at which scripted falls reach the ground.
    pub fn contact_times(&self) -> Vec<f64> {
        self.status
            .iter()
            .filter_map(|c| match c.action {
                StatusAction::Fall { duration, .. } => Some(c.t + duration),
                _ => None,
            })
            .collect()
    }

    /// Full actor state at time `t`.
    pub fn state_at(&self, t: f64, regions: &[RegionProfile; 4]) -> ActorState {
        let (origin, mut velocity) = self.ground_motion(t);
        let cue = self.status.iter().rev().find(|c| c.t <= t);
        let walking = self.walking_heading(t);
        let (pose, label, falling, heading) = match cue.map(|c| (c.t, c.action)) {
            None | Some((_, StatusAction::Standing)) => {
                (Pose::standing(), StatusLabel::Standing, false, walking)
            }
            Some((_, StatusAction::Sitting)) => {
                (Pose::sitting(), StatusLabel::Sitting, false, walking)
            }
            Some((_, StatusAction::Fallen { heading })) => (
                Pose::lying(),
                StatusLabel::Fallen,
                false,
                heading.map_or(walking, f64::to_radians),
            ),
            Some((start, StatusAction::Fall { duration, heading })) => {
                let p = (t - start) / duration;
                let heading = heading.map_or(walking, f64::to_radians);
                if p >= 1.0 {
                    (Pose::lying(), StatusLabel::Fallen, false, heading)
                } else {
                    let pose = Pose::falling(p);
                    let z = pose.centroid(regions)[2];
                    (pose, nearest_label(z), true, heading)
                }
            }
        };
        if label == StatusLabel::Fallen {
            velocity = [0.0, 0.0];
        }
        ActorState {
            origin,
            velocity,
            heading,
            pose,
            label,
            falling,
        }
    }
}

/// Label whose reference centroid height (1.0 / 0.6 / 0.2 m) is nearest.
fn nearest_label(z: f64) -> StatusLabel {
    let refs = [
        (StatusLabel::Standing, 1.0),
        (StatusLabel::Sitting, 0.6),
        (StatusLabel::Fallen, 0.2),
    ];
    refs.iter()
        .min_by(|a, b| (a.1 - z).abs().total_cmp(&(b.1 - z).abs()))
        .expect("nonempty")
        .0
}
