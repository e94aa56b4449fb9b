//! Shared domain types: points, poses, room bounds, status labels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Pipeline tick: index of a synchronized time window on the stream clock.
pub type Tick = u64;

/// One radar detection.
///
/// Coordinates are meters (radar-local or global depending on the stage),
/// `energy` is the radar's opaque intensity value and `speed` the signed
/// radial speed in m/s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadarPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub energy: f64,
    pub speed: f64,
}

impl RadarPoint {
    pub fn new(x: f64, y: f64, z: f64, energy: f64, speed: f64) -> Self {
        Self {
            x,
            y,
            z,
            energy,
            speed,
        }
    }

    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn with_position(mut self, p: [f64; 3]) -> Self {
        self.x = p[0];
        self.y = p[1];
        self.z = p[2];
        self
    }

    /// Finite coordinates and non-negative energy.
    pub fn is_valid(&self) -> bool {
        [self.x, self.y, self.z, self.energy, self.speed]
            .iter()
            .all(|v| v.is_finite())
            && self.energy >= 0.0
    }

    pub fn distance(&self, other: &RadarPoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Mounting pose of one radar in the global frame. Angles are degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadarPose {
    pub radar_id: u32,
    pub position: [f64; 3],
    /// Rotation (alpha, beta, gamma) about the x, y and z axes.
    pub rotation: [f64; 3],
}

impl RadarPose {
    pub fn new(radar_id: u32, position: [f64; 3], rotation: [f64; 3]) -> Self {
        Self {
            radar_id,
            position,
            rotation,
        }
    }
}

/// Closed interval `[low, high]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub const fn new(low: f64, high: f64) -> Self {
        Self { low, high }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.low && v <= self.high
    }

    pub fn is_empty(&self) -> bool {
        !(self.low <= self.high)
    }

    pub fn length(&self) -> f64 {
        self.high - self.low
    }
}

/// Axis-aligned monitored volume.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoomBounds {
    pub x: Interval,
    pub y: Interval,
    pub z: Interval,
}

impl RoomBounds {
    pub fn contains(&self, p: [f64; 3]) -> bool {
        self.x.contains(p[0]) && self.y.contains(p[1]) && self.z.contains(p[2])
    }
}

impl Default for RoomBounds {
    /// 4 m wide, 4.2 m long, 2.6 m high; origin on the floor beneath radar 1.
    fn default() -> Self {
        Self {
            x: Interval::new(-2.0, 2.0),
            y: Interval::new(0.0, 4.2),
            z: Interval::new(0.0, 2.6),
        }
    }
}

/// Per-target posture status.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StatusLabel {
    Standing,
    Sitting,
    Fallen,
}

impl StatusLabel {
    /// All labels in tie-break priority order.
    pub const ALL: [StatusLabel; 3] = [
        StatusLabel::Standing,
        StatusLabel::Sitting,
        StatusLabel::Fallen,
    ];

    pub fn index(self) -> usize {
        match self {
            StatusLabel::Standing => 0,
            StatusLabel::Sitting => 1,
            StatusLabel::Fallen => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StatusLabel::Standing => "Standing",
            StatusLabel::Sitting => "Sitting",
            StatusLabel::Fallen => "Fallen",
        }
    }
}

impl fmt::Display for StatusLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown status label `{0}`")]
pub struct ParseStatusError(pub String);

impl FromStr for StatusLabel {
    type Err = ParseStatusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "standing" => Ok(StatusLabel::Standing),
            "sitting" => Ok(StatusLabel::Sitting),
            "fallen" => Ok(StatusLabel::Fallen),
            other => Err(ParseStatusError(other.to_string())),
        }
    }
}

/// Piecewise-linear triangular membership: 0 outside `(low, high)`, 1 at `peak`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triangular {
    pub low: f64,
    pub peak: f64,
    pub high: f64,
}

impl Triangular {
    pub const fn new(low: f64, peak: f64, high: f64) -> Self {
        Self { low, peak, high }
    }

    /// Symmetric triangle centred at `peak` reaching zero at `peak ± half_width`.
    pub fn symmetric(peak: f64, half_width: f64) -> Self {
        Self::new(peak - half_width, peak, peak + half_width)
    }

    pub fn eval(&self, v: f64) -> f64 {
        if !v.is_finite() || v <= self.low || v >= self.high {
            if v == self.peak {
                return 1.0;
            }
            return 0.0;
        }
        if v <= self.peak {
            (v - self.low) / (self.peak - self.low)
        } else {
            (self.high - v) / (self.high - self.peak)
        }
    }

    pub fn is_valid(&self) -> bool {
        self.low <= self.peak && self.peak <= self.high && self.low < self.high
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_validity() {
        assert!(RadarPoint::new(0.0, 1.0, 2.0, 10.0, -0.5).is_valid());
        assert!(!RadarPoint::new(f64::NAN, 1.0, 2.0, 10.0, 0.0).is_valid());
        assert!(!RadarPoint::new(0.0, 1.0, 2.0, -1.0, 0.0).is_valid());
        assert!(!RadarPoint::new(0.0, f64::INFINITY, 2.0, 1.0, 0.0).is_valid());
    }

    #[test]
    fn status_parse_roundtrip() {
        for label in StatusLabel::ALL {
            assert_eq!(label.as_str().parse::<StatusLabel>().unwrap(), label);
        }
        assert!("lying".parse::<StatusLabel>().is_err());
    }

    #[test]
    fn triangular_membership() {
        let t = Triangular::new(0.1, 0.9, 1.3);
        assert_eq!(t.eval(0.9), 1.0);
        assert_eq!(t.eval(0.1), 0.0);
        assert_eq!(t.eval(2.5), 0.0);
        assert!((t.eval(0.5) - 0.5).abs() < 1e-12);
        assert!((t.eval(1.1) - 0.5).abs() < 1e-12);
        let s = Triangular::symmetric(1.0, 0.45);
        assert!((s.eval(0.6) - (1.0 - 0.4 / 0.45)).abs() < 1e-12);
    }

    #[test]
    fn default_room_matches_experiment_space() {
        let room = RoomBounds::default();
        assert!((room.x.length() - 4.0).abs() < 1e-12);
        assert!((room.y.length() - 4.2).abs() < 1e-12);
        assert!((room.z.length() - 2.6).abs() < 1e-12);
        assert!(!room.contains([5.0, 1.0, 1.0]));
        assert!(room.contains([0.0, 1.0, 1.0]));
    }
}
