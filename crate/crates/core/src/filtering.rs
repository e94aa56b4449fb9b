//! Boundary/energy/speed gating and the background-clutter feedback grid.
//!
//! The grid counts, per voxel, how many of the trailing `window` ticks saw a
//! rejected or noise point there. A voxel whose count reaches the threshold
//! is flagged as background and its points are subtracted from later frames.
//! Subtracted points keep feeding the grid so a suppressed source stays
//! suppressed; once the source disappears the count drains and the flag
//! clears. Voxels unseen for the decay horizon are forgotten.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::model::{Interval, RadarPoint, RoomBounds, Tick};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesThresholds {
    pub room: RoomBounds,
    pub min_energy: f64,
    /// Accepted band of |speed|, m/s.
    pub speed_band: Interval,
}

impl BesThresholds {
    pub fn from_config(cfg: &PipelineConfig) -> Self {
        Self {
            room: cfg.room,
            min_energy: cfg.background.min_energy,
            speed_band: cfg.background.speed_band,
        }
    }

    pub fn accepts(&self, p: &RadarPoint) -> bool {
        self.room.contains(p.position())
            && p.energy >= self.min_energy
            && self.speed_band.contains(p.speed.abs())
    }
}

/// Split points into (kept, rejected), preserving order within each.
pub fn bes_filter(points: &[RadarPoint], th: &BesThresholds) -> (Vec<RadarPoint>, Vec<RadarPoint>) {
    points.iter().partition(|p| th.accepts(p))
}

pub type VoxelKey = [i64; 3];

#[derive(Clone, Debug, Default)]
struct Voxel {
    /// (tick, weight), oldest first, at most one entry per tick.
    sightings: VecDeque<(Tick, u64)>,
    counter: u64,
    last_seen: Tick,
    flagged: bool,
}

/// One exported voxel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoxelRecord {
    pub index: VoxelKey,
    pub counter: u64,
    pub flagged: bool,
}

#[derive(Clone, Debug)]
pub struct BackgroundGrid {
    edge: f64,
    window: u64,
    threshold: u64,
    decay: u64,
    voxels: HashMap<VoxelKey, Voxel>,
}

impl BackgroundGrid {
    /// `window`, `threshold` and `decay` are in ticks.
    pub fn new(edge: f64, window: u64, threshold: u64, decay: u64) -> Self {
        assert!(
            edge > 0.0 && window > 0 && threshold > 0,
            "invalid background grid parameters"
        );
        Self {
            edge,
            window,
            threshold,
            decay,
            voxels: HashMap::new(),
        }
    }

    pub fn from_config(cfg: &PipelineConfig) -> Self {
        let b = &cfg.background;
        let window = cfg.seconds_to_ticks(b.persistence_window_s);
        let threshold = ((b.persistence_ratio * window as f64) - 1e-9)
            .ceil()
            .max(1.0) as u64;
        Self::new(
            b.voxel_edge,
            window,
            threshold,
            cfg.seconds_to_ticks(b.decay_horizon_s),
        )
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn key(&self, p: &RadarPoint) -> VoxelKey {
        [
            (p.x / self.edge).floor() as i64,
            (p.y / self.edge).floor() as i64,
            (p.z / self.edge).floor() as i64,
        ]
    }

    pub fn is_flagged(&self, key: &VoxelKey) -> bool {
        self.voxels.get(key).is_some_and(|v| v.flagged)
    }

    pub fn flagged_count(&self) -> usize {
        self.voxels.values().filter(|v| v.flagged).count()
    }

    pub fn counter(&self, key: &VoxelKey) -> u64 {
        self.voxels.get(key).map_or(0, |v| v.counter)
    }

    /// Record this tick's sightings. `weight` is the number of ticks one
    /// processed tick stands for (greater than 1 when ticks are skipped).
    pub fn update<'a>(
        &mut self,
        points: impl IntoIterator<Item = &'a RadarPoint>,
        tick: Tick,
        weight: u64,
    ) {
        for p in points {
            let key = self.key(p);
            let v = self.voxels.entry(key).or_default();
            if v.sightings.back().is_none_or(|&(t, _)| t != tick) {
                v.sightings.push_back((tick, weight));
            }
            v.last_seen = tick;
        }
        let (window, threshold, decay) = (self.window, self.threshold, self.decay);
        self.voxels.retain(|_, v| {
            while v
                .sightings
                .front()
                .is_some_and(|&(t, _)| t + window <= tick)
            {
                v.sightings.pop_front();
            }
            v.counter = v.sightings.iter().map(|&(_, w)| w).sum::<u64>().min(window);
            v.flagged = v.counter >= threshold;
            tick.saturating_sub(v.last_seen) <= decay
        });
    }

    /// Split into (survivors, subtracted), preserving order.
    pub fn partition(&self, points: &[RadarPoint]) -> (Vec<RadarPoint>, Vec<RadarPoint>) {
        if self.voxels.is_empty() {
            return (points.to_vec(), Vec::new());
        }
        points.iter().partition(|p| !self.is_flagged(&self.key(p)))
    }

    pub fn subtract(&self, points: &[RadarPoint]) -> Vec<RadarPoint> {
        self.partition(points).0
    }

    /// Voxels sorted by index.
    pub fn snapshot(&self) -> Vec<VoxelRecord> {
        let mut out: Vec<VoxelRecord> = self
            .voxels
            .iter()
            .map(|(k, v)| VoxelRecord {
                index: *k,
                counter: v.counter,
                flagged: v.flagged,
            })
            .collect();
        out.sort_by_key(|r| r.index);
        out
    }
}
