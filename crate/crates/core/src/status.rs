//! Per-cluster status scoring against portraits, the majority-vote blur
//! window, and edge-triggered fall events.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::clustering::Cluster;
use crate::config::StatusConfig;
use crate::model::{StatusLabel, Tick, Triangular};

/// Which way a bounding box's long side points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoxAspect {
    /// Long side on z.
    Tall,
    /// Short side on z.
    Flat,
    Neutral,
}

/// Expected position and shape of a target in one status.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatusPortrait {
    pub label: StatusLabel,
    /// Expected cluster centroid height, meters.
    pub centroid_height: f64,
    pub aspect: BoxAspect,
    /// Nominal box extents (x, y, z), meters.
    pub extents: [f64; 3],
}

/// Classify box extents by z-extent over the larger horizontal extent.
pub fn box_aspect(extents: [f64; 3], tall_ratio: f64, flat_ratio: f64) -> BoxAspect {
    let horizontal = extents[0].max(extents[1]);
    if horizontal <= 0.0 {
        return if extents[2] > 0.0 {
            BoxAspect::Tall
        } else {
            BoxAspect::Neutral
        };
    }
    let ratio = extents[2] / horizontal;
    if ratio > tall_ratio {
        BoxAspect::Tall
    } else if ratio < flat_ratio {
        BoxAspect::Flat
    } else {
        BoxAspect::Neutral
    }
}

/// Agreement between an observed and an expected aspect.
pub fn aspect_agreement(observed: BoxAspect, expected: BoxAspect) -> f64 {
    if observed == expected {
        1.0
    } else if observed == BoxAspect::Neutral || expected == BoxAspect::Neutral {
        0.5
    } else {
        0.0
    }
}

/// `lambda * E_pos + sigma * E_shape` for one portrait.
pub fn status_probability(cluster: &Cluster, portrait: &StatusPortrait, cfg: &StatusConfig) -> f64 {
    let [lambda, sigma] = cfg.coefficients;
    let e_pos = Triangular::symmetric(portrait.centroid_height, cfg.height_half_width)
        .eval(cluster.centroid[2]);
    let aspect = box_aspect(cluster.extents(), cfg.tall_ratio, cfg.flat_ratio);
    let e_shape = aspect_agreement(aspect, portrait.aspect);
    lambda * e_pos + sigma * e_shape
}

/// Probabilities indexed by [`StatusLabel::index`].
pub fn status_scores(cluster: &Cluster, cfg: &StatusConfig) -> [f64; 3] {
    let mut scores = [0.0; 3];
    for p in &cfg.portraits {
        scores[p.label.index()] = status_probability(cluster, p, cfg);
    }
    scores
}

/// Highest-probability label; ties prefer Standing, then Sitting.
pub fn classify(cluster: &Cluster, cfg: &StatusConfig) -> StatusLabel {
    let scores = status_scores(cluster, cfg);
    let mut best = StatusLabel::Standing;
    for label in StatusLabel::ALL {
        if scores[label.index()] > scores[best.index()] {
            best = label;
        }
    }
    best
}

/// Ring buffer of per-tick labels whose mode is the blurred status.
#[derive(Clone, Debug)]
pub struct StatusWindow {
    labels: VecDeque<StatusLabel>,
    capacity: usize,
    counts: [usize; 3],
    current: Option<StatusLabel>,
}

impl StatusWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "blur window needs capacity >= 1");
        Self {
            labels: VecDeque::with_capacity(capacity),
            capacity,
            counts: [0; 3],
            current: None,
        }
    }

    pub fn current(&self) -> Option<StatusLabel> {
        self.current
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Fraction of the window holding the current blurred label.
    pub fn confidence(&self) -> f64 {
        match self.current {
            Some(l) if !self.labels.is_empty() => {
                self.counts[l.index()] as f64 / self.labels.len() as f64
            }
            _ => 0.0,
        }
    }

    /// Push a label and return the modal label. Ties keep the previous
    /// blurred label when it is among the leaders, otherwise follow
    /// Standing > Sitting > Fallen.
    pub fn blur(&mut self, label: StatusLabel) -> StatusLabel {
        if self.labels.len() == self.capacity {
            let old = self.labels.pop_front().expect("full window");
            self.counts[old.index()] -= 1;
        }
        self.labels.push_back(label);
        self.counts[label.index()] += 1;
        let top = *self.counts.iter().max().expect("three counts");
        let blurred = match self.current {
            Some(prev) if self.counts[prev.index()] == top => prev,
            _ => StatusLabel::ALL
                .into_iter()
                .find(|l| self.counts[l.index()] == top)
                .expect("a leader exists"),
        };
        self.current = Some(blurred);
        blurred
    }
}

/// Alert raised when a track's blurred status enters Fallen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FallEvent {
    pub track_id: u64,
    pub tick: Tick,
    pub timestamp_us: u64,
    pub position: [f64; 3],
    pub confidence: f64,
}

/// Whether the blurred transition `previous -> current` enters Fallen.
pub fn is_fall_edge(previous: Option<StatusLabel>, current: StatusLabel) -> bool {
    matches!(previous, Some(p) if p != StatusLabel::Fallen) && current == StatusLabel::Fallen
}

/// Build a fall event on a transition into Fallen.
pub fn emit_fall(
    track_id: u64,
    previous: Option<StatusLabel>,
    current: StatusLabel,
    tick: Tick,
    timestamp_us: u64,
    position: [f64; 3],
    confidence: f64,
) -> Option<FallEvent> {
    is_fall_edge(previous, current).then_some(FallEvent {
        track_id,
        tick,
        timestamp_us,
        position,
        confidence,
    })
}
