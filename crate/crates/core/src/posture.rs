//! Post-fall posture estimation from points accumulated while a target lies
//! still: top-view footprint area plus dominant point height.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::StatusConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PostureClass {
    LyingFaceUp,
    LyingSideways,
    SittingOnGround,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PostureReport {
    pub class: PostureClass,
    /// Convex-hull area of the x-y projection, m^2.
    pub footprint_area: f64,
    /// Center of the fullest height-histogram bin, meters.
    pub dominant_height: f64,
    /// Seconds of accumulation behind the report.
    pub span_s: f64,
    pub point_count: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PostureError {
    #[error("need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("accumulated {span_s:.1} s, need {horizon_s:.1} s")]
    HorizonNotReached { span_s: f64, horizon_s: f64 },
}

/// Decision thresholds for [`estimate_posture`].
#[derive(Clone, Debug, PartialEq)]
pub struct PostureParams {
    pub horizon_s: f64,
    pub min_points: usize,
    pub histogram_bin: f64,
    /// Height boundaries: face-up below the first, sideways below the second.
    pub height_cuts: [f64; 2],
    /// Within this distance of a height boundary, footprint area decides.
    pub boundary_margin: f64,
    /// Area boundaries: face-up at or above the first, sideways at or above the second.
    pub area_cuts: [f64; 2],
}

impl Default for PostureParams {
    fn default() -> Self {
        Self {
            horizon_s: 30.0,
            min_points: 50,
            histogram_bin: 0.1,
            height_cuts: [0.35, 0.75],
            boundary_margin: 0.05,
            area_cuts: [0.6, 0.32],
        }
    }
}

impl PostureParams {
    pub fn from_config(cfg: &StatusConfig) -> Self {
        Self {
            horizon_s: cfg.posture_horizon_s,
            min_points: cfg.posture_min_points,
            histogram_bin: cfg.posture_histogram_bin,
            ..Self::default()
        }
    }
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull (counter-clockwise, no collinear points) by monotone chain.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Shoelace area of a simple polygon.
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        twice += a[0] * b[1] - b[0] * a[1];
    }
    twice.abs() / 2.0
}

/// Center of the most populated `bin`-wide height bin (lowest bin on ties).
pub fn dominant_height(heights: &[f64], bin: f64) -> Option<f64> {
    let mut counts: std::collections::BTreeMap<i64, usize> = std::collections::BTreeMap::new();
    for &z in heights {
        *counts.entry((z / bin).floor() as i64).or_default() += 1;
    }
    let top = *counts.values().max()?;
    let idx = counts.iter().find(|(_, &c)| c == top).map(|(&k, _)| k)?;
    Some((idx as f64 + 0.5) * bin)
}

fn class_by_height(h: f64, cuts: [f64; 2]) -> PostureClass {
    if h < cuts[0] {
        PostureClass::LyingFaceUp
    } else if h < cuts[1] {
        PostureClass::LyingSideways
    } else {
        PostureClass::SittingOnGround
    }
}

/// Classify points accumulated over `span_s` seconds.
///
/// Height decides; near a height boundary the footprint area picks between
/// the two neighboring classes.
pub fn estimate_posture(
    points: &[[f64; 3]],
    span_s: f64,
    params: &PostureParams,
) -> Result<PostureReport, PostureError> {
    if points.len() < params.min_points || points.is_empty() {
        return Err(PostureError::InsufficientData {
            needed: params.min_points.max(1),
            got: points.len(),
        });
    }
    if span_s < params.horizon_s {
        return Err(PostureError::HorizonNotReached {
            span_s,
            horizon_s: params.horizon_s,
        });
    }
    let xy: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
    let area = polygon_area(&convex_hull(&xy));
    let heights: Vec<f64> = points.iter().map(|p| p[2]).collect();
    let height = dominant_height(&heights, params.histogram_bin).expect("nonempty");

    let mut class = class_by_height(height, params.height_cuts);
    let ordered = [
        PostureClass::LyingFaceUp,
        PostureClass::LyingSideways,
        PostureClass::SittingOnGround,
    ];
    for (i, &cut) in params.height_cuts.iter().enumerate() {
        if (height - cut).abs() <= params.boundary_margin {
            class = if area >= params.area_cuts[i] {
                ordered[i]
            } else {
                ordered[i + 1]
            };
        }
    }
    Ok(PostureReport {
        class,
        footprint_area: area,
        dominant_height: height,
        span_s,
        point_count: points.len(),
    })
}
