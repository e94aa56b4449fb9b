//! Scoring predicted trajectories against ground truth: per-tick maximum
//! matching under a distance and ground-footprint overlap criterion, status
//! confusion on matched frames, identity and fall-alert statistics.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{StatusLabel, Tick};
use crate::simulator::TruthRecord;
use crate::status::FallEvent;
use crate::tracking::TrajectoryRow;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchCriteria {
    /// Maximum ground-plane centroid distance, meters.
    pub max_distance: f64,
    /// Minimum fraction of the truth footprint covered by the predicted box.
    pub min_overlap: f64,
    /// Truth footprint (x, y) extents centered on the truth centroid.
    pub truth_footprint: [f64; 2],
    /// Ticks between a truth fall and its alert.
    pub fall_tolerance_ticks: u64,
}

impl Default for MatchCriteria {
    fn default() -> Self {
        Self {
            max_distance: 0.25,
            min_overlap: 0.7,
            truth_footprint: [0.5, 0.5],
            fall_tolerance_ticks: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlignmentError {
    /// No prediction tick falls inside the truth span: the two files were
    /// stamped on different clocks.
    #[error(
        "predictions span ticks [{pred_first}, {pred_last}] but truth spans [{first}, {last}]"
    )]
    Disjoint {
        pred_first: Tick,
        pred_last: Tick,
        first: Tick,
        last: Tick,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackError {
    pub track_id: u64,
    pub matched_frames: u64,
    pub mean_error: f64,
    pub max_error: f64,
    pub rmse: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FallMetrics {
    pub truth_falls: u64,
    pub events: u64,
    pub detected: u64,
    pub false_alarms: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub positives: u64,
    pub true_positives: u64,
    pub false_positives: u64,
    pub sensitivity: f64,
    pub precision: f64,
    /// Rows: truth status; columns: predicted status (Standing, Sitting, Fallen).
    pub confusion: [[u64; 3]; 3],
    /// Track ids matched to more than one actor (extra actors summed).
    pub identity_swaps: u64,
    /// Actors matched to more than one track (extra tracks summed).
    pub fragmentations: u64,
    pub tracks: Vec<TrackError>,
    pub falls: FallMetrics,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// Fraction of matched frames whose status agrees with the truth.
    pub fn status_accuracy(&self) -> f64 {
        let total: u64 = self.confusion.iter().flatten().sum();
        let diag: u64 = (0..3).map(|i| self.confusion[i][i]).sum();
        if total == 0 {
            0.0
        } else {
            diag as f64 / total as f64
        }
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Whether a prediction matches a truth record.
pub fn is_match(pred: &TrajectoryRow, truth: &TruthRecord, c: &MatchCriteria) -> bool {
    let d = (pred.x - truth.x).hypot(pred.y - truth.y);
    if d > c.max_distance {
        return false;
    }
    let [w, h] = c.truth_footprint;
    let (tx0, tx1, ty0, ty1) = (
        truth.x - w / 2.0,
        truth.x + w / 2.0,
        truth.y - h / 2.0,
        truth.y + h / 2.0,
    );
    let ix = (pred.x1.min(tx1) - pred.x0.max(tx0)).max(0.0);
    let iy = (pred.y1.min(ty1) - pred.y0.max(ty0)).max(0.0);
    ix * iy >= c.min_overlap * w * h
}

/// Maximum bipartite matching by augmenting paths; `adj[l]` lists the right
/// vertices of left vertex `l`. Returns `owner[r] = Some(l)`.
pub fn max_matching(adj: &[Vec<usize>], n_right: usize) -> Vec<Option<usize>> {
    fn augment(
        l: usize,
        adj: &[Vec<usize>],
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for &r in &adj[l] {
            if seen[r] {
                continue;
            }
            seen[r] = true;
            if owner[r].is_none_or(|o| augment(o, adj, seen, owner)) {
                owner[r] = Some(l);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; n_right];
    for l in 0..adj.len() {
        let mut seen = vec![false; n_right];
        augment(l, adj, &mut seen, &mut owner);
    }
    owner
}

/// Per-tick matched pairs (truth index, prediction index) into the slices.
fn tick_matches(
    truth: &[&TruthRecord],
    preds: &[&TrajectoryRow],
    c: &MatchCriteria,
) -> Vec<(usize, usize)> {
    let adj: Vec<Vec<usize>> = truth
        .iter()
        .map(|t| {
            (0..preds.len())
                .filter(|&j| is_match(preds[j], t, c))
                .collect()
        })
        .collect();
    max_matching(&adj, preds.len())
        .into_iter()
        .enumerate()
        .filter_map(|(j, o)| o.map(|i| (i, j)))
        .collect()
}

/// Score predictions (and optional fall alerts) against ground truth.
pub fn evaluate(
    trajectories: &[TrajectoryRow],
    events: &[FallEvent],
    truth: &[TruthRecord],
    c: &MatchCriteria,
) -> Result<MetricsReport, AlignmentError> {
    let span = |ticks: &mut dyn Iterator<Item = Tick>| {
        ticks.fold(None, |acc: Option<(Tick, Tick)>, t| {
            Some(acc.map_or((t, t), |(a, b)| (a.min(t), b.max(t))))
        })
    };
    let truth_span = span(&mut truth.iter().map(|t| t.tick));
    let pred_span = span(&mut trajectories.iter().map(|p| p.tick));
    if let (Some((first, last)), Some((pred_first, pred_last))) = (truth_span, pred_span) {
        if !trajectories
            .iter()
            .any(|p| (first..=last).contains(&p.tick))
        {
            return Err(AlignmentError::Disjoint {
                pred_first,
                pred_last,
                first,
                last,
            });
        }
    }

    let mut truth_by_tick: BTreeMap<Tick, Vec<&TruthRecord>> = BTreeMap::new();
    for t in truth {
        truth_by_tick.entry(t.tick).or_default().push(t);
    }
    let mut pred_by_tick: BTreeMap<Tick, Vec<&TrajectoryRow>> = BTreeMap::new();
    for p in trajectories {
        pred_by_tick.entry(p.tick).or_default().push(p);
    }

    let mut r = MetricsReport::default();
    let mut errors: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    let mut actors_of_track: BTreeMap<u64, BTreeSet<u32>> = BTreeMap::new();
    let mut tracks_of_actor: BTreeMap<u32, BTreeSet<u64>> = BTreeMap::new();
    let ticks: BTreeSet<Tick> = truth_by_tick
        .keys()
        .chain(pred_by_tick.keys())
        .copied()
        .collect();
    for tick in ticks {
        let ts = truth_by_tick.get(&tick).map(Vec::as_slice).unwrap_or(&[]);
        let ps = pred_by_tick.get(&tick).map(Vec::as_slice).unwrap_or(&[]);
        let pairs = tick_matches(ts, ps, c);
        r.positives += ts.len() as u64;
        r.true_positives += pairs.len() as u64;
        r.false_positives += (ps.len() - pairs.len()) as u64;
        for (i, j) in pairs {
            let (t, p) = (ts[i], ps[j]);
            r.confusion[t.status.index()][p.status.index()] += 1;
            errors
                .entry(p.track_id)
                .or_default()
                .push((p.x - t.x).hypot(p.y - t.y));
            actors_of_track
                .entry(p.track_id)
                .or_default()
                .insert(t.actor);
            tracks_of_actor
                .entry(t.actor)
                .or_default()
                .insert(p.track_id);
        }
    }
    r.sensitivity = ratio(r.true_positives, r.positives);
    r.precision = ratio(r.true_positives, r.true_positives + r.false_positives);
    r.identity_swaps = actors_of_track.values().map(|s| s.len() as u64 - 1).sum();
    r.fragmentations = tracks_of_actor.values().map(|s| s.len() as u64 - 1).sum();
    r.tracks = errors
        .into_iter()
        .map(|(track_id, e)| {
            let n = e.len() as f64;
            TrackError {
                track_id,
                matched_frames: e.len() as u64,
                mean_error: e.iter().sum::<f64>() / n,
                max_error: e.iter().copied().fold(0.0, f64::max),
                rmse: (e.iter().map(|v| v * v).sum::<f64>() / n).sqrt(),
            }
        })
        .collect();
    r.falls = fall_metrics(events, truth, c.fall_tolerance_ticks);
    Ok(r)
}

/// Ticks at which each actor's truth status enters Fallen from another status.
pub fn truth_fall_ticks(truth: &[TruthRecord]) -> Vec<(u32, Tick)> {
    let mut last: BTreeMap<u32, StatusLabel> = BTreeMap::new();
    let mut sorted: Vec<&TruthRecord> = truth.iter().collect();
    sorted.sort_by_key(|t| (t.tick, t.actor));
    let mut out = Vec::new();
    for t in sorted {
        if let Some(prev) = last.insert(t.actor, t.status) {
            if prev != StatusLabel::Fallen && t.status == StatusLabel::Fallen {
                out.push((t.actor, t.tick));
            }
        }
    }
    out
}

fn fall_metrics(events: &[FallEvent], truth: &[TruthRecord], tolerance: u64) -> FallMetrics {
    let falls = truth_fall_ticks(truth);
    let mut used = vec![false; events.len()];
    let mut detected = 0;
    for &(_, tick) in &falls {
        let hit = (0..events.len())
            .filter(|&i| !used[i] && events[i].tick.abs_diff(tick) <= tolerance)
            .min_by_key(|&i| events[i].tick.abs_diff(tick));
        if let Some(i) = hit {
            used[i] = true;
            detected += 1;
        }
    }
    FallMetrics {
        truth_falls: falls.len() as u64,
        events: events.len() as u64,
        detected,
        false_alarms: used.iter().filter(|u| !**u).count() as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracking::TrackState;
    use proptest::prelude::*;

    fn truth(tick: Tick, actor: u32, x: f64, y: f64, status: StatusLabel) -> TruthRecord {
        TruthRecord {
            tick,
            actor,
            x,
            y,
            z: 1.0,
            status,
        }
    }

    fn pred(tick: Tick, id: u64, x: f64, y: f64, status: StatusLabel) -> TrajectoryRow {
        TrajectoryRow {
            tick,
            track_id: id,
            x,
            y,
            z: 1.0,
            state: TrackState::Confirmed,
            status,
            x0: x - 0.25,
            y0: y - 0.25,
            x1: x + 0.25,
            y1: y + 0.25,
        }
    }

    #[test]
    fn perfect_predictions_score_one() {
        let t: Vec<_> = (0..50)
            .map(|k| truth(k, 1, 0.0, 1.0 + k as f64 * 0.02, StatusLabel::Standing))
            .collect();
        let p: Vec<_> = t
            .iter()
            .map(|r| pred(r.tick, 7, r.x, r.y, r.status))
            .collect();
        let r = evaluate(&p, &[], &t, &MatchCriteria::default()).unwrap();
        assert_eq!((r.sensitivity, r.precision), (1.0, 1.0));
        assert_eq!(r.confusion[0][0], 50);
        assert_eq!(r.identity_swaps, 0);
        assert_eq!(r.tracks[0].matched_frames, 50);
    }

    #[test]
    fn offset_beyond_distance_misses() {
        let t: Vec<_> = (0..20)
            .map(|k| truth(k, 1, 0.0, 2.0, StatusLabel::Standing))
            .collect();
        let p: Vec<_> = t
            .iter()
            .map(|r| pred(r.tick, 1, r.x + 0.3, r.y, r.status))
            .collect();
        let r = evaluate(&p, &[], &t, &MatchCriteria::default()).unwrap();
        assert_eq!(r.sensitivity, 0.0);
        assert_eq!(r.false_positives, 20);
    }

    #[test]
    fn small_box_fails_overlap() {
        let t = vec![truth(0, 1, 0.0, 2.0, StatusLabel::Standing)];
        let mut p = pred(0, 1, 0.0, 2.0, StatusLabel::Standing);
        p.x0 = -0.1;
        p.x1 = 0.1;
        let r = evaluate(&[p], &[], &t, &MatchCriteria::default()).unwrap();
        assert_eq!(r.true_positives, 0);
    }

    #[test]
    fn confusion_rows_sum_to_matched_truth() {
        let t = vec![
            truth(0, 1, 0.0, 2.0, StatusLabel::Sitting),
            truth(1, 1, 0.0, 2.0, StatusLabel::Sitting),
            truth(2, 1, 0.0, 2.0, StatusLabel::Fallen),
        ];
        let p = vec![
            pred(0, 1, 0.0, 2.0, StatusLabel::Sitting),
            pred(1, 1, 0.0, 2.0, StatusLabel::Standing),
            pred(2, 1, 0.0, 2.0, StatusLabel::Fallen),
        ];
        let r = evaluate(&p, &[], &t, &MatchCriteria::default()).unwrap();
        assert_eq!(r.confusion[1], [1, 1, 0]);
        assert_eq!(r.confusion[2], [0, 0, 1]);
        assert!((r.status_accuracy() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn swaps_and_fragments_are_counted() {
        let t = vec![
            truth(0, 1, 0.0, 1.0, StatusLabel::Standing),
            truth(0, 2, 1.0, 3.0, StatusLabel::Standing),
            truth(1, 1, 0.0, 1.0, StatusLabel::Standing),
            truth(1, 2, 1.0, 3.0, StatusLabel::Standing),
        ];
        let p = vec![
            pred(0, 1, 0.0, 1.0, StatusLabel::Standing),
            pred(0, 2, 1.0, 3.0, StatusLabel::Standing),
            pred(1, 2, 0.0, 1.0, StatusLabel::Standing),
            pred(1, 1, 1.0, 3.0, StatusLabel::Standing),
        ];
        let r = evaluate(&p, &[], &t, &MatchCriteria::default()).unwrap();
        assert_eq!(r.identity_swaps, 2);
        assert_eq!(r.fragmentations, 2);
    }

    #[test]
    fn misaligned_clock_is_rejected() {
        let t = vec![truth(0, 1, 0.0, 1.0, StatusLabel::Standing)];
        let p = vec![pred(5, 1, 0.0, 1.0, StatusLabel::Standing)];
        assert_eq!(
            evaluate(&p, &[], &t, &MatchCriteria::default()),
            Err(AlignmentError::Disjoint {
                pred_first: 5,
                pred_last: 5,
                first: 0,
                last: 0
            })
        );
    }

    #[test]
    fn empty_truth_counts_every_prediction_as_false_positive() {
        let p = vec![
            pred(3, 1, 0.0, 1.0, StatusLabel::Standing),
            pred(4, 1, 0.0, 1.0, StatusLabel::Standing),
        ];
        let r = evaluate(&p, &[], &[], &MatchCriteria::default()).unwrap();
        assert_eq!(
            (r.positives, r.true_positives, r.false_positives),
            (0, 0, 2)
        );
        assert_eq!(r.precision, 0.0);
    }

    #[test]
    fn fall_alerts_matched_within_tolerance() {
        let mut t: Vec<_> = (0..100)
            .map(|k| truth(k, 1, 0.0, 2.0, StatusLabel::Standing))
            .collect();
        for r in t.iter_mut().skip(50) {
            r.status = StatusLabel::Fallen;
        }
        let ev = |tick| FallEvent {
            track_id: 1,
            tick,
            timestamp_us: 0,
            position: [0.0; 3],
            confidence: 1.0,
        };
        let f = evaluate(&[], &[ev(70), ev(99)], &t, &MatchCriteria::default())
            .unwrap()
            .falls;
        assert_eq!(
            f,
            FallMetrics {
                truth_falls: 1,
                events: 2,
                detected: 1,
                false_alarms: 1
            }
        );
    }

    fn brute_force(adj: &[Vec<bool>]) -> usize {
        fn go(i: usize, adj: &[Vec<bool>], used: &mut Vec<bool>) -> usize {
            if i == adj.len() {
                return 0;
            }
            let mut best = go(i + 1, adj, used);
            for j in 0..used.len() {
                if adj[i][j] && !used[j] {
                    used[j] = true;
                    best = best.max(1 + go(i + 1, adj, used));
                    used[j] = false;
                }
            }
            best
        }
        let n_right = adj.first().map_or(0, Vec::len);
        go(0, adj, &mut vec![false; n_right])
    }

    proptest! {
        #[test]
        fn tallies_match_exhaustive_matching(
            actors in prop::collection::vec((-0.3f64..0.3, 1.0f64..1.5), 0..=4),
            preds in prop::collection::vec((-0.3f64..0.3, 1.0f64..1.5, 0.1f64..0.4), 0..=4),
        ) {
            let c = MatchCriteria::default();
            let t: Vec<TruthRecord> =
                actors.iter().enumerate().map(|(i, &(x, y))| truth(0, i as u32, x, y, StatusLabel::Standing)).collect();
            let p: Vec<TrajectoryRow> = preds
                .iter()
                .enumerate()
                .map(|(j, &(x, y, half))| {
                    let mut r = pred(0, j as u64, x, y, StatusLabel::Standing);
                    r.x0 = x - half;
                    r.x1 = x + half;
                    r.y0 = y - half;
                    r.y1 = y + half;
                    r
                })
                .collect();
            let adj: Vec<Vec<bool>> = t.iter().map(|tr| p.iter().map(|pr| is_match(pr, tr, &c)).collect()).collect();
            let best = if t.is_empty() { 0 } else { brute_force(&adj) };
            let r = evaluate(&p, &[], &t, &c).unwrap();
            prop_assert_eq!(r.true_positives as usize, best);
            prop_assert_eq!(r.false_positives as usize, p.len() - best);
            prop_assert_eq!(r.positives as usize, t.len());
        }
    }
}
