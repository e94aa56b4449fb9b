//! Cluster-to-target association via a probability matrix, greedy global-max
//! assignment with neighbor removal, and track lifecycle.
//!
//! A cluster's score against a track bin is
//! `alpha*C_pos + beta*C_shape + gamma*E_pos + delta*E_shape`. `C_pos` and
//! `C_shape` are linear ramps `max(0, 1 - z/z_cut)` over Z-scores of the
//! centroid displacement and of the bounding-box edge lengths against the bin's
//! recent history; a Z-score beyond the cutoff zeroes the whole score. `E_pos`
//! and `E_shape` are triangular memberships of centroid height and box height
//! around human expectations.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::Cluster;
use crate::config::TrackingConfig;
use crate::model::{StatusLabel, Tick};
use crate::status::StatusWindow;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrackState {
    Tentative,
    Confirmed,
    Lost,
}

impl TrackState {
    pub fn as_str(self) -> &'static str {
        match self {
            TrackState::Tentative => "Tentative",
            TrackState::Confirmed => "Confirmed",
            TrackState::Lost => "Lost",
        }
    }
}

/// Per-target store of recent clusters, motion history and status window.
#[derive(Clone, Debug)]
pub struct TrackBin {
    pub id: u64,
    pub state: TrackState,
    /// Recent accepted clusters, oldest first.
    history: VecDeque<Cluster>,
    history_capacity: usize,
    /// Recent (tick, centroid), oldest first.
    positions: VecDeque<(Tick, [f64; 3])>,
    positions_capacity: usize,
    pub status: StatusWindow,
    pub created: Tick,
    pub last_update: Tick,
    /// Consecutive processed ticks with an assignment.
    pub hits: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("track bin {0} has no stored clusters")]
pub struct HistoryError(pub u64);

impl TrackBin {
    pub fn new(
        id: u64,
        cluster: Cluster,
        tick: Tick,
        cfg: &TrackingConfig,
        blur_length: usize,
    ) -> Self {
        let history_capacity = cfg.shape_history.max(blur_length).max(1);
        let positions_capacity = cfg.motion_history + 1;
        let mut bin = Self {
            id,
            state: TrackState::Tentative,
            history: VecDeque::with_capacity(history_capacity),
            history_capacity,
            positions: VecDeque::with_capacity(positions_capacity),
            positions_capacity,
            status: StatusWindow::new(blur_length),
            created: tick,
            last_update: tick,
            hits: 0,
        };
        bin.accept(cluster, tick);
        bin
    }

    /// Empty bin; only useful for exercising the no-history path.
    pub fn empty(id: u64, tick: Tick, cfg: &TrackingConfig, blur_length: usize) -> Self {
        Self {
            id,
            state: TrackState::Tentative,
            history: VecDeque::new(),
            history_capacity: cfg.shape_history.max(blur_length).max(1),
            positions: VecDeque::new(),
            positions_capacity: cfg.motion_history + 1,
            status: StatusWindow::new(blur_length),
            created: tick,
            last_update: tick,
            hits: 0,
        }
    }

    pub fn accept(&mut self, cluster: Cluster, tick: Tick) {
        if self.positions.back().is_some_and(|&(t, _)| t >= tick) {
            return;
        }
        if self.history.len() == self.history_capacity {
            self.history.pop_front();
        }
        if self.positions.len() == self.positions_capacity {
            self.positions.pop_front();
        }
        self.positions.push_back((tick, cluster.centroid));
        self.history.push_back(cluster);
        self.last_update = tick;
        self.hits += 1;
    }

    pub fn last_cluster(&self) -> Option<&Cluster> {
        self.history.back()
    }

    pub fn centroid(&self) -> Option<[f64; 3]> {
        self.positions.back().map(|&(_, c)| c)
    }

    pub fn history(&self) -> impl Iterator<Item = &Cluster> {
        self.history.iter()
    }

    pub fn positions(&self) -> impl Iterator<Item = &(Tick, [f64; 3])> {
        self.positions.iter()
    }

    pub fn is_active(&self) -> bool {
        self.state != TrackState::Lost
    }

    pub fn blurred_status(&self) -> Option<StatusLabel> {
        self.status.current()
    }

    /// Per-axis mean and standard deviation of per-tick centroid displacement.
    pub fn motion_stats(&self, sigma_floor: f64) -> ([f64; 3], [f64; 3]) {
        let steps: Vec<[f64; 3]> = self
            .positions
            .iter()
            .zip(self.positions.iter().skip(1))
            .map(|(&(t0, a), &(t1, b))| {
                let gap = (t1 - t0) as f64;
                [
                    (b[0] - a[0]) / gap,
                    (b[1] - a[1]) / gap,
                    (b[2] - a[2]) / gap,
                ]
            })
            .collect();
        if steps.len() < 2 {
            return ([0.0; 3], [sigma_floor; 3]);
        }
        mean_std(&steps, sigma_floor)
    }

    /// Per-axis mean and standard deviation of box edge lengths over the
    /// recent shape history.
    pub fn shape_stats(&self, history: usize, sigma_floor: f64) -> Option<([f64; 3], [f64; 3])> {
        let skip = self.history.len().saturating_sub(history);
        let ext: Vec<[f64; 3]> = self
            .history
            .iter()
            .skip(skip)
            .map(Cluster::extents)
            .collect();
        match ext.len() {
            0 => None,
            1 => Some((ext[0], [sigma_floor; 3])),
            _ => Some(mean_std(&ext, sigma_floor)),
        }
    }
}

fn mean_std(rows: &[[f64; 3]], floor: f64) -> ([f64; 3], [f64; 3]) {
    let n = rows.len() as f64;
    let mut mean = [0.0; 3];
    for r in rows {
        for k in 0..3 {
            mean[k] += r[k] / n;
        }
    }
    let mut std = [0.0; 3];
    for k in 0..3 {
        let var = rows.iter().map(|r| (r[k] - mean[k]).powi(2)).sum::<f64>() / n;
        std[k] = var.sqrt().max(floor);
    }
    (mean, std)
}

/// Individual score terms for diagnostics and tests.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreParts {
    pub z_pos: f64,
    pub z_shape: f64,
    pub c_pos: f64,
    pub c_shape: f64,
    pub e_pos: f64,
    pub e_shape: f64,
    pub total: f64,
}

/// Expectation-only terms `(E_pos, E_shape)`.
pub fn expectation_terms(cluster: &Cluster, cfg: &TrackingConfig) -> (f64, f64) {
    (
        cfg.expected_centroid_z.eval(cluster.centroid[2]),
        cfg.expected_box_height.eval(cluster.extents()[2]),
    )
}

/// Renormalized expectation score used to decide whether a cluster may start a track.
pub fn spawn_score(cluster: &Cluster, cfg: &TrackingConfig) -> f64 {
    let [_, _, g, d] = cfg.coefficients;
    let (e_pos, e_shape) = expectation_terms(cluster, cfg);
    if g + d <= 0.0 {
        return 0.0;
    }
    (g * e_pos + d * e_shape) / (g + d)
}

pub fn score_parts(
    bin: &TrackBin,
    cluster: &Cluster,
    tick: Tick,
    cfg: &TrackingConfig,
) -> Result<ScoreParts, HistoryError> {
    let (&(last_tick, last), _) = bin
        .positions
        .back()
        .zip(bin.history.back())
        .ok_or(HistoryError(bin.id))?;
    let gap = tick.saturating_sub(last_tick).max(1) as f64;

    let (mu, sigma) = bin.motion_stats(cfg.position_sigma_floor);
    let mut z2 = 0.0;
    for k in 0..3 {
        let d = cluster.centroid[k] - last[k];
        let z = (d - mu[k] * gap).abs() / (sigma[k] * gap.sqrt());
        z2 += z * z;
    }
    let z_pos = z2.sqrt();

    let (m, s) = bin
        .shape_stats(cfg.shape_history, cfg.shape_sigma_floor)
        .ok_or(HistoryError(bin.id))?;
    let e = cluster.extents();
    let z_shape = (0..3)
        .map(|k| ((e[k] - m[k]) / s[k]).powi(2))
        .sum::<f64>()
        .sqrt();

    let ramp = |z: f64| (1.0 - z / cfg.z_cutoff).max(0.0);
    let (c_pos, c_shape) = (ramp(z_pos), ramp(z_shape));
    let (e_pos, e_shape) = expectation_terms(cluster, cfg);
    let [a, b, g, d] = cfg.coefficients;
    let total = if z_pos > cfg.z_cutoff || z_shape > cfg.z_cutoff {
        0.0
    } else {
        a * c_pos + b * c_shape + g * e_pos + d * e_shape
    };
    Ok(ScoreParts {
        z_pos,
        z_shape,
        c_pos,
        c_shape,
        e_pos,
        e_shape,
        total,
    })
}

/// Probability that `cluster` continues `bin` at `tick`.
pub fn score(
    bin: &TrackBin,
    cluster: &Cluster,
    tick: Tick,
    cfg: &TrackingConfig,
) -> Result<f64, HistoryError> {
    score_parts(bin, cluster, tick, cfg).map(|p| p.total)
}

/// Result of greedy assignment over row/column indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment {
    /// (row, column) in assignment order.
    pub pairs: Vec<(usize, usize)>,
    /// Columns removed as neighbors of an assigned column.
    pub absorbed: Vec<usize>,
    pub unassigned_rows: Vec<usize>,
    /// Columns neither assigned nor absorbed.
    pub leftover: Vec<usize>,
}

/// Repeatedly take the largest positive entry (ties: lowest row, then lowest
/// column), assign it, and drop its row, its column and the column's
/// neighbors, until no positive entry remains.
pub fn assign(matrix: &[Vec<f64>], n_cols: usize, neighbors: &[Vec<bool>]) -> Assignment {
    let n_rows = matrix.len();
    let mut row_live = vec![true; n_rows];
    let mut col_live = vec![true; n_cols];
    let mut absorbed_flag = vec![false; n_cols];
    let mut out = Assignment::default();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for (r, row) in matrix.iter().enumerate() {
            if !row_live[r] {
                continue;
            }
            for (c, &v) in row.iter().enumerate().take(n_cols) {
                if col_live[c] && v > 0.0 && best.is_none_or(|(bv, _, _)| v > bv) {
                    best = Some((v, r, c));
                }
            }
        }
        let Some((_, r, c)) = best else { break };
        out.pairs.push((r, c));
        row_live[r] = false;
        col_live[c] = false;
        for (n, live) in col_live.iter_mut().enumerate() {
            if *live && neighbors[c][n] {
                *live = false;
                absorbed_flag[n] = true;
            }
        }
    }
    out.unassigned_rows = (0..n_rows).filter(|&r| row_live[r]).collect();
    out.absorbed = (0..n_cols).filter(|&c| absorbed_flag[c]).collect();
    out.leftover = (0..n_cols).filter(|&c| col_live[c]).collect();
    out
}

/// Clusters whose centroids are strictly closer than `radius` are neighbors.
pub fn neighbor_matrix(clusters: &[Cluster], radius: f64) -> Vec<Vec<bool>> {
    clusters
        .iter()
        .enumerate()
        .map(|(i, a)| {
            clusters
                .iter()
                .enumerate()
                .map(|(j, b)| i != j && a.distance(b) < radius)
                .collect()
        })
        .collect()
}

/// What one tracker step did.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    /// (track id, cluster index).
    pub assigned: Vec<(u64, usize)>,
    pub spawned: Vec<(u64, usize)>,
    pub confirmed: Vec<u64>,
    /// (track id, state before retirement).
    pub retired: Vec<(u64, TrackState)>,
}

#[derive(Debug)]
pub struct Tracker {
    cfg: TrackingConfig,
    blur_length: usize,
    timeout_ticks: u64,
    bins: Vec<TrackBin>,
    next_id: u64,
}

impl Tracker {
    pub fn new(cfg: TrackingConfig, blur_length: usize, timeout_ticks: u64) -> Self {
        Self {
            cfg,
            blur_length,
            timeout_ticks,
            bins: Vec::new(),
            next_id: 1,
        }
    }

    pub fn bins(&self) -> &[TrackBin] {
        &self.bins
    }

    pub fn bins_mut(&mut self) -> &mut [TrackBin] {
        &mut self.bins
    }

    pub fn bin(&self, id: u64) -> Option<&TrackBin> {
        self.bins.iter().find(|b| b.id == id)
    }

    pub fn bin_mut(&mut self, id: u64) -> Option<&mut TrackBin> {
        self.bins.iter_mut().find(|b| b.id == id)
    }

    pub fn has_confirmed(&self) -> bool {
        self.bins.iter().any(|b| b.state == TrackState::Confirmed)
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Probability matrix: one row per active bin (ascending id), one column per cluster.
    pub fn matrix(&self, clusters: &[Cluster], tick: Tick) -> Vec<Vec<f64>> {
        self.bins
            .iter()
            .map(|b| {
                clusters
                    .iter()
                    .map(|c| score(b, c, tick, &self.cfg).unwrap_or(0.0))
                    .collect()
            })
            .collect()
    }

    pub fn step(&mut self, clusters: &[Cluster], tick: Tick) -> StepReport {
        let mut report = StepReport::default();
        let matrix = self.matrix(clusters, tick);
        let neighbors = neighbor_matrix(clusters, self.cfg.neighbor_radius);
        let result = assign(&matrix, clusters.len(), &neighbors);

        let mut assigned_rows = vec![false; self.bins.len()];
        for &(r, c) in &result.pairs {
            assigned_rows[r] = true;
            let bin = &mut self.bins[r];
            bin.accept(clusters[c].clone(), tick);
            report.assigned.push((bin.id, c));
            if bin.state == TrackState::Tentative && bin.hits >= self.cfg.confirm_hits {
                bin.state = TrackState::Confirmed;
                report.confirmed.push(bin.id);
            }
        }
        for (r, bin) in self.bins.iter_mut().enumerate() {
            if assigned_rows[r] {
                continue;
            }
            bin.hits = 0;
            let expired = tick.saturating_sub(bin.last_update) >= self.timeout_ticks;
            if bin.state == TrackState::Tentative || expired {
                report.retired.push((bin.id, bin.state));
                bin.state = TrackState::Lost;
            }
        }
        self.bins.retain(TrackBin::is_active);

        for &c in &result.leftover {
            let cluster = &clusters[c];
            if spawn_score(cluster, &self.cfg) <= self.cfg.spawn_gate {
                continue;
            }
            let crowded = self.bins.iter().any(|b| {
                b.centroid().is_some_and(|p| {
                    (p[0] - cluster.centroid[0]).hypot(p[1] - cluster.centroid[1])
                        < self.cfg.spawn_exclusion_radius
                })
            });
            if crowded {
                continue;
            }
            let id = self.next_id;
            self.next_id += 1;
            let mut bin = TrackBin::new(id, cluster.clone(), tick, &self.cfg, self.blur_length);
            if bin.hits >= self.cfg.confirm_hits {
                bin.state = TrackState::Confirmed;
                report.confirmed.push(id);
            }
            self.bins.push(bin);
            report.spawned.push((id, c));
        }
        report
    }
}

/// One trajectory export row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub tick: Tick,
    pub track_id: u64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub state: TrackState,
    pub status: StatusLabel,
    /// Ground-plane bounding box.
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::Aabb;
    use proptest::prelude::*;

    fn cluster_at(c: [f64; 3], ext: [f64; 3]) -> Cluster {
        Cluster {
            members: vec![0],
            centroid: c,
            bbox: Aabb {
                min: [
                    c[0] - ext[0] / 2.0,
                    c[1] - ext[1] / 2.0,
                    c[2] - ext[2] / 2.0,
                ],
                max: [
                    c[0] + ext[0] / 2.0,
                    c[1] + ext[1] / 2.0,
                    c[2] + ext[2] / 2.0,
                ],
            },
            mean_energy: 250.0,
        }
    }

    const BODY: [f64; 3] = [0.5, 0.4, 1.6];

    fn bin_with(path: &[[f64; 3]]) -> TrackBin {
        let cfg = TrackingConfig::default();
        let mut bin = TrackBin::new(1, cluster_at(path[0], BODY), 0, &cfg, 20);
        for (t, p) in path.iter().enumerate().skip(1) {
            bin.accept(cluster_at(*p, BODY), t as Tick);
        }
        bin
    }

    #[test]
    fn identical_cluster_scores_full_history_terms() {
        let cfg = TrackingConfig::default();
        let bin = bin_with(&[[0.0, 1.0, 0.9]]);
        let parts = score_parts(&bin, &cluster_at([0.0, 1.0, 0.9], BODY), 1, &cfg).unwrap();
        assert_eq!((parts.c_pos, parts.c_shape), (1.0, 1.0));
        let expected = 0.3 + 0.3 + 0.2 * parts.e_pos + 0.2 * parts.e_shape;
        assert!((parts.total - expected).abs() < 1e-12);
    }

    #[test]
    fn ceiling_cluster_is_gated() {
        let cfg = TrackingConfig::default();
        let bin = bin_with(&[[0.0, 1.0, 0.9], [0.0, 1.02, 0.9], [0.0, 1.04, 0.9]]);
        let parts = score_parts(&bin, &cluster_at([0.0, 1.06, 2.5], BODY), 3, &cfg).unwrap();
        assert_eq!(parts.e_pos, 0.0);
        assert!(parts.z_pos > 3.0);
        assert_eq!(parts.total, 0.0);
    }

    #[test]
    fn hand_computed_z_scores() {
        // Per-tick x displacements 0.10, 0.12, 0.08, 0.10: mean 0.10, std
        // 0.0141 floored to 0.06.
        let cfg = TrackingConfig::default();
        let bin = bin_with(&[
            [0.0, 1.0, 0.9],
            [0.10, 1.0, 0.9],
            [0.22, 1.0, 0.9],
            [0.30, 1.0, 0.9],
            [0.40, 1.0, 0.9],
        ]);
        let (mu, sigma) = bin.motion_stats(0.06);
        assert!((mu[0] - 0.10).abs() < 1e-12);
        assert_eq!(sigma, [0.06; 3]);
        // Next step of 0.19 m: z = 0.09 / 0.06 = 1.5, C_pos = 0.5.
        // Height 1.1 vs history 1.6 at floor 0.4: z = 1.25, C_shape = 7/12.
        // E_pos(0.9) = 1, E_shape(1.1) = 0.8 / 1.2.
        let c = cluster_at([0.59, 1.0, 0.9], [0.5, 0.4, 1.1]);
        let p = score_parts(&bin, &c, 5, &cfg).unwrap();
        assert!((p.z_pos - 1.5).abs() < 1e-9);
        assert!((p.c_pos - 0.5).abs() < 1e-9);
        assert!((p.z_shape - 1.25).abs() < 1e-9);
        assert!((p.c_shape - 7.0 / 12.0).abs() < 1e-9);
        assert!((p.e_pos - 1.0).abs() < 1e-12);
        assert!((p.e_shape - 0.8 / 1.2).abs() < 1e-12);
        assert!((p.total - (0.15 + 0.3 * 7.0 / 12.0 + 0.2 + 0.2 * 0.8 / 1.2)).abs() < 1e-9);
        // Two-tick gap: expected displacement doubles, spread grows by sqrt(2).
        let c2 = cluster_at([0.40 + 0.2 + 0.06 * 2f64.sqrt(), 1.0, 0.9], BODY);
        let p2 = score_parts(&bin, &c2, 6, &cfg).unwrap();
        assert!((p2.z_pos - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_bin_is_history_error() {
        let cfg = TrackingConfig::default();
        let bin = TrackBin::empty(9, 0, &cfg, 20);
        assert_eq!(
            score(&bin, &cluster_at([0.0; 3], BODY), 1, &cfg),
            Err(HistoryError(9))
        );
    }

    #[test]
    fn fig10_assignment() {
        // Rows: person 1, person 2. Columns: clusters 1..4.
        let m = vec![vec![0.5, 0.8, 0.4, 0.1], vec![0.6, 0.3, 0.7, 0.6]];
        let mut nb = vec![vec![false; 4]; 4];
        for (a, b) in [(0, 1), (1, 2)] {
            nb[a][b] = true;
            nb[b][a] = true;
        }
        let out = assign(&m, 4, &nb);
        assert_eq!(out.pairs, vec![(0, 1), (1, 3)]);
        assert_eq!(out.absorbed, vec![0, 2]);
        assert!(out.leftover.is_empty() && out.unassigned_rows.is_empty());
    }

    #[test]
    fn zero_matrix_assigns_nothing() {
        let out = assign(
            &[vec![0.0; 3], vec![0.0; 3]],
            3,
            &[vec![false; 3], vec![false; 3], vec![false; 3]],
        );
        assert!(out.pairs.is_empty());
        assert_eq!(out.leftover, vec![0, 1, 2]);
        assert_eq!(out.unassigned_rows, vec![0, 1]);
    }

    #[test]
    fn ties_prefer_lowest_row_then_column() {
        let m = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        let out = assign(&m, 2, &[vec![false; 2], vec![false; 2]]);
        assert_eq!(out.pairs, vec![(0, 0), (1, 1)]);
    }

    fn walker(x: f64) -> Cluster {
        cluster_at([x, 2.0, 0.9], BODY)
    }

    #[test]
    fn lifecycle_confirm_and_timeout() {
        let cfg = TrackingConfig::default();
        let mut tr = Tracker::new(cfg, 20, 60);
        for t in 0..5 {
            let r = tr.step(&[walker(0.02 * t as f64)], t);
            if t == 0 {
                assert_eq!(r.spawned.len(), 1);
            }
            if t == 4 {
                assert_eq!(r.confirmed, vec![1]);
            }
        }
        assert_eq!(tr.bins()[0].state, TrackState::Confirmed);
        for t in 5..64 {
            assert!(tr.step(&[], t).retired.is_empty(), "tick {t}");
        }
        let r = tr.step(&[], 64);
        assert_eq!(r.retired, vec![(1, TrackState::Confirmed)]);
        assert!(tr.is_empty());
    }

    #[test]
    fn flicker_never_confirms() {
        let mut tr = Tracker::new(TrackingConfig::default(), 20, 60);
        tr.step(&[walker(0.0)], 0);
        tr.step(&[walker(0.0)], 1);
        let r = tr.step(&[], 2);
        assert_eq!(r.retired, vec![(1, TrackState::Tentative)]);
        assert!(tr.is_empty());
    }

    #[test]
    fn ceiling_blob_does_not_spawn() {
        let mut tr = Tracker::new(TrackingConfig::default(), 20, 60);
        let r = tr.step(&[cluster_at([0.0, 2.0, 2.4], [0.3, 0.3, 0.2])], 0);
        assert!(r.spawned.is_empty());
    }

    #[test]
    fn two_walkers_keep_ids() {
        let mut tr = Tracker::new(TrackingConfig::default(), 20, 60);
        for t in 0..200u64 {
            let s = t as f64 * 0.025;
            let clusters = vec![
                cluster_at([-1.0 + s * 0.5, 1.0 + s * 0.3, 0.95], BODY),
                cluster_at([0.8 - s * 0.3, 3.5 - s * 0.4, 1.0], BODY),
            ];
            let r = tr.step(&clusters, t);
            let mut a = r.assigned.clone();
            a.extend(r.spawned.iter().copied());
            a.sort();
            assert_eq!(a, vec![(1, 0), (2, 1)], "tick {t}");
        }
    }

    // Sorted-list reimplementation of the greedy procedure.
    fn greedy_oracle(
        m: &[Vec<f64>],
        n_cols: usize,
        nb: &[Vec<bool>],
    ) -> (Vec<(usize, usize)>, Vec<usize>) {
        let mut entries = Vec::new();
        for (r, row) in m.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v > 0.0 {
                    entries.push((v, r, c));
                }
            }
        }
        entries.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut used_rows = vec![false; m.len()];
        let mut gone = vec![false; n_cols];
        let mut pairs = Vec::new();
        for (_, r, c) in entries {
            if used_rows[r] || gone[c] {
                continue;
            }
            pairs.push((r, c));
            used_rows[r] = true;
            gone[c] = true;
            for n in 0..n_cols {
                if nb[c][n] {
                    gone[n] = true;
                }
            }
        }
        let leftover = (0..n_cols).filter(|&c| !gone[c]).collect();
        (pairs, leftover)
    }

    fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, usize, Vec<Vec<bool>>)> {
        (1usize..=5, 1usize..=5).prop_flat_map(|(rows, cols)| {
            (
                prop::collection::vec(
                    prop::collection::vec(
                        prop::sample::select(vec![0.0, 0.1, 0.25, 0.5, 0.7, 0.9]),
                        cols,
                    ),
                    rows,
                ),
                Just(cols),
                prop::collection::vec(any::<bool>(), cols * cols),
            )
                .prop_map(|(m, cols, bits)| {
                    let mut nb = vec![vec![false; cols]; cols];
                    for i in 0..cols {
                        for j in 0..i {
                            let v = bits[i * cols + j];
                            nb[i][j] = v;
                            nb[j][i] = v;
                        }
                    }
                    (m, cols, nb)
                })
        })
    }

    proptest! {
        #[test]
        fn greedy_matches_oracle((m, cols, nb) in instance()) {
            let out = assign(&m, cols, &nb);
            let (pairs, leftover) = greedy_oracle(&m, cols, &nb);
            prop_assert_eq!(out.pairs, pairs);
            prop_assert_eq!(out.leftover, leftover);
        }

        #[test]
        fn monotone_rescaling_invariant((m, cols, nb) in instance()) {
            let scaled: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|&v| if v > 0.0 { v.powi(3) * 0.5 + 0.01 } else { 0.0 }).collect()).collect();
            prop_assert_eq!(assign(&m, cols, &nb), assign(&scaled, cols, &nb));
        }
    }
}
