//! Dynamic DBSCAN: energy-stratified multi-pass density clustering.
//!
//! Points are split into energy bands. Passes run from the highest band
//! downward; the pass for a band clusters that band's points together with all
//! higher-energy points using the band's own `eps`/`min_pts`. Clusters from
//! different passes that share a point are merged, and points in no cluster are
//! noise.
//!
//! Within a pass, a point is core when its closed `eps`-ball (itself included)
//! holds at least `min_pts` points. Cores within `eps` of each other form a
//! component; every non-core point within `eps` of a component's core joins
//! that component. A border point touching two components joins both, which
//! makes the result independent of point order.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::RadarPoint;

/// One energy stratum `[low, high)` with its DBSCAN parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBand {
    pub low: f64,
    /// `None` means unbounded above.
    pub high: Option<f64>,
    pub eps: f64,
    pub min_pts: usize,
}

impl EnergyBand {
    pub fn new(low: f64, high: Option<f64>, eps: f64, min_pts: usize) -> Self {
        Self {
            low,
            high,
            eps,
            min_pts,
        }
    }

    pub fn contains(&self, energy: f64) -> bool {
        energy >= self.low && self.high.is_none_or(|h| energy < h)
    }

    /// Default four-band table.
    pub fn default_table() -> Vec<EnergyBand> {
        vec![
            EnergyBand::new(400.0, None, 1.0, 2),
            EnergyBand::new(300.0, Some(400.0), 1.0, 2),
            EnergyBand::new(200.0, Some(300.0), 0.7, 3),
            EnergyBand::new(0.0, Some(200.0), 0.5, 10),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field}: {reason}")]
pub struct BandError {
    field: String,
    reason: String,
}

impl BandError {
    fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn field(&self) -> &str {
        &self.field
    }

    pub fn reason(&self) -> &str {
        &self.reason
    }
}

/// Validated band list covering `[0, inf)` without gaps or overlaps.
#[derive(Clone, Debug, PartialEq)]
pub struct BandTable {
    /// Sorted by ascending `low`.
    bands: Vec<EnergyBand>,
    skip_exact: bool,
}

impl BandTable {
    pub fn new(bands: Vec<EnergyBand>) -> Result<Self, BandError> {
        if bands.is_empty() {
            return Err(BandError::new("bands", "at least one band is required"));
        }
        for (i, b) in bands.iter().enumerate() {
            if !(b.low.is_finite() && b.low >= 0.0) {
                return Err(BandError::new(
                    format!("bands[{i}].low"),
                    "must be finite and >= 0",
                ));
            }
            if let Some(h) = b.high {
                if !(h.is_finite() && h > b.low) {
                    return Err(BandError::new(
                        format!("bands[{i}].high"),
                        "must be finite and above low",
                    ));
                }
            }
            if !(b.eps.is_finite() && b.eps > 0.0) {
                return Err(BandError::new(
                    format!("bands[{i}].eps"),
                    "must be positive",
                ));
            }
            if b.min_pts == 0 {
                return Err(BandError::new(
                    format!("bands[{i}].min_pts"),
                    "must be >= 1",
                ));
            }
        }
        let mut order: Vec<usize> = (0..bands.len()).collect();
        order.sort_by(|&a, &b| bands[a].low.total_cmp(&bands[b].low));
        if bands[order[0]].low != 0.0 {
            return Err(BandError::new(
                format!("bands[{}].low", order[0]),
                "lowest band must start at 0",
            ));
        }
        for w in order.windows(2) {
            let (a, b) = (&bands[w[0]], &bands[w[1]]);
            match a.high {
                None => {
                    return Err(BandError::new(
                        format!("bands[{}].high", w[0]),
                        format!("unbounded band overlaps bands[{}]", w[1]),
                    ))
                }
                Some(h) if h > b.low => {
                    return Err(BandError::new(
                        format!("bands[{}]", w[1]),
                        format!("overlaps bands[{}]", w[0]),
                    ))
                }
                Some(h) if h < b.low => {
                    return Err(BandError::new(
                        format!("bands[{}].low", w[1]),
                        format!("gap between {h} and {}", b.low),
                    ))
                }
                Some(_) => {}
            }
        }
        let last = *order.last().expect("nonempty");
        if bands[last].high.is_some() {
            return Err(BandError::new(
                format!("bands[{last}].high"),
                "highest band must be unbounded",
            ));
        }
        let sorted: Vec<EnergyBand> = order.iter().map(|&i| bands[i]).collect();
        // Lower bands no more lenient than the ones above them.
        let skip_exact = sorted
            .windows(2)
            .all(|w| w[0].eps <= w[1].eps && w[0].min_pts >= w[1].min_pts);
        Ok(Self {
            bands: sorted,
            skip_exact,
        })
    }

    /// Bands in ascending energy order.
    pub fn bands(&self) -> &[EnergyBand] {
        &self.bands
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    /// Index (ascending order) of the band holding `energy`.
    pub fn band_of(&self, energy: f64) -> usize {
        self.bands
            .iter()
            .rposition(|b| energy >= b.low)
            .unwrap_or(0)
    }

    /// Whether skipping empty bands provably leaves the result unchanged.
    ///
    /// True when eps never grows and min_pts never shrinks as energy drops:
    /// an empty band's pass would then re-cluster the same points as the pass
    /// above it under stricter parameters, producing only sub-clusters.
    pub fn skip_is_exact(&self) -> bool {
        self.skip_exact
    }
}

impl Default for BandTable {
    fn default() -> Self {
        BandTable::new(EnergyBand::default_table()).expect("default table is valid")
    }
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn extents(&self) -> [f64; 3] {
        [
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        ]
    }

    /// Area of the x-y projection.
    pub fn footprint_area(&self) -> f64 {
        let e = self.extents();
        e[0] * e[1]
    }

    /// Area of the x-y intersection with `other`.
    pub fn footprint_intersection(&self, other: &Aabb) -> f64 {
        let w = (self.max[0].min(other.max[0]) - self.min[0].max(other.min[0])).max(0.0);
        let h = (self.max[1].min(other.max[1]) - self.min[1].max(other.min[1])).max(0.0);
        w * h
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Indices into the clustered frame, ascending.
    pub members: Vec<usize>,
    pub centroid: [f64; 3],
    pub bbox: Aabb,
    pub mean_energy: f64,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn extents(&self) -> [f64; 3] {
        self.bbox.extents()
    }

    pub fn ground_distance(&self, other: &Cluster) -> f64 {
        (self.centroid[0] - other.centroid[0]).hypot(self.centroid[1] - other.centroid[1])
    }

    pub fn distance(&self, other: &Cluster) -> f64 {
        let d: f64 = (0..3)
            .map(|k| (self.centroid[k] - other.centroid[k]).powi(2))
            .sum();
        d.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("cannot summarize an empty cluster")]
pub struct EmptyError;

/// Centroid, bounding box and mean energy of `points[members]`.
pub fn summarize(points: &[RadarPoint], members: Vec<usize>) -> Result<Cluster, EmptyError> {
    if members.is_empty() {
        return Err(EmptyError);
    }
    let mut sum = [0.0; 3];
    let mut min = [f64::INFINITY; 3];
    let mut max = [f64::NEG_INFINITY; 3];
    let mut energy = 0.0;
    for &i in &members {
        let p = points[i].position();
        for k in 0..3 {
            sum[k] += p[k];
            min[k] = min[k].min(p[k]);
            max[k] = max[k].max(p[k]);
        }
        energy += points[i].energy;
    }
    let n = members.len() as f64;
    Ok(Cluster {
        centroid: sum.map(|s| s / n),
        bbox: Aabb { min, max },
        mean_energy: energy / n,
        members,
    })
}

/// Cell index of a subset of points. Cells have side `eps / sqrt(3)` (rounded
/// down), so any two points sharing a cell are within `eps`.
struct CellGrid<'a> {
    points: &'a [RadarPoint],
    side: f64,
    eps2: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
    /// Cell offsets whose nearest corners are within `eps`.
    offsets: Vec<[i64; 3]>,
}

impl<'a> CellGrid<'a> {
    fn new(points: &'a [RadarPoint], subset: &[usize], eps: f64) -> Self {
        let side = eps / 1.7321;
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for &i in subset {
            cells
                .entry(Self::key_of(&points[i], side))
                .or_default()
                .push(i);
        }
        let reach = (eps / side).ceil() as i64;
        let mut offsets = Vec::new();
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in -reach..=reach {
                    let gap: f64 = [dx, dy, dz]
                        .iter()
                        .map(|&d| ((d.abs() - 1).max(0) as f64 * side).powi(2))
                        .sum();
                    if gap <= eps * eps {
                        offsets.push([dx, dy, dz]);
                    }
                }
            }
        }
        Self {
            points,
            side,
            eps2: eps * eps,
            cells,
            offsets,
        }
    }

    fn key_of(p: &RadarPoint, side: f64) -> [i64; 3] {
        [p.x, p.y, p.z].map(|v| (v / side).floor() as i64)
    }

    fn key(&self, i: usize) -> [i64; 3] {
        Self::key_of(&self.points[i], self.side)
    }

    fn near(&self, i: usize, j: usize) -> bool {
        let (p, q) = (&self.points[i], &self.points[j]);
        (p.x - q.x).powi(2) + (p.y - q.y).powi(2) + (p.z - q.z).powi(2) <= self.eps2
    }

    fn neighbor_cells(&self, key: [i64; 3]) -> impl Iterator<Item = (&[i64; 3], &Vec<usize>)> + '_ {
        self.offsets.iter().filter_map(move |o| {
            let k = [key[0] + o[0], key[1] + o[1], key[2] + o[2]];
            self.cells.get_key_value(&k)
        })
    }
}

/// Single DBSCAN pass over `points[subset]`; returns member lists (ascending),
/// ordered by smallest core point.
///
/// A border point adjacent to several components appears in each of them.
pub fn dbscan(
    points: &[RadarPoint],
    subset: &[usize],
    eps: f64,
    min_pts: usize,
) -> Vec<Vec<usize>> {
    if subset.is_empty() {
        return Vec::new();
    }
    let grid = CellGrid::new(points, subset, eps);
    let mut core: HashMap<usize, bool> = HashMap::with_capacity(subset.len());
    for (&key, members) in &grid.cells {
        for &i in members {
            let mut count = members.len();
            if count < min_pts {
                'outer: for (k, other) in grid.neighbor_cells(key) {
                    if *k == key {
                        continue;
                    }
                    for &j in other {
                        if grid.near(i, j) {
                            count += 1;
                            if count >= min_pts {
                                break 'outer;
                            }
                        }
                    }
                }
            }
            core.insert(i, count >= min_pts);
        }
    }
    let is_core = |i: usize| core[&i];

    // Components over cells holding at least one core point.
    let core_cells: Vec<[i64; 3]> = grid
        .cells
        .iter()
        .filter(|(_, m)| m.iter().any(|&i| is_core(i)))
        .map(|(k, _)| *k)
        .collect();
    let cell_id: HashMap<[i64; 3], usize> = core_cells
        .iter()
        .enumerate()
        .map(|(n, k)| (*k, n))
        .collect();
    let mut uf = UnionFind::new(core_cells.len());
    for (a, key) in core_cells.iter().enumerate() {
        let mine: Vec<usize> = grid.cells[key]
            .iter()
            .copied()
            .filter(|&i| is_core(i))
            .collect();
        for (other_key, other) in grid.neighbor_cells(*key) {
            let Some(&b) = cell_id.get(other_key) else {
                continue;
            };
            if other_key <= key || uf.find(a) == uf.find(b) {
                continue;
            }
            let linked = other
                .iter()
                .filter(|&&j| is_core(j))
                .any(|&j| mine.iter().any(|&i| grid.near(i, j)));
            if linked {
                uf.union(a, b);
            }
        }
    }

    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    let mut component: HashMap<usize, usize> = HashMap::new();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &i in &sorted {
        if !is_core(i) {
            continue;
        }
        let root = uf.find(cell_id[&grid.key(i)]);
        let id = *component.entry(root).or_insert_with(|| {
            clusters.push(Vec::new());
            clusters.len() - 1
        });
        clusters[id].push(i);
    }
    // Attach borders to every component whose core reaches them.
    for &i in &sorted {
        if is_core(i) {
            continue;
        }
        let mut owners: Vec<usize> = Vec::new();
        for (k, other) in grid.neighbor_cells(grid.key(i)) {
            let Some(&c) = cell_id.get(k) else { continue };
            if other.iter().any(|&j| is_core(j) && grid.near(i, j)) {
                owners.push(component[&uf.find(c)]);
            }
        }
        owners.sort_unstable();
        owners.dedup();
        for id in owners {
            clusters[id].push(i);
        }
    }
    for c in &mut clusters {
        c.sort_unstable();
    }
    clusters
}

/// Minimal union-find over point indices.
#[derive(Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Merge pass clusters sharing a point; returns groups sorted by smallest member.
pub fn merge_memberships(
    n_points: usize,
    pass_clusters: &[Vec<usize>],
) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut uf = UnionFind::new(n_points);
    let mut clustered = vec![false; n_points];
    for c in pass_clusters {
        for &m in c {
            clustered[m] = true;
            uf.union(c[0], m);
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut noise = Vec::new();
    for (i, &c) in clustered.iter().enumerate() {
        if c {
            groups.entry(uf.find(i)).or_default().push(i);
        } else {
            noise.push(i);
        }
    }
    let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
    groups.sort_unstable_by_key(|g| g[0]);
    (groups, noise)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DbscanOutput {
    /// Sorted by smallest member index.
    pub clusters: Vec<Cluster>,
    /// Ascending point indices.
    pub noise: Vec<usize>,
    /// Number of DBSCAN passes actually executed.
    pub passes_run: usize,
}

/// Dynamic DBSCAN with empty-band skipping where it is exact.
pub fn dynamic_dbscan(points: &[RadarPoint], table: &BandTable) -> DbscanOutput {
    dynamic_dbscan_with(points, table, true)
}

/// Dynamic DBSCAN; `skip_empty` enables skipping passes for bands without points.
pub fn dynamic_dbscan_with(
    points: &[RadarPoint],
    table: &BandTable,
    skip_empty: bool,
) -> DbscanOutput {
    if points.is_empty() {
        return DbscanOutput::default();
    }
    let bands = table.bands();
    let mut per_band: Vec<Vec<usize>> = vec![Vec::new(); bands.len()];
    for (i, p) in points.iter().enumerate() {
        per_band[table.band_of(p.energy)].push(i);
    }
    let skip = skip_empty && table.skip_is_exact();

    let mut pass_clusters = Vec::new();
    let mut pool: Vec<usize> = Vec::new();
    let mut passes_run = 0;
    for b in (0..bands.len()).rev() {
        pool.extend_from_slice(&per_band[b]);
        if pool.is_empty() || (skip && per_band[b].is_empty()) {
            continue;
        }
        passes_run += 1;
        pass_clusters.extend(dbscan(points, &pool, bands[b].eps, bands[b].min_pts));
    }
    let (groups, noise) = merge_memberships(points.len(), &pass_clusters);
    let clusters = groups
        .into_iter()
        .map(|g| summarize(points, g).expect("merged groups are nonempty"))
        .collect();
    DbscanOutput {
        clusters,
        noise,
        passes_run,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: f64, y: f64, z: f64, e: f64) -> RadarPoint {
        RadarPoint::new(x, y, z, e, 0.0)
    }

    #[test]
    fn stationary_target_needs_lenient_band() {
        let pts = vec![
            pt(0.0, 1.0, 1.0, 350.0),
            pt(0.8, 1.0, 1.0, 350.0),
            pt(1.6, 1.0, 1.0, 350.0),
        ];
        let out = dynamic_dbscan(&pts, &BandTable::default());
        assert_eq!(out.clusters.len(), 1);
        assert_eq!(out.clusters[0].members, vec![0, 1, 2]);
        assert!(out.noise.is_empty());
        assert!(dbscan(&pts, &[0, 1, 2], 0.5, 10).is_empty());
    }

    #[test]
    fn empty_frame() {
        let out = dynamic_dbscan(&[], &BandTable::default());
        assert!(out.clusters.is_empty() && out.noise.is_empty());
    }

    #[test]
    fn summarize_examples() {
        let pts = vec![pt(0.0, 0.0, 0.0, 10.0), pt(2.0, 0.0, 0.0, 30.0)];
        let c = summarize(&pts, vec![0, 1]).unwrap();
        assert_eq!(c.centroid, [1.0, 0.0, 0.0]);
        assert_eq!(c.bbox.min, [0.0; 3]);
        assert_eq!(c.bbox.max, [2.0, 0.0, 0.0]);
        assert_eq!(c.mean_energy, 20.0);
        let single = summarize(&pts, vec![1]).unwrap();
        assert_eq!(single.centroid, [2.0, 0.0, 0.0]);
        assert_eq!(single.extents(), [0.0; 3]);
        assert_eq!(summarize(&pts, vec![]), Err(EmptyError));
    }

    #[test]
    fn border_joins_both_components() {
        // Two dense blobs 1.0 apart with a lone point midway.
        let mut pts = Vec::new();
        for dx in [0.0, 0.05, 0.1] {
            pts.push(pt(dx, 0.0, 0.0, 100.0));
        }
        for dx in [0.9, 0.95, 1.0] {
            pts.push(pt(dx, 0.0, 0.0, 100.0));
        }
        pts.push(pt(0.5, 0.0, 0.0, 100.0));
        let passes = dbscan(&pts, &(0..7).collect::<Vec<_>>(), 0.42, 4);
        assert_eq!(passes, vec![vec![0, 1, 2, 6], vec![3, 4, 5, 6]]);
        let (groups, noise) = merge_memberships(7, &passes);
        assert_eq!(groups, vec![vec![0, 1, 2, 3, 4, 5, 6]]);
        assert!(noise.is_empty());
    }

    #[test]
    fn band_validation() {
        assert!(BandTable::new(EnergyBand::default_table())
            .unwrap()
            .skip_is_exact());
        let gap = vec![
            EnergyBand::new(0.0, Some(100.0), 0.5, 3),
            EnergyBand::new(150.0, None, 1.0, 2),
        ];
        assert_eq!(BandTable::new(gap).unwrap_err().field(), "bands[1].low");
        let bad_eps = vec![EnergyBand::new(0.0, None, 0.0, 3)];
        assert_eq!(BandTable::new(bad_eps).unwrap_err().field(), "bands[0].eps");
        let bounded_top = vec![EnergyBand::new(0.0, Some(5.0), 0.5, 3)];
        assert!(BandTable::new(bounded_top).is_err());
        let non_monotone = vec![
            EnergyBand::new(0.0, Some(100.0), 1.5, 2),
            EnergyBand::new(100.0, None, 0.5, 5),
        ];
        assert!(!BandTable::new(non_monotone).unwrap().skip_is_exact());
    }

    #[test]
    fn band_lookup() {
        let t = BandTable::default();
        assert_eq!(t.band_of(0.0), 0);
        assert_eq!(t.band_of(199.9), 0);
        assert_eq!(t.band_of(200.0), 1);
        assert_eq!(t.band_of(350.0), 2);
        assert_eq!(t.band_of(1.0e6), 3);
    }

    #[test]
    fn skipping_runs_fewer_passes() {
        let pts = vec![pt(0.0, 0.0, 0.0, 350.0), pt(0.5, 0.0, 0.0, 350.0)];
        let t = BandTable::default();
        assert_eq!(dynamic_dbscan_with(&pts, &t, false).passes_run, 3);
        assert_eq!(dynamic_dbscan_with(&pts, &t, true).passes_run, 1);
    }

    fn frame() -> impl Strategy<Value = Vec<RadarPoint>> {
        prop::collection::vec(
            (0.0f64..3.0, 0.0f64..3.0, 0.0f64..2.0, 0.0f64..500.0)
                .prop_map(|(x, y, z, e)| pt(x, y, z, e)),
            0..60,
        )
    }

    fn partition(out: &DbscanOutput) -> Vec<Vec<usize>> {
        let mut p: Vec<Vec<usize>> = out.clusters.iter().map(|c| c.members.clone()).collect();
        p.sort();
        p
    }

    proptest! {
        #[test]
        fn order_independent(pts in frame(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let t = BandTable::default();
            let base = dynamic_dbscan(&pts, &t);
            let mut perm: Vec<usize> = (0..pts.len()).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let shuffled: Vec<RadarPoint> = perm.iter().map(|&i| pts[i]).collect();
            let out = dynamic_dbscan(&shuffled, &t);
            let mut mapped: Vec<Vec<usize>> = out
                .clusters
                .iter()
                .map(|c| { let mut m: Vec<usize> = c.members.iter().map(|&j| perm[j]).collect(); m.sort(); m })
                .collect();
            mapped.sort();
            prop_assert_eq!(mapped, partition(&base));
        }

        #[test]
        fn single_pass_matches_brute_force(pts in frame(), eps in 0.1f64..1.2, min_pts in 1usize..6) {
            let n = pts.len();
            let near = |a: usize, b: usize| pts[a].distance(&pts[b]) <= eps;
            let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_pts).collect();
            let mut uf = UnionFind::new(n);
            for i in 0..n {
                for j in 0..n {
                    if core[i] && core[j] && near(i, j) {
                        uf.union(i, j);
                    }
                }
            }
            let mut expected: Vec<Vec<usize>> = Vec::new();
            let roots: std::collections::BTreeSet<usize> = (0..n).filter(|&i| core[i]).map(|i| uf.find(i)).collect();
            for r in roots {
                let members: Vec<usize> = (0..n)
                    .filter(|&i| (core[i] && uf.find(i) == r) || (!core[i] && (0..n).any(|j| core[j] && uf.find(j) == r && near(i, j))))
                    .collect();
                expected.push(members);
            }
            expected.sort();
            let mut got = dbscan(&pts, &(0..n).collect::<Vec<_>>(), eps, min_pts);
            got.sort();
            prop_assert_eq!(got, expected);
        }

        #[test]
        fn skip_is_semantics_preserving(pts in frame()) {
            let t = BandTable::default();
            prop_assert_eq!(dynamic_dbscan_with(&pts, &t, true).clusters, dynamic_dbscan_with(&pts, &t, false).clusters);
        }

        #[test]
        fn clusters_and_noise_partition_input(pts in frame()) {
            let out = dynamic_dbscan(&pts, &BandTable::default());
            let mut all: Vec<usize> = out.clusters.iter().flat_map(|c| c.members.iter().copied()).chain(out.noise.iter().copied()).collect();
            all.sort();
            prop_assert_eq!(all, (0..pts.len()).collect::<Vec<_>>());
            for c in &out.clusters {
                prop_assert!(c.len() >= 2);
            }
        }
    }
}
