//! Per-tick orchestration: sync -> group -> gate -> background -> cluster ->
//! track -> status -> alerts, with adaptive working/standby rate.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::clustering::{dynamic_dbscan, BandTable};
use crate::codec::FramePacket;
use crate::config::PipelineConfig;
use crate::filtering::{bes_filter, BackgroundGrid, BesThresholds};
use crate::geometry::{build_transform, RigidTransform};
use crate::ingress::IngressHub;
use crate::model::{RadarPoint, StatusLabel, Tick};
use crate::notifier::{Notifier, NotifierError};
use crate::posture::{estimate_posture, PostureParams, PostureReport};
use crate::status::{classify, emit_fall, FallEvent};
use crate::sync::{GroupAssembler, MergedWindow, SyncStats, Synchronizer};
use crate::tracking::{TrackState, Tracker, TrajectoryRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PipelineMode {
    Working,
    Standby,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeChange {
    pub tick: Tick,
    pub mode: PipelineMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PostureRecord {
    pub track_id: u64,
    pub tick: Tick,
    #[serde(flatten)]
    pub report: PostureReport,
}

/// Stages timed per processed tick.
pub const STAGES: [&str; 7] = [
    "sync",
    "group",
    "gate",
    "background",
    "cluster",
    "track",
    "status",
];

/// Per-stage wall time of every processed tick.
#[derive(Clone, Debug, Default)]
pub struct StageTimings {
    pub samples: [Vec<Duration>; 7],
}

impl StageTimings {
    /// Latency at quantile `q` in [0, 1] for stage `i`.
    pub fn percentile(&self, i: usize, q: f64) -> Duration {
        let mut v = self.samples[i].clone();
        if v.is_empty() {
            return Duration::ZERO;
        }
        v.sort();
        v[((v.len() - 1) as f64 * q).round() as usize]
    }
}

/// Everything a run produces.
#[derive(Clone, Debug, Default)]
pub struct PipelineOutputs {
    pub trajectories: Vec<TrajectoryRow>,
    pub events: Vec<FallEvent>,
    pub postures: Vec<PostureRecord>,
    pub sync_stats: Vec<SyncStats>,
    pub modes: Vec<ModeChange>,
    pub windows: u64,
    pub processed_ticks: u64,
    pub bad_packets: u64,
    pub stale_packets: u64,
}

struct PostureAccumulator {
    start: Tick,
    last_sample: Tick,
    points: Vec<[f64; 3]>,
    reported: bool,
}

pub struct Pipeline {
    cfg: PipelineConfig,
    sync: Synchronizer,
    assembler: GroupAssembler,
    bes: BesThresholds,
    grid: BackgroundGrid,
    table: BandTable,
    tracker: Tracker,
    notifier: Notifier,
    posture_params: PostureParams,
    postures: HashMap<u64, PostureAccumulator>,
    ingress: Option<Arc<IngressHub>>,
    mode: PipelineMode,
    stride: u64,
    standby_delay: u64,
    last_detection: Option<Tick>,
    last_processed: Option<Tick>,
    out: PipelineOutputs,
    timings: StageTimings,
    notify_errors: Vec<NotifierError>,
}

impl Pipeline {
    /// `cfg` must already be validated.
    pub fn new(cfg: PipelineConfig, notifier: Notifier) -> Self {
        let transforms: HashMap<u32, RigidTransform> = cfg
            .radars
            .iter()
            .map(|p| (p.radar_id, build_transform(p, [0.0; 3])))
            .collect();
        let timeout = cfg.seconds_to_ticks(cfg.tracking.timeout_s);
        Self {
            sync: Synchronizer::new(cfg.sync.window_s, cfg.sync.grace_windows),
            assembler: GroupAssembler::new(cfg.sync.group_length, transforms),
            bes: BesThresholds::from_config(&cfg),
            grid: BackgroundGrid::from_config(&cfg),
            table: cfg.band_table(),
            tracker: Tracker::new(cfg.tracking.clone(), cfg.status.blur_length, timeout),
            notifier,
            posture_params: PostureParams::from_config(&cfg.status),
            postures: HashMap::new(),
            ingress: None,
            mode: PipelineMode::Working,
            stride: cfg.fps.standby_stride(),
            standby_delay: (cfg.fps.standby_delay_s / cfg.sync.window_s).round() as u64,
            last_detection: None,
            last_processed: None,
            out: PipelineOutputs::default(),
            timings: StageTimings::default(),
            notify_errors: Vec::new(),
            cfg,
        }
    }

    /// Read queue overflow counters from `hub` for the statistics stream.
    pub fn attach_ingress(&mut self, hub: Arc<IngressHub>) {
        self.ingress = Some(hub);
    }

    pub fn mode(&self) -> PipelineMode {
        self.mode
    }

    pub fn tracker(&self) -> &Tracker {
        &self.tracker
    }

    pub fn outputs(&self) -> &PipelineOutputs {
        &self.out
    }

    pub fn timings(&self) -> &StageTimings {
        &self.timings
    }

    pub fn record_bad_packet(&mut self) {
        self.out.bad_packets += 1;
    }

    /// Ingest one decoded packet; closed windows are processed immediately.
    pub fn on_packet(&mut self, packet: FramePacket) {
        let t0 = Instant::now();
        let windows = match self.sync.ingest(packet) {
            Ok(w) => w,
            Err(_) => {
                self.out.stale_packets += 1;
                return;
            }
        };
        let dt = t0.elapsed();
        for w in windows {
            self.on_window(&w, dt);
        }
    }

    /// Close windows by wall clock (live feeds only).
    pub fn advance_clock(&mut self, now_us: u64) {
        for w in self.sync.advance_clock(now_us) {
            self.on_window(&w, Duration::ZERO);
        }
    }

    /// Flush the open window and stop the notifier.
    pub fn finish(mut self) -> (PipelineOutputs, StageTimings, Vec<NotifierError>) {
        for w in self.sync.drain() {
            self.on_window(&w, Duration::ZERO);
        }
        let tick = self.last_processed.unwrap_or(0);
        self.push_stats(tick);
        self.notifier.shutdown();
        (self.out, self.timings, self.notify_errors)
    }

    fn on_window(&mut self, w: &MergedWindow, sync_time: Duration) {
        self.out.windows += 1;
        let tick = w.tick;
        if self.last_detection.is_none() {
            self.last_detection = Some(tick);
        }
        let process = self.mode == PipelineMode::Working || tick.is_multiple_of(self.stride);
        let t0 = Instant::now();
        self.assembler.push(w);
        if process {
            let group = self.assembler.group().expect("window pushed");
            let group_time = t0.elapsed();
            self.process(
                tick,
                group.timestamp_us,
                &group.points,
                sync_time,
                group_time,
            );
        }
        if self.out.windows.is_multiple_of(self.cfg.sync.stats_every) {
            self.push_stats(tick);
        }
    }

    fn push_stats(&mut self, tick: Tick) {
        let c = self.sync.counters();
        let (overflow, depth) = match &self.ingress {
            Some(h) => {
                let ic = h.counters();
                (ic.total_dropped(), ic.max_depth())
            }
            None => (0, 0),
        };
        self.out.sync_stats.push(SyncStats {
            tick,
            windows: c.windows,
            empty_windows: c.empty_windows,
            packets_merged: c.packets_merged,
            stale_dropped: c.stale_dropped,
            overflow_dropped: overflow,
            bad_packets: self.out.bad_packets,
            max_fifo_depth: c.max_fifo_depth,
            max_ingress_depth: depth,
        });
    }

    fn process(
        &mut self,
        tick: Tick,
        timestamp_us: u64,
        points: &[RadarPoint],
        sync_time: Duration,
        group_time: Duration,
    ) {
        self.out.processed_ticks += 1;
        let weight = self
            .last_processed
            .map_or(1, |p| tick.saturating_sub(p).max(1));
        self.last_processed = Some(tick);
        let mut lap = Instant::now();
        let mut stamp = |i: usize, timings: &mut StageTimings| {
            let now = Instant::now();
            timings.samples[i].push(now - lap);
            lap = now;
        };
        self.timings.samples[0].push(sync_time);
        self.timings.samples[1].push(group_time);

        let (kept, rejected) = bes_filter(points, &self.bes);
        stamp(2, &mut self.timings);

        let (clean, subtracted) = self.grid.partition(&kept);
        stamp(3, &mut self.timings);

        let result = dynamic_dbscan(&clean, &self.table);
        let noise = result.noise.iter().map(|&i| &clean[i]);
        self.grid.update(
            rejected.iter().chain(subtracted.iter()).chain(noise),
            tick,
            weight,
        );
        stamp(4, &mut self.timings);

        let report = self.tracker.step(&result.clusters, tick);
        stamp(5, &mut self.timings);

        for &(id, c) in &report.assigned {
            let cluster = &result.clusters[c];
            let label = classify(cluster, &self.cfg.status);
            let bin = self.tracker.bin_mut(id).expect("assigned bin exists");
            let previous = bin.status.current();
            let blurred = bin.status.blur(label);
            let confirmed = bin.state == TrackState::Confirmed;
            let confidence = bin.status.confidence();
            if confirmed {
                if let Some(ev) = emit_fall(
                    id,
                    previous,
                    blurred,
                    tick,
                    timestamp_us,
                    cluster.centroid,
                    confidence,
                ) {
                    if let Err(e) = self.notifier.notify(&ev) {
                        self.notify_errors.push(e);
                    }
                    self.out.events.push(ev);
                    self.postures.insert(
                        id,
                        PostureAccumulator {
                            start: tick,
                            last_sample: tick,
                            points: Vec::new(),
                            reported: false,
                        },
                    );
                }
            }
            if blurred != StatusLabel::Fallen {
                self.postures.remove(&id);
            } else if let Some(acc) = self.postures.get_mut(&id) {
                let group_len = self.cfg.sync.group_length as u64;
                if !acc.reported && (tick - acc.last_sample >= group_len || acc.points.is_empty()) {
                    acc.last_sample = tick;
                    acc.points
                        .extend(cluster.members.iter().map(|&m| clean[m].position()));
                    let span_s = (tick - acc.start) as f64 * self.cfg.sync.window_s;
                    if let Ok(r) = estimate_posture(&acc.points, span_s, &self.posture_params) {
                        acc.reported = true;
                        self.out.postures.push(PostureRecord {
                            track_id: id,
                            tick,
                            report: r,
                        });
                    }
                }
            }
        }
        let live: Vec<u64> = self.tracker.bins().iter().map(|b| b.id).collect();
        self.postures.retain(|id, _| live.contains(id));

        for bin in self.tracker.bins() {
            if bin.state != TrackState::Confirmed || bin.last_update != tick {
                continue;
            }
            let (Some(c), Some(status)) = (bin.last_cluster(), bin.blurred_status()) else {
                continue;
            };
            self.out.trajectories.push(TrajectoryRow {
                tick,
                track_id: bin.id,
                x: c.centroid[0],
                y: c.centroid[1],
                z: c.centroid[2],
                state: bin.state,
                status,
                x0: c.bbox.min[0],
                y0: c.bbox.min[1],
                x1: c.bbox.max[0],
                y1: c.bbox.max[1],
            });
        }
        stamp(6, &mut self.timings);

        self.update_mode(tick);
    }

    fn update_mode(&mut self, tick: Tick) {
        let any_tentative = self
            .tracker
            .bins()
            .iter()
            .any(|b| b.state == TrackState::Tentative);
        if self.tracker.has_confirmed() {
            self.last_detection = Some(tick);
        }
        let idle_for = tick.saturating_sub(self.last_detection.unwrap_or(tick));
        let next = if self.tracker.has_confirmed() || any_tentative {
            PipelineMode::Working
        } else if idle_for >= self.standby_delay {
            PipelineMode::Standby
        } else {
            self.mode
        };
        if next != self.mode {
            self.mode = next;
            self.out.modes.push(ModeChange { tick, mode: next });
        }
    }
}
