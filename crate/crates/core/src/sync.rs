//! Time-window merging across radar streams and sliding frame-group assembly.
//!
//! Packets are bucketed into fixed windows `[k*W, (k+1)*W)` by producer
//! timestamp. The open window closes as soon as any packet at or beyond its
//! end arrives, or when the clock passes its end plus a grace period. Packets
//! behind the watermark are dropped and counted, never merged retroactively.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::FramePacket;
use crate::geometry::{apply_transform, RigidTransform};
use crate::model::{RadarPoint, Tick};

/// Set of radar ids (each below 64).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceMask(pub u64);

impl SourceMask {
    pub fn insert(&mut self, radar_id: u32) {
        if radar_id < 64 {
            self.0 |= 1 << radar_id;
        }
    }

    pub fn contains(&self, radar_id: u32) -> bool {
        radar_id < 64 && self.0 & (1 << radar_id) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn ids(&self) -> Vec<u32> {
        (0..64).filter(|&i| self.contains(i)).collect()
    }
}

/// All packets whose timestamps fall in one window.
#[derive(Clone, Debug, PartialEq)]
pub struct MergedWindow {
    pub tick: Tick,
    pub start_us: u64,
    pub end_us: u64,
    /// Sorted by radar id, then timestamp.
    pub packets: Vec<FramePacket>,
}

impl MergedWindow {
    pub fn sources(&self) -> SourceMask {
        let mut m = SourceMask::default();
        for p in &self.packets {
            m.insert(p.radar_id);
        }
        m
    }

    pub fn point_count(&self) -> usize {
        self.packets.iter().map(|p| p.points.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error(
    "packet from radar {radar_id} at {timestamp_us} us is behind the watermark {watermark_us} us"
)]
pub struct StaleError {
    pub radar_id: u32,
    pub timestamp_us: u64,
    pub watermark_us: u64,
}

/// Running counters of the synchronizer.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncCounters {
    pub windows: u64,
    pub empty_windows: u64,
    pub packets_merged: u64,
    pub stale_dropped: u64,
    /// Largest number of packets one radar had buffered in the open window.
    pub max_fifo_depth: usize,
}

/// Single-consumer window merger.
#[derive(Debug)]
pub struct Synchronizer {
    window_us: u64,
    grace_us: u64,
    open_tick: Option<Tick>,
    open: Vec<FramePacket>,
    depth: HashMap<u32, usize>,
    counters: SyncCounters,
}

impl Synchronizer {
    pub fn new(window_s: f64, grace_windows: f64) -> Self {
        let window_us = ((window_s * 1e6).round() as u64).max(1);
        Self {
            window_us,
            grace_us: (grace_windows * window_us as f64).round() as u64,
            open_tick: None,
            open: Vec::new(),
            depth: HashMap::new(),
            counters: SyncCounters::default(),
        }
    }

    pub fn window_us(&self) -> u64 {
        self.window_us
    }

    pub fn tick_of(&self, timestamp_us: u64) -> Tick {
        timestamp_us / self.window_us
    }

    /// Start of the oldest window still open (everything earlier is emitted).
    pub fn watermark_us(&self) -> Option<u64> {
        self.open_tick.map(|t| t * self.window_us)
    }

    pub fn counters(&self) -> &SyncCounters {
        &self.counters
    }

    /// Packets currently buffered per radar.
    pub fn buffered(&self) -> &HashMap<u32, usize> {
        &self.depth
    }

    pub fn ingest(&mut self, packet: FramePacket) -> Result<Vec<MergedWindow>, StaleError> {
        let tick = self.tick_of(packet.timestamp_us);
        let open = *self.open_tick.get_or_insert(tick);
        if tick < open {
            self.counters.stale_dropped += 1;
            return Err(StaleError {
                radar_id: packet.radar_id,
                timestamp_us: packet.timestamp_us,
                watermark_us: open * self.window_us,
            });
        }
        let emitted = self.close_before(tick);
        let d = self.depth.entry(packet.radar_id).or_insert(0);
        *d += 1;
        self.counters.max_fifo_depth = self.counters.max_fifo_depth.max(*d);
        self.open.push(packet);
        Ok(emitted)
    }

    /// Close every window whose end plus the grace period is at or before `now_us`.
    pub fn advance_clock(&mut self, now_us: u64) -> Vec<MergedWindow> {
        match self.open_tick {
            None => Vec::new(),
            Some(_) => {
                let limit = now_us.saturating_sub(self.grace_us) / self.window_us;
                self.close_before(limit)
            }
        }
    }

    /// Emit the open window (end of stream).
    pub fn drain(&mut self) -> Vec<MergedWindow> {
        match self.open_tick {
            Some(t) if !self.open.is_empty() => self.close_before(t + 1),
            _ => Vec::new(),
        }
    }

    /// Emit windows `open_tick..tick`, leaving `tick` open.
    fn close_before(&mut self, tick: Tick) -> Vec<MergedWindow> {
        let Some(open) = self.open_tick else {
            return Vec::new();
        };
        if tick <= open {
            return Vec::new();
        }
        let mut out = Vec::with_capacity((tick - open) as usize);
        let mut packets = std::mem::take(&mut self.open);
        self.depth.clear();
        packets.sort_by_key(|p| (p.radar_id, p.timestamp_us, p.seq));
        for t in open..tick {
            let packets = if t == open {
                std::mem::take(&mut packets)
            } else {
                Vec::new()
            };
            self.counters.windows += 1;
            self.counters.packets_merged += packets.len() as u64;
            if packets.is_empty() {
                self.counters.empty_windows += 1;
            }
            out.push(MergedWindow {
                tick: t,
                start_us: t * self.window_us,
                end_us: (t + 1) * self.window_us,
                packets,
            });
        }
        self.open_tick = Some(tick);
        out
    }
}

/// Union of the most recent merged windows, in the global frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameGroup {
    pub tick: Tick,
    /// End of the newest window.
    pub timestamp_us: u64,
    pub points: Vec<RadarPoint>,
    /// Oldest first.
    pub source_masks: Vec<SourceMask>,
}

impl FrameGroup {
    pub fn window_count(&self) -> usize {
        self.source_masks.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no merged windows to assemble")]
pub struct EmptyGroupError;

fn transform_window(
    window: &MergedWindow,
    transforms: &HashMap<u32, RigidTransform>,
) -> Vec<RadarPoint> {
    let mut out = Vec::with_capacity(window.point_count());
    for p in &window.packets {
        if let Some(t) = transforms.get(&p.radar_id) {
            out.extend(apply_transform(t, &p.points));
        }
    }
    out
}

/// Build a group from `recent` windows (oldest first). Packets from radars
/// without a transform are ignored.
pub fn assemble_group(
    recent: &[MergedWindow],
    transforms: &HashMap<u32, RigidTransform>,
) -> Result<FrameGroup, EmptyGroupError> {
    let newest = recent.last().ok_or(EmptyGroupError)?;
    Ok(FrameGroup {
        tick: newest.tick,
        timestamp_us: newest.end_us,
        points: recent
            .iter()
            .flat_map(|w| transform_window(w, transforms))
            .collect(),
        source_masks: recent.iter().map(MergedWindow::sources).collect(),
    })
}

/// Stride-1 sliding group over the last `length` windows; each window is
/// transformed once and cached.
#[derive(Debug)]
pub struct GroupAssembler {
    length: usize,
    transforms: HashMap<u32, RigidTransform>,
    recent: VecDeque<(Tick, u64, SourceMask, Vec<RadarPoint>)>,
}

impl GroupAssembler {
    pub fn new(length: usize, transforms: HashMap<u32, RigidTransform>) -> Self {
        assert!(length > 0, "group length must be >= 1");
        Self {
            length,
            transforms,
            recent: VecDeque::with_capacity(length),
        }
    }

    /// Add a window without building a group (used while skipping ticks).
    pub fn push(&mut self, window: &MergedWindow) {
        if self.recent.len() == self.length {
            self.recent.pop_front();
        }
        let pts = transform_window(window, &self.transforms);
        self.recent
            .push_back((window.tick, window.end_us, window.sources(), pts));
    }

    /// Group over the cached windows.
    pub fn group(&self) -> Result<FrameGroup, EmptyGroupError> {
        let (tick, end, _, _) = self.recent.back().ok_or(EmptyGroupError)?;
        let n = self.recent.iter().map(|w| w.3.len()).sum();
        let mut points = Vec::with_capacity(n);
        for w in &self.recent {
            points.extend_from_slice(&w.3);
        }
        Ok(FrameGroup {
            tick: *tick,
            timestamp_us: *end,
            points,
            source_masks: self.recent.iter().map(|w| w.2).collect(),
        })
    }

    pub fn push_and_group(&mut self, window: &MergedWindow) -> FrameGroup {
        self.push(window);
        self.group().expect("just pushed a window")
    }
}

/// Periodic synchronizer health record.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SyncStats {
    pub tick: Tick,
    pub windows: u64,
    pub empty_windows: u64,
    pub packets_merged: u64,
    pub stale_dropped: u64,
    pub overflow_dropped: u64,
    pub bad_packets: u64,
    pub max_fifo_depth: usize,
    pub max_ingress_depth: usize,
}
