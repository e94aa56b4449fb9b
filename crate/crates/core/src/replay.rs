//! Recorded packet streams replayed through per-radar producer threads, and
//! the recording runner that drives a [`Pipeline`] from them.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::codec::{DecodeOutcome, FramePacket, StreamDecoder};
use crate::config::PipelineConfig;
use crate::ingress::{IngressHub, OverflowPolicy, Popped};
use crate::notifier::{Notifier, NotifierError};
use crate::pipeline::{Pipeline, PipelineOutputs, StageTimings};

const CHUNK: usize = 64 * 1024;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no radar<k>.mmr streams in {0}")]
    NoStreams(PathBuf),
}

/// Replay speed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Pacing {
    /// As fast as possible; producers block on full queues.
    Fast,
    /// Real time multiplied by the factor; producers drop the oldest packet on
    /// overflow, like a live feed.
    Paced(f64),
}

impl Pacing {
    pub fn from_speed(speed: Option<f64>) -> Self {
        match speed {
            Some(s) if s.is_finite() && s > 0.0 => Pacing::Paced(s),
            _ => Pacing::Fast,
        }
    }
}

/// Load every `radar<k>.mmr` in `dir`, keyed by radar id.
pub fn load_streams(dir: impl AsRef<Path>) -> Result<BTreeMap<u32, Vec<u8>>, ReplayError> {
    let dir = dir.as_ref();
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ReplayError::Io { path, source }
    };
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(io(dir))? {
        let path = entry.map_err(io(dir))?.path();
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default();
        let Some(id) = name
            .strip_prefix("radar")
            .and_then(|r| r.strip_suffix(".mmr"))
            .and_then(|n| n.parse().ok())
        else {
            continue;
        };
        out.insert(id, fs::read(&path).map_err(io(&path))?);
    }
    if out.is_empty() {
        return Err(ReplayError::NoStreams(dir.to_path_buf()));
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReplayReport {
    pub packets: u64,
    pub bad_packets: u64,
    pub overflow_dropped: u64,
    pub max_ingress_depth: usize,
    pub wall: Duration,
}

/// Replay streams through an [`IngressHub`] and hand every popped packet, in
/// timestamp order, to `consume`.
pub fn replay<F: FnMut(FramePacket)>(
    streams: &BTreeMap<u32, Vec<u8>>,
    pacing: Pacing,
    capacity: usize,
    grace: Duration,
    mut consume: F,
) -> ReplayReport {
    let policy = match pacing {
        Pacing::Fast => OverflowPolicy::Block,
        Pacing::Paced(_) => OverflowPolicy::DropOldest,
    };
    let hub = Arc::new(IngressHub::new(streams.len(), capacity, policy));
    let bad = Arc::new(AtomicU64::new(0));
    let start = Instant::now();
    let mut packets = 0;
    thread::scope(|scope| {
        for (lane, bytes) in streams.values().enumerate() {
            let hub = Arc::clone(&hub);
            let bad = Arc::clone(&bad);
            scope.spawn(move || {
                produce(bytes, lane, &hub, &bad, pacing, start);
                hub.close(lane);
            });
        }
        loop {
            match hub.pop(grace) {
                Popped::Packet(_, p) => {
                    packets += 1;
                    consume(p);
                }
                Popped::Idle => continue,
                Popped::Finished => break,
            }
        }
    });
    let c = hub.counters();
    ReplayReport {
        packets,
        bad_packets: bad.load(Ordering::Relaxed),
        overflow_dropped: c.total_dropped(),
        max_ingress_depth: c.max_depth(),
        wall: start.elapsed(),
    }
}

fn produce(
    bytes: &[u8],
    lane: usize,
    hub: &IngressHub,
    bad: &AtomicU64,
    pacing: Pacing,
    start: Instant,
) {
    let mut dec = StreamDecoder::new();
    let handle = |outcomes: Vec<DecodeOutcome>| {
        for o in outcomes {
            match o {
                DecodeOutcome::Packet { packet, .. } => {
                    if let Pacing::Paced(speed) = pacing {
                        let due = start
                            + Duration::from_secs_f64(packet.timestamp_us as f64 / 1e6 / speed);
                        let now = Instant::now();
                        if due > now {
                            thread::sleep(due - now);
                        }
                    }
                    hub.push(lane, packet);
                }
                DecodeOutcome::Bad { .. } => {
                    bad.fetch_add(1, Ordering::Relaxed);
                }
            }
        }
    };
    for chunk in bytes.chunks(CHUNK) {
        handle(dec.feed(chunk));
    }
    handle(dec.finish());
}

/// Result of running the pipeline over a recording.
pub struct RunResult {
    pub outputs: PipelineOutputs,
    pub timings: StageTimings,
    pub replay: ReplayReport,
    pub notifier_errors: Vec<NotifierError>,
}

/// Run the full pipeline over recorded streams.
pub fn run_recording(
    cfg: &PipelineConfig,
    streams: &BTreeMap<u32, Vec<u8>>,
    pacing: Pacing,
    notifier: Notifier,
) -> RunResult {
    let mut pipeline = Pipeline::new(cfg.clone(), notifier);
    let grace = match pacing {
        Pacing::Fast => Duration::from_secs(3600),
        Pacing::Paced(speed) => {
            Duration::from_secs_f64(cfg.sync.grace_windows * cfg.sync.window_s / speed)
        }
    };
    let report = replay(streams, pacing, cfg.sync.fifo_capacity, grace, |p| {
        pipeline.on_packet(p)
    });
    for _ in 0..report.bad_packets {
        pipeline.record_bad_packet();
    }
    let (mut outputs, timings, notifier_errors) = pipeline.finish();
    if let Some(last) = outputs.sync_stats.last_mut() {
        last.overflow_dropped = report.overflow_dropped;
        last.max_ingress_depth = report.max_ingress_depth;
    }
    RunResult {
        outputs,
        timings,
        replay: report,
        notifier_errors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::encode;

    fn stream(radar_id: u32, offset: u64, n: u64) -> Vec<u8> {
        let mut out = Vec::new();
        for k in 0..n {
            let p = FramePacket {
                radar_id,
                seq: k as u32,
                timestamp_us: k * 50_000 + offset,
                points: Vec::new(),
            };
            out.extend(encode(&p).unwrap());
        }
        out
    }

    #[test]
    fn fast_replay_merges_in_timestamp_order() {
        let streams: BTreeMap<u32, Vec<u8>> =
            [(1, stream(1, 5_000, 100)), (2, stream(2, 20_000, 100))].into();
        let mut ts = Vec::new();
        let r = replay(&streams, Pacing::Fast, 3, Duration::from_secs(60), |p| {
            ts.push(p.timestamp_us)
        });
        assert_eq!(r.packets, 200);
        assert_eq!(r.bad_packets, 0);
        assert!(ts.windows(2).all(|w| w[0] <= w[1]));
        assert!(r.max_ingress_depth <= 3);
    }

    #[test]
    fn corrupted_region_is_counted_and_stream_continues() {
        let mut s = stream(1, 5_000, 20);
        s[45] ^= 0xff;
        let streams: BTreeMap<u32, Vec<u8>> = [(1, s)].into();
        let r = replay(&streams, Pacing::Fast, 3, Duration::from_secs(60), |_| {});
        assert_eq!(r.packets, 19);
        assert_eq!(r.bad_packets, 1);
    }

    #[test]
    fn paced_replay_tracks_wall_clock() {
        let streams: BTreeMap<u32, Vec<u8>> = [(1, stream(1, 0, 21))].into();
        let r = replay(
            &streams,
            Pacing::Paced(2.0),
            3,
            Duration::from_millis(50),
            |_| {},
        );
        assert_eq!(r.packets, 21);
        let expected = 0.5;
        let wall = r.wall.as_secs_f64();
        assert!(wall >= expected && wall < expected * 1.2 + 0.02, "{wall}");
    }

    #[test]
    fn load_streams_picks_radar_files() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("radar3.mmr"), stream(3, 0, 2)).unwrap();
        fs::write(dir.path().join("truth.csv"), "x").unwrap();
        let s = load_streams(dir.path()).unwrap();
        assert_eq!(s.keys().copied().collect::<Vec<_>>(), vec![3]);
        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_streams(empty.path()),
            Err(ReplayError::NoStreams(_))
        ));
    }
}
