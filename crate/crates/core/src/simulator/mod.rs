//! Scenario-scripted synthetic radar: per-radar packet streams plus ground
//! truth on the pipeline's tick clock.
//!
//! Frame `k` of every radar is stamped inside merge window `k`; ground truth
//! for tick `k` is taken at the window center.

pub mod body;
pub mod scenario;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{encode, FramePacket};
use crate::geometry::{build_transform, in_field_of_view, invert, RigidTransform};
use crate::model::{RadarPoint, StatusLabel, Tick};

pub use body::{BodyTemplate, Placement, Pose, RegionProfile};
pub use scenario::{
    ActorScript, ActorState, ClutterSource, Scenario, ScenarioLoadError, ScriptError, SimProfile,
    StatusAction, StatusCue, Waypoint,
};

/// Ground-truth row: one per present actor per tick.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub tick: Tick,
    pub actor: u32,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub status: StatusLabel,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub frames: u64,
    pub packets_written: u64,
    pub packets_dropped: u64,
    pub packets_corrupted: u64,
    /// Points emitted per radar id.
    pub points: BTreeMap<u32, u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOutput {
    /// Encoded packet stream per radar id.
    pub streams: BTreeMap<u32, Vec<u8>>,
    pub truth: Vec<TruthRecord>,
    pub stats: SimStats,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("truth file: {0}")]
    Csv(#[from] csv::Error),
}

struct RadarRig {
    radar_id: u32,
    position: [f64; 3],
    to_local: RigidTransform,
    offset_us: u64,
}

fn poisson<R: Rng>(rng: &mut R, rate: f64) -> usize {
    if rate <= 0.0 {
        return 0;
    }
    Poisson::new(rate).expect("positive rate").sample(rng) as usize
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd.max(0.0)).expect("finite deviation")
}

/// Snap the range of a radar-local point to the resolution grid.
pub fn quantize_range(local: [f64; 3], resolution: f64) -> Option<[f64; 3]> {
    let r = (local[0] * local[0] + local[1] * local[1] + local[2] * local[2]).sqrt();
    let snapped = (r / resolution).round() * resolution;
    if !(r > 0.0) || snapped <= 0.0 {
        return None;
    }
    Some(local.map(|v| v * snapped / r))
}

/// Global centroid of an actor's posed body.
pub fn actor_centroid(actor: &ActorScript, state: &ActorState, profile: &SimProfile) -> [f64; 3] {
    let placement = Placement {
        origin: state.origin,
        heading: state.heading,
        scale: actor.body.scale(),
    };
    placement.to_global(state.pose.centroid(&profile.regions))
}

/// Generate every radar stream and the ground truth for a scenario.
pub fn simulate(s: &Scenario) -> Result<SimOutput, ScriptError> {
    s.validate()?;
    let p = &s.profile;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let period = p.frame_period_us();
    let n = s.radars.len() as u64;
    let rigs: Vec<RadarRig> = s
        .radars
        .iter()
        .enumerate()
        .map(|(i, pose)| RadarRig {
            radar_id: pose.radar_id,
            position: pose.position,
            to_local: invert(&build_transform(pose, [0.0; 3])),
            offset_us: period * (1 + 3 * i as u64) / (3 * n + 1),
        })
        .collect();

    let mut streams: BTreeMap<u32, Vec<u8>> =
        rigs.iter().map(|r| (r.radar_id, Vec::new())).collect();
    let mut seqs: BTreeMap<u32, u32> = BTreeMap::new();
    let mut stats = SimStats {
        points: rigs.iter().map(|r| (r.radar_id, 0)).collect(),
        ..SimStats::default()
    };
    let mut truth = Vec::new();
    let frames = s.frame_count();
    let dt = 1.0 / p.frame_rate;
    let jitter = normal(p.jitter);
    let speed_noise = normal(p.speed_noise);

    for k in 0..frames {
        let t_mid = (k as f64 + 0.5) * dt;
        for a in s.actors.iter().filter(|a| a.is_present(t_mid)) {
            let st = a.state_at(t_mid, &p.regions);
            let c = actor_centroid(a, &st, p);
            truth.push(TruthRecord {
                tick: k,
                actor: a.id,
                x: c[0],
                y: c[1],
                z: c[2],
                status: st.label,
            });
        }

        for rig in &rigs {
            let mut ts = k * period + rig.offset_us + rng.random_range(0..=p.timestamp_jitter_us);
            ts = ts.min((k + 1) * period - 1);
            let t = ts as f64 / 1e6;
            let mut global: Vec<RadarPoint> = Vec::new();

            for a in s.actors.iter().filter(|a| a.is_present(t)) {
                let st = a.state_at(t, &p.regions);
                let moving =
                    st.velocity[0].hypot(st.velocity[1]) > p.moving_threshold || st.falling;
                let (rate, escale) = if moving {
                    (p.moving_rate, 1.0)
                } else {
                    (p.stationary_rate, p.stationary_energy_scale)
                };
                let h = dt / 2.0;
                let before = actor_centroid(a, &a.state_at((t - h).max(0.0), &p.regions), p);
                let after = actor_centroid(a, &a.state_at(t + h, &p.regions), p);
                let span = t + h - (t - h).max(0.0);
                let vel = [0, 1, 2].map(|i| (after[i] - before[i]) / span);
                let count = poisson(&mut rng, rate);
                let placement = Placement {
                    origin: st.origin,
                    heading: st.heading,
                    scale: a.body.scale(),
                };
                for pt in body::sample_points(
                    &mut rng, &st.pose, &placement, &a.body, &p.regions, escale, count,
                ) {
                    let pos = [
                        pt.x + jitter.sample(&mut rng),
                        pt.y + jitter.sample(&mut rng),
                        (pt.z + jitter.sample(&mut rng)).max(0.0),
                    ];
                    let ray = [
                        pos[0] - rig.position[0],
                        pos[1] - rig.position[1],
                        pos[2] - rig.position[2],
                    ];
                    let len = (ray[0] * ray[0] + ray[1] * ray[1] + ray[2] * ray[2])
                        .sqrt()
                        .max(1e-9);
                    let radial = (vel[0] * ray[0] + vel[1] * ray[1] + vel[2] * ray[2]) / len;
                    global.push(RadarPoint::new(
                        pos[0],
                        pos[1],
                        pos[2],
                        pt.energy,
                        radial + speed_noise.sample(&mut rng),
                    ));
                }
            }

            for c in &p.clutter {
                let spread = normal(c.spread);
                let energy = normal(10.0);
                for _ in 0..poisson(&mut rng, c.rate) {
                    global.push(RadarPoint::new(
                        c.position[0] + spread.sample(&mut rng),
                        c.position[1] + spread.sample(&mut rng),
                        c.position[2] + spread.sample(&mut rng),
                        (c.energy + energy.sample(&mut rng)).max(0.0),
                        speed_noise.sample(&mut rng),
                    ));
                }
            }

            for _ in 0..poisson(&mut rng, p.ambient_rate) {
                let x = rng.random_range(s.room.x.low..=s.room.x.high);
                let y = rng.random_range(s.room.y.low..=s.room.y.high);
                let z = rng.random_range(s.room.z.low..=s.room.z.high);
                let e = rng.random_range(30.0..150.0);
                global.push(RadarPoint::new(
                    x,
                    y,
                    z,
                    e,
                    3.0 * speed_noise.sample(&mut rng),
                ));
            }

            let fov = p.fov(rig.radar_id);
            let points: Vec<RadarPoint> = global
                .into_iter()
                .filter_map(|g| {
                    let local =
                        quantize_range(rig.to_local.apply_point(g.position()), p.range_resolution)?;
                    in_field_of_view(&fov, local).then(|| g.with_position(local))
                })
                .collect();

            let seq = seqs.entry(rig.radar_id).or_insert(0);
            let packet = FramePacket {
                radar_id: rig.radar_id,
                seq: *seq,
                timestamp_us: ts,
                points,
            };
            *seq = seq.wrapping_add(1);

            if rng.random::<f64>() < p.drop_probability {
                stats.packets_dropped += 1;
                continue;
            }
            *stats.points.get_mut(&rig.radar_id).expect("rig registered") +=
                packet.points.len() as u64;
            let mut bytes = encode(&packet).expect("simulated frames stay under the packet limit");
            if rng.random::<f64>() < p.corrupt_probability {
                stats.packets_corrupted += 1;
                if rng.random::<bool>() {
                    let keep = rng.random_range(1..bytes.len());
                    bytes.truncate(keep);
                } else {
                    let at = rng.random_range(0..bytes.len());
                    bytes[at] ^= rng.random_range(1..=255u8);
                }
            }
            streams
                .get_mut(&rig.radar_id)
                .expect("rig registered")
                .extend_from_slice(&bytes);
            stats.packets_written += 1;
        }
    }
    stats.frames = frames;
    Ok(SimOutput {
        streams,
        truth,
        stats,
    })
}

/// File name of a radar's packet stream.
pub fn stream_file_name(radar_id: u32) -> String {
    format!("radar{radar_id}.mmr")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SimError + '_ {
    move |source| SimError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write `radar<k>.mmr` streams and `truth.csv` into `dir`.
pub fn write_outputs(out: &SimOutput, dir: impl AsRef<Path>) -> Result<(), SimError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (id, bytes) in &out.streams {
        let path = dir.join(stream_file_name(*id));
        fs::write(&path, bytes).map_err(io_err(&path))?;
    }
    write_truth(&out.truth, dir.join("truth.csv"))
}

pub fn write_truth(truth: &[TruthRecord], path: impl AsRef<Path>) -> Result<(), SimError> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    for r in truth {
        w.serialize(r)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_truth(path: impl AsRef<Path>) -> Result<Vec<TruthRecord>, csv::Error> {
    csv::Reader::from_path(path)?.deserialize().collect()
}

/// Simulate and write outputs in one call.
pub fn simulate_to_dir(s: &Scenario, dir: impl AsRef<Path>) -> Result<SimStats, SimError> {
    let out = simulate(s)?;
    write_outputs(&out, dir)?;
    Ok(out.stats)
}
