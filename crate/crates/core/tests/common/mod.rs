//! Scenario builders and run helpers shared by the integration suites.
#![allow(dead_code)]

use std::path::PathBuf;

use mmtrack::config::PipelineConfig;
use mmtrack::notifier::Notifier;
use mmtrack::replay::{run_recording, Pacing, RunResult};
use mmtrack::simulator::{
    simulate, ActorScript, Scenario, SimOutput, StatusAction, StatusCue, Waypoint,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

pub fn bundled(name: &str) -> Scenario {
    Scenario::load(scenarios_dir().join(name)).expect("bundled scenario loads")
}

pub fn run(s: &Scenario) -> (SimOutput, RunResult) {
    let sim = simulate(s).expect("scenario simulates");
    let result = run_recording(
        &PipelineConfig::default(),
        &sim.streams,
        Pacing::Fast,
        Notifier::disabled(),
    );
    (sim, result)
}

fn wp(t: f64, x: f64, y: f64) -> Waypoint {
    Waypoint { t, x, y }
}

fn cue(t: f64, action: StatusAction) -> StatusCue {
    StatusCue { t, action }
}

fn spot(rng: &mut ChaCha8Rng) -> (f64, f64) {
    (rng.random_range(-1.2..1.2), rng.random_range(1.4..3.4))
}

fn actor(id: u32, waypoints: Vec<Waypoint>, status: Vec<StatusCue>) -> ActorScript {
    ActorScript {
        id,
        waypoints,
        status,
        body: Default::default(),
        leave: None,
    }
}

fn scenario(actors: Vec<ActorScript>, duration: f64, seed: u64) -> Scenario {
    Scenario {
        actors,
        profile: Default::default(),
        duration,
        seed,
        radars: PipelineConfig::default().radars,
        room: Default::default(),
    }
}

/// One actor walks, stops, and falls once; returns the scenario and the
/// scripted ground-contact time.
pub fn fall_scenario(seed: u64) -> (Scenario, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x0, y0) = spot(&mut rng);
    let (x1, y1) = spot(&mut rng);
    let walk = ((x1 - x0).hypot(y1 - y0) / 0.7).max(2.0);
    let t_stop = 1.0 + walk;
    let t_fall = t_stop + rng.random_range(3.0..6.0);
    let duration = rng.random_range(0.6..1.5);
    let heading = rng.random_range(0.0..360.0);
    let a = actor(
        1,
        vec![wp(0.0, x0, y0), wp(1.0, x0, y0), wp(t_stop, x1, y1)],
        vec![
            cue(0.0, StatusAction::Standing),
            cue(
                t_fall,
                StatusAction::Fall {
                    duration,
                    heading: Some(heading),
                },
            ),
        ],
    );
    let contact = a.contact_times()[0];
    (scenario(vec![a], contact + 35.0, seed), contact)
}

/// One actor walks between random spots, sits for a while, stands up and
/// walks on; never falls.
pub fn no_fall_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0.0;
    let mut here = spot(&mut rng);
    let mut waypoints = vec![wp(t, here.0, here.1)];
    for _ in 0..3 {
        let next = spot(&mut rng);
        t += ((next.0 - here.0).hypot(next.1 - here.1) / rng.random_range(0.4..0.9)).max(1.0);
        waypoints.push(wp(t, next.0, next.1));
        here = next;
    }
    let sit = t + 2.0;
    let rise = sit + rng.random_range(8.0..15.0);
    waypoints.push(wp(rise + 2.0, here.0, here.1));
    let next = spot(&mut rng);
    let end = rise + 2.0 + ((next.0 - here.0).hypot(next.1 - here.1) / 0.6).max(1.0);
    waypoints.push(wp(end, next.0, next.1));
    let a = actor(
        1,
        waypoints,
        vec![
            cue(0.0, StatusAction::Standing),
            cue(sit, StatusAction::Sitting),
            cue(rise, StatusAction::Standing),
        ],
    );
    scenario(vec![a], end + 5.0, seed)
}

/// Empty room for `empty_s` seconds, then one actor walks in and around.
pub fn late_entry_scenario(empty_s: f64, seed: u64) -> Scenario {
    let mut waypoints = vec![wp(empty_s, 0.0, 1.5)];
    for (i, (x, y)) in [(1.0, 2.5), (-1.0, 3.0), (0.0, 1.5), (1.0, 2.5)]
        .into_iter()
        .enumerate()
    {
        waypoints.push(wp(empty_s + 3.0 * (i + 1) as f64, x, y));
    }
    let mut a = actor(1, waypoints, Vec::new());
    a.status.push(cue(empty_s, StatusAction::Standing));
    scenario(vec![a], empty_s + 15.0, seed)
}

pub fn empty_scenario(duration: f64, seed: u64) -> Scenario {
    scenario(Vec::new(), duration, seed)
}
