//! `mmtrack` command line: simulate, run, evaluate, info, bench.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mmtrack::config::{load_config, PipelineConfig};
use mmtrack::evaluate::{evaluate, MatchCriteria};
use mmtrack::io::{read_events, read_trajectories, write_run_outputs, EVENTS};
use mmtrack::notifier::{FallSink, JournalSink, Notifier, WebhookSink};
use mmtrack::pipeline::STAGES;
use mmtrack::radar_math::{
    if_frequency_for_distance, interference_probability, range_resolution_for_bandwidth,
    ChirpParams,
};
use mmtrack::replay::{load_streams, run_recording, Pacing};
use mmtrack::simulator::{read_truth, simulate_to_dir, Scenario};

#[derive(Parser)]
#[command(
    name = "mmtrack",
    version,
    about = "Multi-radar human tracking and fall detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate radar streams and ground truth from a scenario file.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the pipeline over a recording directory.
    Run {
        /// Config file; falls back to $MMTRACK_CONFIG, then built-in defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        /// Replay speed factor; as fast as possible when omitted.
        #[arg(long)]
        speed: Option<f64>,
        /// Output directory; defaults to the input directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// POST every fall event to this URL.
        #[arg(long)]
        webhook: Option<String>,
    },
    /// Score a run directory against ground truth.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print radar link constants.
    Info,
    /// Measure pipeline throughput and per-stage latency over a recording.
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
    },
}

type CliResult = Result<(), Box<dyn std::error::Error>>;

fn resolve_config(path: Option<&Path>) -> Result<PipelineConfig, Box<dyn std::error::Error>> {
    let env = std::env::var_os("MMTRACK_CONFIG").map(PathBuf::from);
    match path.map(Path::to_path_buf).or(env) {
        Some(p) => Ok(load_config(p)?),
        None => Ok(PipelineConfig::default()),
    }
}

fn cmd_simulate(scenario: &Path, out: &Path, seed: Option<u64>) -> CliResult {
    let mut s = Scenario::load(scenario)?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    let stats = simulate_to_dir(&s, out)?;
    println!(
        "simulated {} frames: {} packets written, {} dropped, {} corrupted -> {}",
        stats.frames,
        stats.packets_written,
        stats.packets_dropped,
        stats.packets_corrupted,
        out.display()
    );
    Ok(())
}

fn cmd_run(
    config: Option<&Path>,
    input: &Path,
    speed: Option<f64>,
    out: Option<&Path>,
    webhook: Option<String>,
) -> CliResult {
    let cfg = resolve_config(config)?;
    let streams = load_streams(input)?;
    let out = out.unwrap_or(input);
    std::fs::create_dir_all(out)?;
    let journal_path = out.join(EVENTS);
    if journal_path.exists() {
        std::fs::remove_file(&journal_path)?;
    }
    let sinks: Vec<Box<dyn FallSink>> = webhook
        .into_iter()
        .map(|u| Box::new(WebhookSink::new(u)) as _)
        .collect();
    let notifier = Notifier::new(Some(JournalSink::create(&journal_path)?), sinks);
    let result = run_recording(&cfg, &streams, Pacing::from_speed(speed), notifier);
    write_run_outputs(out, &result.outputs)?;
    for e in &result.notifier_errors {
        eprintln!("warning: {e}");
    }
    let o = &result.outputs;
    println!(
        "{} packets ({} bad, {} stale), {} windows, {} processed ticks, {} trajectory rows, {} fall events, {} posture reports -> {}",
        result.replay.packets,
        o.bad_packets,
        o.stale_packets,
        o.windows,
        o.processed_ticks,
        o.trajectories.len(),
        o.events.len(),
        o.postures.len(),
        out.display()
    );
    Ok(())
}

fn cmd_evaluate(pred: &Path, truth: &Path, report: Option<&Path>) -> CliResult {
    let trajectories = read_trajectories(pred)?;
    let events = read_events(pred)?;
    let truth = read_truth(truth)?;
    let r = evaluate(&trajectories, &events, &truth, &MatchCriteria::default())?;
    let json = r.to_json();
    if let Some(path) = report {
        std::fs::write(path, &json)?;
    }
    println!("{json}");
    Ok(())
}

fn cmd_info() -> CliResult {
    let chirp = ChirpParams::default();
    println!(
        "range resolution (4 GHz sweep): {:.4} m",
        range_resolution_for_bandwidth(4.0e9)?
    );
    println!(
        "IF frequency at 4 m (70 MHz/us slope): {:.3} MHz",
        if_frequency_for_distance(
            &ChirpParams::new(70e12, chirp.chirp_duration, chirp.wavelength)?,
            4.0
        )? / 1e6
    );
    println!(
        "interference probability, 3 radars: {:.3}",
        interference_probability(3, 4.0e9, 5.6e6)?
    );
    println!("interference probability by radar count (4 GHz band, 5.6 MHz interference band):");
    println!("  radars  probability");
    for n in 1..=6 {
        println!(
            "  {n:>6}  {:.4}",
            interference_probability(n, 4.0e9, 5.6e6)?
        );
    }
    Ok(())
}

fn cmd_bench(config: Option<&Path>, input: &Path) -> CliResult {
    let cfg = resolve_config(config)?;
    let streams = load_streams(input)?;
    let result = run_recording(&cfg, &streams, Pacing::Fast, Notifier::disabled());
    let secs = result.replay.wall.as_secs_f64().max(1e-9);
    let o = &result.outputs;
    println!("radars: {}", streams.len());
    println!(
        "windows: {} ({:.1} windows/s)",
        o.windows,
        o.windows as f64 / secs
    );
    println!(
        "processed ticks: {} ({:.1} ticks/s)",
        o.processed_ticks,
        o.processed_ticks as f64 / secs
    );
    println!("wall time: {secs:.3} s");
    println!(
        "{:<12}{:>12}{:>12}{:>12}",
        "stage", "p50 us", "p95 us", "p99 us"
    );
    for (i, name) in STAGES.iter().enumerate() {
        let us = |q| result.timings.percentile(i, q).as_secs_f64() * 1e6;
        println!(
            "{name:<12}{:>12.1}{:>12.1}{:>12.1}",
            us(0.5),
            us(0.95),
            us(0.99)
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            scenario,
            out,
            seed,
        } => cmd_simulate(&scenario, &out, seed),
        Command::Run {
            config,
            input,
            speed,
            out,
            webhook,
        } => cmd_run(config.as_deref(), &input, speed, out.as_deref(), webhook),
        Command::Evaluate {
            pred,
            truth,
            report,
        } => cmd_evaluate(&pred, &truth, report.as_deref()),
        Command::Info => cmd_info(),
        Command::Bench { config, input } => cmd_bench(config.as_deref(), &input),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
