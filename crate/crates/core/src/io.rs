//! Run artifacts on disk: trajectories and sync statistics as CSV, fall
//! events and posture reports as JSON lines, metrics as JSON.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::pipeline::PipelineOutputs;
use crate::status::FallEvent;
use crate::tracking::TrajectoryRow;

pub const TRAJECTORIES: &str = "trajectories.csv";
pub const EVENTS: &str = "events.jsonl";
pub const POSTURES: &str = "postures.jsonl";
pub const SYNC_STATS: &str = "sync_stats.csv";
pub const MODES: &str = "modes.csv";

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path} line {line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ArtifactError + '_ {
    move |source| ArtifactError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ArtifactError + '_ {
    move |source| ArtifactError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<(), ArtifactError> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_csv<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, ArtifactError> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize()
        .collect::<Result<_, _>>()
        .map_err(csv_err(path))
}

pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<(), ArtifactError> {
    let path = path.as_ref();
    let mut f = std::io::BufWriter::new(fs::File::create(path).map_err(io_err(path))?);
    for r in rows {
        let line = serde_json::to_string(r).expect("row serialises");
        writeln!(f, "{line}").map_err(io_err(path))?;
    }
    f.flush().map_err(io_err(path))
}

pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, ArtifactError> {
    let path = path.as_ref();
    let f = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|source| ArtifactError::Json {
                path: path.to_path_buf(),
                line: i + 1,
                source,
            })?,
        );
    }
    Ok(out)
}

/// Write every run artifact except the event journal, which the notifier
/// appends while running.
pub fn write_run_outputs(
    dir: impl AsRef<Path>,
    out: &PipelineOutputs,
) -> Result<(), ArtifactError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_csv(dir.join(TRAJECTORIES), &out.trajectories)?;
    write_jsonl(dir.join(POSTURES), &out.postures)?;
    write_csv(dir.join(SYNC_STATS), &out.sync_stats)?;
    write_csv(dir.join(MODES), &out.modes)
}

pub fn read_trajectories(dir: impl AsRef<Path>) -> Result<Vec<TrajectoryRow>, ArtifactError> {
    read_csv(dir.as_ref().join(TRAJECTORIES))
}

/// Fall events of a run directory; a missing journal means no events.
pub fn read_events(dir: impl AsRef<Path>) -> Result<Vec<FallEvent>, ArtifactError> {
    let path = dir.as_ref().join(EVENTS);
    if !path.exists() {
        return Ok(Vec::new());
    }
    read_jsonl(path)
}
