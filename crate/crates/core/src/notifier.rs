//! Fall-event delivery: synchronous local journaling, then asynchronous
//! dispatch to pluggable sinks on a background thread.

use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc::{self, Receiver, SyncSender, TrySendError};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use thiserror::Error;

use crate::status::FallEvent;

const QUEUE_CAPACITY: usize = 256;

#[derive(Debug, Error)]
pub enum NotifierError {
    #[error("cannot journal fall event to {path}: {source}")]
    Journal { path: PathBuf, source: io::Error },
    #[error("sink `{sink}` failed: {reason}")]
    Sink { sink: String, reason: String },
    #[error("notifier dispatcher unavailable; event journaled only")]
    Unavailable,
}

/// Destination for fall events.
pub trait FallSink: Send {
    fn name(&self) -> &str;
    fn deliver(&mut self, event: &FallEvent) -> Result<(), NotifierError>;
}

/// Appends one JSON object per line.
pub struct JournalSink {
    path: PathBuf,
    out: BufWriter<File>,
}

impl JournalSink {
    pub fn create(path: impl AsRef<Path>) -> Result<Self, NotifierError> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|source| NotifierError::Journal {
                path: path.clone(),
                source,
            })?;
        Ok(Self {
            path,
            out: BufWriter::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl FallSink for JournalSink {
    fn name(&self) -> &str {
        "journal"
    }

    fn deliver(&mut self, event: &FallEvent) -> Result<(), NotifierError> {
        let line = serde_json::to_string(event).expect("fall events serialize");
        writeln!(self.out, "{line}")
            .and_then(|_| self.out.flush())
            .map_err(|source| NotifierError::Journal {
                path: self.path.clone(),
                source,
            })
    }
}

/// HTTP POST of the event JSON to a fixed URL.
pub struct WebhookSink {
    url: String,
    agent: ureq::Agent,
}

impl WebhookSink {
    pub fn new(url: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(5)))
            .build()
            .new_agent();
        Self {
            url: url.into(),
            agent,
        }
    }
}

impl FallSink for WebhookSink {
    fn name(&self) -> &str {
        &self.url
    }

    fn deliver(&mut self, event: &FallEvent) -> Result<(), NotifierError> {
        let body = serde_json::to_string(event).expect("fall events serialize");
        self.agent
            .post(&self.url)
            .header("Content-Type", "application/json")
            .send(body)
            .map(|_| ())
            .map_err(|e| NotifierError::Sink {
                sink: self.url.clone(),
                reason: e.to_string(),
            })
    }
}

/// Collects events in memory; cloning shares the buffer.
#[derive(Clone, Default)]
pub struct MemorySink {
    events: Arc<Mutex<Vec<FallEvent>>>,
}

impl MemorySink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn events(&self) -> Vec<FallEvent> {
        self.events.lock().expect("memory sink lock").clone()
    }
}

impl FallSink for MemorySink {
    fn name(&self) -> &str {
        "memory"
    }

    fn deliver(&mut self, event: &FallEvent) -> Result<(), NotifierError> {
        self.events
            .lock()
            .expect("memory sink lock")
            .push(event.clone());
        Ok(())
    }
}

/// Delivery counts reported by the dispatcher at shutdown.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DispatchReport {
    pub delivered: u64,
    pub failed: u64,
}

/// Journals each event before handing it to the dispatcher thread.
pub struct Notifier {
    journal: Option<JournalSink>,
    tx: Option<SyncSender<FallEvent>>,
    handle: Option<JoinHandle<DispatchReport>>,
    journaled: u64,
}

impl Notifier {
    pub fn new(journal: Option<JournalSink>, sinks: Vec<Box<dyn FallSink>>) -> Self {
        let (tx, handle) = if sinks.is_empty() {
            (None, None)
        } else {
            let (tx, rx) = mpsc::sync_channel(QUEUE_CAPACITY);
            let handle = std::thread::Builder::new()
                .name("mmtrack-notifier".into())
                .spawn(move || dispatch(rx, sinks))
                .expect("spawn notifier thread");
            (Some(tx), Some(handle))
        };
        Self {
            journal,
            tx,
            handle,
            journaled: 0,
        }
    }

    /// A notifier that drops everything.
    pub fn disabled() -> Self {
        Self::new(None, Vec::new())
    }

    pub fn journaled(&self) -> u64 {
        self.journaled
    }

    pub fn notify(&mut self, event: &FallEvent) -> Result<(), NotifierError> {
        if let Some(j) = self.journal.as_mut() {
            j.deliver(event)?;
            self.journaled += 1;
        }
        match &self.tx {
            None => Ok(()),
            Some(tx) => match tx.try_send(event.clone()) {
                Ok(()) => Ok(()),
                Err(TrySendError::Full(_)) | Err(TrySendError::Disconnected(_)) => {
                    Err(NotifierError::Unavailable)
                }
            },
        }
    }

    /// Close the queue and wait for pending deliveries.
    pub fn shutdown(mut self) -> DispatchReport {
        self.finish()
    }

    fn finish(&mut self) -> DispatchReport {
        self.tx = None;
        self.handle
            .take()
            .and_then(|h| h.join().ok())
            .unwrap_or_default()
    }
}

impl Drop for Notifier {
    fn drop(&mut self) {
        self.finish();
    }
}

fn dispatch(rx: Receiver<FallEvent>, mut sinks: Vec<Box<dyn FallSink>>) -> DispatchReport {
    let mut report = DispatchReport::default();
    for event in rx {
        for sink in sinks.iter_mut() {
            match sink.deliver(&event) {
                Ok(()) => report.delivered += 1,
                Err(_) => report.failed += 1,
            }
        }
    }
    report
}
