//! Append-only JSONL log backing the experiment service.
//!
//! Every accepted session and response is written as one line and synced to
//! disk before the caller is acknowledged. At startup the log is replayed to
//! rebuild the in-memory dataset.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use loshot_core::response_data::{jsonl_line, LogLine, RecordOutcome};
use loshot_core::{Dataset, Result, Session, TrialRecord};

pub const LOG_FILE: &str = "responses.jsonl";

pub struct Store {
    path: PathBuf,
    file: File,
    dataset: Dataset,
}

impl Store {
    pub fn open(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(LOG_FILE);
        let dataset = match std::fs::read(&path) {
            Ok(bytes) => Dataset::load(&bytes)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Dataset::new(),
            Err(e) => return Err(e.into()),
        };
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self { path, file, dataset })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    fn append(&mut self, line: &LogLine) -> Result<()> {
        self.file.write_all(&jsonl_line(line))?;
        self.file.sync_data()?;
        Ok(())
    }

    pub fn add_session(&mut self, session: Session) -> Result<()> {
        self.dataset.check_session(&session)?;
        self.append(&LogLine::Session(session.clone()))?;
        self.dataset.add_session(session)
    }

    pub fn record_response(&mut self, record: TrialRecord) -> Result<RecordOutcome> {
        match self.dataset.check_response(&record)? {
            RecordOutcome::Duplicate => Ok(RecordOutcome::Duplicate),
            RecordOutcome::Appended => {
                self.append(&LogLine::Record(record.clone()))?;
                self.dataset.record_response(record)
            }
        }
    }
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("path", &self.path).finish()
    }
}
