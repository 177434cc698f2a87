//! Append-only event log per session plus a JSON snapshot of its latest
//! view. Sessions are rebuilt by replaying their events.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use dosefind_core::designs::Outcome;
use serde::{Deserialize, Serialize};

use super::{CreateSession, SessionView};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Created {
        config: CreateSession,
        at_ms: u64,
    },
    Outcomes {
        /// Revision the batch was accepted at.
        revision: u64,
        outcomes: Vec<Outcome>,
        at_ms: u64,
    },
}

#[derive(Debug, Clone)]
pub struct Store {
    dir: PathBuf,
}

impl Store {
    pub fn open(dir: impl Into<PathBuf>) -> anyhow::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn session_dir(&self, id: &str) -> PathBuf {
        self.dir.join(id)
    }

    pub fn append(&self, id: &str, event: &Event) -> anyhow::Result<()> {
        let dir = self.session_dir(id);
        fs::create_dir_all(&dir)?;
        let mut f = OpenOptions::new().create(true).append(true).open(dir.join("events.jsonl"))?;
        let mut line = serde_json::to_vec(event)?;
        line.push(b'\n');
        f.write_all(&line)?;
        f.sync_data()?;
        Ok(())
    }

    pub fn write_snapshot(&self, view: &SessionView) -> anyhow::Result<()> {
        let dir = self.session_dir(&view.id);
        fs::create_dir_all(&dir)?;
        let tmp = dir.join("snapshot.json.tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(view)?)?;
        fs::rename(tmp, dir.join("snapshot.json"))?;
        Ok(())
    }

    /// Event logs of every stored session, keyed by session id.
    pub fn load_all(&self) -> anyhow::Result<Vec<(String, Vec<Event>)>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let entry = entry?;
            let path = entry.path().join("events.jsonl");
            if !path.is_file() {
                continue;
            }
            let id = entry.file_name().to_string_lossy().into_owned();
            let mut events = Vec::new();
            for (i, line) in BufReader::new(File::open(&path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str(&line) {
                    Ok(e) => events.push(e),
                    // a torn final line from a crash mid-write
                    Err(e) => {
                        tracing::warn!(session = %id, line = i + 1, error = %e, "ignoring unreadable event");
                        break;
                    }
                }
            }
            out.push((id, events));
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(out)
    }
}
