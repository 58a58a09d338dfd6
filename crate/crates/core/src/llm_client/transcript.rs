use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{ChatRequest, Reply, TransportError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub seq: u64,
    /// Milliseconds since the Unix epoch.
    pub timestamp_ms: u64,
    pub request: ChatRequest,
    pub response: Option<String>,
    pub error: Option<String>,
    pub prompt_tokens: Option<u32>,
    pub completion_tokens: Option<u32>,
}

/// Ordered record of every request attempt, optionally mirrored to an
/// append-only JSONL file.
#[derive(Debug, Default)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
    sink: Option<File>,
}

impl Transcript {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Appends to `path`, creating it if needed. Entries already in the file
    /// are not loaded.
    pub fn append_to(path: &Path) -> io::Result<Self> {
        let sink = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            entries: Vec::new(),
            sink: Some(sink),
        })
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        let mut entries = Vec::new();
        for line in BufReader::new(File::open(path)?).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: TranscriptEntry =
                serde_json::from_str(&line).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
            entries.push(entry);
        }
        Ok(Self { entries, sink: None })
    }

    pub fn from_entries(entries: Vec<TranscriptEntry>) -> Self {
        Self { entries, sink: None }
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn record(&mut self, req: &ChatRequest, result: &Result<Reply, TransportError>) -> io::Result<()> {
        let timestamp_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        let (response, error, prompt_tokens, completion_tokens) = match result {
            Ok(r) => (Some(r.text.clone()), None, r.prompt_tokens, r.completion_tokens),
            Err(e) => (None, Some(e.to_string()), None, None),
        };
        let entry = TranscriptEntry {
            seq: self.entries.len() as u64,
            timestamp_ms,
            request: req.clone(),
            response,
            error,
            prompt_tokens,
            completion_tokens,
        };
        if let Some(sink) = &mut self.sink {
            let line = serde_json::to_string(&entry).map_err(io::Error::other)?;
            writeln!(sink, "{line}")?;
            sink.flush()?;
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).map_err(io::Error::other)?);
            out.push('\n');
        }
        std::fs::write(path, out)
    }
}
