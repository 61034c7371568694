//! Append-only JSON-lines log of qualitative records.
//!
//! Each entry is one line terminated by `\n`; the newline is the commit
//! marker, so a final line without one is a torn write and never counts.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use mipw_core::QualitativeRecord;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordLogEntry {
    pub seq: u64,
    pub timestamp: String,
    pub record: QualitativeRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TornTail {
    /// Byte offset where the incomplete line starts.
    pub offset: u64,
    pub len: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedLog {
    pub entries: Vec<RecordLogEntry>,
    /// Length of the prefix made of complete entries.
    pub valid_len: u64,
    pub torn_tail: Option<TornTail>,
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("record log: {0}")]
    Io(#[from] io::Error),
    #[error("record log corrupt at line {line} (byte {offset}), expected seq {expected_seq}: {reason}")]
    Corrupt {
        line: usize,
        offset: u64,
        expected_seq: u64,
        reason: String,
    },
    #[error("refusing to append invalid record: {0}")]
    Invalid(String),
}

/// Reads a log image. Complete lines must all be valid; an unterminated
/// final line is reported as a torn tail rather than an error.
pub fn parse_log(bytes: &[u8]) -> Result<LoadedLog, LogError> {
    let mut entries: Vec<RecordLogEntry> = Vec::new();
    let mut offset = 0usize;
    let mut line_no = 0usize;
    while offset < bytes.len() {
        let Some(rel_end) = bytes[offset..].iter().position(|&b| b == b'\n') else {
            return Ok(LoadedLog {
                entries,
                valid_len: offset as u64,
                torn_tail: Some(TornTail {
                    offset: offset as u64,
                    len: (bytes.len() - offset) as u64,
                }),
            });
        };
        line_no += 1;
        let line = &bytes[offset..offset + rel_end];
        let expected_seq = entries.last().map_or(1, |e| e.seq + 1);
        let corrupt = |reason: String| LogError::Corrupt {
            line: line_no,
            offset: offset as u64,
            expected_seq,
            reason,
        };
        let entry: RecordLogEntry = serde_json::from_slice(line).map_err(|e| corrupt(e.to_string()))?;
        if let Some(prev) = entries.last() {
            if entry.seq <= prev.seq {
                return Err(corrupt(format!("seq {} does not follow {}", entry.seq, prev.seq)));
            }
        }
        if let Err(errors) = entry.record.validate() {
            let reason = errors
                .iter()
                .map(|e| format!("{} {}", e.field, e.message))
                .collect::<Vec<_>>()
                .join("; ");
            return Err(corrupt(reason));
        }
        entries.push(entry);
        offset += rel_end + 1;
    }
    Ok(LoadedLog {
        entries,
        valid_len: bytes.len() as u64,
        torn_tail: None,
    })
}

/// Missing file reads as an empty log.
pub fn load_log(path: &Path) -> Result<LoadedLog, LogError> {
    match fs::read(path) {
        Ok(bytes) => parse_log(&bytes),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(LoadedLog {
            entries: Vec::new(),
            valid_len: 0,
            torn_tail: None,
        }),
        Err(e) => Err(e.into()),
    }
}

/// Single-writer handle. Not shared across processes.
#[derive(Debug)]
pub struct RecordLog {
    path: PathBuf,
    file: File,
    entries: Vec<RecordLogEntry>,
}

impl RecordLog {
    /// Opens for appending. A torn tail is cut off (and returned) so the next
    /// append starts on a line boundary; mid-log corruption is an error.
    pub fn open(path: &Path) -> Result<(RecordLog, Option<TornTail>), LogError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let loaded = load_log(path)?;
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        if let Some(tail) = loaded.torn_tail {
            log::warn!(
                "{}: dropping {} byte(s) of incomplete entry at offset {}",
                path.display(),
                tail.len,
                tail.offset
            );
            file.set_len(loaded.valid_len)?;
            file.sync_all()?;
        }
        Ok((
            RecordLog {
                path: path.to_path_buf(),
                file,
                entries: loaded.entries,
            },
            loaded.torn_tail,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn entries(&self) -> &[RecordLogEntry] {
        &self.entries
    }

    pub fn append(&mut self, record: QualitativeRecord) -> Result<RecordLogEntry, LogError> {
        if let Err(errors) = record.validate() {
            return Err(LogError::Invalid(
                errors.iter().map(|e| format!("{} {}", e.field, e.message)).collect::<Vec<_>>().join("; "),
            ));
        }
        let entry = RecordLogEntry {
            seq: self.entries.last().map_or(1, |e| e.seq + 1),
            timestamp: crate::now_rfc3339(),
            record,
        };
        let mut line = serde_json::to_vec(&entry).expect("entry serializes");
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()?;
        self.entries.push(entry.clone());
        Ok(entry)
    }
}

/// Latest record per (sentence, model, annotator), ordered by that key.
pub fn latest_per_key(entries: &[RecordLogEntry]) -> Vec<QualitativeRecord> {
    let mut latest: BTreeMap<(String, String, String), &RecordLogEntry> = BTreeMap::new();
    for e in entries {
        let r = &e.record;
        let key = (r.sentence_id.clone(), r.model_id.clone(), r.annotator_id.clone());
        match latest.get(&key) {
            Some(prev) if prev.seq > e.seq => {}
            _ => {
                latest.insert(key, e);
            }
        }
    }
    latest.into_values().map(|e| e.record.clone()).collect()
}
