//! Append-only journal of audit-event batches.
//!
//! Each record is `[len: u32 BE][crc32: u32 BE][len bytes of JSON]`, where
//! the JSON is an array of events committed together. A record that is cut
//! short (or fails its checksum) at the very end of the file is a torn
//! write: it is dropped and the file truncated. The same damage anywhere
//! else is corruption and replay refuses to continue.

use std::fs::{File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use edi_van::AuditEvent;
use thiserror::Error;

const HEADER: usize = 8;

#[derive(Debug, Error)]
pub enum JournalError {
    #[error("journal {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("journal corrupt at byte {offset}: {reason}")]
    Corrupt { offset: u64, reason: String },
}

/// What reading the journal found.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Replay {
    pub batches: Vec<Vec<AuditEvent>>,
    /// Bytes of valid records.
    pub valid_len: u64,
    /// Bytes of a torn trailing record that were discarded.
    pub torn_bytes: u64,
}

impl Replay {
    pub fn events(&self) -> impl Iterator<Item = &AuditEvent> {
        self.batches.iter().flatten()
    }
}

pub fn encode_record(batch: &[AuditEvent]) -> Vec<u8> {
    let json = serde_json::to_vec(batch).expect("audit events serialize");
    let mut out = Vec::with_capacity(HEADER + json.len());
    out.extend_from_slice(&(json.len() as u32).to_be_bytes());
    out.extend_from_slice(&crc32fast::hash(&json).to_be_bytes());
    out.extend_from_slice(&json);
    out
}

/// Decode a whole journal image.
pub fn decode(bytes: &[u8]) -> Result<Replay, JournalError> {
    let mut replay = Replay::default();
    let mut at = 0usize;
    while at < bytes.len() {
        let rest = &bytes[at..];
        let torn = |replay: &mut Replay| {
            replay.torn_bytes = rest.len() as u64;
        };
        if rest.len() < HEADER {
            torn(&mut replay);
            break;
        }
        let len = u32::from_be_bytes(rest[..4].try_into().unwrap()) as usize;
        let crc = u32::from_be_bytes(rest[4..8].try_into().unwrap());
        if rest.len() - HEADER < len {
            torn(&mut replay);
            break;
        }
        let body = &rest[HEADER..HEADER + len];
        let last = HEADER + len == rest.len();
        if crc32fast::hash(body) != crc {
            if last {
                torn(&mut replay);
                break;
            }
            return Err(JournalError::Corrupt {
                offset: at as u64,
                reason: "checksum mismatch".into(),
            });
        }
        let batch: Vec<AuditEvent> = serde_json::from_slice(body).map_err(|e| JournalError::Corrupt {
            offset: at as u64,
            reason: format!("bad record: {e}"),
        })?;
        replay.batches.push(batch);
        at += HEADER + len;
        replay.valid_len = at as u64;
    }
    Ok(replay)
}

/// An open journal file positioned for appending.
#[derive(Debug)]
pub struct Journal {
    path: PathBuf,
    file: File,
}

impl Journal {
    /// Open (creating if needed), replay, and cut off any torn tail.
    pub fn open(path: &Path) -> Result<(Self, Replay), JournalError> {
        let io = |source| JournalError::Io {
            path: path.to_owned(),
            source,
        };
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)
            .map_err(io)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(io)?;
        let replay = decode(&bytes)?;
        if replay.torn_bytes > 0 {
            tracing::warn!(
                path = %path.display(),
                torn_bytes = replay.torn_bytes,
                "discarding torn record at the end of the journal"
            );
            file.set_len(replay.valid_len).map_err(io)?;
            file.sync_all().map_err(io)?;
        }
        file.seek(SeekFrom::End(0)).map_err(io)?;
        Ok((
            Self {
                path: path.to_owned(),
                file,
            },
            replay,
        ))
    }

    /// Append one batch and wait until it is on disk.
    pub fn append(&mut self, batch: &[AuditEvent]) -> Result<(), JournalError> {
        if batch.is_empty() {
            return Ok(());
        }
        let record = encode_record(batch);
        let io = |source| JournalError::Io {
            path: self.path.clone(),
            source,
        };
        self.file.write_all(&record).map_err(io)?;
        self.file.sync_data().map_err(io)
    }
}
