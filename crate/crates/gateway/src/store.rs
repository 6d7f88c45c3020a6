//! Append-only JSON-lines record log.
//!
//! One record per line:
//!
//! ```text
//! {"seq":0,"message_id_hex":"..","index_hex":"..","payload_base64":"..","attached_at_ms":..,"crc32c_hex":".."}
//! ```
//!
//! The checksum covers `seq|message_id_hex|index_hex|payload_base64|attached_at_ms`.
//! A record is acknowledged only after its line is written and synced, so a
//! final line without its newline is an unacknowledged torn write and is
//! cut off on open. Any complete line that fails to parse or checksum
//! stops the open with the line number.

use std::fs::{self, File, OpenOptions, TryLockError};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use base64::prelude::{Engine, BASE64_STANDARD};
use ott_core::crypto::Digest;
use ott_core::index::parse_index_hex;
use ott_core::ledger::{LedgerRecord, RecordBook};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const LOG_FILE: &str = "ledger.jsonl";
pub const LOCK_FILE: &str = "gateway.lock";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store {0} is locked by another gateway")]
    Locked(PathBuf),
    #[error("store log {path} is corrupt at line {line}: {reason}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("store I/O on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Serialize, Deserialize)]
struct LogLine {
    seq: u64,
    message_id_hex: String,
    index_hex: String,
    payload_base64: String,
    attached_at_ms: u64,
    crc32c_hex: String,
}

impl LogLine {
    fn checksum(&self) -> String {
        let covered = format!(
            "{}|{}|{}|{}|{}",
            self.seq, self.message_id_hex, self.index_hex, self.payload_base64, self.attached_at_ms
        );
        format!("{:08x}", crc32c::crc32c(covered.as_bytes()))
    }

    fn from_record(record: &LedgerRecord) -> Self {
        let mut line = Self {
            seq: record.sequence,
            message_id_hex: record.message_id.to_hex(),
            index_hex: record.index.to_hex(),
            payload_base64: BASE64_STANDARD.encode(&record.payload),
            attached_at_ms: record.attached_at,
            crc32c_hex: String::new(),
        };
        line.crc32c_hex = line.checksum();
        line
    }

    fn into_record(self) -> Result<LedgerRecord, String> {
        if self.crc32c_hex != self.checksum() {
            return Err(format!(
                "checksum mismatch (stored {}, computed {})",
                self.crc32c_hex,
                self.checksum()
            ));
        }
        let hex32 = |s: &str, what: &str| -> Result<Digest, String> {
            parse_index_hex(s).map_err(|e| format!("bad {what}: {e}"))
        };
        Ok(LedgerRecord {
            message_id: hex32(&self.message_id_hex, "message id")?,
            index: hex32(&self.index_hex, "index")?,
            payload: BASE64_STANDARD
                .decode(&self.payload_base64)
                .map_err(|e| format!("bad payload: {e}"))?,
            attached_at: self.attached_at_ms,
            sequence: self.seq,
        })
    }
}

/// Exclusive handle on a store directory: the lock plus the open log.
#[derive(Debug)]
pub struct LogStore {
    dir: PathBuf,
    log: File,
    len: u64,
    _lock: File,
}

impl LogStore {
    /// Locks `dir`, replays its log into a [`RecordBook`], and opens the
    /// log for appending.
    pub fn open(dir: &Path) -> Result<(Self, RecordBook), StoreError> {
        let io_err = |path: &Path| {
            let path = path.to_owned();
            move |source| StoreError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io_err(dir))?;

        let lock_path = dir.join(LOCK_FILE);
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)
            .map_err(io_err(&lock_path))?;
        match lock.try_lock() {
            Ok(()) => {}
            Err(TryLockError::WouldBlock) => return Err(StoreError::Locked(dir.to_owned())),
            Err(TryLockError::Error(e)) => return Err(io_err(&lock_path)(e)),
        }

        let log_path = dir.join(LOG_FILE);
        let mut log = OpenOptions::new()
            .create(true)
            .truncate(false)
            .read(true)
            .append(true)
            .open(&log_path)
            .map_err(io_err(&log_path))?;
        let mut contents = Vec::new();
        log.read_to_end(&mut contents).map_err(io_err(&log_path))?;

        let complete = contents
            .iter()
            .rposition(|&b| b == b'\n')
            .map_or(0, |i| i + 1);
        if complete < contents.len() {
            log::warn!(
                "dropping {} bytes of torn tail from {}",
                contents.len() - complete,
                log_path.display()
            );
            log.set_len(complete as u64).map_err(io_err(&log_path))?;
            log.sync_all().map_err(io_err(&log_path))?;
        }

        let mut book = RecordBook::new();
        for (i, line) in contents[..complete].split(|&b| b == b'\n').enumerate() {
            let line_no = i + 1;
            if line.is_empty() {
                continue;
            }
            let corrupt = |reason: String| StoreError::Corrupt {
                path: log_path.clone(),
                line: line_no,
                reason,
            };
            let parsed: LogLine =
                serde_json::from_slice(line).map_err(|e| corrupt(e.to_string()))?;
            let record = parsed.into_record().map_err(corrupt)?;
            book.insert(record).map_err(|e| corrupt(e.to_string()))?;
        }

        Ok((
            Self {
                dir: dir.to_owned(),
                log,
                len: complete as u64,
                _lock: lock,
            },
            book,
        ))
    }

    /// Appends and syncs one record. Returns once it is durable.
    pub fn append(&mut self, record: &LedgerRecord) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(&LogLine::from_record(record))
            .expect("log line serialization is infallible");
        line.push(b'\n');
        let path = self.log_path();
        self.log
            .write_all(&line)
            .and_then(|_| self.log.sync_data())
            .map_err(|source| StoreError::Io { path, source })?;
        self.len += line.len() as u64;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), StoreError> {
        let path = self.log_path();
        self.log
            .sync_all()
            .map_err(|source| StoreError::Io { path, source })
    }

    pub fn log_path(&self) -> PathBuf {
        self.dir.join(LOG_FILE)
    }

    /// Bytes of the log; never decreases while the store is open.
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}
