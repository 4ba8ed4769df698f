//! The database file: an 8-byte magic header followed by framed records.
//! A transaction is one contiguous run from `TxnBegin` to `TxnCommit`; bytes
//! after the last complete run are a torn write and are dropped on the next
//! append. Committed bytes are never rewritten.

mod codec;
mod record;

pub use codec::{decode_record, encode_record};
pub use record::{LogRecord, RecordKind};

use std::fs::{File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::types::Position;

pub const MAGIC: &[u8; 8] = b"GQLLOG01";
pub const HEADER_LEN: u64 = MAGIC.len() as u64;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("not a database file (bad magic)")]
    BadMagic,
    #[error("I/O failure: {0}")]
    Io(#[from] io::Error),
    #[error("checksum mismatch in record at {position}")]
    CrcMismatch { position: u64 },
    #[error("truncated record at {position}")]
    TruncatedRecord { position: u64 },
    #[error("unknown record kind {kind} at {position}")]
    UnknownKind { position: u64, kind: u8 },
    #[error("malformed record at {position}: {reason}")]
    Malformed { position: u64, reason: String },
    #[error("record payload too large ({0} bytes)")]
    PayloadTooLarge(usize),
    #[error("record references an unresolved provisional position")]
    UnresolvedReference,
    #[error("invalid transaction run: {0}")]
    InvalidRun(String),
    #[error("corrupt log at {position}: {reason}")]
    Corrupt { position: u64, reason: String },
}

impl Clone for StoreError {
    fn clone(&self) -> Self {
        match self {
            StoreError::Io(e) => StoreError::Io(io::Error::new(e.kind(), e.to_string())),
            StoreError::BadMagic => StoreError::BadMagic,
            StoreError::CrcMismatch { position } => StoreError::CrcMismatch {
                position: *position,
            },
            StoreError::TruncatedRecord { position } => StoreError::TruncatedRecord {
                position: *position,
            },
            StoreError::UnknownKind { position, kind } => StoreError::UnknownKind {
                position: *position,
                kind: *kind,
            },
            StoreError::Malformed { position, reason } => StoreError::Malformed {
                position: *position,
                reason: reason.clone(),
            },
            StoreError::PayloadTooLarge(n) => StoreError::PayloadTooLarge(*n),
            StoreError::UnresolvedReference => StoreError::UnresolvedReference,
            StoreError::InvalidRun(s) => StoreError::InvalidRun(s.clone()),
            StoreError::Corrupt { position, reason } => StoreError::Corrupt {
                position: *position,
                reason: reason.clone(),
            },
        }
    }
}

/// An open log file.
#[derive(Debug)]
pub struct Store {
    path: PathBuf,
    file: File,
    committed_end: u64,
    last_txn_id: u64,
}

impl Store {
    /// Opens (or creates) a log. A fresh file holds exactly the magic header.
    pub fn open(path: impl AsRef<Path>, create_if_missing: bool) -> Result<Store, StoreError> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(create_if_missing)
            .truncate(false)
            .open(&path)?;
        let len = file.metadata()?.len();
        if len == 0 && create_if_missing {
            file.write_all(MAGIC)?;
            file.sync_all()?;
            return Ok(Store {
                path,
                file,
                committed_end: HEADER_LEN,
                last_txn_id: 0,
            });
        }
        let mut bytes = Vec::with_capacity(len as usize);
        file.read_to_end(&mut bytes)?;
        let (committed_end, last_txn_id) = scan(&bytes)?;
        Ok(Store {
            path,
            file,
            committed_end,
            last_txn_id,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// End of the last complete transaction run.
    pub fn committed_end(&self) -> u64 {
        self.committed_end
    }

    pub fn next_txn_id(&self) -> u64 {
        self.last_txn_id + 1
    }

    fn read_committed(&self) -> Result<Vec<u8>, StoreError> {
        let mut f = &self.file;
        f.seek(SeekFrom::Start(0))?;
        let mut bytes = vec![0u8; self.committed_end as usize];
        f.read_exact(&mut bytes)?;
        Ok(bytes)
    }

    /// Committed records at positions in `[from, committed_end)`; `from` must be
    /// a record boundary.
    pub fn read_range(&self, from: u64) -> Result<Vec<(Position, LogRecord)>, StoreError> {
        let bytes = self.read_committed()?;
        let mut out = Vec::new();
        let mut off = from.max(HEADER_LEN) as usize;
        while off < bytes.len() {
            let (rec, next) = decode_record(&bytes, off)?;
            out.push((Position::committed(off as u64), rec));
            off = next;
        }
        Ok(out)
    }

    /// Feeds every committed record, in position order, to `visit`.
    pub fn replay<E: From<StoreError>>(
        &self,
        mut visit: impl FnMut(Position, &LogRecord) -> Result<(), E>,
    ) -> Result<(), E> {
        let bytes = self.read_committed()?;
        let mut off = HEADER_LEN as usize;
        while off < bytes.len() {
            let (rec, next) = decode_record(&bytes, off)?;
            visit(Position::committed(off as u64), &rec)?;
            off = next;
        }
        Ok(())
    }

    /// Appends one transaction run with a single flushed write.
    ///
    /// `records` must start with `TxnBegin` and end with `TxnCommit`. A
    /// provisional reference `Position::provisional(i)` names the i-th record
    /// of the run and must point backwards. Returns the assigned position of
    /// every record, indexed like `records`.
    pub fn append_commit(&mut self, records: &[LogRecord]) -> Result<Vec<Position>, StoreError> {
        let resolved = self.resolve_run(records)?;
        let mut buf = Vec::new();
        for rec in &resolved.0 {
            buf.extend_from_slice(&encode_record(rec)?);
        }
        let start = self.committed_end;
        if let Err(e) = self.write_at(start, &buf) {
            let _ = self.file.set_len(start);
            return Err(e.into());
        }
        self.committed_end = start + buf.len() as u64;
        if let Some(LogRecord::TxnBegin { txn_id, .. }) = records.first() {
            self.last_txn_id = self.last_txn_id.max(*txn_id);
        }
        Ok(resolved.1)
    }

    fn write_at(&mut self, start: u64, buf: &[u8]) -> io::Result<()> {
        if self.file.metadata()?.len() != start {
            self.file.set_len(start)?;
        }
        self.file.seek(SeekFrom::Start(start))?;
        self.file.write_all(buf)?;
        self.file.sync_data()
    }

    /// Rewrites provisional references and computes final positions.
    pub fn resolve_run(
        &self,
        records: &[LogRecord],
    ) -> Result<(Vec<LogRecord>, Vec<Position>), StoreError> {
        match (records.first(), records.last()) {
            (Some(LogRecord::TxnBegin { .. }), Some(LogRecord::TxnCommit { .. }))
                if records.len() >= 2 => {}
            _ => {
                return Err(StoreError::InvalidRun(
                    "a run must start with TxnBegin and end with TxnCommit".into(),
                ))
            }
        }
        let inner = &records[1..records.len() - 1];
        if inner
            .iter()
            .any(|r| matches!(r, LogRecord::TxnBegin { .. } | LogRecord::TxnCommit { .. }))
        {
            return Err(StoreError::InvalidRun("nested transaction markers".into()));
        }
        let mut positions: Vec<Position> = Vec::with_capacity(records.len());
        let mut out = Vec::with_capacity(records.len());
        let mut next = self.committed_end;
        for (i, rec) in records.iter().enumerate() {
            let mut rec = rec.clone();
            let mut bad = None;
            rec.refs_mut(&mut |p| {
                if let Some(k) = p.provisional_index() {
                    match positions.get(k) {
                        Some(fin) if k < i => *p = *fin,
                        _ => bad = Some(k),
                    }
                } else if p.offset().is_some_and(|o| o >= self.committed_end) {
                    bad = Some(usize::MAX);
                }
            });
            if let Some(k) = bad {
                return Err(StoreError::InvalidRun(format!(
                    "record {i} has a forward or dangling reference ({k})"
                )));
            }
            let pos = Position::committed(next);
            next += encode_record(&rec)?.len() as u64;
            positions.push(pos);
            out.push(rec);
        }
        Ok((out, positions))
    }
}

/// Validates the header and finds the end of the last complete run.
fn scan(bytes: &[u8]) -> Result<(u64, u64), StoreError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(StoreError::BadMagic);
    }
    let mut off = MAGIC.len();
    let mut committed = off;
    let mut last_txn = 0;
    let mut open_run: Option<u64> = None;
    while off < bytes.len() {
        let (rec, next) = match decode_record(bytes, off) {
            Ok(x) => x,
            Err(StoreError::TruncatedRecord { .. }) => break,
            Err(e @ (StoreError::CrcMismatch { .. }
            | StoreError::UnknownKind { .. }
            | StoreError::Malformed { .. })) => {
                // garbage that runs to end of file is a torn write
                let declared = bytes
                    .get(off..off + 4)
                    .map(|h| u32::from_le_bytes(h.try_into().unwrap()) as usize + 8);
                if open_run.is_some() && declared.is_some_and(|d| off + d >= bytes.len()) {
                    break;
                }
                return Err(e);
            }
            Err(e) => return Err(e),
        };
        match (&rec, open_run) {
            (LogRecord::TxnBegin { txn_id, .. }, None) => open_run = Some(*txn_id),
            (LogRecord::TxnCommit { txn_id }, Some(id)) if *txn_id == id => {
                open_run = None;
                committed = next;
                last_txn = id;
            }
            (LogRecord::TxnBegin { .. } | LogRecord::TxnCommit { .. }, _) | (_, None) => {
                return Err(StoreError::Corrupt {
                    position: off as u64,
                    reason: format!("unexpected {:?} record", rec.kind()),
                })
            }
            _ => {}
        }
        off = next;
    }
    Ok((committed as u64, last_txn))
}
