use std::fs::{self, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feature_store::StimulusId;
use crate::query::DesignLine;
use crate::{Modality, SignalType};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("store line {0} is corrupt")]
    StoreCorrupt(usize),
}

/// One finished signal: the three components a user settled on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignRecord {
    pub session_id: String,
    pub signal_type: SignalType,
    pub visual_id: StimulusId,
    pub auditory_id: StimulusId,
    pub kinetic_id: StimulusId,
    pub completed_at: DateTime<Utc>,
}

impl DesignRecord {
    pub fn component(&self, modality: Modality) -> StimulusId {
        match modality {
            Modality::Visual => self.visual_id,
            Modality::Auditory => self.auditory_id,
            Modality::Kinetic => self.kinetic_id,
        }
    }

    /// Design-corpus lines, one per modality in visual, auditory, kinetic order.
    pub fn corpus_lines(&self) -> [DesignLine; 3] {
        Modality::ALL.map(|m| DesignLine {
            user: self.session_id.clone(),
            signal: self.signal_type,
            modality: m,
            chosen_id: self.component(m),
        })
    }
}

/// Append-only JSON-lines file of [`DesignRecord`]s.
#[derive(Debug)]
pub struct DesignStore {
    path: PathBuf,
    records: Vec<DesignRecord>,
}

impl DesignStore {
    /// Opens the store at `path`, creating an empty one if it does not exist.
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let records = if path.exists() { read_records(path)? } else { Vec::new() };
        if !path.exists() {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|source| StoreError::Io { path: dir.to_owned(), source })?;
            }
            fs::File::create(path).map_err(|source| StoreError::Io { path: path.to_owned(), source })?;
        }
        Ok(DesignStore { path: path.to_owned(), records })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn records(&self) -> &[DesignRecord] {
        &self.records
    }

    pub fn records_for_session<'a>(&'a self, session_id: &'a str) -> impl Iterator<Item = &'a DesignRecord> + 'a {
        self.records.iter().filter(move |r| r.session_id == session_id)
    }

    /// Writes the record through to disk, then keeps it in memory.
    pub fn append(&mut self, record: DesignRecord) -> Result<(), StoreError> {
        let io_err = |source| StoreError::Io { path: self.path.clone(), source };
        let mut file = OpenOptions::new().append(true).create(true).open(&self.path).map_err(io_err)?;
        let mut line = serde_json::to_vec(&record).expect("design records serialise");
        line.push(b'\n');
        file.write_all(&line).map_err(io_err)?;
        file.flush().map_err(io_err)?;
        self.records.push(record);
        Ok(())
    }

    /// Rewrites every record to `path` in store order.
    pub fn save_to(&self, path: &Path) -> Result<(), StoreError> {
        let io_err = |source| StoreError::Io { path: path.to_owned(), source };
        let mut out = BufWriter::new(fs::File::create(path).map_err(io_err)?);
        for r in &self.records {
            serde_json::to_writer(&mut out, r).map_err(|e| io_err(e.into()))?;
            out.write_all(b"\n").map_err(io_err)?;
        }
        out.flush().map_err(io_err)
    }
}

fn read_records(path: &Path) -> Result<Vec<DesignRecord>, StoreError> {
    let file = fs::File::open(path).map_err(|source| StoreError::Io { path: path.to_owned(), source })?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|_| StoreError::StoreCorrupt(i + 1))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|_| StoreError::StoreCorrupt(i + 1))?);
    }
    Ok(records)
}

/// Converts the store at `store_path` into design-corpus lines, three per
/// record, and writes them to `out`.
pub fn export_designs<W: Write>(store_path: &Path, out: W) -> Result<usize, StoreError> {
    if !store_path.exists() {
        return Err(StoreError::Io {
            path: store_path.to_owned(),
            source: io::Error::new(io::ErrorKind::NotFound, "store does not exist"),
        });
    }
    let records = read_records(store_path)?;
    let lines: Vec<DesignLine> = records.iter().flat_map(DesignRecord::corpus_lines).collect();
    crate::query::write_design_lines(&lines, out)
        .map_err(|source| StoreError::Io { path: store_path.to_owned(), source })?;
    Ok(lines.len())
}
