use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feature_store::{Catalogs, FeatureLookup, FeatureVector, StimulusId};
use crate::{Modality, SignalType};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line_no}: malformed design line: {message}")]
    MalformedLine { line_no: usize, message: String },
    #[error("line {line_no}: stimulus {id} not in the {modality} catalog")]
    UnknownStimulus { line_no: usize, id: StimulusId, modality: Modality },
}

/// One line of a design corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignLine {
    pub user: String,
    pub signal: SignalType,
    pub modality: Modality,
    pub chosen_id: StimulusId,
}

/// A final component choice by one prior user, joined with its feature.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignEntry {
    pub user: String,
    pub signal_type: SignalType,
    pub modality: Modality,
    pub chosen_id: StimulusId,
    pub chosen_feature: FeatureVector<f64>,
}

/// Prior users' final selections, the input of cluster-seeded queries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DesignCorpus {
    entries: Vec<DesignEntry>,
}

impl DesignCorpus {
    pub fn new(entries: Vec<DesignEntry>) -> Self {
        DesignCorpus { entries }
    }

    /// Joins design lines with catalog features.
    pub fn from_lines(lines: &[DesignLine], catalogs: &Catalogs<f64>) -> Result<Self, CorpusError> {
        let entries = lines
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let feature = catalogs.get(l.modality).feature(l.chosen_id).ok_or(CorpusError::UnknownStimulus {
                    line_no: i + 1,
                    id: l.chosen_id,
                    modality: l.modality,
                })?;
                Ok(DesignEntry {
                    user: l.user.clone(),
                    signal_type: l.signal,
                    modality: l.modality,
                    chosen_id: l.chosen_id,
                    chosen_feature: feature.clone(),
                })
            })
            .collect::<Result<_, CorpusError>>()?;
        Ok(DesignCorpus { entries })
    }

    pub fn parse_lines<R: BufRead>(reader: R) -> Result<Vec<DesignLine>, CorpusError> {
        let mut out = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| CorpusError::MalformedLine { line_no, message: e.to_string() })?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(
                serde_json::from_str(&line)
                    .map_err(|e| CorpusError::MalformedLine { line_no, message: e.to_string() })?,
            );
        }
        Ok(out)
    }

    pub fn load(path: &Path, catalogs: &Catalogs<f64>) -> Result<Self, CorpusError> {
        let file = fs::File::open(path).map_err(|source| CorpusError::Io { path: path.to_owned(), source })?;
        let lines = Self::parse_lines(BufReader::new(file))?;
        Self::from_lines(&lines, catalogs)
    }

    pub fn lines(&self) -> Vec<DesignLine> {
        self.entries
            .iter()
            .map(|e| DesignLine {
                user: e.user.clone(),
                signal: e.signal_type,
                modality: e.modality,
                chosen_id: e.chosen_id,
            })
            .collect()
    }

    pub fn write_jsonl<W: Write>(&self, out: W) -> io::Result<()> {
        write_design_lines(&self.lines(), out)
    }

    pub fn entries(&self) -> &[DesignEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries for one design thread.
    pub fn restrict(&self, signal: SignalType, modality: Modality) -> Vec<&DesignEntry> {
        self.entries.iter().filter(|e| e.signal_type == signal && e.modality == modality).collect()
    }

    /// Distinct user tags in order of first appearance.
    pub fn users(&self) -> Vec<&str> {
        let mut users: Vec<&str> = Vec::new();
        for e in &self.entries {
            if !users.contains(&e.user.as_str()) {
                users.push(&e.user);
            }
        }
        users
    }
}

pub(crate) fn write_design_lines<W: Write>(lines: &[DesignLine], mut out: W) -> io::Result<()> {
    for l in lines {
        serde_json::to_writer(&mut out, l)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
