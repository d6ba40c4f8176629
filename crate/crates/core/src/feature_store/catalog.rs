use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::projection::{fit_projection, FeatureVector, Projection, ProjectionError, DEFAULT_FEATURE_DIM};
use crate::{Modality, Scalar};

pub type StimulusId = u64;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line_no}: malformed record: {message}")]
    MalformedLine { line_no: usize, message: String },
    #[error("line {line_no}: embedding has length {got}, expected {expected}")]
    DimensionMismatch { line_no: usize, expected: usize, got: usize },
    #[error("duplicate stimulus id {0}")]
    DuplicateId(StimulusId),
    #[error("catalog has no records")]
    Empty,
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
}

/// One catalog item: a video, a sound clip or a head motion.
#[derive(Debug, Clone, PartialEq)]
pub struct StimulusRecord<F> {
    pub id: StimulusId,
    pub modality: Modality,
    pub name: String,
    pub keywords: Vec<String>,
    pub asset_ref: String,
    pub raw_embedding: Vec<F>,
}

/// On-disk shape of one corpus line.
#[derive(Debug, Serialize, Deserialize)]
struct CorpusLine<F> {
    id: StimulusId,
    name: String,
    keywords: Vec<String>,
    asset: String,
    embedding: Vec<F>,
}

/// Anything that can resolve a stimulus id to its feature vector.
pub trait FeatureLookup<F> {
    fn feature(&self, id: StimulusId) -> Option<&FeatureVector<F>>;
}

impl<F> FeatureLookup<F> for HashMap<StimulusId, FeatureVector<F>> {
    fn feature(&self, id: StimulusId) -> Option<&FeatureVector<F>> {
        self.get(&id)
    }
}

impl<F> FeatureLookup<F> for BTreeMap<StimulusId, FeatureVector<F>> {
    fn feature(&self, id: StimulusId) -> Option<&FeatureVector<F>> {
        self.get(&id)
    }
}

/// All stimuli of one modality with their projected features. Immutable once
/// built.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog<F> {
    modality: Modality,
    records: Vec<StimulusRecord<F>>,
    projection: Projection<F>,
    features: Vec<FeatureVector<F>>,
    index: HashMap<StimulusId, usize>,
}

impl<F: Scalar> Catalog<F> {
    /// Fits the projection on `records` and projects each of them.
    pub fn from_records(
        modality: Modality,
        records: Vec<StimulusRecord<F>>,
        feature_dim: usize,
    ) -> Result<Self, CatalogError> {
        if records.is_empty() {
            return Err(CatalogError::Empty);
        }
        let mut index = HashMap::with_capacity(records.len());
        for (pos, r) in records.iter().enumerate() {
            if index.insert(r.id, pos).is_some() {
                return Err(CatalogError::DuplicateId(r.id));
            }
        }
        let raw: Vec<&[F]> = records.iter().map(|r| r.raw_embedding.as_slice()).collect();
        let projection = fit_projection(&raw, feature_dim)?;
        let features = raw.iter().map(|r| projection.project(r)).collect::<Result<Vec<_>, _>>()?;
        Ok(Catalog { modality, records, projection, features, index })
    }

    /// Reads a JSON-lines corpus file and fits its projection.
    pub fn load(path: &Path, modality: Modality, feature_dim: usize) -> Result<Self, CatalogError> {
        let file = fs::File::open(path).map_err(|source| CatalogError::Io { path: path.to_owned(), source })?;
        let mut records = Vec::new();
        let mut dim: Option<usize> = None;
        let mut seen = HashMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|source| CatalogError::Io { path: path.to_owned(), source })?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: CorpusLine<F> = serde_json::from_str(&line)
                .map_err(|e| CatalogError::MalformedLine { line_no, message: e.to_string() })?;
            let expected = *dim.get_or_insert(parsed.embedding.len());
            if parsed.embedding.len() != expected {
                return Err(CatalogError::DimensionMismatch { line_no, expected, got: parsed.embedding.len() });
            }
            if parsed.embedding.iter().any(|x| !x.is_finite()) {
                return Err(CatalogError::MalformedLine { line_no, message: "non-finite embedding value".into() });
            }
            if seen.insert(parsed.id, line_no).is_some() {
                return Err(CatalogError::DuplicateId(parsed.id));
            }
            records.push(StimulusRecord {
                id: parsed.id,
                modality,
                name: parsed.name,
                keywords: parsed.keywords,
                asset_ref: parsed.asset,
                raw_embedding: parsed.embedding,
            });
        }
        Self::from_records(modality, records, feature_dim)
    }

    /// Writes the catalog in the corpus file format, records in order.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for r in &self.records {
            let line = CorpusLine {
                id: r.id,
                name: r.name.clone(),
                keywords: r.keywords.clone(),
                asset: r.asset_ref.clone(),
                embedding: r.raw_embedding.clone(),
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn records(&self) -> &[StimulusRecord<F>] {
        &self.records
    }

    pub fn projection(&self) -> &Projection<F> {
        &self.projection
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.projection.target_dim()
    }

    pub fn contains(&self, id: StimulusId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn record(&self, id: StimulusId) -> Option<&StimulusRecord<F>> {
        self.index.get(&id).map(|&i| &self.records[i])
    }

    /// Ids in record (file) order.
    pub fn ids(&self) -> impl Iterator<Item = StimulusId> + '_ {
        self.records.iter().map(|r| r.id)
    }

    /// Features in record order.
    pub fn features(&self) -> &[FeatureVector<F>] {
        &self.features
    }

    /// Id → feature map, e.g. for serialisation or tests.
    pub fn feature_map(&self) -> BTreeMap<StimulusId, FeatureVector<F>> {
        self.records.iter().map(|r| r.id).zip(self.features.iter().cloned()).collect()
    }
}

impl<F: Scalar> FeatureLookup<F> for Catalog<F> {
    fn feature(&self, id: StimulusId) -> Option<&FeatureVector<F>> {
        self.index.get(&id).map(|&i| &self.features[i])
    }
}

/// Loads one modality's corpus with the default 32-d projection.
pub fn load_catalog<F: Scalar>(path: &Path, modality: Modality) -> Result<Catalog<F>, CatalogError> {
    Catalog::load(path, modality, DEFAULT_FEATURE_DIM)
}

/// Ids whose name or keywords contain every whitespace-separated token of
/// `query_text` (case-insensitive substring match), ascending.
pub fn keyword_search<F: Scalar>(catalog: &Catalog<F>, query_text: &str) -> Vec<StimulusId> {
    let tokens: Vec<String> = query_text.split_whitespace().map(str::to_lowercase).collect();
    let mut ids: Vec<StimulusId> = catalog
        .records
        .iter()
        .filter(|r| {
            let name = r.name.to_lowercase();
            let keywords: Vec<String> = r.keywords.iter().map(|k| k.to_lowercase()).collect();
            tokens.iter().all(|t| name.contains(t.as_str()) || keywords.iter().any(|k| k.contains(t.as_str())))
        })
        .map(|r| r.id)
        .collect();
    ids.sort_unstable();
    ids
}

/// One catalog per modality.
#[derive(Debug, Clone)]
pub struct Catalogs<F> {
    pub visual: Catalog<F>,
    pub auditory: Catalog<F>,
    pub kinetic: Catalog<F>,
}

impl<F: Scalar> Catalogs<F> {
    pub fn get(&self, modality: Modality) -> &Catalog<F> {
        match modality {
            Modality::Visual => &self.visual,
            Modality::Auditory => &self.auditory,
            Modality::Kinetic => &self.kinetic,
        }
    }

    /// File name of a modality's corpus inside a corpus directory.
    pub fn file_name(modality: Modality) -> String {
        format!("{}.jsonl", modality.as_str())
    }

    /// Loads `visual.jsonl`, `auditory.jsonl` and `kinetic.jsonl` from `dir`.
    pub fn load_dir(dir: &Path, feature_dim: usize) -> Result<Self, CatalogError> {
        let paths = Modality::ALL.map(|m| dir.join(Self::file_name(m)));
        Self::load_paths(&paths, feature_dim)
    }

    /// Loads from explicit per-modality paths, ordered visual, auditory, kinetic.
    pub fn load_paths(paths: &[PathBuf; 3], feature_dim: usize) -> Result<Self, CatalogError> {
        Ok(Catalogs {
            visual: Catalog::load(&paths[0], Modality::Visual, feature_dim)?,
            auditory: Catalog::load(&paths[1], Modality::Auditory, feature_dim)?,
            kinetic: Catalog::load(&paths[2], Modality::Kinetic, feature_dim)?,
        })
    }

    pub fn write_dir(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for m in Modality::ALL {
            let file = fs::File::create(dir.join(Self::file_name(m)))?;
            let mut out = io::BufWriter::new(file);
            self.get(m).write_jsonl(&mut out)?;
            out.flush()?;
        }
        Ok(())
    }
}
