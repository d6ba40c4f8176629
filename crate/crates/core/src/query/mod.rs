//! Query generation: uniform random queries over unseen catalog items, and
//! cluster-seeded queries built from prior users' final designs.

mod clustered;
mod corpus;
mod ward;

use std::collections::BTreeSet;

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feature_store::{Catalog, StimulusId};
use crate::{rng, Modality, Scalar, SignalType};

pub use clustered::{clustered_query, clustered_query_from_entries};
pub(crate) use corpus::write_design_lines;
pub use corpus::{CorpusError, DesignCorpus, DesignEntry, DesignLine};
pub use ward::ward_clustering;

/// Items shown per query in the product.
pub const QUERY_SIZE: usize = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("catalog has {have} items, a query needs {needed}")]
    CatalogTooSmall { needed: usize, have: usize },
    #[error("cluster count {k} invalid for {n} points")]
    BadK { k: usize, n: usize },
    #[error("need {needed} distinct designs, have {have}")]
    InsufficientData { needed: usize, have: usize },
}

/// A set of stimuli of one modality shown together; the "none of these"
/// option is implicit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub modality: Modality,
    pub signal_type: SignalType,
    pub item_ids: Vec<StimulusId>,
}

impl Query {
    pub fn len(&self) -> usize {
        self.item_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_ids.is_empty()
    }

    pub fn contains(&self, id: StimulusId) -> bool {
        self.item_ids.contains(&id)
    }
}

/// Three distinct ids drawn uniformly from the items not in `exclude`. When
/// fewer than three remain, `exclude` is ignored.
pub fn random_query<F: Scalar>(
    catalog: &Catalog<F>,
    signal_type: SignalType,
    exclude: &BTreeSet<StimulusId>,
    seed: u64,
) -> Result<Query, QueryError> {
    random_query_sized(catalog, signal_type, exclude, QUERY_SIZE, seed)
}

pub fn random_query_sized<F: Scalar>(
    catalog: &Catalog<F>,
    signal_type: SignalType,
    exclude: &BTreeSet<StimulusId>,
    size: usize,
    seed: u64,
) -> Result<Query, QueryError> {
    if catalog.len() < size {
        return Err(QueryError::CatalogTooSmall { needed: size, have: catalog.len() });
    }
    let mut eligible: Vec<StimulusId> = catalog.ids().filter(|id| !exclude.contains(id)).collect();
    if eligible.len() < size {
        eligible = catalog.ids().collect();
    }
    let mut rng = rng::seeded(seed);
    let item_ids = index::sample(&mut rng, eligible.len(), size).into_iter().map(|i| eligible[i]).collect();
    Ok(Query { modality: catalog.modality(), signal_type, item_ids })
}
