//! Offline evaluation: simulated users, synthetic studies and the
//! leave-one-user-out comparison of query initialisation strategies.

mod loocv;
mod report;
mod simulate;
mod synth;

use thiserror::Error;

use crate::feature_store::{CatalogError, StimulusId};
use crate::preference::PreferenceError;
use crate::query::{CorpusError, QueryError};

pub use loocv::{aggregate, fold_scores, run_loocv, FoldScore, LoocvParams};
pub use report::{sign_test, summarize, AlignmentReport, AlignmentRow, ReportFormat, CSV_HEADER, POOLED};
pub use simulate::{simulate_user, SimulatedUser, SimulationOutcome, NONE_PERCENTILE};
pub use synth::{synthesize, user_tag, SynthParams, SynthStudy, DESIGNS_FILE};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("leave-one-out needs at least {needed} users, corpus has {have}")]
    InsufficientUsers { needed: usize, have: usize },
    #[error("stimulus {0} missing from its catalog")]
    UnknownStimulus(StimulusId),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Preference(#[from] PreferenceError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}
