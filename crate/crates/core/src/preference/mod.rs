//! Linear preference model `score = ω · φ`: pairwise evidence from query
//! answers, the regularised Bradley-Terry fit of ω, preference-ordered search
//! results and the max-cosine alignment metric.

mod alignment;
mod model;

use thiserror::Error;

use crate::feature_store::StimulusId;

pub use alignment::{cosine_similarity, query_alignment, session_alignment};
pub use model::{
    fit_weights, fit_weights_with, rank_candidates, record_response, Choice, Comparison, FitConfig, PreferenceModel,
    QueryResponse,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PreferenceError {
    #[error("query has no items")]
    EmptyQuery,
    #[error("no queries to average over")]
    EmptyInput,
    #[error("unknown stimulus {0}")]
    UnknownStimulus(StimulusId),
    #[error("choice {index} out of range for a query of {len} items")]
    ChoiceOutOfRange { index: usize, len: usize },
    #[error("feature has dimension {got}, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}
