//! Core engine for interactive multimodal robot signal design.
//!
//! Users design a signal for each of four robot states by picking one
//! visual, one auditory and one kinetic component. The engine supports the
//! two ways of picking:
//!
//! * **query-based**: three candidates are shown, the user picks the best
//!   (or "none of these"); every pick becomes pairwise evidence for a linear
//!   preference `score = ω · φ` over 32-d PCA features ([`preference`]);
//! * **search-based**: the keyword-filtered catalog, ordered by the learned
//!   preference ([`feature_store::keyword_search`],
//!   [`preference::rank_candidates`]).
//!
//! First queries can be seeded from prior users' final designs by Ward
//! clustering them and drawing one design per cluster ([`query`]). The
//! [`eval`] module measures how well that works with a leave-one-out
//! harness scored by the max-cosine alignment metric.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the session and
//! evaluation layers work in `f64`, exposed through the aliases below.

pub mod eval;
pub mod feature_store;
mod linalg;
pub mod preference;
pub mod query;
pub mod rng;
mod scalar;
pub mod session;
mod signal;

pub use scalar::Scalar;
pub use signal::{Modality, ParseEnumError, SignalType};

pub use feature_store::{
    fit_projection, generate_synthetic_catalog, keyword_search, load_catalog, project, CatalogError, FeatureVector,
    Projection, ProjectionError, StimulusId, StimulusRecord, DEFAULT_FEATURE_DIM,
};
pub use preference::{
    cosine_similarity, fit_weights, query_alignment, rank_candidates, record_response, session_alignment, Choice,
    Comparison, PreferenceError, QueryResponse,
};
pub use query::{clustered_query, random_query, ward_clustering, Query, QueryError, QUERY_SIZE};

/// Catalog with `f64` features.
pub type Catalog = feature_store::Catalog<f64>;
/// Catalog with `f32` features.
pub type Catalog32 = feature_store::Catalog<f32>;
/// The three per-modality catalogs with `f64` features.
pub type Catalogs = feature_store::Catalogs<f64>;
/// Feature vector in `f64`.
pub type Feature = FeatureVector<f64>;
/// Feature vector in `f32`.
pub type Feature32 = FeatureVector<f32>;
/// PCA projection in `f64`.
pub type Projection64 = Projection<f64>;
/// PCA projection in `f32`.
pub type Projection32 = Projection<f32>;
/// Preference state for one design thread, `f64`.
pub type PreferenceModel = preference::PreferenceModel<f64>;
/// Preference state for one design thread, `f32`.
pub type PreferenceModel32 = preference::PreferenceModel<f32>;
