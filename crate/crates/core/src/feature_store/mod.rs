//! Stimulus catalogs, PCA projection to the feature space, keyword search and
//! the synthetic catalog generator used in tests and simulations.

mod catalog;
mod projection;
mod synthetic;

pub use catalog::{
    keyword_search, load_catalog, Catalog, CatalogError, Catalogs, FeatureLookup, StimulusId, StimulusRecord,
};
pub use projection::{
    fit_projection, fit_projection_with, project, FeatureVector, PcaSolver, Projection, ProjectionError,
    DEFAULT_FEATURE_DIM, DENSE_PCA_MAX_DIM,
};
pub use synthetic::{generate_labeled_catalog, generate_synthetic_catalog, SyntheticCatalog, MIN_CENTER_SEPARATION};
