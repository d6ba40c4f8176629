use rand::Rng;
use rand_distr::StandardNormal;

use super::catalog::{Catalog, CatalogError, StimulusRecord};
use super::projection::DEFAULT_FEATURE_DIM;
use crate::{rng, Modality, Scalar};

/// Synthetic catalog together with the latent blob each record came from.
#[derive(Debug, Clone)]
pub struct SyntheticCatalog<F> {
    pub catalog: Catalog<F>,
    /// `labels[i]` is the latent cluster of `catalog.records()[i]`.
    pub labels: Vec<usize>,
}

/// Minimum distance between latent cluster centers.
pub const MIN_CENTER_SEPARATION: f64 = 10.0;

const VISUAL_WORDS: [&str; 8] = ["spark", "wave", "pulse", "glow", "spin", "bounce", "fade", "blink"];
const AUDITORY_WORDS: [&str; 8] = ["chirp", "beep", "hum", "whistle", "chime", "buzz", "trill", "ping"];
const KINETIC_WORDS: [&str; 8] = ["nod", "tilt", "shake", "sweep", "bob", "turn", "dip", "peek"];

/// Stand-in for encoder output: `count` embeddings drawn from
/// `n_latent_clusters` unit-variance Gaussian blobs. Record `i` belongs to
/// blob `i % n_latent_clusters` and carries the keyword `c<blob>`.
pub fn generate_synthetic_catalog<F: Scalar>(
    seed: u64,
    count: usize,
    raw_dim: usize,
    modality: Modality,
    n_latent_clusters: usize,
) -> Result<Catalog<F>, CatalogError> {
    generate_labeled_catalog(seed, count, raw_dim, modality, n_latent_clusters, DEFAULT_FEATURE_DIM).map(|s| s.catalog)
}

pub fn generate_labeled_catalog<F: Scalar>(
    seed: u64,
    count: usize,
    raw_dim: usize,
    modality: Modality,
    n_latent_clusters: usize,
    feature_dim: usize,
) -> Result<SyntheticCatalog<F>, CatalogError> {
    if n_latent_clusters == 0 || count < n_latent_clusters || raw_dim == 0 || feature_dim == 0 {
        return Err(CatalogError::BadParams(format!(
            "need count >= clusters >= 1 and positive dimensions (count={count}, clusters={n_latent_clusters}, raw_dim={raw_dim})"
        )));
    }
    let mut rng = rng::seeded(seed);
    let centers = draw_centers(&mut rng, n_latent_clusters, raw_dim);

    let words = match modality {
        Modality::Visual => &VISUAL_WORDS,
        Modality::Auditory => &AUDITORY_WORDS,
        Modality::Kinetic => &KINETIC_WORDS,
    };
    let ext = match modality {
        Modality::Visual => "mp4",
        Modality::Auditory => "wav",
        Modality::Kinetic => "json",
    };

    let mut labels = Vec::with_capacity(count);
    let records = (0..count)
        .map(|i| {
            let label = i % n_latent_clusters;
            labels.push(label);
            let raw_embedding =
                centers[label].iter().map(|&c| F::lit(c + rng.sample::<f64, _>(StandardNormal))).collect();
            let word = words[rng.random_range(0..words.len())];
            StimulusRecord {
                id: i as u64,
                modality,
                name: format!("{word} {i}"),
                keywords: vec![format!("c{label}"), word.to_owned(), modality.as_str().to_owned()],
                asset_ref: format!("{}/{i:05}.{ext}", modality.as_str()),
                raw_embedding,
            }
        })
        .collect();
    let catalog = Catalog::from_records(modality, records, feature_dim)?;
    Ok(SyntheticCatalog { catalog, labels })
}

/// Centers pairwise at least `10 + 4 * sqrt(raw_dim)` apart, so even single
/// draws from different blobs stay more than 10 apart with overwhelming
/// probability.
fn draw_centers<R: Rng>(rng: &mut R, k: usize, dim: usize) -> Vec<Vec<f64>> {
    let required = MIN_CENTER_SEPARATION + 4.0 * (dim as f64).sqrt();
    let mut spread = required / (dim as f64).sqrt();
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut failures = 0;
    while centers.len() < k {
        let candidate: Vec<f64> = (0..dim).map(|_| spread * rng.sample::<f64, _>(StandardNormal)).collect();
        let ok = centers
            .iter()
            .all(|c| c.iter().zip(&candidate).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() >= required);
        if ok {
            centers.push(candidate);
        } else {
            failures += 1;
            if failures % 64 == 0 {
                spread *= 1.5;
            }
        }
    }
    centers
}
