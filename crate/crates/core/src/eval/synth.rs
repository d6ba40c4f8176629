use std::collections::BTreeSet;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::simulate::{simulate_user, SimulatedUser};
use super::EvalError;
use crate::feature_store::{generate_labeled_catalog, Catalog, Catalogs, DEFAULT_FEATURE_DIM};
use crate::query::{random_query, DesignCorpus, DesignLine};
use crate::rng::{derive_seed, seeded};
use crate::{Modality, SignalType};

/// File name of the design corpus written next to the catalogs.
pub const DESIGNS_FILE: &str = "designs.jsonl";

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub seed: u64,
    pub users: usize,
    /// Number of preference groups users are split into.
    pub clusters: usize,
    pub catalog_size: usize,
    /// Latent blobs per catalog.
    pub latent_clusters: usize,
    /// Raw embedding width per modality, visual, auditory, kinetic.
    pub raw_dims: [usize; 3],
    pub queries_per_thread: usize,
    pub noise_temperature: f64,
    /// Spread of individual preferences around their group's prototype.
    pub preference_noise: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            seed: 0,
            users: 24,
            clusters: 3,
            catalog_size: 512,
            latent_clusters: 8,
            raw_dims: [96, 64, 32],
            queries_per_thread: 20,
            noise_temperature: 0.0,
            preference_noise: 0.15,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthStudy {
    pub catalogs: Catalogs<f64>,
    pub designs: Vec<DesignLine>,
    /// Preference group of each user, indexed like the `user-NN` tags.
    pub user_groups: Vec<usize>,
}

impl SynthStudy {
    pub fn corpus(&self) -> Result<DesignCorpus, EvalError> {
        Ok(DesignCorpus::from_lines(&self.designs, &self.catalogs)?)
    }

    /// Writes the three catalogs and `designs.jsonl` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> io::Result<()> {
        self.catalogs.write_dir(dir)?;
        let mut out = BufWriter::new(fs::File::create(dir.join(DESIGNS_FILE))?);
        for line in &self.designs {
            serde_json::to_writer(&mut out, line)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }
}

pub fn user_tag(index: usize) -> String {
    format!("user-{index:02}")
}

/// Generates catalogs and a design corpus from simulated users who share
/// preferences within groups: every group likes a different latent blob
/// per thread.
pub fn synthesize(params: &SynthParams) -> Result<SynthStudy, EvalError> {
    if params.users == 0 || params.clusters == 0 || params.queries_per_thread == 0 {
        return Err(EvalError::BadParams("users, clusters and queries per thread must be positive".into()));
    }
    if !(params.preference_noise >= 0.0 && params.preference_noise.is_finite()) {
        return Err(EvalError::BadParams("preference noise must be a non-negative number".into()));
    }

    let mut catalogs = Vec::with_capacity(3);
    let mut labels = Vec::with_capacity(3);
    for (m, modality) in Modality::ALL.into_iter().enumerate() {
        let synth = generate_labeled_catalog::<f64>(
            derive_seed(params.seed, &[0, m as u64]),
            params.catalog_size,
            params.raw_dims[m],
            modality,
            params.latent_clusters,
            DEFAULT_FEATURE_DIM,
        )?;
        catalogs.push(synth.catalog);
        labels.push(synth.labels);
    }
    let [visual, auditory, kinetic]: [Catalog<f64>; 3] = catalogs.try_into().expect("three modalities");
    let catalogs = Catalogs { visual, auditory, kinetic };

    // prototypes[signal][modality][group]
    let mut prototypes = Vec::new();
    for signal in SignalType::ALL {
        let mut per_modality = Vec::new();
        for (m, modality) in Modality::ALL.into_iter().enumerate() {
            let catalog = catalogs.get(modality);
            let mut blobs: Vec<usize> = (0..params.latent_clusters).collect();
            blobs.shuffle(&mut seeded(derive_seed(params.seed, &[1, signal.index() as u64, m as u64])));
            let groups: Vec<Vec<f64>> =
                (0..params.clusters).map(|g| blob_direction(catalog, &labels[m], blobs[g % blobs.len()])).collect();
            per_modality.push(groups);
        }
        prototypes.push(per_modality);
    }

    let user_groups: Vec<usize> = (0..params.users).map(|u| u % params.clusters).collect();
    let mut designs = Vec::with_capacity(params.users * 12);
    for (u, &group) in user_groups.iter().enumerate() {
        for signal in SignalType::ALL {
            for (m, modality) in Modality::ALL.into_iter().enumerate() {
                let thread = [u as u64, signal.index() as u64, m as u64];
                let catalog = catalogs.get(modality);
                let omega = perturb(
                    &prototypes[signal.index()][m][group],
                    params.preference_noise,
                    derive_seed(params.seed, &[2, thread[0], thread[1], thread[2]]),
                );
                let user = SimulatedUser {
                    hidden_omega: omega,
                    noise_temperature: params.noise_temperature,
                    seed: derive_seed(params.seed, &[3, thread[0], thread[1], thread[2]]),
                };
                let init = random_query(
                    catalog,
                    signal,
                    &BTreeSet::new(),
                    derive_seed(params.seed, &[4, thread[0], thread[1], thread[2]]),
                )?;
                let outcome = simulate_user(&user, catalog, signal, modality, &init, params.queries_per_thread)?;
                designs.push(DesignLine { user: user_tag(u), signal, modality, chosen_id: outcome.chosen_id });
            }
        }
    }
    Ok(SynthStudy { catalogs, designs, user_groups })
}

/// Unit vector towards the mean feature of one latent blob.
fn blob_direction(catalog: &Catalog<f64>, labels: &[usize], blob: usize) -> Vec<f64> {
    let dim = catalog.feature_dim();
    let mut mean = vec![0.0; dim];
    for (f, _) in catalog.features().iter().zip(labels).filter(|(_, &l)| l == blob) {
        for (acc, x) in mean.iter_mut().zip(f.as_slice()) {
            *acc += x;
        }
    }
    normalized(mean)
}

fn perturb(direction: &[f64], noise: f64, seed: u64) -> Vec<f64> {
    let mut rng = seeded(seed);
    let scale = noise / (direction.len() as f64).sqrt();
    normalized(direction.iter().map(|d| d + scale * rng.sample::<f64, _>(StandardNormal)).collect())
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        let mut e = vec![0.0; v.len()];
        e[0] = 1.0;
        return e;
    }
    v.into_iter().map(|x| x / norm).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthParams {
        SynthParams { users: 6, catalog_size: 64, raw_dims: [40, 36, 34], queries_per_thread: 8, ..Default::default() }
    }

    #[test]
    fn deterministic_and_complete() {
        let a = synthesize(&small()).unwrap();
        let b = synthesize(&small()).unwrap();
        assert_eq!(a.designs, b.designs);
        assert_eq!(a.designs.len(), 6 * 12);
        assert_eq!(a.user_groups, vec![0, 1, 2, 0, 1, 2]);
        let corpus = a.corpus().unwrap();
        assert_eq!(corpus.users().len(), 6);
    }

    #[test]
    fn groups_agree_more_than_strangers() {
        let study = synthesize(&small()).unwrap();
        let same = study
            .designs
            .iter()
            .filter(|d| d.user == user_tag(0))
            .zip(study.designs.iter().filter(|d| d.user == user_tag(3)))
            .filter(|(a, b)| a.chosen_id == b.chosen_id)
            .count();
        let other = study
            .designs
            .iter()
            .filter(|d| d.user == user_tag(0))
            .zip(study.designs.iter().filter(|d| d.user == user_tag(1)))
            .filter(|(a, b)| a.chosen_id == b.chosen_id)
            .count();
        assert!(same > other, "{same} vs {other}");
    }

    #[test]
    fn written_study_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let study = synthesize(&small()).unwrap();
        study.write_dir(dir.path()).unwrap();
        let cats = Catalogs::<f64>::load_dir(dir.path(), DEFAULT_FEATURE_DIM).unwrap();
        assert_eq!(cats.visual.features(), study.catalogs.visual.features());
        let corpus = DesignCorpus::load(&dir.path().join(DESIGNS_FILE), &cats).unwrap();
        assert_eq!(corpus.lines(), study.designs);
    }
}
