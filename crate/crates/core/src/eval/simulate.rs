use std::collections::BTreeSet;

use rand::Rng;

use super::EvalError;
use crate::feature_store::{Catalog, FeatureLookup, StimulusId};
use crate::linalg::dot;
use crate::preference::{Choice, QueryResponse};
use crate::query::{random_query, Query};
use crate::rng::{derive_seed, seeded};
use crate::{Modality, SignalType};

/// Score percentile below which a whole query is rejected with "none".
pub const NONE_PERCENTILE: f64 = 0.2;

/// A synthetic participant with a fixed linear preference.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedUser {
    pub hidden_omega: Vec<f64>,
    /// Softmax temperature in score units; 0 picks the argmax.
    pub noise_temperature: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutcome {
    pub chosen_id: StimulusId,
    pub responses: Vec<QueryResponse>,
}

impl SimulationOutcome {
    pub fn queries(&self) -> impl Iterator<Item = &Query> {
        self.responses.iter().map(|r| &r.query)
    }
}

impl SimulatedUser {
    fn validate(&self, dim: usize) -> Result<(), EvalError> {
        if self.hidden_omega.len() != dim {
            return Err(EvalError::BadParams(format!(
                "hidden preference has dimension {}, catalog features {dim}",
                self.hidden_omega.len()
            )));
        }
        if self.hidden_omega.iter().any(|w| !w.is_finite()) || self.hidden_omega.iter().all(|&w| w == 0.0) {
            return Err(EvalError::BadParams("hidden preference must be finite and nonzero".into()));
        }
        if !(self.noise_temperature >= 0.0 && self.noise_temperature.is_finite()) {
            return Err(EvalError::BadParams("temperature must be a non-negative number".into()));
        }
        Ok(())
    }

    /// Index of the item picked from `scores`, or `None` for "none of these".
    fn choose(&self, scores: &[f64], threshold: f64, seed: u64) -> Choice {
        if scores.iter().all(|&s| s < threshold) {
            return Choice::None;
        }
        if self.noise_temperature == 0.0 {
            let mut best = 0;
            for (i, &s) in scores.iter().enumerate() {
                if s > scores[best] {
                    best = i;
                }
            }
            return Choice::Selected(best);
        }
        let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = scores.iter().map(|&s| ((s - top) / self.noise_temperature).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut draw = seeded(seed).random::<f64>() * total;
        for (i, w) in weights.iter().enumerate() {
            if draw < *w {
                return Choice::Selected(i);
            }
            draw -= w;
        }
        Choice::Selected(scores.len() - 1)
    }
}

/// Runs one design thread for a simulated user: answers `init_query` and then
/// random queries over unseen items, `max_queries` in total, and finally
/// settles on the best item it has seen.
pub fn simulate_user(
    user: &SimulatedUser,
    catalog: &Catalog<f64>,
    signal_type: SignalType,
    modality: Modality,
    init_query: &Query,
    max_queries: usize,
) -> Result<SimulationOutcome, EvalError> {
    if max_queries == 0 {
        return Err(EvalError::BadParams("max_queries must be at least 1".into()));
    }
    user.validate(catalog.feature_dim())?;
    if let Some(&bad) = init_query.item_ids.iter().find(|&&id| !catalog.contains(id)) {
        return Err(EvalError::BadParams(format!("initial query item {bad} not in the {modality} catalog")));
    }
    let score = |id: StimulusId| dot(&user.hidden_omega, catalog.feature(id).expect("checked id").as_slice());

    let mut all_scores: Vec<f64> = catalog.ids().map(score).collect();
    all_scores.sort_by(f64::total_cmp);
    let threshold = all_scores[((all_scores.len() - 1) as f64 * NONE_PERCENTILE).floor() as usize];

    let thread = [signal_type.index() as u64, modality.index() as u64];
    let mut seen = BTreeSet::new();
    let mut responses = Vec::with_capacity(max_queries);
    for i in 0..max_queries {
        let query = if i == 0 {
            init_query.clone()
        } else {
            random_query(catalog, signal_type, &seen, derive_seed(user.seed, &[thread[0], thread[1], i as u64]))?
        };
        let scores: Vec<f64> = query.item_ids.iter().map(|&id| score(id)).collect();
        let choice = user.choose(&scores, threshold, derive_seed(user.seed, &[thread[0], thread[1], i as u64, 1]));
        seen.extend(query.item_ids.iter().copied());
        responses.push(QueryResponse { query, choice });
    }

    let chosen_id = seen
        .iter()
        .copied()
        .map(|id| (score(id), id))
        .fold(None, |best: Option<(f64, StimulusId)>, (s, id)| match best {
            Some((bs, _)) if bs >= s => best,
            _ => Some((s, id)),
        })
        .map(|(_, id)| id)
        .ok_or_else(|| EvalError::BadParams("initial query is empty".into()))?;
    Ok(SimulationOutcome { chosen_id, responses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_store::generate_synthetic_catalog;
    use crate::preference::{cosine_similarity, PreferenceModel};
    use rand_distr::StandardNormal;

    fn unit_random(seed: u64, dim: usize) -> Vec<f64> {
        let mut rng = seeded(seed);
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = dot(&v, &v).sqrt();
        v.into_iter().map(|x| x / n).collect()
    }

    fn argmax_id(catalog: &Catalog<f64>, omega: &[f64]) -> StimulusId {
        let mut best = (f64::NEG_INFINITY, 0);
        for r in catalog.records() {
            let s = dot(omega, catalog.feature(r.id).unwrap().as_slice());
            if s > best.0 {
                best = (s, r.id);
            }
        }
        best.1
    }

    #[test]
    fn argmax_item_in_first_query_is_chosen() {
        let c: Catalog<f64> = generate_synthetic_catalog(1, 40, 16, Modality::Visual, 4).unwrap();
        let user = SimulatedUser { hidden_omega: unit_random(2, 32), noise_temperature: 0.0, seed: 3 };
        let best = argmax_id(&c, &user.hidden_omega);
        let other: Vec<StimulusId> = c.ids().filter(|&id| id != best).take(2).collect();
        let init = Query {
            modality: Modality::Visual,
            signal_type: SignalType::Idle,
            item_ids: vec![other[0], best, other[1]],
        };
        let out = simulate_user(&user, &c, SignalType::Idle, Modality::Visual, &init, 5).unwrap();
        assert_eq!(out.responses[0].choice, Choice::Selected(1));
        assert_eq!(out.chosen_id, best);
        assert_eq!(out.responses.len(), 5);
    }

    #[test]
    fn deterministic_given_seed() {
        let c: Catalog<f64> = generate_synthetic_catalog(4, 50, 16, Modality::Auditory, 3).unwrap();
        let user = SimulatedUser { hidden_omega: unit_random(5, 32), noise_temperature: 0.5, seed: 6 };
        let init = random_query(&c, SignalType::Searching, &BTreeSet::new(), 7).unwrap();
        let a = simulate_user(&user, &c, SignalType::Searching, Modality::Auditory, &init, 10).unwrap();
        let b = simulate_user(&user, &c, SignalType::Searching, Modality::Auditory, &init, 10).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exhaustive_viewing_finds_global_argmax() {
        let c: Catalog<f64> = generate_synthetic_catalog(8, 30, 16, Modality::Kinetic, 3).unwrap();
        for seed in 0..5 {
            let user = SimulatedUser { hidden_omega: unit_random(100 + seed, 32), noise_temperature: 0.0, seed };
            let init = random_query(&c, SignalType::HasItem, &BTreeSet::new(), seed).unwrap();
            let out = simulate_user(&user, &c, SignalType::HasItem, Modality::Kinetic, &init, 60).unwrap();
            let seen: BTreeSet<_> = out.queries().flat_map(|q| q.item_ids.iter().copied()).collect();
            assert_eq!(seen.len(), 30);
            assert_eq!(out.chosen_id, argmax_id(&c, &user.hidden_omega));
        }
    }

    #[test]
    fn rejects_queries_below_the_twentieth_percentile() {
        let c: Catalog<f64> = generate_synthetic_catalog(9, 50, 16, Modality::Visual, 1).unwrap();
        let user = SimulatedUser { hidden_omega: unit_random(10, 32), noise_temperature: 0.0, seed: 1 };
        let mut ranked: Vec<(f64, StimulusId)> =
            c.records().iter().map(|r| (dot(&user.hidden_omega, c.feature(r.id).unwrap().as_slice()), r.id)).collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
        let worst: Vec<StimulusId> = ranked.iter().take(3).map(|p| p.1).collect();
        let init = Query { modality: Modality::Visual, signal_type: SignalType::Idle, item_ids: worst };
        let out = simulate_user(&user, &c, SignalType::Idle, Modality::Visual, &init, 1).unwrap();
        assert_eq!(out.responses[0].choice, Choice::None);
    }

    #[test]
    fn bad_params() {
        let c: Catalog<f64> = generate_synthetic_catalog(9, 10, 4, Modality::Visual, 1).unwrap();
        let init = random_query(&c, SignalType::Idle, &BTreeSet::new(), 0).unwrap();
        let zero = SimulatedUser { hidden_omega: vec![0.0; 32], noise_temperature: 0.0, seed: 0 };
        assert!(matches!(
            simulate_user(&zero, &c, SignalType::Idle, Modality::Visual, &init, 3),
            Err(EvalError::BadParams(_))
        ));
        let ok = SimulatedUser { hidden_omega: unit_random(1, 32), noise_temperature: 0.0, seed: 0 };
        assert!(simulate_user(&ok, &c, SignalType::Idle, Modality::Visual, &init, 0).is_err());
        let hot = SimulatedUser { noise_temperature: -1.0, ..ok };
        assert!(simulate_user(&hot, &c, SignalType::Idle, Modality::Visual, &init, 3).is_err());
    }

    #[test]
    fn fifty_answers_recover_hidden_preference() {
        // isotropic catalog: one latent blob, features near unit scale
        let c: Catalog<f64> = generate_synthetic_catalog(21, 400, 40, Modality::Visual, 1).unwrap();
        let truth = unit_random(22, 32);
        let user = SimulatedUser { hidden_omega: truth.clone(), noise_temperature: 0.0, seed: 23 };
        let init = random_query(&c, SignalType::Idle, &BTreeSet::new(), 24).unwrap();
        let out = simulate_user(&user, &c, SignalType::Idle, Modality::Visual, &init, 50).unwrap();
        let mut model = PreferenceModel::<f64>::default();
        for r in &out.responses {
            model.record(r, &c).unwrap();
        }
        let cos = cosine_similarity(&model.omega, &truth);
        assert!(cos >= 0.8, "cosine {cos}");
    }
}
