use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use super::PreferenceError;
use crate::feature_store::{FeatureLookup, FeatureVector, StimulusId, DEFAULT_FEATURE_DIM};
use crate::linalg::dot;
use crate::query::Query;
use crate::Scalar;

/// One unit of preference evidence: `winner` was picked over `loser`.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison<F> {
    pub winner: FeatureVector<F>,
    pub loser: FeatureVector<F>,
}

impl<F: Scalar> Comparison<F> {
    pub fn new(winner: FeatureVector<F>, loser: FeatureVector<F>) -> Self {
        Comparison { winner, loser }
    }

    fn difference(&self) -> Vec<F> {
        self.winner.as_slice().iter().zip(self.loser.as_slice()).map(|(&w, &l)| w - l).collect()
    }
}

// serialised as `[winner, loser]`
impl<F: Serialize> Serialize for Comparison<F> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (&self.winner, &self.loser).serialize(s)
    }
}

impl<'de, F: Deserialize<'de>> Deserialize<'de> for Comparison<F> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (winner, loser) = <(FeatureVector<F>, FeatureVector<F>)>::deserialize(d)?;
        Ok(Comparison { winner, loser })
    }
}

/// The user's answer to a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    /// Index into the query's items.
    Selected(usize),
    /// "None of these".
    None,
}

impl Serialize for Choice {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Choice::Selected(i) => s.serialize_u64(*i as u64),
            Choice::None => s.serialize_str("none"),
        }
    }
}

impl<'de> Deserialize<'de> for Choice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Wire {
            Index(u64),
            Word(String),
        }
        match Wire::deserialize(d)? {
            Wire::Index(i) => Ok(Choice::Selected(i as usize)),
            Wire::Word(w) if w == "none" => Ok(Choice::None),
            Wire::Word(w) => Err(serde::de::Error::custom(format!("choice must be an index or \"none\", got \"{w}\""))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub query: Query,
    pub choice: Choice,
}

/// Optimiser settings for [`fit_weights_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    /// Nominal step size; capped at `1 / L` for the objective's curvature `L`.
    pub step: f64,
    pub iterations: usize,
    /// Weight of the `‖ω‖²` penalty.
    pub l2: f64,
    /// Radius of the ball `ω` is kept in.
    pub max_norm: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { step: 0.5, iterations: 500, l2: 0.01, max_norm: 10.0 }
    }
}

/// Preference state for one (signal type, modality) design thread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceModel<F> {
    pub omega: Vec<F>,
    pub comparisons: Vec<Comparison<F>>,
    pub seen_ids: BTreeSet<StimulusId>,
}

impl<F: Scalar> Default for PreferenceModel<F> {
    fn default() -> Self {
        Self::new(DEFAULT_FEATURE_DIM)
    }
}

impl<F: Scalar> PreferenceModel<F> {
    pub fn new(dim: usize) -> Self {
        PreferenceModel { omega: vec![F::zero(); dim], comparisons: Vec::new(), seen_ids: BTreeSet::new() }
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    pub fn score(&self, feature: &FeatureVector<F>) -> F {
        dot(&self.omega, feature.as_slice())
    }

    /// In-place form of [`record_response`].
    pub fn record<L: FeatureLookup<F>>(
        &mut self,
        response: &QueryResponse,
        features: &L,
    ) -> Result<(), PreferenceError> {
        let ids = &response.query.item_ids;
        let mut item_features = Vec::with_capacity(ids.len());
        for &id in ids {
            let f = features.feature(id).ok_or(PreferenceError::UnknownStimulus(id))?;
            if f.len() != self.dim() {
                return Err(PreferenceError::DimensionMismatch { expected: self.dim(), got: f.len() });
            }
            item_features.push(f);
        }
        if let Choice::Selected(idx) = response.choice {
            if idx >= ids.len() {
                return Err(PreferenceError::ChoiceOutOfRange { index: idx, len: ids.len() });
            }
            let winner = item_features[idx];
            for (j, loser) in item_features.iter().enumerate() {
                if j != idx {
                    self.comparisons.push(Comparison::new(winner.clone(), (*loser).clone()));
                }
            }
            self.omega = fit_weights_with(&self.comparisons, self.dim(), &FitConfig::default());
        }
        self.seen_ids.extend(ids.iter().copied());
        Ok(())
    }
}

/// Folds one query answer into `model`: a pick adds "chosen beats each other
/// item" comparisons and refits ω; "none" only marks the items seen.
pub fn record_response<F: Scalar, L: FeatureLookup<F>>(
    model: &PreferenceModel<F>,
    response: &QueryResponse,
    features: &L,
) -> Result<PreferenceModel<F>, PreferenceError> {
    let mut next = model.clone();
    next.record(response, features)?;
    Ok(next)
}

/// Regularised Bradley-Terry fit with default settings. Returns a zero vector
/// of the default feature dimension when there is no evidence.
pub fn fit_weights<F: Scalar>(comparisons: &[Comparison<F>]) -> Vec<F> {
    let dim = comparisons.first().map_or(DEFAULT_FEATURE_DIM, |c| c.winner.len());
    fit_weights_with(comparisons, dim, &FitConfig::default())
}

/// Maximises `Σ log σ(ω·(φ_w − φ_l)) − λ‖ω‖²` over `‖ω‖ ≤ max_norm` by
/// projected full-batch gradient ascent from zero.
pub fn fit_weights_with<F: Scalar>(comparisons: &[Comparison<F>], dim: usize, config: &FitConfig) -> Vec<F> {
    let mut omega = vec![F::zero(); dim];
    if comparisons.is_empty() {
        return omega;
    }
    let diffs: Vec<Vec<F>> = comparisons.iter().map(Comparison::difference).collect();
    let l2 = F::lit(config.l2);
    let two = F::lit(2.0);
    let max_norm = F::lit(config.max_norm);

    // The log-likelihood Hessian is bounded by Σ ΔΔᵀ / 4.
    let curvature = F::lit(0.25 * 1.05) * top_eigenvalue(&diffs, dim) + two * l2;
    let step = if curvature > F::zero() { F::lit(config.step).min(F::one() / curvature) } else { F::lit(config.step) };

    let mut grad = vec![F::zero(); dim];
    for _ in 0..config.iterations {
        for (g, &w) in grad.iter_mut().zip(&omega) {
            *g = -two * l2 * w;
        }
        for d in &diffs {
            let margin = dot(&omega, d);
            let weight = F::one() / (F::one() + margin.exp());
            for (g, &x) in grad.iter_mut().zip(d) {
                *g += weight * x;
            }
        }
        for (w, &g) in omega.iter_mut().zip(&grad) {
            *w += step * g;
        }
        let norm = dot(&omega, &omega).sqrt();
        if norm > max_norm {
            let shrink = max_norm / norm;
            for w in omega.iter_mut() {
                *w *= shrink;
            }
        }
    }
    omega
}

/// Largest eigenvalue of `Σ dᵢ dᵢᵀ` by power iteration.
fn top_eigenvalue<F: Scalar>(diffs: &[Vec<F>], dim: usize) -> F {
    let mut v = vec![F::one(); dim];
    for d in diffs {
        for (x, &y) in v.iter_mut().zip(d) {
            *x += y.abs();
        }
    }
    let mut estimate = F::zero();
    for _ in 0..100 {
        let norm = dot(&v, &v).sqrt();
        if norm == F::zero() {
            return F::zero();
        }
        for x in v.iter_mut() {
            *x /= norm;
        }
        let mut next = vec![F::zero(); dim];
        for d in diffs {
            let s = dot(d, &v);
            for (n, &x) in next.iter_mut().zip(d) {
                *n += s * x;
            }
        }
        estimate = dot(&v, &next);
        v = next;
    }
    estimate
}

/// Orders `ids` by `ω·φ` descending, ties by ascending id.
pub fn rank_candidates<F: Scalar, L: FeatureLookup<F>>(
    model: &PreferenceModel<F>,
    ids: &[StimulusId],
    features: &L,
) -> Result<Vec<StimulusId>, PreferenceError> {
    let mut scored = ids
        .iter()
        .map(|&id| features.feature(id).map(|f| (model.score(f), id)).ok_or(PreferenceError::UnknownStimulus(id)))
        .collect::<Result<Vec<_>, _>>()?;
    scored.sort_by(|(sa, ia), (sb, ib)| sb.partial_cmp(sa).unwrap_or(Ordering::Equal).then(ia.cmp(ib)));
    Ok(scored.into_iter().map(|(_, id)| id).collect())
}
