use std::collections::BTreeSet;

use rand::Rng;

use super::corpus::{DesignCorpus, DesignEntry};
use super::ward::ward_clustering;
use super::{Query, QueryError};
use crate::feature_store::StimulusId;
use crate::{rng, Modality, SignalType};

/// Cluster-seeded query: Ward-cluster the thread's prior designs into `k`
/// groups and draw one design uniformly from each group.
pub fn clustered_query(
    corpus: &DesignCorpus,
    signal_type: SignalType,
    modality: Modality,
    k: usize,
    seed: u64,
) -> Result<Query, QueryError> {
    let entries = corpus.restrict(signal_type, modality);
    clustered_query_from_entries(&entries, signal_type, modality, k, seed)
}

/// As [`clustered_query`], over an already restricted set of entries.
///
/// When a group's draw repeats an id picked for an earlier group, the draw is
/// repeated over that group's entries with unused ids, falling back to any
/// entry with an unused id.
pub fn clustered_query_from_entries(
    entries: &[&DesignEntry],
    signal_type: SignalType,
    modality: Modality,
    k: usize,
    seed: u64,
) -> Result<Query, QueryError> {
    let distinct: BTreeSet<StimulusId> = entries.iter().map(|e| e.chosen_id).collect();
    if k == 0 || entries.len() < k || distinct.len() < k {
        return Err(QueryError::InsufficientData { needed: k.max(1), have: distinct.len() });
    }
    let features: Vec<&[f64]> = entries.iter().map(|e| e.chosen_feature.as_slice()).collect();
    let labels = ward_clustering(&features, k)?;
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (pos, &l) in labels.iter().enumerate() {
        groups[l].push(pos);
    }

    let mut rng = rng::seeded(seed);
    let mut used = BTreeSet::new();
    let mut item_ids = Vec::with_capacity(k);
    for group in &groups {
        let mut id = entries[group[rng.random_range(0..group.len())]].chosen_id;
        if used.contains(&id) {
            let fresh: Vec<usize> = group.iter().copied().filter(|&p| !used.contains(&entries[p].chosen_id)).collect();
            let pool: Vec<usize> = if fresh.is_empty() {
                (0..entries.len()).filter(|&p| !used.contains(&entries[p].chosen_id)).collect()
            } else {
                fresh
            };
            id = entries[pool[rng.random_range(0..pool.len())]].chosen_id;
        }
        used.insert(id);
        item_ids.push(id);
    }
    Ok(Query { modality, signal_type, item_ids })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_store::FeatureVector;

    fn entry(user: &str, id: StimulusId, x: f64, y: f64) -> DesignEntry {
        DesignEntry {
            user: user.into(),
            signal_type: SignalType::Idle,
            modality: Modality::Visual,
            chosen_id: id,
            chosen_feature: FeatureVector::new(vec![x, y]),
        }
    }

    #[test]
    fn exactly_three_distinct_ids_forced() {
        let corpus = DesignCorpus::new(vec![
            entry("a", 1, 0.0, 0.0),
            entry("b", 2, 5.0, 0.0),
            entry("c", 3, 0.0, 5.0),
            entry("d", 2, 5.0, 0.0),
        ]);
        for seed in 0..20 {
            let q = clustered_query(&corpus, SignalType::Idle, Modality::Visual, 3, seed).unwrap();
            let mut ids = q.item_ids.clone();
            ids.sort();
            assert_eq!(ids, vec![1, 2, 3]);
        }
    }

    #[test]
    fn k_one_is_uniform_over_entries() {
        let corpus = DesignCorpus::new(vec![entry("a", 1, 0.0, 0.0), entry("b", 2, 1.0, 0.0)]);
        let mut hits = [0; 2];
        for seed in 0..400 {
            let q = clustered_query(&corpus, SignalType::Idle, Modality::Visual, 1, seed).unwrap();
            assert_eq!(q.len(), 1);
            hits[(q.item_ids[0] - 1) as usize] += 1;
        }
        assert!(hits[0] > 150 && hits[1] > 150, "{hits:?}");
    }

    #[test]
    fn collision_redraws_distinct_ids() {
        // group {1,1,1,4} and group {1}: the second group must fall back
        let corpus = DesignCorpus::new(vec![
            entry("a", 1, 0.0, 0.0),
            entry("b", 1, 0.0, 0.0),
            entry("c", 4, 0.1, 0.0),
            entry("d", 1, 0.0, 0.0),
            entry("e", 9, 50.0, 50.0),
        ]);
        for seed in 0..50 {
            let q = clustered_query(&corpus, SignalType::Idle, Modality::Visual, 3, seed).unwrap();
            let set: BTreeSet<_> = q.item_ids.iter().collect();
            assert_eq!(set.len(), 3, "{q:?}");
        }
    }

    #[test]
    fn insufficient_data() {
        let corpus = DesignCorpus::new(vec![entry("a", 1, 0.0, 0.0), entry("b", 1, 0.0, 0.0), entry("c", 2, 1.0, 1.0)]);
        assert_eq!(
            clustered_query(&corpus, SignalType::Idle, Modality::Visual, 3, 0),
            Err(QueryError::InsufficientData { needed: 3, have: 2 })
        );
        assert_eq!(
            clustered_query(&corpus, SignalType::Searching, Modality::Visual, 3, 0),
            Err(QueryError::InsufficientData { needed: 3, have: 0 })
        );
    }
}
