use std::collections::BTreeSet;

use rayon::prelude::*;

use super::report::{sign_test, AlignmentReport, AlignmentRow, POOLED};
use super::EvalError;
use crate::feature_store::{Catalog, Catalogs, FeatureLookup, FeatureVector, StimulusId};
use crate::preference::session_alignment;
use crate::query::{clustered_query_from_entries, random_query_sized, DesignCorpus, DesignEntry, Query};
use crate::rng::derive_seed;
use crate::{Modality, SignalType};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoocvParams {
    /// Items per query (and clusters per clustered query).
    pub k: usize,
    pub trials_per_fold: usize,
    pub seed: u64,
    /// Queries scored per thread; the first is the clustered or random one,
    /// the rest are random over unseen items.
    pub queries_per_thread: usize,
}

impl Default for LoocvParams {
    fn default() -> Self {
        LoocvParams { k: 3, trials_per_fold: 50, seed: 7, queries_per_thread: 1 }
    }
}

/// Both arms' mean alignment for one held-out user on one thread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldScore {
    pub fold: usize,
    pub signal_type: SignalType,
    pub modality: Modality,
    pub random: f64,
    pub clustered: f64,
}

/// Leave-one-user-out comparison of cluster-seeded and random first queries.
pub fn run_loocv(
    designs: &DesignCorpus,
    catalogs: &Catalogs<f64>,
    params: &LoocvParams,
) -> Result<AlignmentReport, EvalError> {
    let scores = fold_scores(designs, catalogs, params)?;
    Ok(aggregate(&scores))
}

/// Per-fold scores, ordered by fold, signal, modality.
pub fn fold_scores(
    designs: &DesignCorpus,
    catalogs: &Catalogs<f64>,
    params: &LoocvParams,
) -> Result<Vec<FoldScore>, EvalError> {
    if params.k == 0 || params.trials_per_fold == 0 || params.queries_per_thread == 0 {
        return Err(EvalError::BadParams("k, trials and queries per thread must be positive".into()));
    }
    let users = designs.users();
    if users.len() < params.k + 1 {
        return Err(EvalError::InsufficientUsers { needed: params.k + 1, have: users.len() });
    }
    let per_fold: Vec<Vec<FoldScore>> = users
        .par_iter()
        .enumerate()
        .map(|(fold, held_out)| {
            let mut out = Vec::new();
            for signal in SignalType::ALL {
                for modality in Modality::ALL {
                    let thread = designs.restrict(signal, modality);
                    let Some(target) = thread.iter().find(|e| e.user == *held_out) else { continue };
                    let others: Vec<&DesignEntry> = thread.iter().copied().filter(|e| e.user != *held_out).collect();
                    if others.is_empty() {
                        continue;
                    }
                    let (random, clustered) = score_thread(
                        &others,
                        catalogs.get(modality),
                        signal,
                        modality,
                        &target.chosen_feature,
                        params,
                        derive_seed(params.seed, &[fold as u64, signal.index() as u64, modality.index() as u64]),
                    )?;
                    out.push(FoldScore { fold, signal_type: signal, modality, random, clustered });
                }
            }
            Ok(out)
        })
        .collect::<Result<_, EvalError>>()?;
    Ok(per_fold.into_iter().flatten().collect())
}

fn score_thread(
    others: &[&DesignEntry],
    catalog: &Catalog<f64>,
    signal: SignalType,
    modality: Modality,
    target: &FeatureVector<f64>,
    params: &LoocvParams,
    thread_seed: u64,
) -> Result<(f64, f64), EvalError> {
    let distinct: BTreeSet<StimulusId> = others.iter().map(|e| e.chosen_id).collect();
    // degenerate corpora shrink the clustered query instead of failing
    let k_clustered = params.k.min(distinct.len());

    let (mut random_total, mut clustered_total) = (0.0, 0.0);
    for trial in 0..params.trials_per_fold {
        let seed = |arm: u64| derive_seed(thread_seed, &[trial as u64, arm]);
        let clustered_first = clustered_query_from_entries(others, signal, modality, k_clustered, seed(0))?;
        let random_first = random_query_sized(catalog, signal, &BTreeSet::new(), params.k, seed(1))?;
        clustered_total += score_sequence(catalog, clustered_first, params, seed(2), target)?;
        random_total += score_sequence(catalog, random_first, params, seed(3), target)?;
    }
    let trials = params.trials_per_fold as f64;
    Ok((random_total / trials, clustered_total / trials))
}

/// Alignment of `first` followed by random follow-up queries over unseen items.
fn score_sequence(
    catalog: &Catalog<f64>,
    first: Query,
    params: &LoocvParams,
    seed: u64,
    target: &FeatureVector<f64>,
) -> Result<f64, EvalError> {
    let mut shown: BTreeSet<StimulusId> = first.item_ids.iter().copied().collect();
    let mut queries = vec![first];
    for i in 1..params.queries_per_thread {
        let q = random_query_sized(catalog, queries[0].signal_type, &shown, params.k, derive_seed(seed, &[i as u64]))?;
        shown.extend(q.item_ids.iter().copied());
        queries.push(q);
    }
    let features: Vec<Vec<&[f64]>> = queries
        .iter()
        .map(|q| {
            q.item_ids
                .iter()
                .map(|&id| catalog.feature(id).map(FeatureVector::as_slice).ok_or(EvalError::UnknownStimulus(id)))
                .collect::<Result<_, _>>()
        })
        .collect::<Result<_, _>>()?;
    Ok(session_alignment(&features, target.as_slice())?)
}

/// Rows per (modality, signal), a pooled row per modality and an overall
/// pooled row. Pooled rows average each fold over its threads first.
pub fn aggregate(scores: &[FoldScore]) -> AlignmentReport {
    let mut rows = Vec::new();
    for modality in Modality::ALL {
        for signal in SignalType::ALL {
            let pairs: Vec<(f64, f64)> = scores
                .iter()
                .filter(|s| s.modality == modality && s.signal_type == signal)
                .map(|s| (s.random, s.clustered))
                .collect();
            rows.push(row(modality.as_str(), signal.as_str(), &pairs));
        }
        let pooled = pool_by_fold(scores.iter().filter(|s| s.modality == modality));
        rows.push(row(modality.as_str(), POOLED, &pooled));
    }
    rows.push(row(POOLED, POOLED, &pool_by_fold(scores.iter())));
    AlignmentReport { rows }
}

fn pool_by_fold<'a>(scores: impl Iterator<Item = &'a FoldScore>) -> Vec<(f64, f64)> {
    let mut folds: Vec<(usize, f64, f64, usize)> = Vec::new();
    for s in scores {
        match folds.iter_mut().find(|f| f.0 == s.fold) {
            Some(f) => {
                f.1 += s.random;
                f.2 += s.clustered;
                f.3 += 1;
            }
            None => folds.push((s.fold, s.random, s.clustered, 1)),
        }
    }
    folds.sort_by_key(|f| f.0);
    folds.into_iter().map(|(_, r, c, n)| (r / n as f64, c / n as f64)).collect()
}

fn row(modality: &str, signal: &str, pairs: &[(f64, f64)]) -> AlignmentRow {
    let n = pairs.len();
    let mean = |f: fn(&(f64, f64)) -> f64| if n == 0 { 0.0 } else { pairs.iter().map(f).sum::<f64>() / n as f64 };
    let mean_random = mean(|p| p.0);
    let mean_clustered = mean(|p| p.1);
    let deltas: Vec<f64> = pairs.iter().map(|(r, c)| c - r).collect();
    AlignmentRow {
        modality: modality.to_owned(),
        signal: signal.to_owned(),
        mean_random,
        mean_clustered,
        delta: mean_clustered - mean_random,
        n,
        sign_test_p: sign_test(&deltas),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_store::{generate_synthetic_catalog, Catalog};
    use crate::preference::cosine_similarity;

    fn catalogs(count: usize) -> Catalogs<f64> {
        let make =
            |m: Modality, seed: u64| -> Catalog<f64> { generate_synthetic_catalog(seed, count, 10, m, 4).unwrap() };
        Catalogs {
            visual: make(Modality::Visual, 1),
            auditory: make(Modality::Auditory, 2),
            kinetic: make(Modality::Kinetic, 3),
        }
    }

    fn corpus(cats: &Catalogs<f64>, picks: &[(usize, StimulusId)]) -> DesignCorpus {
        let mut entries = Vec::new();
        for &(user, id) in picks {
            for signal in SignalType::ALL {
                for modality in Modality::ALL {
                    entries.push(DesignEntry {
                        user: format!("u{user}"),
                        signal_type: signal,
                        modality,
                        chosen_id: id,
                        chosen_feature: cats.get(modality).feature(id).unwrap().clone(),
                    });
                }
            }
        }
        DesignCorpus::new(entries)
    }

    #[test]
    fn identical_designs_give_perfect_clustered_alignment() {
        let cats = catalogs(20);
        let designs = corpus(&cats, &[(0, 5), (1, 5), (2, 5), (3, 5), (4, 5)]);
        let report = run_loocv(&designs, &cats, &LoocvParams { trials_per_fold: 4, ..Default::default() }).unwrap();
        for r in &report.rows {
            assert_eq!(r.mean_clustered, 1.0, "{r:?}");
            assert_eq!(r.n, 5);
            assert!((r.delta - (r.mean_clustered - r.mean_random)).abs() < 1e-15);
        }
    }

    #[test]
    fn too_few_users() {
        let cats = catalogs(20);
        let designs = corpus(&cats, &[(0, 1), (1, 2), (2, 3)]);
        assert!(matches!(
            run_loocv(&designs, &cats, &LoocvParams::default()),
            Err(EvalError::InsufficientUsers { needed: 4, have: 3 })
        ));
    }

    #[test]
    fn report_is_deterministic() {
        let cats = catalogs(30);
        let designs = corpus(&cats, &[(0, 1), (1, 7), (2, 12), (3, 20), (4, 3)]);
        let p = LoocvParams { trials_per_fold: 1, ..Default::default() };
        assert_eq!(run_loocv(&designs, &cats, &p).unwrap(), run_loocv(&designs, &cats, &p).unwrap());
        let p3 = LoocvParams { trials_per_fold: 3, queries_per_thread: 3, ..Default::default() };
        let r = run_loocv(&designs, &cats, &p3).unwrap();
        assert!(r
            .rows
            .iter()
            .all(|r| (-1.0..=1.0).contains(&r.mean_random) && (-1.0..=1.0).contains(&r.mean_clustered)));
    }

    #[test]
    fn held_out_design_never_enters_the_clustering() {
        let cats = catalogs(30);
        // u0 picked 0; everybody else picked from {10, 11, 12}
        let designs = corpus(&cats, &[(0, 0), (1, 10), (2, 11), (3, 12), (4, 10)]);
        let scores = fold_scores(&designs, &cats, &LoocvParams { trials_per_fold: 5, ..Default::default() }).unwrap();
        for s in scores.iter().filter(|s| s.fold == 0) {
            let c = cats.get(s.modality);
            let own = c.feature(0).unwrap();
            let best_other = [10, 11, 12]
                .iter()
                .map(|&id| cosine_similarity(own.as_slice(), c.feature(id).unwrap().as_slice()))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((s.clustered - best_other).abs() < 1e-12, "{s:?}");
            assert!(s.clustered < 1.0);
        }
    }

    #[test]
    fn one_cluster_per_design_beats_single_draws() {
        // k = number of remaining designs: every other design is in the query
        let cats = catalogs(30);
        let picks = [(0, 2), (1, 9), (2, 14), (3, 21), (4, 27)];
        let designs = corpus(&cats, &picks);
        let params = LoocvParams { k: 4, trials_per_fold: 1, ..Default::default() };
        let scores = fold_scores(&designs, &cats, &params).unwrap();
        for s in &scores {
            let c = cats.get(s.modality);
            let target = c.feature(picks[s.fold].1).unwrap();
            // full enumeration of single-item draws from the other designs
            let singles: Vec<f64> = picks
                .iter()
                .filter(|p| p.0 != s.fold)
                .map(|p| cosine_similarity(target.as_slice(), c.feature(p.1).unwrap().as_slice()))
                .collect();
            let mean_single = singles.iter().sum::<f64>() / singles.len() as f64;
            assert!(s.clustered >= mean_single - 1e-12);
        }
    }
}
