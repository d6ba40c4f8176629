//! Design-session state machine: four signal types × three modalities, each
//! an independent design thread with its own preference model and query log.
//!
//! A thread moves `Unstarted → InProgress → Finalized(id)`; once every
//! modality of a signal type is finalized the session emits a
//! [`DesignRecord`] for it.

mod store;

use std::collections::BTreeSet;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::RngCore;
use serde::Serialize;
use thiserror::Error;

use crate::feature_store::{keyword_search, Catalogs, StimulusId};
use crate::preference::{rank_candidates, Choice, PreferenceError, PreferenceModel, QueryResponse};
use crate::query::{clustered_query, random_query, DesignCorpus, Query, QueryError, QUERY_SIZE};
use crate::rng::{derive_seed, seeded};
use crate::{Modality, SignalType};

pub use store::{export_designs, DesignRecord, DesignStore, StoreError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error("{signal}/{modality} is already finalized")]
    AlreadyFinalized { signal: SignalType, modality: Modality },
    #[error("response does not answer the current query")]
    StaleQuery,
    #[error("unknown stimulus {0}")]
    UnknownStimulus(StimulusId),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Preference(#[from] PreferenceError),
}

/// How the first query of each thread is produced.
#[derive(Debug, Clone, Default)]
pub enum InitMode {
    #[default]
    Random,
    /// Seed first queries from prior users' designs.
    Clustered(Arc<DesignCorpus>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "state", content = "id", rename_all = "snake_case")]
pub enum ThreadStatus {
    Unstarted,
    InProgress,
    Finalized(StimulusId),
}

#[derive(Debug, Clone)]
pub struct DesignThread {
    pub signal_type: SignalType,
    pub modality: Modality,
    pub model: PreferenceModel<f64>,
    query_log: Vec<Query>,
    pending: bool,
    status: ThreadStatus,
    clustered_first: bool,
}

impl DesignThread {
    pub fn query_log(&self) -> &[Query] {
        &self.query_log
    }

    pub fn status(&self) -> ThreadStatus {
        self.status
    }

    /// The last query, if it has not been answered yet.
    pub fn pending_query(&self) -> Option<&Query> {
        self.query_log.last().filter(|_| self.pending)
    }

    fn start(&mut self) {
        if self.status == ThreadStatus::Unstarted {
            self.status = ThreadStatus::InProgress;
        }
    }

    fn ensure_open(&self) -> Result<(), SessionError> {
        match self.status {
            ThreadStatus::Finalized(_) => {
                Err(SessionError::AlreadyFinalized { signal: self.signal_type, modality: self.modality })
            }
            _ => Ok(()),
        }
    }
}

/// One search result row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchHit {
    pub id: StimulusId,
    pub name: String,
    pub asset_ref: String,
}

#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    seed: u64,
    signal_order: [SignalType; 4],
    threads: Vec<DesignThread>,
    created_at: DateTime<Utc>,
    init_mode: InitMode,
    fallback_threads: Vec<(SignalType, Modality)>,
}

fn thread_index(signal: SignalType, modality: Modality) -> usize {
    signal.index() * Modality::ALL.len() + modality.index()
}

impl Session {
    /// Fresh session: seeded signal order and twelve empty threads. In
    /// clustered mode, threads whose prior designs cannot fill a query fall
    /// back to random first queries and are listed in
    /// [`fallback_threads`](Self::fallback_threads).
    pub fn create(seed: u64, init_mode: InitMode) -> Session {
        let mut id_rng = seeded(derive_seed(seed, &[0x1d]));
        let mut bytes = [0u8; 16];
        id_rng.fill_bytes(&mut bytes);
        let id = uuid::Builder::from_random_bytes(bytes).into_uuid().to_string();

        let mut signal_order = SignalType::ALL;
        signal_order.shuffle(&mut seeded(derive_seed(seed, &[0x0de7])));

        let mut threads = Vec::with_capacity(12);
        let mut fallback_threads = Vec::new();
        for signal_type in SignalType::ALL {
            for modality in Modality::ALL {
                let clustered_first = match &init_mode {
                    InitMode::Random => false,
                    InitMode::Clustered(corpus) => {
                        let entries = corpus.restrict(signal_type, modality);
                        let distinct: BTreeSet<_> = entries.iter().map(|e| e.chosen_id).collect();
                        let ok = distinct.len() >= QUERY_SIZE;
                        if !ok {
                            fallback_threads.push((signal_type, modality));
                        }
                        ok
                    }
                };
                threads.push(DesignThread {
                    signal_type,
                    modality,
                    model: PreferenceModel::default(),
                    query_log: Vec::new(),
                    pending: false,
                    status: ThreadStatus::Unstarted,
                    clustered_first,
                });
            }
        }
        Session { id, seed, signal_order, threads, created_at: Utc::now(), init_mode, fallback_threads }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn set_id(&mut self, id: String) {
        self.id = id;
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn signal_order(&self) -> [SignalType; 4] {
        self.signal_order
    }

    pub fn created_at(&self) -> DateTime<Utc> {
        self.created_at
    }

    pub fn init_mode(&self) -> &InitMode {
        &self.init_mode
    }

    pub fn fallback_threads(&self) -> &[(SignalType, Modality)] {
        &self.fallback_threads
    }

    pub fn thread(&self, signal: SignalType, modality: Modality) -> &DesignThread {
        &self.threads[thread_index(signal, modality)]
    }

    pub fn threads(&self) -> &[DesignThread] {
        &self.threads
    }

    fn thread_mut(&mut self, signal: SignalType, modality: Modality) -> &mut DesignThread {
        &mut self.threads[thread_index(signal, modality)]
    }

    /// Seed of a thread's first query; later queries derive from it.
    pub fn thread_seed(&self, signal: SignalType, modality: Modality) -> u64 {
        derive_seed(self.seed, &[1, signal.index() as u64, modality.index() as u64])
    }

    /// Next query for a thread. The first comes from the init mode, later ones
    /// are random over items this thread has not shown yet.
    pub fn next_query(
        &mut self,
        catalogs: &Catalogs<f64>,
        signal: SignalType,
        modality: Modality,
    ) -> Result<Query, SessionError> {
        let thread_seed = self.thread_seed(signal, modality);
        let corpus = match &self.init_mode {
            InitMode::Clustered(c) => Some(Arc::clone(c)),
            InitMode::Random => None,
        };
        let thread = self.thread_mut(signal, modality);
        thread.ensure_open()?;
        let n = thread.query_log.len();
        let seed = if n == 0 { thread_seed } else { derive_seed(thread_seed, &[n as u64]) };

        let clustered = match (&corpus, n == 0 && thread.clustered_first) {
            (Some(corpus), true) => clustered_query(corpus, signal, modality, QUERY_SIZE, seed).ok(),
            _ => None,
        };
        let query = match clustered {
            Some(q) => q,
            None => {
                let shown: BTreeSet<StimulusId> =
                    thread.query_log.iter().flat_map(|q| q.item_ids.iter().copied()).collect();
                random_query(catalogs.get(modality), signal, &shown, seed)?
            }
        };
        thread.query_log.push(query.clone());
        thread.pending = true;
        thread.start();
        Ok(query)
    }

    /// Records the answer to the thread's current query.
    pub fn submit_response(
        &mut self,
        catalogs: &Catalogs<f64>,
        signal: SignalType,
        modality: Modality,
        response: &QueryResponse,
    ) -> Result<(), SessionError> {
        let thread = self.thread_mut(signal, modality);
        thread.ensure_open()?;
        if thread.pending_query() != Some(&response.query) {
            return Err(SessionError::StaleQuery);
        }
        thread.model.record(response, catalogs.get(modality))?;
        thread.pending = false;
        Ok(())
    }

    /// Answers the current query of a thread with `choice`.
    pub fn respond(
        &mut self,
        catalogs: &Catalogs<f64>,
        signal: SignalType,
        modality: Modality,
        choice: Choice,
    ) -> Result<(), SessionError> {
        let thread = self.thread(signal, modality);
        thread.ensure_open()?;
        let query = thread.pending_query().cloned().ok_or(SessionError::StaleQuery)?;
        self.submit_response(catalogs, signal, modality, &QueryResponse { query, choice })
    }

    /// Keyword-filtered catalog ordered by the thread's current preference.
    pub fn search(
        &mut self,
        catalogs: &Catalogs<f64>,
        signal: SignalType,
        modality: Modality,
        query_text: &str,
    ) -> Vec<SearchHit> {
        let catalog = catalogs.get(modality);
        let thread = self.thread_mut(signal, modality);
        thread.start();
        let ids = keyword_search(catalog, query_text);
        let ranked = rank_candidates(&thread.model, &ids, catalog).expect("search ids come from the catalog");
        ranked
            .into_iter()
            .map(|id| {
                let r = catalog.record(id).expect("ranked ids come from the catalog");
                SearchHit { id, name: r.name.clone(), asset_ref: r.asset_ref.clone() }
            })
            .collect()
    }

    /// Locks in a thread's component. Returns the signal's design record once
    /// all three modalities are final.
    pub fn finalize_component(
        &mut self,
        catalogs: &Catalogs<f64>,
        signal: SignalType,
        modality: Modality,
        id: StimulusId,
    ) -> Result<Option<DesignRecord>, SessionError> {
        let thread = self.thread_mut(signal, modality);
        thread.ensure_open()?;
        if !catalogs.get(modality).contains(id) {
            return Err(SessionError::UnknownStimulus(id));
        }
        thread.start();
        thread.status = ThreadStatus::Finalized(id);
        thread.pending = false;

        let finalized = |m: Modality| match self.thread(signal, m).status {
            ThreadStatus::Finalized(id) => Some(id),
            _ => None,
        };
        match (finalized(Modality::Visual), finalized(Modality::Auditory), finalized(Modality::Kinetic)) {
            (Some(visual_id), Some(auditory_id), Some(kinetic_id)) => Ok(Some(DesignRecord {
                session_id: self.id.clone(),
                signal_type: signal,
                visual_id,
                auditory_id,
                kinetic_id,
                completed_at: Utc::now(),
            })),
            _ => Ok(None),
        }
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            session_id: self.id.clone(),
            signal_order: self.signal_order,
            created_at: self.created_at,
            init_mode: match self.init_mode {
                InitMode::Random => "random",
                InitMode::Clustered(_) => "clustered",
            },
            fallback_threads: self
                .fallback_threads
                .iter()
                .map(|&(signal, modality)| ThreadKey { signal, modality })
                .collect(),
            threads: self
                .threads
                .iter()
                .map(|t| ThreadSummary {
                    signal: t.signal_type,
                    modality: t.modality,
                    status: t.status,
                    queries: t.query_log.len(),
                    comparisons: t.model.comparisons.len(),
                    pending_query: t.pending_query().cloned(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThreadKey {
    pub signal: SignalType,
    pub modality: Modality,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThreadSummary {
    pub signal: SignalType,
    pub modality: Modality,
    pub status: ThreadStatus,
    pub queries: usize,
    pub comparisons: usize,
    pub pending_query: Option<Query>,
}

/// Serializable view of a session's state.
#[derive(Debug, Clone, Serialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub signal_order: [SignalType; 4],
    pub created_at: DateTime<Utc>,
    pub init_mode: &'static str,
    pub fallback_threads: Vec<ThreadKey>,
    pub threads: Vec<ThreadSummary>,
}
