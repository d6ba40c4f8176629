//! Signal design service and evaluation commands built on `rosid-core`.

pub mod server;

use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use rosid_core::eval::{run_loocv, summarize, synthesize, LoocvParams, ReportFormat, SynthParams, SynthStudy};
use rosid_core::feature_store::Catalogs;
use rosid_core::query::DesignCorpus;
use rosid_core::session::{export_designs, DesignStore};

pub use server::{router, AppState};

/// Environment variable supplying the base seed for sessions created
/// without one.
pub const SEED_ENV: &str = "ROSID_SEED";

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub corpus_dir: PathBuf,
    pub store: PathBuf,
    pub designs: Option<PathBuf>,
    pub addr: SocketAddr,
    pub feature_dim: usize,
    pub base_seed: Option<u64>,
}

/// Loads catalogs, prior designs and the store into a ready service state.
pub fn build_state(opts: &ServeOptions) -> Result<AppState> {
    let catalogs = Catalogs::<f64>::load_dir(&opts.corpus_dir, opts.feature_dim)
        .with_context(|| format!("loading catalogs from {}", opts.corpus_dir.display()))?;
    let corpus = match &opts.designs {
        Some(path) => {
            DesignCorpus::load(path, &catalogs).with_context(|| format!("loading designs from {}", path.display()))?
        }
        None => DesignCorpus::default(),
    };
    let store = DesignStore::open(&opts.store).with_context(|| format!("opening store {}", opts.store.display()))?;
    tracing::info!(
        designs = corpus.len(),
        stored = store.records().len(),
        "catalogs loaded: {} visual, {} auditory, {} kinetic",
        catalogs.visual.len(),
        catalogs.auditory.len(),
        catalogs.kinetic.len()
    );
    Ok(AppState::new(catalogs, corpus, store, opts.corpus_dir.clone(), opts.base_seed))
}

/// Serves until ctrl-c. The bound address is printed on stdout as
/// `listening on <addr>` once the socket is open.
pub async fn serve(opts: ServeOptions) -> Result<()> {
    let state = Arc::new(build_state(&opts)?);
    let listener = tokio::net::TcpListener::bind(opts.addr).await.with_context(|| format!("binding {}", opts.addr))?;
    let local = listener.local_addr()?;
    println!("listening on {local}");
    io::stdout().flush()?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub designs: PathBuf,
    pub corpus_dir: PathBuf,
    pub feature_dim: usize,
    pub params: LoocvParams,
    pub format: ReportFormat,
}

pub fn eval(opts: &EvalOptions) -> Result<String> {
    let catalogs = Catalogs::<f64>::load_dir(&opts.corpus_dir, opts.feature_dim)
        .with_context(|| format!("loading catalogs from {}", opts.corpus_dir.display()))?;
    let designs = DesignCorpus::load(&opts.designs, &catalogs)
        .with_context(|| format!("loading designs from {}", opts.designs.display()))?;
    let report = run_loocv(&designs, &catalogs, &opts.params)?;
    Ok(summarize(&report, opts.format))
}

pub fn synth(params: &SynthParams, out: &Path) -> Result<SynthStudy> {
    let study = synthesize(params)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    study.write_dir(out).with_context(|| format!("writing study to {}", out.display()))?;
    Ok(study)
}

/// Writes the store's designs as a design corpus to `out`, or stdout for `-`.
pub fn export(store: &Path, out: &Path) -> Result<usize> {
    let lines = if out == Path::new("-") {
        export_designs(store, io::stdout().lock())?
    } else {
        let file = fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
        let mut writer = io::BufWriter::new(file);
        let n = export_designs(store, &mut writer)?;
        writer.flush()?;
        n
    };
    Ok(lines)
}
