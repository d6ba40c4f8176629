use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};
use rosid::{EvalOptions, ServeOptions, SEED_ENV};
use rosid_core::eval::{LoocvParams, ReportFormat, SynthParams, DESIGNS_FILE};
use rosid_core::DEFAULT_FEATURE_DIM;
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "rosid", version, about = "Robot signal design service and evaluation tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP design service.
    Serve {
        /// Directory with visual.jsonl, auditory.jsonl and kinetic.jsonl.
        #[arg(long)]
        corpus_dir: PathBuf,
        /// Design store (JSON lines), created if missing.
        #[arg(long)]
        store: PathBuf,
        /// Port to listen on; 0 picks a free one.
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Prior designs used for clustered first queries.
        #[arg(long)]
        designs: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_FEATURE_DIM)]
        feature_dim: usize,
        /// Base seed for sessions created without one.
        #[arg(long, env = SEED_ENV)]
        seed: Option<u64>,
    },
    /// Leave-one-user-out comparison of clustered and random first queries.
    Eval {
        #[arg(long)]
        designs: PathBuf,
        #[arg(long)]
        corpus_dir: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// text, csv or json.
        #[arg(long, default_value = "text")]
        format: ReportFormat,
        #[arg(long, default_value_t = 1)]
        queries_per_thread: usize,
        #[arg(long, default_value_t = DEFAULT_FEATURE_DIM)]
        feature_dim: usize,
    },
    /// Generate synthetic catalogs and a simulated design corpus.
    Synth {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 24)]
        users: usize,
        /// Preference groups among the users.
        #[arg(long, default_value_t = 3)]
        clusters: usize,
        #[arg(long, default_value_t = 512)]
        catalog_size: usize,
        /// Latent blobs per catalog.
        #[arg(long, default_value_t = 8)]
        latent_clusters: usize,
        /// Queries each simulated user answers per thread.
        #[arg(long, default_value_t = 20)]
        queries: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a design store into a design corpus file.
    Export {
        #[arg(long)]
        store: PathBuf,
        /// Output file, `-` for stdout.
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();

    match Cli::parse().command {
        Command::Serve { corpus_dir, store, port, host, designs, feature_dim, seed } => {
            let opts = ServeOptions {
                corpus_dir,
                store,
                designs,
                addr: SocketAddr::new(host, port),
                feature_dim,
                base_seed: seed,
            };
            tokio::runtime::Runtime::new()?.block_on(rosid::serve(opts))?;
        }
        Command::Eval { designs, corpus_dir, k, trials, seed, format, queries_per_thread, feature_dim } => {
            let params = LoocvParams { k, trials_per_fold: trials, seed, queries_per_thread };
            let report = rosid::eval(&EvalOptions { designs, corpus_dir, feature_dim, params, format })?;
            print!("{report}");
        }
        Command::Synth { seed, users, clusters, catalog_size, latent_clusters, queries, out } => {
            let params = SynthParams {
                seed,
                users,
                clusters,
                catalog_size,
                latent_clusters,
                queries_per_thread: queries,
                ..SynthParams::default()
            };
            let study = rosid::synth(&params, &out)?;
            eprintln!(
                "wrote 3 catalogs of {catalog_size} items and {} designs to {}",
                study.designs.len(),
                out.join(DESIGNS_FILE).display()
            );
        }
        Command::Export { store, out } => {
            let n = rosid::export(&store, &out)?;
            eprintln!("exported {n} design lines");
        }
    }
    Ok(())
}
