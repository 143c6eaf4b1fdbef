use std::fs::{self, File};
use std::io::{self, BufReader, Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use manuscriptor_core::corpus::{build_snapshot, Snapshot};
use manuscriptor_core::embedder::{corpus_vocabulary, load_vectors, synth_vectors, DEFAULT_DIM};
use manuscriptor_core::evalharness::{report_to_text, run_parent_retrieval, ReportFormat};
use manuscriptor_core::library::{FixtureResolver, MetadataResolver};
use manuscriptor_core::{ingest, Engine, RankingSource};

use crate::routes::router;
use crate::state::AppState;

#[derive(Debug, Parser)]
#[command(
    name = "manuscriptor",
    version,
    about = "Filter-then-rank literature search"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a snapshot directory from a JSONL corpus and word vectors.
    Ingest(IngestArgs),
    /// Serve the HTTP API (and optionally the UI bundle).
    Serve(ServeArgs),
    /// Rank papers against a query file and print TSV.
    Search(SearchArgs),
    /// Run the parent-retrieval evaluation.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// JSONL corpus, one paper per line.
    #[arg(long, env = "MANUSCRIPTOR_CORPUS")]
    pub corpus: PathBuf,
    /// Word vectors in word2vec text format: a `<count> <dim>` header, then
    /// `word v1 ... vd` per line.
    #[arg(long, env = "MANUSCRIPTOR_VECTORS", conflicts_with = "synth_seed")]
    pub vectors: Option<PathBuf>,
    /// Generate deterministic pseudo-random vectors for the corpus vocabulary.
    #[arg(long, env = "MANUSCRIPTOR_SYNTH_SEED")]
    pub synth_seed: Option<u64>,
    /// Dimension of synthesized vectors.
    #[arg(long, env = "MANUSCRIPTOR_DIM", default_value_t = DEFAULT_DIM)]
    pub dim: usize,
    /// Output snapshot directory.
    #[arg(long, env = "MANUSCRIPTOR_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "MANUSCRIPTOR_SNAPSHOT")]
    pub snapshot: PathBuf,
    #[arg(long, env = "MANUSCRIPTOR_PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, env = "MANUSCRIPTOR_HOST", default_value = "127.0.0.1")]
    pub host: String,
    /// Directory with the built UI bundle.
    #[arg(long, env = "MANUSCRIPTOR_UI")]
    pub ui: Option<PathBuf>,
    /// Where per-user library files are kept.
    #[arg(long, env = "MANUSCRIPTOR_LIBRARY_DIR", default_value = "library")]
    pub library_dir: PathBuf,
    /// JSON array of DOI metadata records; defaults to the bundled fixture.
    #[arg(long, env = "MANUSCRIPTOR_DOI_FIXTURE")]
    pub doi_fixture: Option<PathBuf>,
    /// Base URL of a Crossref-compatible metadata service, e.g.
    /// `https://api.crossref.org`. Takes precedence over the fixture.
    #[cfg(feature = "http-resolver")]
    #[arg(long, env = "MANUSCRIPTOR_DOI_SERVICE")]
    pub doi_service: Option<String>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, env = "MANUSCRIPTOR_SNAPSHOT")]
    pub snapshot: PathBuf,
    #[arg(long, env = "MANUSCRIPTOR_FILTER", default_value = "")]
    pub filter: String,
    /// Text file used as the ranking source; `-` reads standard input.
    #[arg(long, env = "MANUSCRIPTOR_QUERY_FILE")]
    pub query_file: PathBuf,
    #[arg(long, env = "MANUSCRIPTOR_LIMIT", default_value_t = 1000)]
    pub limit: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Table,
    Tsv,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, env = "MANUSCRIPTOR_SNAPSHOT")]
    pub snapshot: PathBuf,
    #[arg(long, env = "MANUSCRIPTOR_SAMPLES", default_value_t = 200)]
    pub samples: usize,
    #[arg(long, env = "MANUSCRIPTOR_SEED", default_value_t = 42)]
    pub seed: u64,
    #[arg(long, env = "MANUSCRIPTOR_TOP_K", default_value_t = 20)]
    pub top_k: usize,
    #[arg(long, env = "MANUSCRIPTOR_FORMAT", value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Ingest(args) => run_ingest(&args, out),
        Command::Serve(args) => run_serve(args),
        Command::Search(args) => run_search(&args, out),
        Command::Eval(args) => run_eval(&args, out),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| {
        format!("cannot open {}", path.display())
    })?))
}

pub fn run_ingest(args: &IngestArgs, out: &mut dyn Write) -> Result<()> {
    let papers = ingest(open(&args.corpus)?).context("reading corpus")?;
    let store = match (&args.vectors, args.synth_seed) {
        (Some(path), None) => {
            let (store, report) = load_vectors(open(path)?).context("reading vectors")?;
            if report.duplicates > 0 || report.skipped > 0 {
                log::warn!(
                    "vectors: {} duplicate words, {} skipped lines",
                    report.duplicates,
                    report.skipped
                );
            }
            store
        }
        (None, Some(seed)) => {
            if args.dim == 0 {
                bail!("--dim must be at least 1");
            }
            let vocab = corpus_vocabulary(&papers);
            synth_vectors(vocab.iter().map(String::as_str), args.dim, seed)
        }
        _ => bail!("exactly one of --vectors and --synth-seed is required"),
    };
    let (snapshot, hash) = build_snapshot(papers, store, &args.out)?;
    writeln!(
        out,
        "wrote {} papers, dim {}, {} index terms\nsnapshot {hash}",
        snapshot.len(),
        snapshot.dim(),
        snapshot.index.term_count()
    )?;
    Ok(())
}

fn resolver(args: &ServeArgs) -> Result<Arc<dyn MetadataResolver>> {
    #[cfg(feature = "http-resolver")]
    if let Some(url) = &args.doi_service {
        let r = manuscriptor_core::library::CrossrefResolver::new(url.as_str())?;
        return Ok(Arc::new(r));
    }
    Ok(match &args.doi_fixture {
        Some(path) => Arc::new(
            FixtureResolver::from_json(&fs::read_to_string(path).context("reading DOI fixture")?)
                .context("parsing DOI fixture")?,
        ),
        None => Arc::new(FixtureResolver::bundled().clone()),
    })
}

fn run_serve(args: ServeArgs) -> Result<()> {
    let resolver = resolver(&args)?;
    let state = AppState::new(
        Some(args.snapshot.clone()),
        args.library_dir.clone(),
        resolver,
    );
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .context("invalid --host/--port")?;
    let app = router(state.clone(), args.ui.clone());

    tokio::runtime::Runtime::new()?.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        log::info!("listening on http://{}", listener.local_addr()?);
        // Health reports 503 until the snapshot has been read.
        let loader = state.clone();
        tokio::task::spawn_blocking(move || match loader.reload() {
            Ok(l) => log::info!("snapshot {} loaded ({} papers)", l.hash, l.engine.len()),
            Err(e) => log::error!("loading snapshot failed: {}", e.message),
        });
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

fn read_query(path: &Path) -> Result<String> {
    let mut text = String::new();
    if path == Path::new("-") {
        io::stdin().read_to_string(&mut text)?;
    } else {
        text =
            fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    }
    Ok(text)
}

fn load_snapshot(dir: &Path) -> Result<Snapshot> {
    let (snapshot, _) = Snapshot::load(dir).context("loading snapshot")?;
    Ok(snapshot)
}

fn tsv_field(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

pub fn run_search(args: &SearchArgs, out: &mut dyn Write) -> Result<()> {
    let text = read_query(&args.query_file)?;
    let engine = Engine::new(load_snapshot(&args.snapshot)?);
    let result = engine.search(&args.filter, &RankingSource::text(text), args.limit)?;
    writeln!(out, "rank\tid\tdistance\ttitle")?;
    for (i, hit) in result.hits.iter().enumerate() {
        writeln!(
            out,
            "{}\t{}\t{:.6}\t{}",
            i + 1,
            hit.paper_id,
            hit.distance,
            tsv_field(&hit.title)
        )?;
    }
    Ok(())
}

pub fn run_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let snapshot = load_snapshot(&args.snapshot)?;
    let report = run_parent_retrieval(&snapshot, args.samples, args.top_k, args.seed)?;
    let format = match args.format {
        Format::Table => ReportFormat::Table,
        Format::Tsv => ReportFormat::Tsv,
    };
    write!(out, "{}", report_to_text(&report, format))?;
    Ok(())
}
