use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Args, ValueEnum};
use envpair_core::annotation::curation::{read_scorecards, DEFAULT_THRESHOLD};
use envpair_core::annotation::{
    annotate_batch, apply_threshold, score_distribution, AnnotatorClient, RecordStore, TemplateRegistry,
    DEFAULT_TEMPLATE,
};
use envpair_core::chat::{ChatBackend, HttpChatBackend};
use envpair_core::metrics::neural::{HttpScorer, DEFAULT_BATCH};
use envpair_core::metrics::{evaluate, EvalError, KeywordLexicon};
use envpair_core::pairing::{self, PairLine};
use envpair_core::sensors::{
    drop_sparse_features, enrich_pairs, FileCache, HttpTransport, RecordingTransport, ReqwestTransport, RetryPolicy,
    SensorClient,
};
use envpair_core::taskgen::{build_conversations, read_manifest, split_export, BuildOptions, DescribeImage, Task};
use envpair_core::{jsonl, Annotator, TemporalPair};
use envpair_session::{PairCatalog, Service, ServiceConfig, SessionStore};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use tracing::info;

use crate::config::RunConfig;
use crate::error::{require_dir, require_file, CliError, CliResult};

fn pick<T>(flag: Option<T>, file: Option<T>, what: &str) -> CliResult<T> {
    flag.or(file)
        .ok_or_else(|| CliError::Validation(format!("{what} is required (flag or config file)")))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

fn write_jsonl<T: serde::Serialize>(path: &Path, items: &[T]) -> CliResult<()> {
    jsonl::write(path, items).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> CliResult<Vec<T>> {
    require_file(path, what)?;
    jsonl::read_strict(path).map_err(|e| CliError::io(format!("reading {what}"), e))
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Args)]
pub struct PairArgs {
    /// Image metadata, one JSON record per line.
    #[arg(long)]
    pub metadata: Option<PathBuf>,
    /// Output directory for pairs.jsonl and pairing_report.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub min_gap_days: Option<i64>,
}

pub fn pair(args: PairArgs, cfg: &RunConfig) -> CliResult<Value> {
    let metadata = pick(args.metadata, cfg.paths.metadata.clone(), "--metadata")?;
    let out = pick(args.out, cfg.paths.output_dir.clone(), "--out")?;
    let min_gap = args
        .min_gap_days
        .or(cfg.thresholds.min_gap_days)
        .unwrap_or_else(pairing::default_min_gap);
    if min_gap < 1 {
        return Err(CliError::Validation(format!("min_gap_days must be positive, got {min_gap}")));
    }
    require_file(&metadata, "metadata file")?;
    let run = pairing::run_file(&metadata, min_gap).map_err(|e| CliError::io("reading metadata", e))?;
    create_dir(&out)?;
    write_jsonl(&out.join("pairs.jsonl"), &run.pairs)?;
    let lines: Vec<PairLine> = run.pairs.iter().map(PairLine::from).collect();
    write_jsonl(&out.join("pair_index.jsonl"), &lines)?;
    write_jsonl(&out.join("malformed.jsonl"), &run.malformed)?;
    write_json(&out.join("pairing_report.json"), &run.report)?;
    info!(stage = "pair", pairs = run.report.pair_count, malformed = run.report.malformed_count, "pairing done");
    Ok(json!({"stage": "pair", "report": run.report, "out": out}))
}

#[derive(Debug, Args)]
pub struct EnrichArgs {
    /// pairs.jsonl from `pair`.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Output directory for enriched.jsonl and reports.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long)]
    pub max_missing_fraction: Option<f64>,
    /// Replay recorded provider responses from this directory instead of
    /// calling the network.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
}

pub async fn enrich(args: EnrichArgs, cfg: &RunConfig) -> CliResult<Value> {
    let pairs_path = pick(args.pairs, cfg.paths.pairs.clone(), "--pairs")?;
    let out = pick(args.out, cfg.paths.output_dir.clone(), "--out")?;
    let cache = pick(args.cache, cfg.paths.cache_dir.clone(), "--cache")?;
    let max_missing = args
        .max_missing_fraction
        .or(cfg.thresholds.max_missing_fraction)
        .unwrap_or(0.5);
    if !(0.0..=1.0).contains(&max_missing) {
        return Err(CliError::Validation(format!("max_missing_fraction must be in [0, 1], got {max_missing}")));
    }
    cfg.providers
        .validate()
        .map_err(|e| CliError::Validation(format!("providers: {e}")))?;
    let pairs: Vec<TemporalPair> = read_jsonl(&pairs_path, "pairs file")?;

    let transport: Arc<dyn HttpTransport> = match &args.fixtures {
        Some(dir) => {
            require_dir(dir, "fixture directory")?;
            let t = RecordingTransport::new();
            t.load_fixture_dir(dir).map_err(|e| CliError::io("loading fixtures", e))?;
            Arc::new(t)
        }
        None => Arc::new(
            ReqwestTransport::new(Duration::from_secs(cfg.providers.timeout_secs))
                .map_err(|e| CliError::Remote(e.to_string()))?,
        ),
    };
    let client = SensorClient::new(cfg.providers.clone(), transport, FileCache::new(cache));
    let outcome = enrich_pairs(&client, &pairs).await;
    let (samples, prune) = drop_sparse_features(outcome.samples, max_missing);

    create_dir(&out)?;
    write_jsonl(&out.join("enriched.jsonl"), &samples)?;
    write_jsonl(&out.join("enrich_failures.jsonl"), &outcome.failures)?;
    write_json(&out.join("prune_report.json"), &prune)?;
    let summary = json!({
        "stage": "enrich",
        "pairs": pairs.len(),
        "samples": samples.len(),
        "failures": outcome.failures.len(),
        "network_calls": client.network_calls(),
        "cache_hits": client.cache_hits(),
        "warnings": client.warnings(),
        "pruned": prune.pruned,
        "out": out,
    });
    info!(stage = "enrich", samples = samples.len(), failures = outcome.failures.len(), network_calls = client.network_calls(), cache_hits = client.cache_hits(), "enrichment done");
    if samples.is_empty() && !outcome.failures.is_empty() {
        return Err(CliError::Remote(format!(
            "no pair could be enriched; first failure: {}",
            outcome.failures[0].error
        )));
    }
    Ok(summary)
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    #[arg(long)]
    pub enriched: Option<PathBuf>,
    /// Annotation record store directory.
    #[arg(long)]
    pub store: Option<PathBuf>,
    /// Chat server root for annotator A.
    #[arg(long)]
    pub backend_a: Option<String>,
    /// Chat server root for annotator B.
    #[arg(long)]
    pub backend_b: Option<String>,
    #[arg(long)]
    pub model_a: Option<String>,
    #[arg(long)]
    pub model_b: Option<String>,
    /// Directory of extra prompt templates (`<id>.txt`).
    #[arg(long)]
    pub templates: Option<PathBuf>,
    #[arg(long)]
    pub template: Option<String>,
    #[arg(long)]
    pub concurrency: Option<usize>,
}

fn chat_backend(url: &str, timeout: Duration) -> CliResult<Arc<dyn ChatBackend>> {
    if !(url.starts_with("http://") || url.starts_with("https://")) {
        return Err(CliError::Validation(format!("backend must be an http(s) URL, got {url:?}")));
    }
    let b = HttpChatBackend::new(url, timeout, RetryPolicy::default()).map_err(|e| CliError::Remote(e.to_string()))?;
    Ok(Arc::new(b))
}

pub async fn annotate(args: AnnotateArgs, cfg: &RunConfig) -> CliResult<Value> {
    let enriched = pick(args.enriched, cfg.paths.enriched.clone(), "--enriched")?;
    let store_dir = pick(args.store, cfg.paths.annotations.clone(), "--store")?;
    let url_a = pick(args.backend_a, cfg.backends.annotator_a.clone(), "--backend-a")?;
    let url_b = pick(args.backend_b, cfg.backends.annotator_b.clone(), "--backend-b")?;
    let concurrency = args
        .concurrency
        .or(cfg.limits.annotate_concurrency)
        .unwrap_or(envpair_core::annotation::annotate::DEFAULT_CONCURRENCY);
    if concurrency == 0 {
        return Err(CliError::Validation("concurrency must be at least 1".into()));
    }
    let template = args
        .template
        .or(cfg.backends.template.clone())
        .unwrap_or_else(|| DEFAULT_TEMPLATE.into());
    let mut templates = TemplateRegistry::default();
    if let Some(dir) = args.templates.or(cfg.paths.templates.clone()) {
        require_dir(&dir, "template directory")?;
        templates
            .load_dir(&dir)
            .map_err(|e| CliError::Validation(format!("templates: {e}")))?;
    }
    if !templates.ids().any(|id| id == template) {
        return Err(CliError::Validation(format!("unknown template {template:?}")));
    }
    let samples = read_jsonl(&enriched, "enriched file")?;
    let timeout = Duration::from_secs(cfg.backends.timeout_secs.unwrap_or(120));
    let clients = [
        AnnotatorClient {
            annotator: Annotator::A,
            model: args.model_a.or(cfg.backends.model_a.clone()).unwrap_or_else(|| "annotator-a".into()),
            backend: chat_backend(&url_a, timeout)?,
        },
        AnnotatorClient {
            annotator: Annotator::B,
            model: args.model_b.or(cfg.backends.model_b.clone()).unwrap_or_else(|| "annotator-b".into()),
            backend: chat_backend(&url_b, timeout)?,
        },
    ];
    let store = RecordStore::open(&store_dir).map_err(|e| CliError::io("opening annotation store", e))?;
    let report = annotate_batch(&samples, &clients, &templates, &template, &store, concurrency).await;
    info!(stage = "annotate", ok = report.ok, parse_failed = report.parse_failed, backend_failed = report.backend_failed, skipped = report.skipped, "annotation done");
    if report.backend_failed > 0 {
        return Err(CliError::Remote(format!(
            "{} pair(s) failed at the backend; rerun to retry them (ok {}, parse_failed {}, skipped {})",
            report.backend_failed, report.ok, report.parse_failed, report.skipped
        )));
    }
    if !report.errors.is_empty() {
        let (id, why) = &report.errors[0];
        return Err(CliError::Io {
            context: format!("annotating {id}"),
            source: std::io::Error::other(why.clone()),
        });
    }
    Ok(json!({"stage": "annotate", "report": report}))
}

#[derive(Debug, Args)]
pub struct CurateArgs {
    /// Scorecards CSV: sample_id,annotator_id,q1,q2,q3.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<u32>,
    /// Where to write retained.txt and histogram.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn curate(args: CurateArgs, cfg: &RunConfig) -> CliResult<Value> {
    let started = Instant::now();
    let scores = pick(args.scores, cfg.paths.scores.clone(), "--scores")?;
    let threshold = args.threshold.or(cfg.thresholds.curation).unwrap_or(DEFAULT_THRESHOLD);
    require_file(&scores, "scores file")?;
    let file = File::open(&scores).map_err(|e| CliError::io("opening scores", e))?;
    let cards = read_scorecards(file).map_err(|e| CliError::Validation(format!("{}: {e}", scores.display())))?;
    let selection = apply_threshold(&cards, threshold).map_err(|e| CliError::Validation(e.to_string()))?;
    let dist = score_distribution(&cards, threshold);
    print!("{}", dist.render());
    println!("retained {} / total {}", selection.retained.len(), dist.total);
    if let Some(out) = args.out.or(cfg.paths.output_dir.clone()) {
        create_dir(&out)?;
        let mut text = selection.retained.join("\n");
        if !text.is_empty() {
            text.push('\n');
        }
        std::fs::write(out.join("retained.txt"), text).map_err(|e| CliError::io("writing retained.txt", e))?;
        write_json(&out.join("histogram.json"), &dist.buckets)?;
    }
    info!(stage = "curate", retained = selection.retained.len(), discarded = selection.discarded.len(), "curation done");
    Ok(json!({
        "stage": "curate",
        "threshold": threshold,
        "retained": selection.retained.len(),
        "discarded": selection.discarded.len(),
        "total": dist.total,
        "histogram": dist.buckets,
        "elapsed_ms": started.elapsed().as_millis() as u64,
    }))
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DescribeArg {
    Earlier,
    Later,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Annotation record store directory.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[arg(long)]
    pub enriched: Option<PathBuf>,
    /// Task-mix seed; required, here or in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Retained ids from `curate`, one per line; `pair#task` ids count as their pair.
    #[arg(long)]
    pub retained: Option<PathBuf>,
    /// `pair_id,split` CSV; writes train.jsonl and test.jsonl too.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "earlier")]
    pub describe_image: DescribeArg,
}

pub fn read_retained(path: &Path) -> CliResult<BTreeSet<String>> {
    require_file(path, "retained list")?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io("reading retained list", e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.split('#').next().unwrap_or(l).to_string())
        .collect())
}

pub fn build(args: BuildArgs, cfg: &RunConfig) -> CliResult<Value> {
    let ann_dir = pick(args.annotations, cfg.paths.annotations.clone(), "--annotations")?;
    let enriched_path = pick(args.enriched, cfg.paths.enriched.clone(), "--enriched")?;
    let seed = pick(args.seed, cfg.seeds.mix, "--seed")?;
    let out = pick(args.out, cfg.paths.output_dir.clone(), "--out")?;
    require_dir(&ann_dir, "annotation store")?;
    let retained = args
        .retained
        .or(cfg.paths.retained.clone())
        .map(|p| read_retained(&p))
        .transpose()?;
    let manifest = match args.manifest.or(cfg.paths.split_manifest.clone()) {
        Some(p) => {
            require_file(&p, "split manifest")?;
            let f = File::open(&p).map_err(|e| CliError::io("opening split manifest", e))?;
            Some(read_manifest(f).map_err(|e| CliError::Validation(e.to_string()))?)
        }
        None => None,
    };
    let enriched: Vec<envpair_core::sensors::EnrichedSample> = read_jsonl(&enriched_path, "enriched file")?;
    let index: HashMap<String, _> = enriched.into_iter().map(|e| (e.pair.pair_id.clone(), e)).collect();
    let annotations = RecordStore::open(&ann_dir)
        .and_then(|s| s.load_all())
        .map_err(|e| CliError::io("reading annotation store", e))?;

    let opts = BuildOptions {
        describe_image: match args.describe_image {
            DescribeArg::Earlier => DescribeImage::Earlier,
            DescribeArg::Later => DescribeImage::Later,
        },
        retained,
    };
    let built = build_conversations(&annotations, &index, seed, &opts);
    create_dir(&out)?;
    let conv = out.join("conversations.jsonl");
    write_jsonl(&conv, &built.samples)?;
    let mut per_task: BTreeMap<&str, usize> = Task::ALL.iter().map(|t| (t.name(), 0)).collect();
    for s in &built.samples {
        *per_task.entry(s.task.name()).or_default() += 1;
    }
    let split = match &manifest {
        Some(m) => Some(split_export(&built.samples, m, &out).map_err(|e| match e {
            envpair_core::taskgen::SplitError::Io(io) => CliError::io("writing split files", io),
            other => CliError::Validation(other.to_string()),
        })?),
        None => None,
    };
    let digest = sha256_file(&conv)?;
    let report = json!({
        "stage": "build",
        "seed": seed,
        "samples": built.samples.len(),
        "per_task": per_task,
        "skipped": built.skipped.len(),
        "split": split,
        "sha256": digest,
        "out": out,
    });
    let skipped: Vec<Value> = built
        .skipped
        .iter()
        .map(|(id, why)| json!({"pair_id": id, "reason": why}))
        .collect();
    write_jsonl(&out.join("skipped.jsonl"), &skipped)?;
    write_json(&out.join("build_report.json"), &report)?;
    info!(stage = "build", samples = built.samples.len(), skipped = built.skipped.len(), sha256 = %digest, "build done");
    Ok(report)
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted conversations (JSONL).
    #[arg(long)]
    pub pred: PathBuf,
    /// Reference conversations (JSONL).
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Keyword lexicon JSON; the built-in lexicon when absent.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Neural scorer server root.
    #[arg(long)]
    pub scorer: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

pub async fn eval(args: EvalArgs, cfg: &RunConfig) -> CliResult<Value> {
    let out = pick(args.out, cfg.paths.output_dir.clone(), "--out")?;
    let preds = read_jsonl(&args.pred, "predictions file")?;
    let refs = read_jsonl(&args.reference, "references file")?;
    let lexicon = match args.lexicon.or(cfg.paths.lexicon.clone()) {
        Some(p) => {
            require_file(&p, "lexicon")?;
            KeywordLexicon::load(&p).map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?
        }
        None => KeywordLexicon::default(),
    };
    let batch = args.batch_size.or(cfg.limits.eval_batch).unwrap_or(DEFAULT_BATCH);
    if batch == 0 {
        return Err(CliError::Validation("batch size must be at least 1".into()));
    }
    let timeout = Duration::from_secs(cfg.backends.timeout_secs.unwrap_or(120));
    let scorer = match args.scorer.or(cfg.backends.scorer.clone()) {
        Some(url) => Some(HttpScorer::new(&url, timeout).map_err(CliError::Remote)?),
        None => None,
    };
    let report = evaluate(
        &preds,
        &refs,
        &lexicon,
        scorer.as_ref().map(|s| s as &dyn envpair_core::metrics::ScoreTransport),
        batch,
    )
    .await
    .map_err(|e| match e {
        EvalError::Neural(n) => CliError::Remote(n.to_string()),
        EvalError::Io(io) => CliError::io("writing report", io),
        other => CliError::Validation(other.to_string()),
    })?;
    create_dir(&out)?;
    let csv_path = out.join("metrics.csv");
    let f = File::create(&csv_path).map_err(|e| CliError::io(format!("creating {}", csv_path.display()), e))?;
    report.write_csv(f).map_err(|e| CliError::Io {
        context: format!("writing {}", csv_path.display()),
        source: std::io::Error::other(e.to_string()),
    })?;
    let mut summary = report.summary();
    write_json(&out.join("summary.json"), &summary)?;
    info!(stage = "eval", scored = report.scored, warnings = report.warnings.len(), "evaluation done");
    summary["stage"] = json!("eval");
    Ok(summary)
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Chat server root, or `stub`.
    #[arg(long)]
    pub backend: Option<String>,
    /// Enriched pairs sessions can be opened from.
    #[arg(long)]
    pub enriched: Option<PathBuf>,
    /// Annotation store used for what-if questions and ground truth.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Append-only session journal.
    #[arg(long)]
    pub journal: Option<PathBuf>,
    #[arg(long)]
    pub system_prompt: Option<String>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
}

pub async fn serve(args: ServeArgs, cfg: &RunConfig) -> CliResult<Value> {
    let backend = args
        .backend
        .or(cfg.backends.session.clone())
        .unwrap_or_else(|| envpair_session::api::STUB.into());
    if backend != envpair_session::api::STUB && !(backend.starts_with("http://") || backend.starts_with("https://")) {
        return Err(CliError::Validation(format!("backend must be `stub` or an http(s) URL, got {backend:?}")));
    }
    let catalog = match args.enriched.or(cfg.paths.enriched.clone()) {
        Some(p) => {
            require_file(&p, "enriched file")?;
            let ann = args.annotations.or(cfg.paths.annotations.clone());
            if let Some(dir) = &ann {
                require_dir(dir, "annotation store")?;
            }
            PairCatalog::load(&p, ann.as_deref()).map_err(|e| CliError::io("loading pair catalog", e))?
        }
        None => PairCatalog::default(),
    };
    let store = match args.journal.or(cfg.paths.journal.clone()) {
        Some(p) => SessionStore::with_journal(&p).map_err(|e| CliError::io("opening session journal", e))?,
        None => SessionStore::in_memory(),
    };
    let defaults = ServiceConfig::default();
    let config = ServiceConfig {
        default_backend: backend.clone(),
        system_prompt: args.system_prompt.or(cfg.backends.system_prompt.clone()),
        backend_timeout: cfg
            .backends
            .timeout_secs
            .map(Duration::from_secs)
            .unwrap_or(defaults.backend_timeout),
        max_in_flight: args
            .max_in_flight
            .or(cfg.limits.session_in_flight)
            .unwrap_or(defaults.max_in_flight),
        ..defaults
    };
    let pairs = catalog.len();
    let service = Arc::new(Service::new(store, catalog, config));
    let addr = format!("{}:{}", args.host, args.port);
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|e| CliError::io(format!("binding {addr}"), e))?;
    let local = listener.local_addr().map_err(|e| CliError::io("binding", e))?;
    println!("{}", json!({"stage": "serve", "listening": local.to_string(), "backend": backend, "pairs": pairs}));
    info!(stage = "serve", addr = %local, backend = %backend, pairs, "serving");
    tokio::select! {
        r = envpair_session::serve(listener, service) => r.map_err(|e| CliError::io("serving", e))?,
        _ = tokio::signal::ctrl_c() => info!(stage = "serve", "shutting down"),
    }
    Ok(json!({"stage": "serve", "status": "stopped"}))
}
