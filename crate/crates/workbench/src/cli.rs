use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mipw_core::corpus::validate;
use mipw_core::{parse, tokenize, Corpus, JudgmentMapping};
use mipw_gateway::{BackendRegistry, BackendSettings, ModelConfig, DEFAULT_TOP_P};

use crate::{export, report, run, serve};

#[derive(Debug, Parser)]
#[command(name = "mipw", version, about = "Metaphor identification workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate a corpus.
    Ingest(IngestArgs),
    /// Prompt a model for every sentence and write a run directory.
    Run(RunArgs),
    /// Parse one model response and print the units and diagnostics as JSON.
    Parse(ParseArgs),
    /// Score a TroFi run, optionally writing a re-scored copy.
    Score(ScoreArgs),
    /// Write confusion tables, plots and metrics for one or more runs.
    Report(ReportArgs),
    /// Serve the annotation API for an MWLB run.
    Serve(ServeArgs),
    /// Export the latest qualitative records of a run.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Corpus format (trofi or mwlb).
    #[arg(long)]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Write the loaded corpus as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub template: Option<PathBuf>,
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value_t = DEFAULT_TOP_P)]
    pub top_p: f64,
    /// Chat backend (openai or playback).
    #[arg(long, default_value = "openai")]
    pub backend: String,
    #[arg(long, env = "MIPW_BASE_URL")]
    pub base_url: Option<String>,
    /// digest -> response JSON map for the playback backend.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, default_value = "yes-nonliteral")]
    pub mapping: JudgmentMapping,
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
    #[arg(long, default_value_t = 5)]
    pub max_attempts: u32,
    #[arg(long, default_value_t = 120)]
    pub timeout_secs: u64,
    /// Directory under which the run directory is created.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    /// Response file; stdin when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Source sentence, for coverage against its word tokens.
    #[arg(long)]
    pub sentence: Option<String>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub run: PathBuf,
    /// Mapping to score under; defaults to the run's own.
    #[arg(long)]
    pub mapping: Option<JudgmentMapping>,
    /// Write a re-scored run under this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, required = true)]
    pub run: Vec<PathBuf>,
    /// Defaults to `report/` inside the single given run.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
    pub bind: IpAddr,
    /// UI bundle served under /.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub run: PathBuf,
    /// Defaults to `annotations/export/` inside the run.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Run(a) => runtime()?.block_on(run_cmd(a)),
        Command::Parse(a) => parse_cmd(a),
        Command::Score(a) => score(a),
        Command::Report(a) => {
            let out = match (a.out, a.run.as_slice()) {
                (Some(o), _) => o,
                (None, [single]) => single.join("report"),
                (None, _) => bail!("--out is required with more than one --run"),
            };
            let files = report::emit_report(&a.run, &out)?;
            for f in files.written {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::Serve(a) => runtime()?.block_on(serve_cmd(a)),
        Command::Export(a) => {
            let out = a.out.unwrap_or_else(|| a.run.join("annotations/export"));
            let summary = export::export_records(&a.run, &out)?;
            println!(
                "{} record(s), {} conflict(s) -> {}",
                summary.records.len(),
                summary.conflicts.len(),
                out.display()
            );
            Ok(())
        }
    }
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread().enable_all().build()?)
}

fn ingest(a: IngestArgs) -> Result<()> {
    let corpus = run::load_corpus(&a.corpus.corpus, &a.corpus.format)?;
    let report = validate(&corpus.records());
    println!("{} {}", corpus.format_name(), report);
    if let Corpus::Trofi(records) = &corpus {
        let nonliteral = records.iter().filter(|r| r.gold == mipw_core::Usage::Nonliteral).count();
        println!("nonliteral {nonliteral}, literal {}", records.len() - nonliteral);
    }
    if let Some(out) = a.out {
        std::fs::write(&out, serde_json::to_vec_pretty(&corpus)?)?;
    }
    if !report.is_clean() {
        bail!("corpus failed validation");
    }
    Ok(())
}

async fn run_cmd(a: RunArgs) -> Result<()> {
    let mut config = ModelConfig::new(a.model);
    config.top_p = a.top_p;
    config.max_in_flight = a.max_in_flight;
    config.max_attempts = a.max_attempts;
    config.request_timeout = Duration::from_secs(a.timeout_secs);
    config.cache_dir = a.cache_dir;
    config.validate()?;
    let settings = BackendSettings {
        base_url: a.base_url,
        api_key: std::env::var(mipw_gateway::openai::API_KEY_VAR).ok(),
        fixtures: a.fixtures,
    };
    let backend = BackendRegistry::builtin().build(&a.backend, &settings)?;
    let opts = run::RunOptions {
        corpus: a.corpus.corpus,
        format: a.corpus.format,
        template: a.template,
        config,
        backend,
        mapping: a.mapping,
        out_root: a.out,
    };
    let dir = run::run(opts, &|e| {
        if e.done % 50 == 0 || e.done == e.total {
            eprintln!("[{}/{}] {}", e.done, e.total, e.id);
        }
    })
    .await?;
    let manifest = run::read_manifest(&dir)?;
    if manifest.summary.failed > 0 {
        eprintln!("warning: {} request(s) failed; see items.jsonl", manifest.summary.failed);
    }
    println!("{}", dir.display());
    Ok(())
}

fn parse_cmd(a: ParseArgs) -> Result<()> {
    let text = match &a.input {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => std::io::read_to_string(std::io::stdin())?,
    };
    let tokens = a.sentence.as_deref().map(tokenize);
    let parsed = parse(&text, tokens.as_deref());
    println!("{}", serde_json::to_string_pretty(&parsed)?);
    Ok(())
}

fn score(a: ScoreArgs) -> Result<()> {
    let manifest = run::read_manifest(&a.run)?;
    let mapping = a.mapping.unwrap_or(manifest.mapping);
    let scores = match &a.out {
        Some(root) => {
            let (dir, scores) = run::rescore_run(&a.run, mapping, root)?;
            eprintln!("{}", dir.display());
            scores
        }
        None => {
            let mut items = run::read_items(&a.run)?;
            run::rescore(&mut items, mapping);
            run::trofi_scores(&items, &manifest.model.model_id, mapping)?
                .with_context(|| format!("run {} has no TroFi items", a.run.display()))?
        }
    };
    print!("{}", report::confusion_text(&scores.confusion));
    print!("{}", String::from_utf8(run::metrics_csv(&[&scores])?)?);
    Ok(())
}

async fn serve_cmd(a: ServeArgs) -> Result<()> {
    let handle = serve::start(serve::ServeOptions {
        run_dir: a.run,
        addr: SocketAddr::new(a.bind, a.port),
        static_dir: a.static_dir,
    })
    .await?;
    eprintln!("serving on http://{}", handle.addr);
    tokio::signal::ctrl_c().await?;
    eprintln!("shutting down");
    handle.shutdown().await
}
