//! Run directories: manifest, per-item outputs and TroFi scores.
//!
//! ```text
//! {run}/manifest.json
//! {run}/items.jsonl
//! {run}/predictions.csv   TroFi only
//! {run}/confusion.json    TroFi only
//! {run}/metrics.json      TroFi only
//! {run}/metrics.csv       TroFi only
//! {run}/annotations/records.jsonl
//! ```

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use mipw_core::{
    align, focus_prediction, parse, precision_recall, project_labels, score_trofi, template_digest,
    BinaryConfusion, ChatMessage, ClassMetrics, Corpus, CorpusRecord, FormatRegistry, JudgmentMapping,
    LabelProvenance, MetaphorSpan, ParsedOutput, Prediction, PredictionSource, PromptTemplate, Token,
    TokenLabel, TrofiRecord, Usage, GRAMMAR_VERSION,
};
use mipw_gateway::{ChatBackend, CompletionResult, Gateway, GatewayError, ModelConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";
pub const ITEMS: &str = "items.jsonl";
pub const CONFUSION: &str = "confusion.json";
pub const METRICS_JSON: &str = "metrics.json";
pub const METRICS_CSV: &str = "metrics.csv";
pub const PREDICTIONS: &str = "predictions.csv";
pub const RECORD_LOG: &str = "annotations/records.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusInfo {
    pub path: PathBuf,
    pub format: String,
    pub sha256: String,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateInfo {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub version: String,
    pub digest: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub items: usize,
    pub completed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub status: RunStatus,
    pub created_at: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completed_at: Option<String>,
    pub corpus: CorpusInfo,
    pub template: TemplateInfo,
    pub model: ModelConfig,
    pub backend: String,
    pub mapping: JudgmentMapping,
    pub parser_grammar: String,
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_run: Option<String>,
    #[serde(default)]
    pub summary: RunSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "lowercase")]
pub enum Gold {
    Trofi {
        target_word: String,
        focus_indices: Vec<usize>,
        gold: Usage,
        prediction: Prediction,
    },
    Mwlb {
        lj_metaphors: Vec<MetaphorSpan>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        conceptual_metaphor: Option<String>,
    },
}

/// One line of items.jsonl.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemOutput {
    pub id: String,
    pub sentence: String,
    pub tokens: Vec<Token>,
    pub status: ItemStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finish_reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parsed: Option<ParsedOutput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment_cost: Option<u32>,
    pub labels: Vec<TokenLabel>,
    pub gold: Gold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrofiScores {
    pub model: String,
    pub mapping: JudgmentMapping,
    pub confusion: BinaryConfusion,
    pub metrics: ClassMetrics,
    pub percent: PercentRow,
    pub missing_penalties: u64,
    pub failed_requests: u64,
}

/// Two-decimal percents, `n/a` when undefined.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PercentRow {
    pub metaphorical_precision: String,
    pub metaphorical_recall: String,
    pub literal_precision: String,
    pub literal_recall: String,
}

impl PercentRow {
    pub fn from_metrics(m: &ClassMetrics) -> Self {
        PercentRow {
            metaphorical_precision: m.precision_metaphorical.percent(),
            metaphorical_recall: m.recall_metaphorical.percent(),
            literal_precision: m.precision_literal.percent(),
            literal_recall: m.recall_literal.percent(),
        }
    }
}

pub struct RunOptions {
    pub corpus: PathBuf,
    pub format: String,
    pub template: Option<PathBuf>,
    pub config: ModelConfig,
    pub backend: Arc<dyn ChatBackend>,
    pub mapping: JudgmentMapping,
    pub out_root: PathBuf,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn load_template(path: Option<&Path>) -> Result<PromptTemplate> {
    match path {
        Some(p) => PromptTemplate::load(p).with_context(|| format!("loading template {}", p.display())),
        None => Ok(mipw_core::default_template()),
    }
}

pub fn load_corpus(path: &Path, format: &str) -> Result<Corpus> {
    let registry = FormatRegistry::builtin();
    let fmt = registry.get(format)?;
    fmt.load(path).with_context(|| format!("loading {format} corpus {}", path.display()))
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

/// Same inputs, same id; the cache directory does not take part.
pub fn run_id(manifest: &RunManifest) -> String {
    #[derive(Serialize)]
    struct IdInputs<'a> {
        corpus: &'a str,
        template: &'a str,
        model: &'a str,
        top_p: f64,
        backend: &'a str,
        mapping: JudgmentMapping,
        grammar: &'a str,
        parent: Option<&'a str>,
    }
    let inputs = IdInputs {
        corpus: &manifest.corpus.sha256,
        template: &manifest.template.digest,
        model: &manifest.model.model_id,
        top_p: manifest.model.top_p,
        backend: &manifest.backend,
        mapping: manifest.mapping,
        grammar: &manifest.parser_grammar,
        parent: manifest.parent_run.as_deref(),
    };
    let digest = sha256_hex(&serde_json::to_vec(&inputs).expect("id inputs serialize"));
    format!(
        "{}-{}-{}",
        slug(&manifest.model.model_id),
        manifest.corpus.format,
        &digest[..12]
    )
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn read_manifest(run_dir: &Path) -> Result<RunManifest> {
    let path = run_dir.join(MANIFEST);
    let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
}

pub fn read_items(run_dir: &Path) -> Result<Vec<ItemOutput>> {
    let path = run_dir.join(ITEMS);
    let file = fs::File::open(&path).with_context(|| format!("reading {}", path.display()))?;
    let mut items = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        items.push(serde_json::from_str(&line).with_context(|| format!("{} line {}", path.display(), i + 1))?);
    }
    Ok(items)
}

fn write_items(run_dir: &Path, items: &[ItemOutput]) -> Result<()> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.push(b'\n');
    }
    fs::write(run_dir.join(ITEMS), out)?;
    Ok(())
}

/// Parses a response against the record's tokens and projects labels.
pub fn analyse(tokens: &[Token], response: &str) -> (ParsedOutput, u32, Vec<TokenLabel>) {
    let parsed = parse(response, Some(tokens));
    let map = align(tokens, &parsed.units);
    let labels = project_labels(tokens, &parsed.units, &map).expect("align output is consistent");
    (parsed, map.cost, labels)
}

fn missing_labels(tokens: &[Token]) -> Vec<TokenLabel> {
    tokens
        .iter()
        .map(|t| TokenLabel {
            token_index: t.index,
            judgment: mipw_core::BasicMeaningJudgment::Unmarked,
            provenance: LabelProvenance::Missing,
        })
        .collect()
}

fn predict(labels: &[TokenLabel], focus: &[usize], gold: Usage, mapping: JudgmentMapping) -> Prediction {
    focus_prediction(labels, focus, gold, mapping).unwrap_or(Prediction {
        usage: gold.opposite(),
        source: PredictionSource::MissingPenalty,
    })
}

fn build_item(
    record: &dyn CorpusRecord,
    gold: Gold,
    outcome: Option<&Result<CompletionResult, GatewayError>>,
) -> ItemOutput {
    let tokens = record.tokens().to_vec();
    let mut item = ItemOutput {
        id: record.id().to_string(),
        sentence: record.sentence().to_string(),
        labels: missing_labels(&tokens),
        tokens,
        status: ItemStatus::Failed,
        request_digest: None,
        error: None,
        response: None,
        finish_reason: None,
        parsed: None,
        alignment_cost: None,
        gold,
    };
    match outcome {
        Some(Ok(result)) => {
            let (parsed, cost, labels) = analyse(&item.tokens, &result.text);
            item.status = ItemStatus::Ok;
            item.request_digest = Some(result.digest.clone());
            item.response = Some(result.text.clone());
            item.finish_reason = Some(result.finish_reason.clone());
            item.parsed = Some(parsed);
            item.alignment_cost = Some(cost);
            item.labels = labels;
        }
        Some(Err(e)) => item.error = Some(e.to_string()),
        None => item.error = Some("no result".into()),
    }
    item
}

/// Recomputes every TroFi prediction under `mapping`.
pub fn rescore(items: &mut [ItemOutput], mapping: JudgmentMapping) {
    for item in items {
        if let Gold::Trofi {
            focus_indices,
            gold,
            prediction,
            ..
        } = &mut item.gold
        {
            *prediction = predict(&item.labels, focus_indices, *gold, mapping);
        }
    }
}

pub fn trofi_scores(items: &[ItemOutput], model: &str, mapping: JudgmentMapping) -> Result<Option<TrofiScores>> {
    let mut records = Vec::new();
    let mut missing = 0;
    let mut failed = 0;
    for item in items {
        if let Gold::Trofi {
            target_word,
            focus_indices,
            gold,
            prediction,
        } = &item.gold
        {
            records.push((
                TrofiRecord {
                    id: item.id.clone(),
                    target_word: target_word.clone(),
                    sentence: item.sentence.clone(),
                    tokens: Vec::new(),
                    focus_indices: focus_indices.clone(),
                    gold: *gold,
                },
                prediction.usage,
            ));
            missing += (prediction.source == PredictionSource::MissingPenalty) as u64;
            failed += (item.status == ItemStatus::Failed) as u64;
        }
    }
    if records.is_empty() {
        return Ok(None);
    }
    let pairs: Vec<(&TrofiRecord, Usage)> = records.iter().map(|(r, u)| (r, *u)).collect();
    let confusion = score_trofi(&pairs)?;
    let metrics = precision_recall(&confusion);
    Ok(Some(TrofiScores {
        model: model.to_string(),
        mapping,
        confusion,
        percent: PercentRow::from_metrics(&metrics),
        metrics,
        missing_penalties: missing,
        failed_requests: failed,
    }))
}

pub const METRICS_HEADER: [&str; 5] = [
    "model",
    "metaphorical_precision",
    "metaphorical_recall",
    "literal_precision",
    "literal_recall",
];

pub fn metrics_csv(rows: &[&TrofiScores]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(METRICS_HEADER)?;
    for s in rows {
        let p = &s.percent;
        w.write_record([
            s.model.as_str(),
            &p.metaphorical_precision,
            &p.metaphorical_recall,
            &p.literal_precision,
            &p.literal_recall,
        ])?;
    }
    Ok(w.into_inner()?)
}

fn write_scores(run_dir: &Path, items: &[ItemOutput], scores: &TrofiScores) -> Result<()> {
    write_json(&run_dir.join(CONFUSION), &scores.confusion)?;
    write_json(&run_dir.join(METRICS_JSON), scores)?;
    fs::write(run_dir.join(METRICS_CSV), metrics_csv(&[scores])?)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "gold", "predicted", "source"])?;
    for item in items {
        if let Gold::Trofi { gold, prediction, .. } = &item.gold {
            let source = match prediction.source {
                PredictionSource::Judged => "judged",
                PredictionSource::MissingPenalty => "missing_penalty",
            };
            w.write_record([&item.id, usage_str(*gold), usage_str(prediction.usage), source])?;
        }
    }
    fs::write(run_dir.join(PREDICTIONS), w.into_inner()?)?;
    Ok(())
}

pub fn usage_str(u: Usage) -> &'static str {
    match u {
        Usage::Literal => "literal",
        Usage::Nonliteral => "nonliteral",
    }
}

fn gold_for(corpus: &Corpus, index: usize) -> Gold {
    match corpus {
        Corpus::Trofi(r) => {
            let r = &r[index];
            Gold::Trofi {
                target_word: r.target_word.clone(),
                focus_indices: r.focus_indices.clone(),
                gold: r.gold,
                prediction: Prediction {
                    usage: r.gold.opposite(),
                    source: PredictionSource::MissingPenalty,
                },
            }
        }
        Corpus::Mwlb(r) => Gold::Mwlb {
            lj_metaphors: r[index].lj_metaphors.clone(),
            conceptual_metaphor: r[index].conceptual_metaphor.clone(),
        },
    }
}

/// Prompts every record, parses, aligns and scores. Returns the run directory.
pub async fn run(opts: RunOptions, progress: &(dyn Fn(&mipw_gateway::BatchEvent) + Send + Sync)) -> Result<PathBuf> {
    let corpus_bytes = fs::read(&opts.corpus).with_context(|| format!("reading {}", opts.corpus.display()))?;
    let corpus = load_corpus(&opts.corpus, &opts.format)?;
    if corpus.is_empty() {
        bail!("corpus {} has no records", opts.corpus.display());
    }
    let template = load_template(opts.template.as_deref())?;
    let gateway = Gateway::new(opts.backend.clone(), opts.config.clone())?;

    let mut manifest = RunManifest {
        run_id: String::new(),
        status: RunStatus::Running,
        created_at: crate::now_rfc3339(),
        completed_at: None,
        corpus: CorpusInfo {
            path: opts.corpus.clone(),
            format: corpus.format_name().to_string(),
            sha256: sha256_hex(&corpus_bytes),
            records: corpus.len(),
        },
        template: TemplateInfo {
            path: opts.template.clone(),
            version: template.version.clone(),
            digest: template_digest(&template),
        },
        model: opts.config.clone(),
        backend: opts.backend.name().to_string(),
        mapping: opts.mapping,
        parser_grammar: GRAMMAR_VERSION.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        parent_run: None,
        summary: RunSummary::default(),
    };
    manifest.run_id = run_id(&manifest);
    let run_dir = opts.out_root.join(&manifest.run_id);
    if run_dir.join(MANIFEST).exists() {
        bail!(
            "run directory {} already exists; runs are immutable (choose another --out)",
            run_dir.display()
        );
    }
    fs::create_dir_all(&run_dir)?;
    write_json(&run_dir.join(MANIFEST), &manifest)?;

    let records = corpus.records();
    let results = gateway.run_corpus(&records, &template, progress).await;
    let mut items: Vec<ItemOutput> = records
        .iter()
        .enumerate()
        .map(|(i, r)| build_item(*r, gold_for(&corpus, i), results.get(r.id())))
        .collect();
    rescore(&mut items, opts.mapping);

    let failed = items.iter().filter(|i| i.status == ItemStatus::Failed).count();
    if failed == items.len() {
        let first = items[0].error.clone().unwrap_or_default();
        bail!("every request failed (first error: {first}); run left incomplete in {}", run_dir.display());
    }
    write_items(&run_dir, &items)?;
    if let Some(scores) = trofi_scores(&items, &opts.config.model_id, opts.mapping)? {
        write_scores(&run_dir, &items, &scores)?;
    }

    manifest.summary = RunSummary {
        items: items.len(),
        completed: items.len() - failed,
        failed,
    };
    manifest.status = RunStatus::Complete;
    manifest.completed_at = Some(crate::now_rfc3339());
    write_json(&run_dir.join(MANIFEST), &manifest)?;
    Ok(run_dir)
}

/// Re-scores a finished TroFi run under another mapping into a new run
/// directory under `out_root`.
pub fn rescore_run(run_dir: &Path, mapping: JudgmentMapping, out_root: &Path) -> Result<(PathBuf, TrofiScores)> {
    let parent = read_manifest(run_dir)?;
    if parent.status != RunStatus::Complete {
        bail!("run {} is not complete", run_dir.display());
    }
    let mut items = read_items(run_dir)?;
    rescore(&mut items, mapping);
    let Some(scores) = trofi_scores(&items, &parent.model.model_id, mapping)? else {
        bail!("run {} has no TroFi items to score", run_dir.display());
    };
    let mut manifest = parent.clone();
    manifest.mapping = mapping;
    manifest.parent_run = Some(parent.run_id.clone());
    manifest.created_at = crate::now_rfc3339();
    manifest.run_id = run_id(&manifest);
    let new_dir = out_root.join(&manifest.run_id);
    if new_dir.join(MANIFEST).exists() {
        bail!("run directory {} already exists", new_dir.display());
    }
    fs::create_dir_all(&new_dir)?;
    write_items(&new_dir, &items)?;
    write_scores(&new_dir, &items, &scores)?;
    manifest.completed_at = Some(crate::now_rfc3339());
    write_json(&new_dir.join(MANIFEST), &manifest)?;
    Ok((new_dir, scores))
}

/// Messages for one sentence under a template, used to script playback fixtures.
pub fn prompt_messages(template: &PromptTemplate, id: &str, sentence: &str) -> Result<Vec<ChatMessage>> {
    Ok(mipw_core::build_messages(template, id, sentence)?.messages)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
