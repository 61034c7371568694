#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use mipw_core::{default_template, JudgmentMapping};
use mipw_gateway::{CacheKey, ModelConfig, PlaybackBackend};
use mipw_workbench::run::{self, RunOptions};

pub const MODEL: &str = "gpt-4o";

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Set MIPW_BLESS=1 to rewrite golden files instead of comparing.
pub fn blessing() -> bool {
    std::env::var_os("MIPW_BLESS").is_some()
}

pub fn config(cache_dir: Option<&Path>) -> ModelConfig {
    let mut c = ModelConfig::new(MODEL);
    c.cache_dir = cache_dir.map(Path::to_path_buf);
    c
}

/// digest -> text for every record with a scripted response.
pub fn playback_map(corpus: &Path, format: &str, responses: &Path) -> BTreeMap<String, String> {
    let by_id: BTreeMap<String, String> =
        serde_json::from_slice(&std::fs::read(responses).unwrap()).unwrap();
    let corpus = run::load_corpus(corpus, format).unwrap();
    let template = default_template();
    let cfg = config(None);
    let mut map = BTreeMap::new();
    for r in corpus.records() {
        if let Some(text) = by_id.get(r.id()) {
            let messages = run::prompt_messages(&template, r.id(), r.sentence()).unwrap();
            map.insert(CacheKey::new(&cfg.model_id, cfg.top_p, &messages).digest, text.clone());
        }
    }
    map
}

pub struct Fixture {
    pub corpus: PathBuf,
    pub format: &'static str,
    pub playback: PathBuf,
}

pub fn trofi20() -> Fixture {
    Fixture {
        corpus: fixture("trofi20.txt"),
        format: "trofi",
        playback: fixture("trofi20_playback.json"),
    }
}

pub fn mwlb7() -> Fixture {
    Fixture {
        corpus: fixture("mwlb7.tsv"),
        format: "mwlb",
        playback: fixture("mwlb7_playback.json"),
    }
}

pub async fn run_fixture(f: &Fixture, out_root: &Path, cache_dir: Option<&Path>, mapping: JudgmentMapping) -> PathBuf {
    let backend = Arc::new(PlaybackBackend::from_file(&f.playback).unwrap());
    run::run(
        RunOptions {
            corpus: f.corpus.clone(),
            format: f.format.to_string(),
            template: None,
            config: config(cache_dir),
            backend,
            mapping,
            out_root: out_root.to_path_buf(),
        },
        &|_| {},
    )
    .await
    .unwrap()
}

/// Compares against a golden file, or rewrites it when blessing.
pub fn golden(actual: &[u8], name: &str) {
    let path = fixture(name);
    if blessing() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read(&path).unwrap_or_else(|_| panic!("missing golden {name}; run with MIPW_BLESS=1"));
    assert!(
        actual == expected.as_slice(),
        "{name} differs from golden:\n--- actual\n{}\n--- expected\n{}",
        String::from_utf8_lossy(actual),
        String::from_utf8_lossy(&expected)
    );
}
