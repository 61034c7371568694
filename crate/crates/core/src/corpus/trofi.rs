use std::path::Path;

use log::warn;

use super::{tokenize, CorpusError, TrofiRecord, Usage};
use crate::normalize::normalize_surface;

/// Result of reading a TroFi example base.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrofiLoad {
    pub records: Vec<TrofiRecord>,
    /// Sentences carrying no human label (only a clustering assignment).
    pub excluded_cluster_only: usize,
    /// `(line, source id)` of human-labeled sentences whose target word was
    /// not found in the sentence.
    pub skipped_no_focus: Vec<(usize, String)>,
}

pub fn load_trofi(path: &Path) -> Result<TrofiLoad, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_trofi(&text)
}

/// Prefix stem for matching inflected forms of a target lemma: lowercase, and
/// a final `e` or `y` dropped on lemmas longer than three letters
/// ("escape" -> "escap", "carry" -> "carr").
pub fn focus_stem(lemma: &str) -> String {
    let lower = normalize_surface(lemma);
    let n = lower.chars().count();
    if n > 3 && (lower.ends_with('e') || lower.ends_with('y')) {
        let mut s = lower;
        s.pop();
        s
    } else {
        lower
    }
}

/// Parses the TroFi distribution text format:
///
/// ```text
/// ***absorb***
/// *literal cluster*
/// wsj03:8123 L The bananas absorb the water .
/// *nonliteral cluster*
/// wsj04:7878 N ...
/// wsj95:1234 U ...        <- cluster-only, excluded
/// ********************
/// ```
///
/// Lines tagged `L` or `N` are human labeled. `U` or untagged entries are
/// cluster assignments only and are excluded.
pub fn parse_trofi(text: &str) -> Result<TrofiLoad, CorpusError> {
    let mut out = TrofiLoad::default();
    let mut target: Option<String> = None;
    let mut seen = std::collections::HashMap::<String, usize>::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('*') {
            let inner = line.trim_matches('*').trim();
            if line.starts_with("***") && line.ends_with("***") && !inner.is_empty() {
                target = Some(inner.to_string());
            }
            // Section tags and separators carry no record data.
            continue;
        }

        let target_word = target.as_deref().ok_or_else(|| CorpusError::Parse {
            line: line_no,
            message: "sentence before any ***target*** heading".into(),
        })?;

        let mut fields = line.splitn(2, char::is_whitespace);
        let source_id = fields.next().unwrap_or_default();
        let rest = fields.next().map(str::trim_start).unwrap_or_default();
        let (tag, sentence) = match rest.split_once(char::is_whitespace) {
            Some((t @ ("L" | "N" | "U"), s)) => (Some(t), s.trim()),
            _ if matches!(rest, "L" | "N" | "U") => (Some(rest), ""),
            _ => (None, rest.trim()),
        };
        if sentence.is_empty() {
            return Err(CorpusError::Parse {
                line: line_no,
                message: format!("entry `{source_id}` has no sentence text"),
            });
        }
        let gold = match tag {
            Some("L") => Usage::Literal,
            Some("N") => Usage::Nonliteral,
            _ => {
                out.excluded_cluster_only += 1;
                continue;
            }
        };

        let tokens = tokenize(sentence);
        let stem = focus_stem(target_word);
        let focus_indices: Vec<usize> = tokens
            .iter()
            .filter(|t| !stem.is_empty() && normalize_surface(&t.surface).starts_with(&stem))
            .map(|t| t.index)
            .collect();
        if focus_indices.is_empty() {
            warn!("line {line_no}: target `{target_word}` not found in `{source_id}`, skipped");
            out.skipped_no_focus.push((line_no, source_id.to_string()));
            continue;
        }

        let base = format!("{target_word}/{source_id}");
        let n = seen.entry(base.clone()).or_insert(0);
        *n += 1;
        let id = if *n == 1 { base } else { format!("{base}~{n}") };

        out.records.push(TrofiRecord {
            id,
            target_word: target_word.to_string(),
            sentence: sentence.to_string(),
            tokens,
            focus_indices,
            gold,
        });
    }
    if out.excluded_cluster_only > 0 {
        warn!(
            "excluded {} cluster-only sentences (no human label)",
            out.excluded_cluster_only
        );
    }
    Ok(out)
}
