use std::path::Path;

use super::{tokenize, CorpusError, MetaphorSpan, MwlbRecord};

pub const MWLB_VERSION_LINE: &str = "# mwlb-tsv v1";
pub const MWLB_HEADER: &str = "id\tsentence\tspans\tconceptual_metaphor";

pub fn load_mwlb(path: &Path) -> Result<Vec<MwlbRecord>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_mwlb(&text)
}

/// Parses the MWLB TSV. Leading `#` lines are comments (the first one carries
/// the format version). `spans` is `start-end:key,key;...` over token
/// indices, `end` inclusive; a group without `:keys` uses the whole range.
pub fn parse_mwlb(text: &str) -> Result<Vec<MwlbRecord>, CorpusError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));

    let Some((_, header)) = lines.next() else {
        return Err(CorpusError::MissingColumn("id".into()));
    };
    let columns: Vec<&str> = header.split('\t').map(str::trim).collect();
    let col = |name: &str| {
        columns
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| CorpusError::MissingColumn(name.to_string()))
    };
    let id_col = col("id")?;
    let sentence_col = col("sentence")?;
    let spans_col = col("spans")?;
    let name_col = columns.iter().position(|c| *c == "conceptual_metaphor");

    let mut records = Vec::new();
    for (lineno, line) in lines {
        let line_no = lineno + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        let field = |i: usize| fields.get(i).copied().unwrap_or("");
        let id = field(id_col).trim().to_string();
        if id.is_empty() {
            return Err(CorpusError::Parse {
                line: line_no,
                message: "empty id".into(),
            });
        }
        let sentence = field(sentence_col).to_string();
        let tokens = tokenize(&sentence);
        let invalid = |message: String| CorpusError::InvalidSpan {
            id: id.clone(),
            line: line_no,
            message,
        };
        let lj_metaphors = parse_spans(field(spans_col), tokens.len()).map_err(invalid)?;
        let conceptual_metaphor = name_col
            .map(field)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        records.push(MwlbRecord {
            id,
            sentence,
            tokens,
            lj_metaphors,
            conceptual_metaphor,
        });
    }
    Ok(records)
}

fn parse_spans(field: &str, n_tokens: usize) -> Result<Vec<MetaphorSpan>, String> {
    let index = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| format!("bad token index `{}`", s.trim()))
    };
    let mut spans = Vec::new();
    for group in field.split(';').map(str::trim).filter(|g| !g.is_empty()) {
        let (range, keys) = match group.split_once(':') {
            Some((r, k)) => (r, Some(k)),
            None => (group, None),
        };
        let (start, end) = match range.split_once('-') {
            Some((a, b)) => (index(a)?, index(b)?),
            None => {
                let i = index(range)?;
                (i, i)
            }
        };
        if start > end {
            return Err(format!("span {start}-{end} is reversed"));
        }
        if end >= n_tokens {
            return Err(format!(
                "span {start}-{end} past sentence end ({n_tokens} tokens)"
            ));
        }
        let key_indices = match keys {
            Some(k) => k
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(index)
                .collect::<Result<Vec<_>, _>>()?,
            None => (start..=end).collect(),
        };
        if key_indices.is_empty() {
            return Err(format!("span {start}-{end} has no key words"));
        }
        if let Some(k) = key_indices.iter().find(|k| !(start..=end).contains(*k)) {
            return Err(format!("key {k} outside span {start}-{end}"));
        }
        spans.push(MetaphorSpan {
            start,
            end,
            key_indices,
        });
    }
    if spans.is_empty() {
        return Err("no metaphor spans".into());
    }
    Ok(spans)
}

/// Serializes records back into the TSV format, version line first.
pub fn write_mwlb(records: &[MwlbRecord]) -> String {
    let mut out = format!("{MWLB_VERSION_LINE}\n{MWLB_HEADER}\n");
    for r in records {
        let spans: Vec<String> = r
            .lj_metaphors
            .iter()
            .map(|s| {
                let keys: Vec<String> = s.key_indices.iter().map(usize::to_string).collect();
                format!("{}-{}:{}", s.start, s.end, keys.join(","))
            })
            .collect();
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            r.id,
            r.sentence,
            spans.join(";"),
            r.conceptual_metaphor.as_deref().unwrap_or("")
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROW: &str = "# mwlb-tsv v1\nid\tsentence\tspans\tconceptual_metaphor\nlj-001\tThat's in the center of my field of vision.\t1-1:1;3-3:3;6-6:6\tVISUAL FIELDS ARE CONTAINERS\n";

    #[test]
    fn visual_field_row() {
        let recs = parse_mwlb(ROW).unwrap();
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert_eq!(r.lj_metaphors.len(), 3);
        let keyed: Vec<&str> = r
            .lj_metaphors
            .iter()
            .map(|s| r.tokens[s.key_indices[0]].surface.as_str())
            .collect();
        assert_eq!(keyed, ["in", "center", "field"]);
        assert_eq!(r.conceptual_metaphor.as_deref(), Some("VISUAL FIELDS ARE CONTAINERS"));
    }

    #[test]
    fn span_past_end_names_row() {
        let text = "id\tsentence\tspans\tconceptual_metaphor\nlj-9\tRemember the Alamo!\t2-7:2\t\n";
        let err = parse_mwlb(text).unwrap_err();
        match err {
            CorpusError::InvalidSpan { id, .. } => assert_eq!(id, "lj-9"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn missing_column() {
        let err = parse_mwlb("id\tsentence\nx\ty\n").unwrap_err();
        assert!(matches!(err, CorpusError::MissingColumn(c) if c == "spans"));
    }

    #[test]
    fn phrase_span_with_keys_and_bare_range() {
        let text = "id\tsentence\tspans\tconceptual_metaphor\nlj-2\tGet the most out of life.\t0-4:0,3;5\t\n";
        let r = &parse_mwlb(text).unwrap()[0];
        assert_eq!(r.lj_metaphors[0].key_indices, vec![0, 3]);
        assert_eq!(r.lj_metaphors[1].start, 5);
        assert_eq!(r.lj_metaphors[1].key_indices, vec![5]);
        assert_eq!(r.conceptual_metaphor, None);
    }

    #[test]
    fn write_then_parse_is_identity() {
        let recs = parse_mwlb(ROW).unwrap();
        assert_eq!(parse_mwlb(&write_mwlb(&recs)).unwrap(), recs);
    }
}
