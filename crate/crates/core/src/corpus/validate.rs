use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{tokenize, CorpusRecord, Token};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub id: String,
    pub stored: Vec<String>,
    pub retokenized: Vec<String>,
}

/// Problems found in a loaded corpus. Empty means clean.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub records: usize,
    pub duplicate_ids: Vec<String>,
    pub empty_sentences: Vec<String>,
    pub token_mismatches: Vec<Mismatch>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.duplicate_ids.is_empty()
            && self.empty_sentences.is_empty()
            && self.token_mismatches.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records: {}", self.records)?;
        if self.is_clean() {
            return writeln!(f, "no problems found");
        }
        for id in &self.duplicate_ids {
            writeln!(f, "duplicate id: {id}")?;
        }
        for id in &self.empty_sentences {
            writeln!(f, "empty sentence: {id}")?;
        }
        for m in &self.token_mismatches {
            writeln!(
                f,
                "token mismatch in {}: stored [{}] vs tokenize [{}]",
                m.id,
                m.stored.join(" | "),
                m.retokenized.join(" | ")
            )?;
        }
        Ok(())
    }
}

pub fn validate(records: &[&dyn CorpusRecord]) -> ValidationReport {
    let mut counts = BTreeMap::<&str, usize>::new();
    let mut report = ValidationReport {
        records: records.len(),
        ..Default::default()
    };
    for r in records {
        *counts.entry(r.id()).or_default() += 1;
        if r.sentence().trim().is_empty() {
            report.empty_sentences.push(r.id().to_string());
        }
        let fresh = tokenize(r.sentence());
        if fresh.as_slice() != r.tokens() {
            let s = |t: &[Token]| t.iter().map(|t| t.surface.clone()).collect();
            report.token_mismatches.push(Mismatch {
                id: r.id().to_string(),
                stored: s(r.tokens()),
                retokenized: s(&fresh),
            });
        }
    }
    report.duplicate_ids = counts
        .into_iter()
        .filter(|(_, n)| *n > 1)
        .map(|(id, _)| id.to_string())
        .collect();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_mwlb, MwlbRecord};

    fn fixture() -> Vec<MwlbRecord> {
        parse_mwlb(
            "id\tsentence\tspans\tconceptual_metaphor\n\
             a\tI hate to read Heidegger.\t4\tPRODUCER FOR PRODUCT\n\
             b\tRemember the Alamo!\t1-2:2\tPLACE FOR EVENT\n",
        )
        .unwrap()
    }

    fn view(recs: &[MwlbRecord]) -> Vec<&dyn CorpusRecord> {
        recs.iter().map(|r| r as &dyn CorpusRecord).collect()
    }

    #[test]
    fn clean_fixture() {
        let recs = fixture();
        let report = validate(&view(&recs));
        assert!(report.is_clean(), "{report}");
    }

    #[test]
    fn duplicate_ids_listed() {
        let mut recs = fixture();
        recs[1].id = "a".into();
        assert_eq!(validate(&view(&recs)).duplicate_ids, vec!["a".to_string()]);
    }

    #[test]
    fn edited_token_shows_both_lists() {
        let mut recs = fixture();
        recs[0].tokens[4].surface = "Heidegger.".into();
        let report = validate(&view(&recs));
        assert_eq!(report.token_mismatches.len(), 1);
        let m = &report.token_mismatches[0];
        assert_eq!(m.stored[4], "Heidegger.");
        assert_eq!(m.retokenized[4], "Heidegger");
        assert_eq!(m.retokenized.len(), 6);
    }
}
