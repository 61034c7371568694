//! Reading the inside of one annotation parenthetical.

use super::BasicMeaningJudgment;

pub(crate) const MARKER: &str = "more basic meaning";
const NEGATIONS: [&str; 5] = ["no", "not", "none", "without", "never"];
const GLOSS_LEADERS: [char; 6] = [':', '-', '\u{2013}', '\u{2014}', '=', ','];

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Reading {
    pub pos: Option<String>,
    pub judgment: BasicMeaningJudgment,
    pub gloss: Option<String>,
}

/// Interprets a parenthetical body such as `noun, more basic meaning: x`,
/// `noun, no more basic meaning`, `noun, YES: x`, `NO` or
/// `more basic meaning: x` (no part of speech).
pub(crate) fn read_body(body: &str) -> Reading {
    // ASCII lowercasing keeps byte offsets aligned with `body`.
    let lower = body.to_ascii_lowercase();
    if let Some(at) = lower.find(MARKER) {
        let clause_start = lower[..at].rfind([',', ';']).map(|i| i + 1).unwrap_or(0);
        let negated = words(&lower[clause_start..at]).any(is_negation);
        let pos = clean_pos(&body[..clause_start]);
        let gloss = if negated {
            None
        } else {
            clean_gloss(&body[at + MARKER.len()..])
        };
        let judgment = if negated {
            BasicMeaningJudgment::No
        } else {
            BasicMeaningJudgment::Yes
        };
        return Reading { pos, judgment, gloss };
    }

    // Bare YES / NO, possibly after a part of speech.
    let mut clause_start = 0;
    for clause in lower.split([',', ';']) {
        let trimmed = clause.trim_start();
        let lead = clause.len() - trimmed.len();
        let first: String = trimmed.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
        let judgment = match first.as_str() {
            "yes" => Some(BasicMeaningJudgment::Yes),
            "no" => Some(BasicMeaningJudgment::No),
            _ => None,
        };
        if let Some(judgment) = judgment {
            let pos = clean_pos(&body[..clause_start]);
            let after = clause_start + lead + first.len();
            let gloss = match judgment {
                BasicMeaningJudgment::Yes => clean_gloss(&body[after..]),
                _ => None,
            };
            return Reading { pos, judgment, gloss };
        }
        clause_start += clause.len() + 1;
    }

    Reading {
        pos: clean_pos(body),
        judgment: BasicMeaningJudgment::Unmarked,
        gloss: None,
    }
}

fn words(s: &str) -> impl Iterator<Item = &str> {
    s.split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .filter(|w| !w.is_empty())
}

fn is_negation(w: &str) -> bool {
    NEGATIONS.contains(&w) || w.ends_with("n't")
}

fn clean_pos(s: &str) -> Option<String> {
    let t = s.trim().trim_end_matches([',', ';']).trim();
    (!t.is_empty()).then(|| t.to_string())
}

fn clean_gloss(s: &str) -> Option<String> {
    let t = s.trim_start();
    let t = t.strip_prefix(GLOSS_LEADERS).unwrap_or(t).trim();
    (!t.is_empty()).then(|| t.to_string())
}

pub(crate) fn gloss_leader(c: char) -> bool {
    GLOSS_LEADERS.contains(&c)
}
