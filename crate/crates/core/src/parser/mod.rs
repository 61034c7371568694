//! Parsing annotated model responses.
//!
//! The canonical response echoes the sentence with one parenthetical after
//! each annotated unit:
//!
//! ```text
//! Let's (verb, no more basic meaning) ... Vietnam (noun, more basic meaning: the country).
//! ```
//!
//! A multi-word unit is written as a quoted group (`"get the most" (...)`) or
//! joined with hyphens (`get-the-most (...)`, at least two hyphens). Parsing
//! is total: anything off-grammar is recovered where possible and reported as
//! a [`ParseDiagnostic`].

mod judgment;

use serde::{Deserialize, Serialize};

use crate::corpus::Token;
use crate::normalize::is_punctuation_only;
use judgment::{gloss_leader, read_body, MARKER};

/// Identifies the response grammar this parser accepts.
pub const GRAMMAR_VERSION: &str = "mip-paren/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasicMeaningJudgment {
    Yes,
    No,
    /// No readable judgment; only produced by recovery.
    Unmarked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    Word,
    Phrase,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnitAnnotation {
    pub surface: String,
    pub kind: UnitKind,
    pub pos: Option<String>,
    pub judgment: BasicMeaningJudgment,
    pub gloss: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    Truncated,
    MissingParenthetical,
    UnbalancedDelimiters,
    ListFormatDrift,
    DroppedWords,
}

/// `location` is a character (not byte) offset into the parsed text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    pub kind: DiagnosticKind,
    pub location: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedOutput {
    pub units: Vec<UnitAnnotation>,
    pub diagnostics: Vec<ParseDiagnostic>,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RenderError {
    #[error("nothing to render")]
    Empty,
    #[error("unit {index} ({surface:?}): {reason}")]
    InvalidUnit {
        index: usize,
        surface: String,
        reason: &'static str,
    },
}

fn is_open_quote(c: char) -> bool {
    matches!(c, '"' | '\u{201C}' | '\u{201E}')
}

fn is_close_quote(c: char) -> bool {
    matches!(c, '"' | '\u{201D}' | '\u{201C}')
}

fn is_any_quote(c: char) -> bool {
    is_open_quote(c) || is_close_quote(c)
}

/// `get-the-most` style group: three or more non-empty parts joined by `-`.
fn hyphen_phrase(chunk: &str) -> Option<String> {
    let parts: Vec<&str> = chunk.split('-').collect();
    let ok = parts.len() >= 3
        && parts
            .iter()
            .all(|p| !p.is_empty() && p.chars().all(|c| c.is_alphanumeric() || c == '\''));
    ok.then(|| parts.join(" "))
}

/// A list marker (`1.`, `2)`, `-`, `*`, `•`) as a whole chunk.
fn is_list_marker(s: &str) -> bool {
    match s {
        "-" | "*" | "\u{2022}" | "\u{2013}" => true,
        _ => {
            let digits = s.trim_end_matches(['.', ')']);
            s.len() == digits.len() + 1
                && !digits.is_empty()
                && digits.len() <= 3
                && digits.chars().all(|c| c.is_ascii_digit())
        }
    }
}

struct Group {
    start: usize,
    text: String,
    quoted: bool,
}

struct Scanner<'a> {
    cs: &'a [char],
    units: Vec<UnitAnnotation>,
    diagnostics: Vec<ParseDiagnostic>,
    pending: Option<Group>,
    drift_reported: bool,
}

impl Scanner<'_> {
    fn diag(&mut self, kind: DiagnosticKind, location: usize, message: impl Into<String>) {
        self.diagnostics.push(ParseDiagnostic {
            kind,
            location,
            message: message.into(),
        });
    }

    /// A group with no parenthetical: Unmarked unit unless it is bare punctuation.
    fn flush_bare(&mut self) {
        let Some(g) = self.pending.take() else { return };
        if is_punctuation_only(&g.text) {
            return;
        }
        self.diag(
            DiagnosticKind::MissingParenthetical,
            g.start,
            format!("`{}` has no annotation", g.text),
        );
        let kind = if g.quoted { UnitKind::Phrase } else { UnitKind::Word };
        self.units.push(UnitAnnotation {
            surface: g.text,
            kind,
            pos: None,
            judgment: BasicMeaningJudgment::Unmarked,
            gloss: None,
        });
    }

    fn attach(&mut self, open_at: usize, body: &str) {
        let Some(g) = self.pending.take() else {
            self.diag(
                DiagnosticKind::ListFormatDrift,
                open_at,
                "parenthetical not attached to any word",
            );
            return;
        };
        let (surface, kind) = if g.quoted {
            (g.text, UnitKind::Phrase)
        } else if let Some(p) = hyphen_phrase(&g.text) {
            (p, UnitKind::Phrase)
        } else {
            (g.text, UnitKind::Word)
        };
        let reading = read_body(body);
        if reading.judgment == BasicMeaningJudgment::Unmarked {
            self.diag(
                DiagnosticKind::MissingParenthetical,
                open_at,
                format!("no judgment in parenthetical for `{surface}`"),
            );
        }
        self.units.push(UnitAnnotation {
            surface,
            kind,
            pos: reading.pos,
            judgment: reading.judgment,
            gloss: reading.gloss,
        });
    }

    fn at_line_start(&self, i: usize) -> bool {
        self.cs[..i]
            .iter()
            .rev()
            .take_while(|c| **c != '\n')
            .all(|c| c.is_whitespace())
    }

    fn run(&mut self) {
        let cs = self.cs;
        let n = cs.len();
        let mut i = 0;
        while i < n {
            let c = cs[i];
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '(' {
                match close_paren(cs, i) {
                    Closing::Closed(end) => {
                        let body: String = cs[i + 1..end].iter().collect();
                        self.attach(i, &body);
                        i = end + 1;
                    }
                    Closing::AtNewline(nl) => {
                        self.diag(
                            DiagnosticKind::UnbalancedDelimiters,
                            i,
                            "parenthetical closed at end of line",
                        );
                        let body: String = cs[i + 1..nl].iter().collect();
                        self.attach(i, &body);
                        i = nl + 1;
                    }
                    Closing::Eof => {
                        self.pending = None;
                        self.diag(DiagnosticKind::Truncated, i, "input ends inside a parenthetical");
                        return;
                    }
                }
                continue;
            }
            if c == ')' {
                self.diag(DiagnosticKind::UnbalancedDelimiters, i, "unmatched `)`");
                i += 1;
                continue;
            }
            if is_open_quote(c) {
                match close_quote(cs, i) {
                    QuoteEnd::Closed(q) => {
                        let inner: String = cs[i + 1..q].iter().collect();
                        let inner_trim = inner.trim();
                        if inner_trim.chars().any(char::is_whitespace) {
                            self.flush_bare();
                            self.pending = Some(Group {
                                start: i,
                                text: inner_trim.to_string(),
                                quoted: true,
                            });
                            i = q + 1;
                            continue;
                        }
                        // Single quoted word: an ordinary chunk, quotes kept.
                    }
                    QuoteEnd::Eof => {
                        self.flush_bare();
                        self.diag(DiagnosticKind::Truncated, i, "input ends inside a quoted group");
                        return;
                    }
                    QuoteEnd::Open => {}
                }
            }

            if let Some(len) = list_marker_at(cs, i) {
                if self.at_line_start(i) {
                    self.flush_bare();
                    if !self.drift_reported {
                        self.drift_reported = true;
                        self.diag(DiagnosticKind::ListFormatDrift, i, "list markers stripped");
                    }
                    i += len;
                    continue;
                }
            }

            // Ordinary chunk up to whitespace or a parenthesis.
            let start = i;
            let mut end = i;
            while end < n && !cs[end].is_whitespace() && cs[end] != '(' && cs[end] != ')' {
                end += 1;
                // A quoted single word ends at its closing quote.
                if is_open_quote(c) && end > start + 1 && is_close_quote(cs[end - 1]) {
                    break;
                }
            }
            let text: String = cs[start..end].iter().collect();
            self.flush_bare();
            self.pending = Some(Group {
                start,
                text,
                quoted: false,
            });
            i = end;
        }
        self.flush_bare();
    }
}

/// Length of a list marker (`12.`, `3)`, `-`, `*`, `•`) starting at `i`
/// and followed by whitespace.
fn list_marker_at(cs: &[char], i: usize) -> Option<usize> {
    let followed_by_space = |j: usize| cs.get(j).is_some_and(|c| c.is_whitespace());
    if matches!(cs[i], '-' | '*' | '\u{2022}' | '\u{2013}') {
        return followed_by_space(i + 1).then_some(1);
    }
    let digits = cs[i..].iter().take_while(|c| c.is_ascii_digit()).count();
    if (1..=3).contains(&digits)
        && matches!(cs.get(i + digits), Some('.' | ')'))
        && followed_by_space(i + digits + 1)
    {
        return Some(digits + 1);
    }
    None
}

enum Closing {
    Closed(usize),
    AtNewline(usize),
    Eof,
}

fn close_paren(cs: &[char], open: usize) -> Closing {
    let mut depth = 0usize;
    let mut first_newline = None;
    for (j, &c) in cs.iter().enumerate().skip(open) {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Closing::Closed(j);
                }
            }
            '\n' if first_newline.is_none() => first_newline = Some(j),
            _ => {}
        }
    }
    match first_newline {
        Some(nl) if cs[nl..].iter().any(|c| !c.is_whitespace()) => Closing::AtNewline(nl),
        _ => Closing::Eof,
    }
}

enum QuoteEnd {
    Closed(usize),
    /// No closing quote before the next parenthesis or line break.
    Open,
    Eof,
}

fn close_quote(cs: &[char], open: usize) -> QuoteEnd {
    for (j, &c) in cs.iter().enumerate().skip(open + 1) {
        if is_close_quote(c) {
            return QuoteEnd::Closed(j);
        }
        if c == '(' || c == ')' || c == '\n' {
            return QuoteEnd::Open;
        }
    }
    QuoteEnd::Eof
}

fn word_weight(u: &UnitAnnotation) -> usize {
    match u.kind {
        UnitKind::Word => 1,
        UnitKind::Phrase => u.surface.split_whitespace().count().max(1),
    }
}

/// Parses a model response. Never fails; see the module docs.
///
/// With `expected_tokens`, coverage is annotated words over the expected word
/// tokens (punctuation excluded), capped at 1, and a shortfall is reported as
/// [`DiagnosticKind::DroppedWords`]. Without it, coverage is the fraction of
/// units that carry a judgment.
pub fn parse(text: &str, expected_tokens: Option<&[Token]>) -> ParsedOutput {
    let cs: Vec<char> = text.chars().collect();
    let mut scanner = Scanner {
        cs: &cs,
        units: Vec::new(),
        diagnostics: Vec::new(),
        pending: None,
        drift_reported: false,
    };
    scanner.run();
    let Scanner {
        units,
        mut diagnostics,
        ..
    } = scanner;

    let annotated: Vec<&UnitAnnotation> = units
        .iter()
        .filter(|u| u.judgment != BasicMeaningJudgment::Unmarked)
        .collect();
    let coverage = match expected_tokens {
        Some(tokens) => {
            let expected = tokens.iter().filter(|t| t.is_word()).count();
            let got: usize = annotated.iter().map(|u| word_weight(u)).sum();
            if got < expected {
                diagnostics.push(ParseDiagnostic {
                    kind: DiagnosticKind::DroppedWords,
                    location: cs.len(),
                    message: format!("{got} of {expected} words annotated"),
                });
            }
            if expected == 0 {
                1.0
            } else {
                (got as f64 / expected as f64).min(1.0)
            }
        }
        None if units.is_empty() => 1.0,
        None => annotated.len() as f64 / units.len() as f64,
    };
    ParsedOutput {
        units,
        diagnostics,
        coverage,
    }
}

impl UnitAnnotation {
    /// Checks that the unit can be written in the canonical grammar.
    pub fn check(&self) -> Result<(), &'static str> {
        let s = &self.surface;
        if s.is_empty() || s.trim() != s {
            return Err("surface must be non-empty and trimmed");
        }
        if s.contains(['(', ')', '\n']) {
            return Err("surface contains a parenthesis or line break");
        }
        match self.kind {
            UnitKind::Word => {
                if s.chars().any(char::is_whitespace) {
                    return Err("word surface contains whitespace");
                }
                if hyphen_phrase(s).is_some() {
                    return Err("word surface reads as a hyphen-joined phrase");
                }
                if is_list_marker(s) {
                    return Err("word surface reads as a list marker");
                }
                let mut chars = s.chars();
                if chars.next().is_some_and(is_open_quote) {
                    let rest: Vec<char> = chars.collect();
                    let inner_quotes = rest.iter().rev().skip(1).any(|c| is_any_quote(*c));
                    if inner_quotes || rest.is_empty() {
                        return Err("quoted word surface must be a single quoted token");
                    }
                }
            }
            UnitKind::Phrase => {
                if !s.chars().any(char::is_whitespace) {
                    return Err("phrase surface has no whitespace");
                }
                if s.chars().any(is_any_quote) {
                    return Err("phrase surface contains a double quote");
                }
            }
        }
        if let Some(pos) = &self.pos {
            if pos.is_empty() || pos.trim() != pos {
                return Err("part of speech must be non-empty and trimmed");
            }
            if pos.contains([',', ';', '(', ')', '\n']) || pos.to_ascii_lowercase().contains(MARKER)
            {
                return Err("part of speech contains reserved text");
            }
        }
        match (self.judgment, &self.gloss) {
            (BasicMeaningJudgment::Unmarked, _) => Err("unmarked units have no canonical form"),
            (BasicMeaningJudgment::No, Some(_)) => Err("gloss given for a no judgment"),
            (BasicMeaningJudgment::Yes, Some(g)) => {
                if g.is_empty() || g.trim() != g || g.contains('\n') {
                    return Err("gloss must be non-empty, trimmed and on one line");
                }
                if g.starts_with(gloss_leader) {
                    return Err("gloss starts with a separator");
                }
                let mut depth = 0i32;
                for c in g.chars() {
                    depth += match c {
                        '(' => 1,
                        ')' => -1,
                        _ => 0,
                    };
                    if depth < 0 {
                        return Err("gloss has unbalanced parentheses");
                    }
                }
                if depth != 0 {
                    return Err("gloss has unbalanced parentheses");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn render_into(&self, out: &mut String) {
        match self.kind {
            UnitKind::Word => out.push_str(&self.surface),
            UnitKind::Phrase => {
                out.push('"');
                out.push_str(&self.surface);
                out.push('"');
            }
        }
        out.push_str(" (");
        if let Some(pos) = &self.pos {
            out.push_str(pos);
            out.push_str(", ");
        }
        match (self.judgment, &self.gloss) {
            (BasicMeaningJudgment::Yes, Some(g)) => {
                out.push_str("more basic meaning: ");
                out.push_str(g);
            }
            (BasicMeaningJudgment::Yes, None) => out.push_str("more basic meaning"),
            _ => out.push_str("no more basic meaning"),
        }
        out.push(')');
    }
}

/// Writes units in the canonical grammar, separated by single spaces.
pub fn render(units: &[UnitAnnotation]) -> Result<String, RenderError> {
    if units.is_empty() {
        return Err(RenderError::Empty);
    }
    let mut out = String::new();
    for (index, u) in units.iter().enumerate() {
        u.check().map_err(|reason| RenderError::InvalidUnit {
            index,
            surface: u.surface.clone(),
            reason,
        })?;
        if index > 0 {
            out.push(' ');
        }
        u.render_into(&mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
