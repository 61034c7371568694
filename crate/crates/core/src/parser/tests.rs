use super::*;
use crate::corpus::tokenize;
use proptest::prelude::*;

fn word(surface: &str, pos: &str, judgment: BasicMeaningJudgment, gloss: Option<&str>) -> UnitAnnotation {
    UnitAnnotation {
        surface: surface.into(),
        kind: UnitKind::Word,
        pos: Some(pos.into()),
        judgment,
        gloss: gloss.map(str::to_string),
    }
}

fn kinds(out: &ParsedOutput) -> Vec<DiagnosticKind> {
    out.diagnostics.iter().map(|d| d.kind).collect()
}

#[test]
fn vietnam_unit() {
    let out = parse("Vietnam (noun, more basic meaning: the country in Southeast Asia)", None);
    assert_eq!(
        out.units,
        vec![word(
            "Vietnam",
            "noun",
            BasicMeaningJudgment::Yes,
            Some("the country in Southeast Asia")
        )]
    );
    assert!(out.diagnostics.is_empty());
}

#[test]
fn all_no_sentence_is_clean() {
    let sentence = "Remember the Alamo!";
    let text = "Remember (verb, no more basic meaning) the (article, no more basic meaning) Alamo (proper noun, no more basic meaning)!";
    let out = parse(text, Some(&tokenize(sentence)));
    assert_eq!(out.units.len(), 3);
    assert!(out.units.iter().all(|u| u.judgment == BasicMeaningJudgment::No));
    assert!(out.diagnostics.is_empty(), "{:?}", out.diagnostics);
    assert_eq!(out.coverage, 1.0);
}

#[test]
fn truncated_after_seven_of_ten() {
    let sentence = "The old man kicked the bucket after a long illness.";
    let tokens = tokenize(sentence);
    assert_eq!(tokens.iter().filter(|t| t.is_word()).count(), 10);
    let text = "The (determiner, no more basic meaning) old (adjective, no more basic meaning) \
                man (noun, no more basic meaning) kicked (verb, more basic meaning: to strike with the foot) \
                the (determiner, no more basic meaning) bucket (noun, more basic meaning: a pail for carrying water) \
                after (preposition, no more basic meaning) a (determiner, no more";
    let out = parse(text, Some(&tokens));
    assert_eq!(out.units.len(), 7);
    assert!((out.coverage - 0.7).abs() < 1e-12);
    assert!(kinds(&out).contains(&DiagnosticKind::Truncated));
    let trunc = out.diagnostics.iter().find(|d| d.kind == DiagnosticKind::Truncated).unwrap();
    assert_eq!(trunc.location, text.rfind('(').unwrap());
}

#[test]
fn render_forms() {
    assert_eq!(
        render(&[word("word", "pos", BasicMeaningJudgment::No, None)]).unwrap(),
        "word (pos, no more basic meaning)"
    );
    assert_eq!(
        render(&[word("word", "pos", BasicMeaningJudgment::Yes, Some("gloss"))]).unwrap(),
        "word (pos, more basic meaning: gloss)"
    );
}

#[test]
fn render_rejects_invalid_units() {
    assert_eq!(render(&[]), Err(RenderError::Empty));
    let bad = word("x", "noun", BasicMeaningJudgment::No, Some("g"));
    assert!(matches!(render(&[bad]), Err(RenderError::InvalidUnit { index: 0, .. })));
    let unmarked = word("x", "noun", BasicMeaningJudgment::Unmarked, None);
    assert!(render(&[unmarked]).is_err());
    let spaced = word("two words", "noun", BasicMeaningJudgment::No, None);
    assert!(render(&[spaced]).is_err());
}

#[test]
fn quoted_phrase_and_hyphen_phrase() {
    let out = parse(
        "\"Get the most out of\" (verb phrase, more basic meaning: to extract the largest amount) life (noun, no more basic meaning). \
         get-the-most-out-of (phrase, YES) well-known (adjective, no more basic meaning)",
        None,
    );
    assert_eq!(out.units[0].kind, UnitKind::Phrase);
    assert_eq!(out.units[0].surface, "Get the most out of");
    assert_eq!(out.units[1].kind, UnitKind::Word);
    assert_eq!(out.units[2].kind, UnitKind::Phrase);
    assert_eq!(out.units[2].surface, "get the most out of");
    assert_eq!(out.units[2].judgment, BasicMeaningJudgment::Yes);
    assert_eq!(out.units[3].kind, UnitKind::Word);
    assert!(out.diagnostics.is_empty(), "{:?}", out.diagnostics);
}

#[test]
fn single_quoted_word_keeps_quotes() {
    let out = parse("\"Heidegger\" (noun, more basic meaning: the philosopher himself)", None);
    assert_eq!(out.units[0].surface, "\"Heidegger\"");
    assert_eq!(out.units[0].kind, UnitKind::Word);
}

#[test]
fn numbered_list_is_recovered() {
    let text = "1. Remember (verb, no more basic meaning)\n2. the (article, NO)\n3) Alamo (noun, YES: a mission building in Texas)";
    let out = parse(text, Some(&tokenize("Remember the Alamo!")));
    assert_eq!(out.units.len(), 3);
    assert_eq!(out.units[2].gloss.as_deref(), Some("a mission building in Texas"));
    assert_eq!(kinds(&out), vec![DiagnosticKind::ListFormatDrift]);
    assert_eq!(out.coverage, 1.0);
}

#[test]
fn bullets_are_recovered() {
    let out = parse("- in (preposition, no more basic meaning)\n- center (noun, NO)", None);
    assert_eq!(out.units.len(), 2);
    assert_eq!(kinds(&out), vec![DiagnosticKind::ListFormatDrift]);
}

#[test]
fn dropped_parentheticals_become_unmarked() {
    let sentence = "I hate to read Heidegger.";
    let out = parse(
        "I (pronoun, no more basic meaning) hate to (particle, no more basic meaning) read Heidegger (noun, YES).",
        Some(&tokenize(sentence)),
    );
    let judgments: Vec<_> = out.units.iter().map(|u| u.judgment).collect();
    use BasicMeaningJudgment::*;
    assert_eq!(judgments, vec![No, Unmarked, No, Unmarked, Yes]);
    assert!((out.coverage - 0.6).abs() < 1e-12);
    let k = kinds(&out);
    assert_eq!(k.iter().filter(|k| **k == DiagnosticKind::MissingParenthetical).count(), 2);
    assert!(k.contains(&DiagnosticKind::DroppedWords));
}

#[test]
fn missing_pos_accepted_silently() {
    let out = parse("in (no more basic meaning) field (more basic meaning: an area of open land)", None);
    assert_eq!(out.units[0].pos, None);
    assert_eq!(out.units[0].judgment, BasicMeaningJudgment::No);
    assert_eq!(out.units[1].gloss.as_deref(), Some("an area of open land"));
    assert!(out.diagnostics.is_empty());
}

#[test]
fn stray_delimiters() {
    let out = parse("word (noun, NO)) other (noun, NO) (verb, NO)", None);
    assert_eq!(out.units.len(), 2);
    let k = kinds(&out);
    assert!(k.contains(&DiagnosticKind::UnbalancedDelimiters));
    assert!(k.contains(&DiagnosticKind::ListFormatDrift));
}

#[test]
fn paren_closed_at_newline_when_more_follows() {
    let out = parse("word (noun, more basic meaning: a thing\nnext (noun, NO)", None);
    assert_eq!(out.units.len(), 2);
    assert_eq!(out.units[0].gloss.as_deref(), Some("a thing"));
    assert!(kinds(&out).contains(&DiagnosticKind::UnbalancedDelimiters));
}

#[test]
fn empty_input() {
    let out = parse("", None);
    assert!(out.units.is_empty());
    assert!(out.diagnostics.is_empty());
    assert_eq!(out.coverage, 1.0);
    let out = parse("", Some(&tokenize("Remember the Alamo!")));
    assert_eq!(out.coverage, 0.0);
    assert_eq!(kinds(&out), vec![DiagnosticKind::DroppedWords]);
}

#[test]
fn punctuation_between_units_is_ignored() {
    let out = parse("Vietnam (noun, YES) . , ! -- ...", None);
    assert_eq!(out.units.len(), 1);
    assert!(out.diagnostics.is_empty());
}

/// Generators for well-formed units, shared with the acceptance suite's idea
/// of "well formed": canonical grammar, no recovery needed.
pub(crate) mod gen {
    use super::*;

    fn word_surface() -> impl Strategy<Value = String> {
        prop_oneof![
            "[A-Za-z][a-z0-9]{0,8}",
            "[A-Za-z][a-z]{0,5}'[a-z]{1,2}",
            "[A-Za-z][a-z]{0,5}-[a-z]{1,6}",
            "[A-Za-z][a-z]{0,8}[.,!?;:]",
            "\"[A-Za-z][a-z]{0,8}\"",
            "[\u{C0}-\u{17F}][\u{C0}-\u{17F}a-z]{0,6}",
        ]
    }

    fn phrase_surface() -> impl Strategy<Value = String> {
        prop::collection::vec("[a-zA-Z][a-z']{0,6}", 2..5).prop_map(|w| w.join(" "))
    }

    fn gloss() -> impl Strategy<Value = String> {
        prop_oneof![
            "[a-z][a-z ,:'.;-]{0,30}[a-z]",
            "[a-z][a-z ]{0,12} \\([a-z ,]{1,10}\\)",
            "[a-z]{1,6} \\([a-z]{1,4} \\([a-z]{1,4}\\)\\) [a-z]{1,6}",
            "[A-Z][a-z]{1,8}",
        ]
    }

    pub fn unit() -> impl Strategy<Value = UnitAnnotation> {
        let surface = prop_oneof![
            3 => word_surface().prop_map(|s| (s, UnitKind::Word)),
            1 => phrase_surface().prop_map(|s| (s, UnitKind::Phrase)),
        ];
        let pos = prop::option::weighted(0.85, "[a-z]{2,9}( [a-z]{2,6})?");
        let judgment = prop_oneof![
            Just((BasicMeaningJudgment::No, None)),
            prop::option::weighted(0.8, gloss()).prop_map(|g| (BasicMeaningJudgment::Yes, g)),
        ];
        (surface, pos, judgment)
            .prop_map(|((surface, kind), pos, (judgment, gloss))| UnitAnnotation {
                surface,
                kind,
                pos,
                judgment,
                gloss,
            })
            .prop_filter("canonical", |u| u.check().is_ok())
    }

    pub fn units() -> impl Strategy<Value = Vec<UnitAnnotation>> {
        prop::collection::vec(unit(), 1..16)
    }
}

proptest! {
    #[test]
    fn render_parse_round_trip(units in gen::units()) {
        let text = render(&units).unwrap();
        let out = parse(&text, None);
        prop_assert_eq!(&out.units, &units, "text: {}", text);
        prop_assert!(out.diagnostics.is_empty(), "{:?}", out.diagnostics);
        prop_assert_eq!(out.coverage, 1.0);
    }

    #[test]
    fn removing_a_suffix_never_adds_units(units in gen::units()) {
        let text = render(&units).unwrap();
        let full = parse(&text, None).units.len();
        for (cut, _) in text.char_indices() {
            let part = parse(&text[..cut], None);
            prop_assert!(part.units.len() <= full, "prefix {:?}", &text[..cut]);
        }
    }

    #[test]
    fn parse_is_total_on_grammar_soup(text in "[a-zA-Z \"(),:;.\\n\u{201C}\u{201D}1-]{0,120}") {
        let out = parse(&text, Some(&tokenize(&text)));
        let len = text.chars().count();
        prop_assert!(out.diagnostics.iter().all(|d| d.location <= len));
        prop_assert!((0.0..=1.0).contains(&out.coverage));
        prop_assert!(out.units.iter().all(|u| u.kind != UnitKind::Phrase || u.surface.chars().any(char::is_whitespace)));
        prop_assert!(out.units.iter().all(|u| u.judgment != BasicMeaningJudgment::No || u.gloss.is_none()));
    }

    #[test]
    fn parse_is_total_on_arbitrary_text(text in "\\PC{0,200}") {
        let _ = parse(&text, None);
    }
}
