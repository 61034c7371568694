//! Surface normalization shared by focus matching and alignment.

/// Maps typographic quotes and dashes to their ASCII counterparts.
pub fn asciify_punct(c: char) -> char {
    match c {
        '\u{2018}' | '\u{2019}' | '\u{201A}' | '\u{201B}' | '\u{2032}' | '`' | '\u{00B4}' => '\'',
        '\u{201C}' | '\u{201D}' | '\u{201E}' | '\u{201F}' | '\u{2033}' | '\u{00AB}' | '\u{00BB}' => '"',
        '\u{2010}' | '\u{2011}' | '\u{2012}' | '\u{2013}' | '\u{2014}' | '\u{2015}' | '\u{2212}' => '-',
        other => other,
    }
}

/// True when the string has no alphanumeric character at all.
pub fn is_punctuation_only(s: &str) -> bool {
    !s.chars().any(char::is_alphanumeric)
}

/// Case-folds, maps curly quotes and dashes to ASCII, and strips leading and
/// trailing punctuation. Internal apostrophes and hyphens survive.
pub fn normalize_surface(s: &str) -> String {
    let mapped: String = s.chars().map(asciify_punct).flat_map(char::to_lowercase).collect();
    mapped
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_string()
}

/// Key used for phrase comparison: normalized text with whitespace and
/// hyphens removed, so "get the most" and "get-the-most" compare equal.
pub fn phrase_key(s: &str) -> String {
    normalize_surface(s)
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '-')
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_and_folds() {
        assert_eq!(normalize_surface("\u{201C}Vietnam.\u{201D}"), "vietnam");
        assert_eq!(normalize_surface("Let\u{2019}s"), "let's");
        assert_eq!(normalize_surface("**Well\u{2013}known**"), "well-known");
        assert_eq!(normalize_surface("..."), "");
    }

    #[test]
    fn phrase_keys_ignore_separators() {
        assert_eq!(phrase_key("Get the most out of"), phrase_key("get-the-most-out-of"));
        assert_eq!(phrase_key("mother in law"), "motherinlaw");
    }
}
