use super::Token;

/// Splits on whitespace, then peels leading and trailing punctuation off each
/// chunk one character at a time. Internal apostrophes and hyphens stay, so
/// "Let's" and "well-known" remain single tokens.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let push = |tokens: &mut Vec<Token>, start: usize, end: usize| {
        tokens.push(Token {
            surface: text[start..end].to_string(),
            index: tokens.len(),
            char_span: (start, end),
        });
    };

    for (chunk_start, chunk) in chunks(text) {
        let chars: Vec<(usize, char)> = chunk.char_indices().collect();
        let first_word = chars.iter().position(|(_, c)| c.is_alphanumeric());
        let Some(first_word) = first_word else {
            for &(off, c) in &chars {
                push(&mut tokens, chunk_start + off, chunk_start + off + c.len_utf8());
            }
            continue;
        };
        let last_word = chars
            .iter()
            .rposition(|(_, c)| c.is_alphanumeric())
            .unwrap_or(first_word);

        for &(off, c) in &chars[..first_word] {
            push(&mut tokens, chunk_start + off, chunk_start + off + c.len_utf8());
        }
        let (mid_off, _) = chars[first_word];
        let (last_off, last_c) = chars[last_word];
        push(
            &mut tokens,
            chunk_start + mid_off,
            chunk_start + last_off + last_c.len_utf8(),
        );
        for &(off, c) in &chars[last_word + 1..] {
            push(&mut tokens, chunk_start + off, chunk_start + off + c.len_utf8());
        }
    }
    tokens
}

fn chunks(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s, &text[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, &text[s..]));
    }
    out.into_iter()
}
