//! Small text helpers shared by the renderer, metrics, and data synthesis.

/// Characters that attach to the preceding token instead of standing alone.
const ATTACHING_PUNCT: &[char] = &[',', '.', ';', ':', '!', '?'];

/// Join tokens with single spaces, gluing punctuation-only tokens to the
/// preceding token (`"Palo Alto , because"` becomes `"Palo Alto, because"`).
pub fn join_with_punctuation<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for tok in tokens {
        let tok = tok.as_ref();
        if tok.is_empty() {
            continue;
        }
        let attach = !tok.is_empty() && tok.chars().all(|c| ATTACHING_PUNCT.contains(&c));
        if !out.is_empty() && !attach {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

/// Collapse runs of whitespace to single spaces and trim.
pub fn normalize_spaces(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Strip structural markers from an annotated string, keeping terminal text.
///
/// Works token-wise so it never fails on malformed input: tokens opening a
/// span (`[LABEL`) are dropped, `]` characters are removed, and the rest is
/// re-joined with punctuation attachment.
pub fn debracket(text: &str) -> String {
    let mut tokens: Vec<String> = Vec::new();
    for tok in text.split_whitespace() {
        if tok.starts_with('[') {
            continue;
        }
        let stripped: String = tok.chars().filter(|&c| c != ']').collect();
        if !stripped.is_empty() {
            tokens.push(stripped);
        }
    }
    join_with_punctuation(&tokens)
}
