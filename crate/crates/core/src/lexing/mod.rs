//! Minimal language-aware lexing: comments, string and numeric literals,
//! whitespace, and everything else as code.
//!
//! The lexer does not build an AST. It is just deep enough to measure how much
//! of a span is comment or literal mass, to cut text into IoU chunks, and to
//! locate block boundaries for scope-aware splitting.

mod blocks;
mod profile;
mod subword;

use serde::{Deserialize, Serialize};

pub use blocks::{block_spans, truncate_to_scope, BlockSpan};
pub use profile::{LanguageProfile, ProfileRegistry, StringDelimiter};
pub use subword::{count_tokens, segment, MAX_SUBWORD_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenClass {
    Comment,
    StringLiteral,
    NumericLiteral,
    Whitespace,
    Code,
}

/// A classified byte range of the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub class: TokenClass,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.start..self.end]
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "n")]
pub enum Chunking {
    Line,
    Token,
    Subword,
    #[serde(rename = "char_ngram")]
    CharNGram(usize),
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Split `text` into contiguous, non-overlapping classified spans covering
/// every byte.
pub fn classify(text: &str, profile: &LanguageProfile) -> Vec<Token> {
    let mut out = Vec::new();
    let mut code_start: Option<usize> = None;
    let mut pos = 0;
    let mut prev: Option<char> = None;

    let push = |out: &mut Vec<Token>, class, start, end| {
        if end > start {
            out.push(Token { class, start, end });
        }
    };

    while pos < text.len() {
        let rest = &text[pos..];
        let c = rest.chars().next().expect("pos is on a char boundary");

        let special = if let Some(end) = match_comment(rest, profile) {
            Some((TokenClass::Comment, pos + end))
        } else if let Some(end) = match_string(rest, profile) {
            Some((TokenClass::StringLiteral, pos + end))
        } else if c.is_whitespace() {
            let len = rest
                .char_indices()
                .find(|(_, ch)| !ch.is_whitespace())
                .map_or(rest.len(), |(i, _)| i);
            Some((TokenClass::Whitespace, pos + len))
        } else if c.is_ascii_digit() && !prev.is_some_and(is_ident_char) {
            Some((TokenClass::NumericLiteral, pos + numeric_len(rest)))
        } else {
            None
        };

        match special {
            Some((class, end)) => {
                if let Some(start) = code_start.take() {
                    push(&mut out, TokenClass::Code, start, pos);
                }
                push(&mut out, class, pos, end);
                prev = text[..end].chars().next_back();
                pos = end;
            }
            None => {
                code_start.get_or_insert(pos);
                prev = Some(c);
                pos += c.len_utf8();
            }
        }
    }
    if let Some(start) = code_start {
        push(&mut out, TokenClass::Code, start, text.len());
    }
    out
}

/// Byte length of a comment starting at the head of `rest`.
fn match_comment(rest: &str, profile: &LanguageProfile) -> Option<usize> {
    for marker in &profile.line_comment {
        if rest.starts_with(marker.as_str()) {
            return Some(rest.find('\n').unwrap_or(rest.len()));
        }
    }
    for (open, close) in &profile.block_comment {
        if rest.starts_with(open.as_str()) {
            let body = &rest[open.len()..];
            return Some(
                body.find(close.as_str())
                    .map_or(rest.len(), |i| open.len() + i + close.len()),
            );
        }
    }
    None
}

/// Byte length of a string literal starting at the head of `rest`.
fn match_string(rest: &str, profile: &LanguageProfile) -> Option<usize> {
    for delim in &profile.strings {
        if !rest.starts_with(delim.open.as_str()) {
            continue;
        }
        let body = &rest[delim.open.len()..];
        if delim.char_literal {
            match char_literal_len(body, &delim.close) {
                Some(len) => return Some(delim.open.len() + len),
                None => continue,
            }
        }
        let mut iter = body.char_indices();
        while let Some((i, ch)) = iter.next() {
            if body[i..].starts_with(delim.close.as_str()) {
                return Some(delim.open.len() + i + delim.close.len());
            }
            if delim.escape && ch == '\\' {
                // the escaped char is skipped, an escaped newline included
                if iter.next().is_none() {
                    break;
                }
                continue;
            }
            if ch == '\n' && !delim.multiline {
                return Some(delim.open.len() + i);
            }
        }
        return Some(rest.len());
    }
    None
}

fn char_literal_len(body: &str, close: &str) -> Option<usize> {
    let mut chars = body.char_indices();
    let (_, first) = chars.next()?;
    if first == '\\' {
        // escape sequences such as '\n', '\'', '\x7f' or '\u{1F600}'
        let (_, escaped) = chars.next()?;
        let from = 1 + escaped.len_utf8();
        let limit = body.char_indices().nth(12).map_or(body.len(), |(i, _)| i);
        if from > limit {
            return None;
        }
        let window = &body[from..limit];
        let len = window.find(close)?;
        if window[..len].contains('\n') {
            return None;
        }
        return Some(from + len + close.len());
    }
    if first == '\n' {
        return None;
    }
    let next = first.len_utf8();
    body[next..]
        .starts_with(close)
        .then_some(next + close.len())
}

fn numeric_len(rest: &str) -> usize {
    let bytes = rest.as_bytes();
    let hex = rest.starts_with("0x") || rest.starts_with("0X");
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let ok = b.is_ascii_alphanumeric()
            || b == b'_'
            || (b == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit))
            || ((b == b'+' || b == b'-') && !hex && i > 0 && matches!(bytes[i - 1], b'e' | b'E'));
        if !ok {
            break;
        }
        i += 1;
    }
    i
}

/// Cut `text` into the chunk multiset used for IoU.
pub fn chunks<'a>(text: &'a str, chunking: Chunking, profile: &LanguageProfile) -> Vec<&'a str> {
    match chunking {
        Chunking::Line => text.lines().collect(),
        Chunking::Token => code_tokens(text, profile),
        Chunking::Subword => segment(text),
        Chunking::CharNGram(n) => char_ngrams(text, n),
    }
}

fn code_tokens<'a>(text: &'a str, profile: &LanguageProfile) -> Vec<&'a str> {
    let mut out = Vec::new();
    for token in classify(text, profile) {
        match token.class {
            TokenClass::StringLiteral | TokenClass::NumericLiteral => out.push(token.text(text)),
            TokenClass::Code => split_code(token.text(text), &mut out),
            TokenClass::Comment | TokenClass::Whitespace => {}
        }
    }
    out
}

fn split_code<'a>(code: &'a str, out: &mut Vec<&'a str>) {
    let mut word_start: Option<usize> = None;
    for (i, c) in code.char_indices() {
        if is_ident_char(c) {
            word_start.get_or_insert(i);
            continue;
        }
        if let Some(start) = word_start.take() {
            out.push(&code[start..i]);
        }
        if !c.is_whitespace() {
            out.push(&code[i..i + c.len_utf8()]);
        }
    }
    if let Some(start) = word_start {
        out.push(&code[start..]);
    }
}

fn char_ngrams(text: &str, n: usize) -> Vec<&str> {
    let n = n.max(1);
    let bounds: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect();
    let chars = bounds.len() - 1;
    if chars < n {
        return Vec::new();
    }
    (0..=chars - n)
        .map(|i| &text[bounds[i]..bounds[i + n]])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spans<'a>(text: &'a str, profile: &LanguageProfile) -> Vec<(TokenClass, &'a str)> {
        classify(text, profile)
            .into_iter()
            .map(|t| (t.class, &text[t.start..t.end]))
            .collect()
    }

    #[test]
    fn python_trailing_comment() {
        use TokenClass::*;
        let got = spans("x = 1  # y", &LanguageProfile::python());
        assert_eq!(
            got,
            vec![
                (Code, "x"),
                (Whitespace, " "),
                (Code, "="),
                (Whitespace, " "),
                (NumericLiteral, "1"),
                (Whitespace, "  "),
                (Comment, "# y"),
            ]
        );
    }

    #[test]
    fn empty_input_has_no_spans() {
        assert!(classify("", &LanguageProfile::rust()).is_empty());
    }

    #[test]
    fn python_string_is_one_span() {
        assert_eq!(
            spans("\"abc\"", &LanguageProfile::python()),
            vec![(TokenClass::StringLiteral, "\"abc\"")]
        );
    }

    #[test]
    fn triple_quoted_docstring_spans_lines() {
        let text = "\"\"\"doc\nmore\"\"\"\nx";
        let got = spans(text, &LanguageProfile::python());
        assert_eq!(got[0], (TokenClass::StringLiteral, "\"\"\"doc\nmore\"\"\""));
    }

    #[test]
    fn escapes_and_unterminated_strings() {
        let py = LanguageProfile::python();
        assert_eq!(
            spans(r#""a\"b" c"#, &py)[0],
            (TokenClass::StringLiteral, r#""a\"b""#)
        );
        let got = spans("'open\nx", &py);
        assert_eq!(got[0], (TokenClass::StringLiteral, "'open"));
        assert_eq!(got[1], (TokenClass::Whitespace, "\n"));
    }

    #[test]
    fn block_comments_do_not_nest() {
        let got = spans("/* a /* b */ c */", &LanguageProfile::rust());
        assert_eq!(got[0], (TokenClass::Comment, "/* a /* b */"));
    }

    #[test]
    fn rust_lifetimes_are_code_chars_are_literals() {
        let rs = LanguageProfile::rust();
        let got = spans("fn f<'a>(c: char) { '\\n'; 'x' }", &rs);
        assert!(got.contains(&(TokenClass::Code, "f<'a>(c:")));
        assert!(got.contains(&(TokenClass::StringLiteral, "'\\n'")));
        assert!(got.contains(&(TokenClass::StringLiteral, "'x'")));
    }

    #[test]
    fn numerics() {
        let js = LanguageProfile::javascript();
        let got = spans("a1 = 0x1F + 1.5e-3;", &js);
        assert!(got.contains(&(TokenClass::Code, "a1")));
        assert!(got.contains(&(TokenClass::NumericLiteral, "0x1F")));
        assert!(got.contains(&(TokenClass::NumericLiteral, "1.5e-3")));
    }

    #[test]
    fn chunk_examples() {
        let py = LanguageProfile::python();
        assert_eq!(chunks("a\nb\na", Chunking::Line, &py), vec!["a", "b", "a"]);
        assert_eq!(chunks("ab", Chunking::CharNGram(2), &py), vec!["ab"]);
        assert_eq!(
            chunks("foo(bar)", Chunking::Token, &py),
            vec!["foo", "(", "bar", ")"]
        );
        assert!(chunks("a", Chunking::CharNGram(2), &py).is_empty());
    }

    #[test]
    fn token_chunks_skip_comments_keep_literals() {
        let py = LanguageProfile::python();
        assert_eq!(
            chunks("x = 'a b'  # note", Chunking::Token, &py),
            vec!["x", "=", "'a b'"]
        );
    }

    #[test]
    fn subword_chunks_match_token_count() {
        let py = LanguageProfile::python();
        let text = "hello world";
        assert_eq!(
            chunks(text, Chunking::Subword, &py).len(),
            count_tokens(text)
        );
    }

    #[test]
    fn chunking_serializes_with_arity() {
        let json = serde_json::to_string(&Chunking::CharNGram(3)).unwrap();
        assert_eq!(json, r#"{"kind":"char_ngram","n":3}"#);
        let back: Chunking = serde_json::from_str(&json).unwrap();
        assert_eq!(back, Chunking::CharNGram(3));
    }
}
