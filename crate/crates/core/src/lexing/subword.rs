//! Deterministic subword segmentation.
//!
//! Greedy longest match over a fixed vocabulary of frequent code fragments,
//! falling back to single characters. The vocabulary is closed under taking
//! substrings, which makes the greedy segmentation a minimum-size one. Two
//! consequences the budget packer relies on: the token count of a
//! concatenation never exceeds the sum of the parts, and trimming a string
//! from either end never increases its count.

use std::collections::HashSet;
use std::sync::LazyLock;

/// Longest vocabulary entry, in characters.
pub const MAX_SUBWORD_LEN: usize = 8;

const FRAGMENTS: &[&str] = &[
    // layout
    "        ", "\n    ", "\t\t\t\t", "\n\n", "\r\n",
    // keywords and common statements
    "function", "return ", "import ", "public ", "private ", "static ", "class ", "const ", "let ",
    "def ", "elif ", "else ", "if (", "for (", "while (", "None", "null", "true", "false", "True",
    "False", "String", "int ", "void ", "struct ", "impl ", "fn ", "pub ", "mut ", "match ",
    "val ", "var ", "fun ", "package ", "func ", "include", "echo ", "from ", "async ", "await ",
    "yield ", "lambda ", "except ", "finally", "try {", "catch (", "throw ", "new ", "delete ",
    "default", "switch", "case ", "break;", "continue", "println!", "print(", "printf(",
    "console.", "System.", "std::", "self.", "this.", "self", "$this->", "override", "interfac",
    "abstract", "extends ", "implemen", "namespac", "using ", "typedef ", "unsigned", "boolean",
    "float", "double", "bool", "char", "long ", "where ", "enum ", "trait ", "Option<", "Result<",
    "Some(", "Ok(", "Err(", "unwrap()", "vec![", "&self", "&mut ", "let mut ", "assert", "raise ",
    "with ", "pass", "not ", "and ", "or ", " in ", "is ",
    // operators and punctuation runs
    "->", "=>", "::", "==", "!=", "<=", ">=", "&&", "||", "+=", "-=", "++", "--", "();", "()", "{}",
    "[]", " = ", " == ", " != ", "):", ") {", "});", "};", "},", "\"\"", "''", "//", "/*", "*/",
    "# ", "\"\"\"", "[0]", "[i]", " + ", " - ", " * ", " / ", " < ", " > ", ", ", ": ", "; ",
    // identifiers
    "value", "name", "data", "result", "error", "index", "count", "list", "type", "object",
    "string", "number", "length", "size", "key", "item", "items", "node", "test", "get", "set",
    "init", "__init__", "args", "kwargs", "config", "path", "file", "user", "self", "len(",
    "range(", "append(", "tion", "ing", "ment", "able", "ter", "get_", "set_", "is_", "to_",
    "new(", "request", "response", "context", "service", "message", "options", "params",
];

static VOCAB: LazyLock<HashSet<String>> = LazyLock::new(|| {
    let mut vocab = HashSet::new();
    for fragment in FRAGMENTS {
        let bounds: Vec<usize> = fragment
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(fragment.len()))
            .collect();
        debug_assert!(bounds.len() - 1 <= MAX_SUBWORD_LEN, "{fragment:?} too long");
        for a in 0..bounds.len() {
            for b in a + 1..bounds.len() {
                vocab.insert(fragment[bounds[a]..bounds[b]].to_string());
            }
        }
    }
    vocab
});

fn next_piece(rest: &str) -> usize {
    let mut ends = [0usize; MAX_SUBWORD_LEN];
    let mut n = 0;
    for (i, c) in rest.char_indices().take(MAX_SUBWORD_LEN) {
        ends[n] = i + c.len_utf8();
        n += 1;
    }
    for &end in ends[..n].iter().rev().take(n.saturating_sub(1)) {
        if VOCAB.contains(&rest[..end]) {
            return end;
        }
    }
    ends[0]
}

/// Segment `text` into subword pieces. Concatenating the pieces yields `text`.
pub fn segment(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < text.len() {
        let len = next_piece(&text[pos..]);
        out.push(&text[pos..pos + len]);
        pos += len;
    }
    out
}

/// Number of subword pieces in `text`.
pub fn count_tokens(text: &str) -> usize {
    let mut count = 0;
    let mut pos = 0;
    while pos < text.len() {
        pos += next_piece(&text[pos..]);
        count += 1;
    }
    count
}
