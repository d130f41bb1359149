use super::{classify, LanguageProfile, Token, TokenClass};

/// A block body as byte offsets: `open` is where the body starts, `close`
/// where it ends. For brace languages these are the positions just after the
/// opening delimiter and at the closing delimiter; for indentation languages
/// the start of the first indented line and the end of the last one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockSpan {
    pub open: usize,
    pub close: usize,
    pub depth: usize,
}

/// All complete blocks in `text`, sorted by `open`.
pub fn block_spans(text: &str, profile: &LanguageProfile) -> Vec<BlockSpan> {
    let tokens = classify(text, profile);
    let mut spans = if profile.indent_based {
        indent_blocks(text, &tokens)
    } else {
        delimited_blocks(text, &tokens, profile)
    };
    spans.sort_by_key(|b| (b.open, b.close));
    spans
}

fn delimited_blocks(text: &str, tokens: &[Token], profile: &LanguageProfile) -> Vec<BlockSpan> {
    let mut stack: Vec<(usize, usize)> = Vec::new();
    let mut out = Vec::new();
    for token in tokens.iter().filter(|t| t.class == TokenClass::Code) {
        let code = token.text(text);
        let mut i = 0;
        while i < code.len() {
            let rest = &code[i..];
            if let Some((open, _)) = profile
                .blocks
                .iter()
                .find(|(o, _)| rest.starts_with(o.as_str()))
            {
                let kind = profile.blocks.iter().position(|(o, _)| o == open).unwrap();
                i += open.len();
                stack.push((kind, token.start + i));
                continue;
            }
            if let Some(kind) = profile
                .blocks
                .iter()
                .position(|(_, c)| rest.starts_with(c.as_str()))
            {
                let close_len = profile.blocks[kind].1.len();
                if let Some(at) = stack.iter().rposition(|(k, _)| *k == kind) {
                    let (_, open) = stack[at];
                    stack.truncate(at);
                    out.push(BlockSpan {
                        open,
                        close: token.start + i,
                        depth: at,
                    });
                }
                i += close_len;
                continue;
            }
            i += rest.chars().next().map_or(1, char::len_utf8);
        }
    }
    out
}

/// Logical lines: non-blank lines that do not start inside a literal or
/// comment and are not comment-only. Yields (start, end_with_newline, indent).
fn logical_lines(text: &str, tokens: &[Token]) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut tok = 0;
    while start < text.len() {
        let end = text[start..]
            .find('\n')
            .map_or(text.len(), |i| start + i + 1);
        while tok < tokens.len() && tokens[tok].end <= start {
            tok += 1;
        }
        let starts_inside = tokens
            .get(tok)
            .is_some_and(|t| t.start < start && t.class != TokenClass::Whitespace);
        let line = &text[start..end];
        let content = line.trim_start_matches([' ', '\t']);
        let first_class = tokens[tok..]
            .iter()
            .find(|t| t.class != TokenClass::Whitespace)
            .filter(|t| t.start < end)
            .map(|t| t.class);
        let blank = content.trim().is_empty();
        if !starts_inside && !blank && first_class != Some(TokenClass::Comment) {
            let mut col = 0;
            for c in line.chars() {
                match c {
                    ' ' => col += 1,
                    '\t' => col = (col / 8 + 1) * 8,
                    _ => break,
                }
            }
            out.push((start, end, col));
        }
        start = end;
    }
    out
}

fn indent_blocks(text: &str, tokens: &[Token]) -> Vec<BlockSpan> {
    let lines = logical_lines(text, tokens);
    let Some(&(_, _, base)) = lines.first() else {
        return Vec::new();
    };
    let mut stack: Vec<(usize, usize)> = vec![(base, 0)];
    let mut out = Vec::new();
    let mut last_end = 0;
    for &(start, end, indent) in &lines {
        while stack.len() > 1 && indent < stack.last().unwrap().0 {
            let (_, open) = stack.pop().unwrap();
            out.push(BlockSpan {
                open,
                close: last_end,
                depth: stack.len() - 1,
            });
        }
        if indent > stack.last().unwrap().0 {
            stack.push((indent, start));
        }
        last_end = end;
    }
    while stack.len() > 1 {
        let (_, open) = stack.pop().unwrap();
        out.push(BlockSpan {
            open,
            close: last_end,
            depth: stack.len() - 1,
        });
    }
    out
}

/// Cut a completion where it leaves the scope it started in.
///
/// `line_prefix` is the text between the last newline before the caret and
/// the caret. Brace languages stop at the first unmatched closing delimiter;
/// indentation languages stop at the first later line indented less than the
/// first line of the completion.
pub fn truncate_to_scope<'a>(
    completion: &'a str,
    line_prefix: &str,
    profile: &LanguageProfile,
) -> &'a str {
    let cut = if profile.indent_based {
        indent_scope_end(completion, line_prefix)
    } else {
        brace_scope_end(completion, profile)
    };
    &completion[..cut]
}

fn brace_scope_end(completion: &str, profile: &LanguageProfile) -> usize {
    let mut depth = 0usize;
    for token in classify(completion, profile)
        .into_iter()
        .filter(|t| t.class == TokenClass::Code)
    {
        let code = token.text(completion);
        let mut i = 0;
        while i < code.len() {
            let rest = &code[i..];
            if let Some((open, _)) = profile
                .blocks
                .iter()
                .find(|(o, _)| rest.starts_with(o.as_str()))
            {
                depth += 1;
                i += open.len();
                continue;
            }
            if let Some((_, close)) = profile
                .blocks
                .iter()
                .find(|(_, c)| rest.starts_with(c.as_str()))
            {
                if depth == 0 {
                    let at = token.start + i;
                    let line_start = completion[..at].rfind('\n').map_or(0, |n| n + 1);
                    let lead = &completion[line_start..at];
                    return if line_start > 0 && lead.trim().is_empty() {
                        line_start
                    } else {
                        at
                    };
                }
                depth -= 1;
                i += close.len();
                continue;
            }
            i += rest.chars().next().map_or(1, char::len_utf8);
        }
    }
    completion.len()
}

fn indent_of(line: &str) -> usize {
    line.chars().take_while(|c| *c == ' ' || *c == '\t').count()
}

fn indent_scope_end(completion: &str, line_prefix: &str) -> usize {
    let mut base: Option<usize> = None;
    let mut offset = 0;
    for (n, line) in completion.split_inclusive('\n').enumerate() {
        let full = if n == 0 {
            format!("{line_prefix}{line}")
        } else {
            line.to_string()
        };
        if !full.trim().is_empty() {
            let indent = indent_of(&full);
            match base {
                None => base = Some(indent),
                Some(b) if indent < b => return offset,
                Some(_) => {}
            }
        }
        offset += line.len();
    }
    completion.len()
}
