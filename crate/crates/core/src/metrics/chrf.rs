//! Sentence-level chrF++: character 1..6-grams (whitespace removed) plus
//! word 1..2-grams, beta = 2, precision and recall averaged over the orders
//! both sides have n-grams for.

use std::collections::HashMap;

pub const CHAR_ORDER: usize = 6;
pub const WORD_ORDER: usize = 2;
pub const BETA: f64 = 2.0;

const PUNCTUATION: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

fn is_punct(c: char) -> bool {
    PUNCTUATION.contains(c)
}

fn char_ngrams(text: &str, n: usize) -> HashMap<&str, u32> {
    let mut out = HashMap::new();
    let bounds: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect();
    let chars = bounds.len() - 1;
    for i in 0..(chars + 1).saturating_sub(n) {
        *out.entry(&text[bounds[i]..bounds[i + n]]).or_insert(0) += 1;
    }
    out
}

/// Whitespace tokens with one leading or trailing punctuation mark split off.
fn words(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for w in text.split_whitespace() {
        let mut chars = w.chars();
        let first = chars
            .next()
            .expect("split_whitespace yields non-empty words");
        let Some(last) = chars.next_back() else {
            out.push(w);
            continue;
        };
        if is_punct(last) {
            let cut = w.len() - last.len_utf8();
            out.extend([&w[..cut], &w[cut..]]);
        } else if is_punct(first) {
            let cut = first.len_utf8();
            out.extend([&w[..cut], &w[cut..]]);
        } else {
            out.push(w);
        }
    }
    out
}

fn word_ngrams(words: &[&str], n: usize) -> HashMap<String, u32> {
    let mut out = HashMap::new();
    for window in words.windows(n) {
        *out.entry(window.join(" ")).or_insert(0) += 1;
    }
    out
}

/// `(hyp, ref, match)` counts for one order.
fn stats<K: std::hash::Hash + Eq>(hyp: &HashMap<K, u32>, reference: &HashMap<K, u32>) -> [u32; 3] {
    let mut matched = 0;
    let mut hyp_total = 0;
    for (gram, &count) in hyp {
        hyp_total += count;
        if let Some(&r) = reference.get(gram) {
            matched += count.min(r);
        }
    }
    let ref_total = reference.values().sum();
    let hyp_total = if reference.is_empty() { 0 } else { hyp_total };
    [hyp_total, ref_total, matched]
}

/// chrF++ of `hypothesis` against `reference`, in `[0, 100]`.
pub fn chrf_pp(hypothesis: &str, reference: &str) -> f64 {
    let hyp_blank = hypothesis.trim().is_empty();
    let ref_blank = reference.trim().is_empty();
    match (hyp_blank, ref_blank) {
        (true, true) => return 100.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }

    let hyp_chars: String = hypothesis.split_whitespace().collect();
    let ref_chars: String = reference.split_whitespace().collect();
    let hyp_words = words(hypothesis);
    let ref_words = words(reference);

    let mut all = Vec::with_capacity(CHAR_ORDER + WORD_ORDER);
    for n in 1..=CHAR_ORDER {
        all.push(stats(
            &char_ngrams(&hyp_chars, n),
            &char_ngrams(&ref_chars, n),
        ));
    }
    for n in 1..=WORD_ORDER {
        all.push(stats(
            &word_ngrams(&hyp_words, n),
            &word_ngrams(&ref_words, n),
        ));
    }
    f_score(&all)
}

fn f_score(all: &[[u32; 3]]) -> f64 {
    let factor = BETA * BETA;
    let (mut precision, mut recall, mut orders) = (0.0, 0.0, 0usize);
    for &[hyp, reference, matched] in all {
        if hyp > 0 && reference > 0 {
            precision += matched as f64 / hyp as f64;
            recall += matched as f64 / reference as f64;
            orders += 1;
        }
    }
    if orders == 0 {
        return 0.0;
    }
    precision /= orders as f64;
    recall /= orders as f64;
    if precision + recall == 0.0 {
        return 0.0;
    }
    100.0 * (1.0 + factor) * precision * recall / (factor * precision + recall)
}
