//! chrF++: character n-gram F-score extended with word n-grams.
//!
//! Character n-grams are taken over the sentence with all whitespace removed;
//! word n-grams over whitespace tokens with one leading or trailing ASCII
//! punctuation mark split off. Precision and recall are averaged over the
//! orders where both sides have n-grams, then combined as F-beta.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChrfParams {
    pub char_order: usize,
    pub word_order: usize,
    pub beta: f64,
}

impl Default for ChrfParams {
    fn default() -> Self {
        Self { char_order: 6, word_order: 2, beta: 2.0 }
    }
}

/// chrF++ with the standard parameters (char order 6, word order 2, beta 2).
pub fn chrf_pp(hypothesis: &str, reference: &str) -> f64 {
    chrf_with(ChrfParams::default(), hypothesis, reference)
}

#[derive(Debug, Clone, Copy, Default)]
struct OrderStats {
    hyp: u64,
    reference: u64,
    matched: u64,
}

pub fn chrf_with(params: ChrfParams, hypothesis: &str, reference: &str) -> f64 {
    let hyp_chars: String = hypothesis.split_whitespace().collect();
    let ref_chars: String = reference.split_whitespace().collect();
    let hyp_words = split_punctuation(hypothesis);
    let ref_words = split_punctuation(reference);

    let mut stats = Vec::with_capacity(params.char_order + params.word_order);
    for n in 1..=params.char_order {
        stats.push(match_stats(&char_ngrams(&hyp_chars, n), &char_ngrams(&ref_chars, n)));
    }
    for n in 1..=params.word_order {
        stats.push(match_stats(&word_ngrams(&hyp_words, n), &word_ngrams(&ref_words, n)));
    }
    f_score(&stats, params.beta)
}

fn f_score(stats: &[OrderStats], beta: f64) -> f64 {
    let factor = beta * beta;
    let (mut prec_sum, mut rec_sum, mut effective) = (0.0, 0.0, 0usize);
    for s in stats {
        if s.hyp > 0 && s.reference > 0 {
            prec_sum += s.matched as f64 / s.hyp as f64;
            rec_sum += s.matched as f64 / s.reference as f64;
            effective += 1;
        }
    }
    if effective == 0 {
        return 0.0;
    }
    let prec = prec_sum / effective as f64;
    let rec = rec_sum / effective as f64;
    if prec + rec == 0.0 {
        return 0.0;
    }
    100.0 * (1.0 + factor) * prec * rec / (factor * prec + rec)
}

fn match_stats<K: Ord>(hyp: &BTreeMap<K, u64>, reference: &BTreeMap<K, u64>) -> OrderStats {
    let matched = hyp.iter().map(|(k, &n)| reference.get(k).map_or(0, |&m| n.min(m))).sum();
    OrderStats { hyp: hyp.values().sum(), reference: reference.values().sum(), matched }
}

fn char_ngrams(s: &str, n: usize) -> BTreeMap<&str, u64> {
    let bounds: Vec<usize> = s.char_indices().map(|(i, _)| i).chain(core::iter::once(s.len())).collect();
    let mut out = BTreeMap::new();
    let chars = bounds.len() - 1;
    if chars >= n {
        for i in 0..=chars - n {
            *out.entry(&s[bounds[i]..bounds[i + n]]).or_insert(0) += 1;
        }
    }
    out
}

fn word_ngrams(words: &[&str], n: usize) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    if words.len() >= n {
        for w in words.windows(n) {
            *out.entry(w.join(" ")).or_insert(0) += 1;
        }
    }
    out
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
}

/// Whitespace tokens with a trailing (else leading) punctuation mark split
/// off, e.g. `"world!"` → `["world", "!"]`, `"(hi)"` → `["(hi", ")"]`.
fn split_punctuation(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for w in s.split_whitespace() {
        let mut chars = w.chars();
        let first = chars.next();
        let last = w.chars().next_back();
        if w.chars().nth(1).is_none() {
            out.push(w);
        } else if let Some(l) = last.filter(|c| is_punct(*c)) {
            let cut = w.len() - l.len_utf8();
            out.push(&w[..cut]);
            out.push(&w[cut..]);
        } else if let Some(f) = first.filter(|c| is_punct(*c)) {
            let cut = f.len_utf8();
            out.push(&w[..cut]);
            out.push(&w[cut..]);
        } else {
            out.push(w);
        }
    }
    out
}
