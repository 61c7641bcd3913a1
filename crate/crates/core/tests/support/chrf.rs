//! chrF++ pairs frozen from the sacrebleu reference scorer
//! (`CHRF(word_order=2).sentence_score(hyp, [ref])`) and a second,
//! deliberately naive implementation.

#![allow(dead_code)]

use std::collections::HashMap;

pub const FROZEN: &[(&str, &str, f64)] = &[
    ("how important is family", "how important is god in your life", 49.663900617934495),
    ("How important is family in your life?", "How important is God in your life?", 76.9691223371986),
    ("How secure do you feel these days?", "How secure do you feel in your neighbourhood?", 51.32722486187827),
    ("abc", "xyz", 0.0),
    ("a", "a", 100.0),
    ("the cat sat on the mat", "the cat sat on the mat", 100.0),
    ("the the the", "the", 64.30635838150287),
    ("the", "the the the", 31.053733426378223),
    ("Hello, world!", "Hello world", 53.03768228333404),
    ("(hi) there.", "hi there", 41.92967108983681),
    (
        "Do you trust people?",
        "Generally speaking, would you say that most people can be trusted or that you need to be very careful in dealing with people?",
        11.04954204139411,
    ),
    ("ab", "ba", 33.33333333333333),
    ("aaaaaaa", "aaaa", 63.254593175853024),
    ("economic growth matters", "growth economic matters", 65.75690144478843),
    ("Café crème", "Cafe creme", 17.757936507936503),
    ("x", "y z", 0.0),
    ("How interested would you say you are in politics?", "How interested are you in sports?", 49.1691022559174),
    ("Incomes should be made more equal", "There should be greater incentives for individual effort", 21.05383649744589),
    ("one two three four five six seven", "one two three four five six seven eight", 86.6889611091371),
    ("I choose 2. Disagree", "2", 42.63565891472869),
    ("  spaced   out ", "spaced out", 100.0),
    ("it's fine, isn't it?", "it is fine", 37.87858671572433),
];

fn counts(items: Vec<String>) -> HashMap<String, usize> {
    let mut m = HashMap::new();
    for i in items {
        *m.entry(i).or_insert(0) += 1;
    }
    m
}

fn naive_words(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    for tok in s.split_whitespace() {
        let chars: Vec<char> = tok.chars().collect();
        let p = |c: &char| c.is_ascii_punctuation();
        if chars.len() > 1 && p(chars.last().unwrap()) {
            out.push(chars[..chars.len() - 1].iter().collect());
            out.push(chars[chars.len() - 1].to_string());
        } else if chars.len() > 1 && p(&chars[0]) {
            out.push(chars[0].to_string());
            out.push(chars[1..].iter().collect());
        } else {
            out.push(tok.to_string());
        }
    }
    out
}

pub fn naive_chrf(hyp: &str, reference: &str) -> f64 {
    let hc: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
    let rc: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    let hw = naive_words(hyp);
    let rw = naive_words(reference);
    let char_grams = |v: &[char], n: usize| -> Vec<String> {
        if v.len() < n {
            vec![]
        } else {
            (0..=v.len() - n).map(|i| v[i..i + n].iter().collect()).collect()
        }
    };
    let word_grams = |v: &[String], n: usize| -> Vec<String> {
        if v.len() < n {
            vec![]
        } else {
            (0..=v.len() - n).map(|i| v[i..i + n].join("\u{1}")).collect()
        }
    };
    let mut orders: Vec<(Vec<String>, Vec<String>)> =
        (1..=6).map(|n| (char_grams(&hc, n), char_grams(&rc, n))).collect();
    orders.extend((1..=2).map(|n| (word_grams(&hw, n), word_grams(&rw, n))));
    let (mut p, mut r, mut k) = (0.0, 0.0, 0.0);
    for (h, g) in orders {
        if h.is_empty() || g.is_empty() {
            continue;
        }
        let (hn, gn) = (h.len() as f64, g.len() as f64);
        let (hm, gm) = (counts(h), counts(g));
        let m: usize = hm.iter().map(|(k, v)| (*v).min(*gm.get(k).unwrap_or(&0))).sum();
        p += m as f64 / hn;
        r += m as f64 / gn;
        k += 1.0;
    }
    if k == 0.0 {
        return 0.0;
    }
    let (p, r) = (p / k, r / k);
    if p + r == 0.0 {
        return 0.0;
    }
    100.0 * 5.0 * p * r / (4.0 * p + r)
}
