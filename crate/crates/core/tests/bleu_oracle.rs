//! Independent corpus-BLEU oracle: a from-scratch implementation using
//! hash-map n-gram counting, kept deliberately separate from the library's
//! sorted-window path. The frozen constants below were produced by this
//! oracle (and cross-checked against a second out-of-tree implementation)
//! before being asserted against the library.

use std::collections::HashMap;

use compgen_core::metrics::{bleu4, ngram_counts, EvalRecord, NgramCounts};
use compgen_core::mr_tree::parse_mr;
use compgen_core::text::debracket;

fn oracle_tokenize(s: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in s.chars() {
        if ch.is_whitespace() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        } else if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            tokens.push(ch.to_string());
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn oracle_corpus_bleu(pairs: &[(&str, &str)]) -> f64 {
    let mut matched = [0u64; 4];
    let mut total = [0u64; 4];
    let (mut hyp_len, mut ref_len) = (0u64, 0u64);
    for (reference, hypothesis) in pairs {
        let r = oracle_tokenize(&debracket(reference));
        let h = oracle_tokenize(&debracket(hypothesis));
        hyp_len += h.len() as u64;
        ref_len += r.len() as u64;
        for n in 1..=4usize {
            let count_grams = |tokens: &[String]| -> HashMap<Vec<String>, u64> {
                let mut counts = HashMap::new();
                if tokens.len() >= n {
                    for gram in tokens.windows(n) {
                        *counts.entry(gram.to_vec()).or_default() += 1;
                    }
                }
                counts
            };
            let h_grams = count_grams(&h);
            let r_grams = count_grams(&r);
            total[n - 1] += h_grams.values().sum::<u64>();
            matched[n - 1] += h_grams
                .iter()
                .map(|(gram, count)| (*count).min(r_grams.get(gram).copied().unwrap_or(0)))
                .sum::<u64>();
        }
    }
    if hyp_len == 0 || matched.contains(&0) || total.contains(&0) {
        return 0.0;
    }
    let log_mean: f64 = (0..4)
        .map(|n| (matched[n] as f64 / total[n] as f64).ln())
        .sum::<f64>()
        / 4.0;
    let bp = if hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    100.0 * bp * log_mean.exp()
}

const TOY_PAIRS: &[(&str, &str, &str)] = &[
    (
        "[DG_INFORM [CONDITION light rain ] [DATE_TIME today ] ]",
        "[DG_INFORM expect [CONDITION light rain ] [DATE_TIME today ] ]",
        "[DG_INFORM expect [CONDITION light rain ] [DATE_TIME today ] ]",
    ),
    (
        "[DG_INFORM [CONDITION fog ] ]",
        "[DG_INFORM expect [CONDITION fog ] ]",
        "[DG_INFORM fog is coming [WEATHER fog ] ]",
    ),
    (
        "[DG_INFORM [TEMP between 76 and 80 ] [DATE_TIME today ] ]",
        "[DG_INFORM temperatures [TEMP between 76 and 80 ] [DATE_TIME today ] ]",
        "[DG_INFORM temperatures [TEMP between 76 and 90 ] [DATE_TIME today ] ]",
    ),
    (
        "[DG_INFORM [CONDITION heavy snow ] ]",
        "[DG_INFORM expect [CONDITION heavy snow ] ]",
        "no snow expected",
    ),
];

fn toy_records() -> Vec<EvalRecord> {
    TOY_PAIRS
        .iter()
        .enumerate()
        .map(|(i, (mr, reference, prediction))| {
            EvalRecord::new(format!("t{}", i + 1), parse_mr(mr).unwrap(), *reference, *prediction)
        })
        .collect()
}

/// Frozen from the oracle: clipped counts [11, 6, 4, 2] over totals
/// [17, 13, 9, 5], hyp_len 17 >= ref_len 15 so BP = 1, giving
/// 100 * exp(mean(ln(11/17), ln(6/13), ln(4/9), ln(2/5))).
const TOY_BLEU: f64 = 48.00177354563233;

#[test]
fn library_bleu_matches_the_oracle_on_the_toy_corpus() {
    let oracle_pairs: Vec<(&str, &str)> =
        TOY_PAIRS.iter().map(|(_, r, p)| (*r, *p)).collect();
    let oracle = oracle_corpus_bleu(&oracle_pairs);
    assert!((oracle - TOY_BLEU).abs() < 1e-9, "oracle drifted: {oracle}");
    let library = bleu4(&toy_records());
    assert!((library - TOY_BLEU).abs() < 1e-9, "library drifted: {library}");
}

#[test]
fn two_record_corpus_matches_hand_computed_precisions() {
    // By hand: record 1 "light rain today" vs "light rain today in town":
    // hyp 5 tokens, 1-grams 3/5, 2-grams 2/4, 3-grams 1/3, 4-grams 0/2.
    // Record 2 identical 4-token texts: 4/4, 3/3, 2/2, 1/1.
    // Totals: p1 7/9, p2 5/7, p3 3/5, p4 1/3; hyp 9 >= ref 7 so BP = 1.
    let expected = 100.0
        * ((7.0f64 / 9.0).ln() / 4.0 + (5.0f64 / 7.0).ln() / 4.0 + (3.0f64 / 5.0).ln() / 4.0
            + (1.0f64 / 3.0).ln() / 4.0)
            .exp();
    let records = vec![
        EvalRecord::new(
            "a",
            parse_mr("[DG_INFORM [CONDITION light rain ] ]").unwrap(),
            "light rain today",
            "light rain today in town",
        ),
        EvalRecord::new(
            "b",
            parse_mr("[DG_NO ]").unwrap(),
            "no rain at all",
            "no rain at all",
        ),
    ];
    let library = bleu4(&records);
    assert!((library - expected).abs() < 1e-9, "got {library}, want {expected}");
    let oracle = oracle_corpus_bleu(&[
        ("light rain today", "light rain today in town"),
        ("no rain at all", "no rain at all"),
    ]);
    assert!((oracle - expected).abs() < 1e-9, "oracle got {oracle}");
}

#[test]
fn corpus_bleu_is_recomputable_from_per_record_counts() {
    // The aggregate is a pure function of summed per-record integer counts,
    // so any reduction order gives the same value.
    let records = toy_records();
    let mut forward = NgramCounts::default();
    let mut reverse = NgramCounts::default();
    let per_record: Vec<NgramCounts> = records
        .iter()
        .map(|r| {
            let reference = compgen_core::metrics::tokenize(&debracket(&r.reference));
            let hyp = compgen_core::metrics::tokenize(&debracket(&r.prediction));
            ngram_counts(&reference, &hyp)
        })
        .collect();
    for counts in &per_record {
        forward.add(counts);
    }
    for counts in per_record.iter().rev() {
        reverse.add(counts);
    }
    assert_eq!(forward, reverse);
    let recomputed = compgen_core::metrics::corpus_bleu_from_counts(&forward);
    assert!((recomputed - bleu4(&records)).abs() < 1e-12);
}
