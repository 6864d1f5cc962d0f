//! BLEU-4 with add-one smoothing on higher-order n-grams, tokenized for
//! LaTeX: control sequences are single tokens, every other non-space symbol
//! is its own token.

use std::collections::HashMap;

/// Split a formula into tokens: `\name` control words, `\<sym>` control
/// symbols, and single characters. Whitespace only separates tokens.
pub fn tokenize_latex(s: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        if c.is_whitespace() {
            continue;
        }
        if c == '\\' {
            let mut token = String::from('\\');
            match chars.peek() {
                Some(&n) if n.is_ascii_alphabetic() => {
                    while let Some(&n) = chars.peek() {
                        if n.is_ascii_alphabetic() {
                            token.push(n);
                            chars.next();
                        } else {
                            break;
                        }
                    }
                }
                Some(&n) => {
                    token.push(n);
                    chars.next();
                }
                None => {}
            }
            tokens.push(token);
        } else {
            tokens.push(c.to_string());
        }
    }
    tokens
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts: HashMap<&[String], usize> = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// BLEU-4 of `hypothesis` against a single `reference`, in [0, 1].
///
/// Uniform quarter weights, brevity penalty, and add-one smoothing on the
/// 2/3/4-gram precisions so short formulas do not zero out. An empty
/// hypothesis, or one with no unigram overlap, scores 0.
pub fn bleu(reference: &str, hypothesis: &str) -> f64 {
    let reference = tokenize_latex(reference);
    let hypothesis = tokenize_latex(hypothesis);
    bleu_tokens(&reference, &hypothesis)
}

pub fn bleu_tokens(reference: &[String], hypothesis: &[String]) -> f64 {
    if hypothesis.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=4usize {
        let ref_counts = ngram_counts(reference, n);
        let hyp_counts = ngram_counts(hypothesis, n);
        let total: usize = hyp_counts.values().sum();
        let matched: usize = hyp_counts
            .iter()
            .map(|(gram, &count)| count.min(ref_counts.get(gram).copied().unwrap_or(0)))
            .sum();
        let precision = if n == 1 {
            if total == 0 || matched == 0 {
                return 0.0;
            }
            matched as f64 / total as f64
        } else {
            (matched + 1) as f64 / (total + 1) as f64
        };
        log_sum += 0.25 * precision.ln();
    }
    let brevity = if hypothesis.len() >= reference.len() {
        1.0
    } else {
        (1.0 - reference.len() as f64 / hypothesis.len() as f64).exp()
    };
    brevity * log_sum.exp()
}
