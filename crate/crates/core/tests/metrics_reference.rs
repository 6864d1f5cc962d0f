//! Cross-checks of the BLEU scorer against the from-scratch reference
//! implementation in `oracles/`.

mod oracles;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use doceval::metrics::bleu;

fn random_formula(rng: &mut ChaCha8Rng) -> String {
    const PIECES: &[&str] = &[
        "\\frac", "\\alpha", "\\sum", "{", "}", "^", "_", "x", "y", "2", "+", "=", "(", ")",
        " ", "\\sqrt", "a", "b", "n",
    ];
    let len = rng.gen_range(0..25);
    (0..len).map(|_| PIECES[rng.gen_range(0..PIECES.len())]).collect()
}

#[test]
fn bleu_matches_reference_implementation() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB1E0);
    for _ in 0..500 {
        let reference = random_formula(&mut rng);
        let hypothesis = random_formula(&mut rng);
        let got = bleu(&reference, &hypothesis);
        let want = oracles::bleu_oracle(&reference, &hypothesis);
        assert!(
            (got - want).abs() < 1e-12,
            "bleu mismatch on {reference:?} vs {hypothesis:?}: {got} vs {want}"
        );
    }
}

#[test]
fn bleu_near_miss_formula_agrees_with_reference() {
    let got = bleu("\\frac{a}{b}", "\\frac{a}{c}");
    let want = oracles::bleu_oracle("\\frac{a}{b}", "\\frac{a}{c}");
    assert!((got - want).abs() < 1e-12);
    assert!((got - (12.0f64 / 49.0).powf(0.25)).abs() < 1e-12);
}
