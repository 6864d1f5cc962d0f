//! Levenshtein edit distance over Unicode scalar values, and its normalized
//! form (distance divided by the longer operand's length).

/// Unnormalized Levenshtein distance between two symbol slices.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    // Trim the common prefix and suffix; the DP only runs on the differing core.
    let prefix = a.iter().zip(b.iter()).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[prefix..], &b[prefix..]);
    let suffix = a
        .iter()
        .rev()
        .zip(b.iter().rev())
        .take_while(|(x, y)| x == y)
        .count();
    let (a, b) = (&a[..a.len() - suffix], &b[..b.len() - suffix]);

    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }

    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0usize; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            curr[j + 1] = sub.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Levenshtein distance between two strings, counting Unicode scalar values.
pub fn levenshtein_str(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein(&a, &b)
}

/// Levenshtein distance divided by the longer operand's length; 0 when both
/// operands are empty. 0 is a perfect match, 1 a total mismatch.
pub fn normalized_edit_distance(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    levenshtein(&a, &b) as f64 / longest as f64
}

/// Normalized edit distance between two symbol sequences; 0 when both empty.
pub fn normalized_seq_distance<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    levenshtein(a, b) as f64 / longest as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kitten_sitting() {
        assert_eq!(levenshtein_str("kitten", "sitting"), 3);
        let d = normalized_edit_distance("kitten", "sitting");
        assert!((d - 3.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn identity_is_zero() {
        for s in ["", "a", "αβγ", "some longer unicode ←→ text"] {
            assert_eq!(normalized_edit_distance(s, s), 0.0);
        }
    }

    #[test]
    fn empty_vs_nonempty_is_one() {
        assert_eq!(normalized_edit_distance("", "abc"), 1.0);
        assert_eq!(normalized_edit_distance("abc", ""), 1.0);
    }

    #[test]
    fn counts_scalar_values_not_bytes() {
        // "é" is two bytes but one scalar value.
        assert_eq!(levenshtein_str("é", "e"), 1);
        assert_eq!(normalized_edit_distance("é", "e"), 1.0);
    }

    #[test]
    fn sequence_distance_over_ids() {
        let a = [1, 2, 3, 4];
        let b = [4, 3, 2, 1];
        assert_eq!(levenshtein(&a, &b), 4);
        assert_eq!(normalized_seq_distance(&a, &b), 1.0);
        let c = [1, 3, 2, 4];
        assert_eq!(levenshtein(&a, &c), 2);
    }

    proptest! {
        #[test]
        fn symmetric(a in ".{0,30}", b in ".{0,30}") {
            prop_assert_eq!(levenshtein_str(&a, &b), levenshtein_str(&b, &a));
        }

        #[test]
        fn triangle_inequality(a in ".{0,20}", b in ".{0,20}", c in ".{0,20}") {
            let ab = levenshtein_str(&a, &b);
            let bc = levenshtein_str(&b, &c);
            let ac = levenshtein_str(&a, &c);
            prop_assert!(ac <= ab + bc);
        }

        #[test]
        fn bounded_by_longer_length(a in ".{0,30}", b in ".{0,30}") {
            let d = normalized_edit_distance(&a, &b);
            prop_assert!((0.0..=1.0).contains(&d));
        }
    }
}
