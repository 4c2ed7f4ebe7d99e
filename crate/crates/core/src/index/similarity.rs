use std::collections::BTreeSet;

use super::IndexError;

/// Set of padded 3-character grams of a text.
pub type TrigramSet = BTreeSet<String>;

/// `dot(u, v) / (|u| |v|)`, accumulated in `f64` and clamped to `[-1, 1]`.
pub fn cosine_similarity(u: &[f32], v: &[f32]) -> Result<f64, IndexError> {
    if u.len() != v.len() {
        return Err(IndexError::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    let (mut dot, mut uu, mut vv) = (0f64, 0f64, 0f64);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (a as f64, b as f64);
        dot += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return Err(IndexError::ZeroVector);
    }
    Ok((dot / (uu.sqrt() * vv.sqrt())).clamp(-1.0, 1.0))
}

/// Lowercases, turns every non-alphanumeric character into a space, pads each
/// word with two leading spaces and one trailing space, and collects every
/// 3-gram of every padded word.
pub fn trigram_set(text: &str) -> TrigramSet {
    let normalized: String = text
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    let mut grams = TrigramSet::new();
    for word in normalized.split_whitespace() {
        let padded: Vec<char> = "  ".chars().chain(word.chars()).chain(" ".chars()).collect();
        for w in padded.windows(3) {
            grams.insert(w.iter().collect());
        }
    }
    grams
}

/// Jaccard score from set sizes; zero when both sets are empty.
pub(crate) fn jaccard(intersection: usize, a: usize, b: usize) -> f64 {
    let union = a + b - intersection;
    if union == 0 {
        0.0
    } else {
        intersection as f64 / union as f64
    }
}

/// `|T(a) ∩ T(b)| / |T(a) ∪ T(b)|`, `0` when both are empty.
pub fn trigram_similarity(a: &str, b: &str) -> f64 {
    let (ta, tb) = (trigram_set(a), trigram_set(b));
    let inter = ta.intersection(&tb).count();
    jaccard(inter, ta.len(), tb.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let h = std::f32::consts::FRAC_1_SQRT_2;
        let c = cosine_similarity(&[1.0, 0.0], &[h, h]).unwrap();
        assert!((c - 0.70710678).abs() < 1e-8, "{c}");
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(
            cosine_similarity(&[1.0], &[1.0, 2.0]),
            Err(IndexError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 2.0]),
            Err(IndexError::ZeroVector)
        ));
    }

    #[test]
    fn trigram_examples() {
        assert!(trigram_set("").is_empty());
        let cat: TrigramSet = ["  c", " ca", "cat", "at "].iter().map(|s| s.to_string()).collect();
        assert_eq!(trigram_set("cat"), cat);
        assert_eq!(trigram_set("Cat!"), cat);
        assert_eq!(trigram_similarity("x", "x"), 1.0);
        assert_eq!(trigram_similarity("cat", "cats"), 0.5);
        assert_eq!(trigram_similarity("", ""), 0.0);
        assert_eq!(trigram_similarity("cat", ""), 0.0);
    }

    #[test]
    fn trigram_unicode_words() {
        let s = trigram_set("Çà-Ω");
        assert!(s.contains("  ç") && s.contains("  ω"));
    }

    proptest! {
        #[test]
        fn trigram_symmetric_and_bounded(a in ".{0,40}", b in ".{0,40}") {
            let ab = trigram_similarity(&a, &b);
            prop_assert_eq!(ab, trigram_similarity(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
        }

        #[test]
        fn cosine_symmetric_and_bounded(
            pairs in proptest::collection::vec((-10f32..10.0, -10f32..10.0), 1..16)
        ) {
            let (u, v): (Vec<f32>, Vec<f32>) = pairs.into_iter().unzip();
            match (cosine_similarity(&u, &v), cosine_similarity(&v, &u)) {
                (Ok(x), Ok(y)) => {
                    prop_assert_eq!(x, y);
                    prop_assert!((-1.0..=1.0).contains(&x));
                }
                (Err(_), Err(_)) => {}
                other => prop_assert!(false, "asymmetric outcome {:?}", other),
            }
        }
    }
}
