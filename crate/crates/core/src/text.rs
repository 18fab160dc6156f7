//! Surface normalization and tokenization shared by the loaders, the retrieval
//! index and the feature builder.

/// Lowercases, trims and collapses runs of whitespace into a single space.
///
/// Hyphens and other punctuation are kept as-is.
pub fn normalize_surface(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for word in raw.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        for ch in word.chars() {
            out.extend(ch.to_lowercase());
        }
    }
    out
}

/// Splits text into index tokens: normalized, then broken on every character that
/// is neither alphanumeric nor a hyphen. No stemming, no stopword removal.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '-' {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Words of a normalized surface, as used for compositional embeddings.
pub fn surface_words(surface: &str) -> impl Iterator<Item = &str> {
    surface.split(' ').filter(|w| !w.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_collapses_whitespace_and_lowercases() {
        assert_eq!(normalize_surface("  Few-Shot \t  Learning "), "few-shot learning");
        assert_eq!(normalize_surface("   "), "");
    }

    #[test]
    fn tokenizer_keeps_hyphens() {
        assert_eq!(
            tokenize("Few-shot learning, (a.k.a.) C++!"),
            vec!["few-shot", "learning", "a", "k", "a", "c"]
        );
    }

    #[test]
    fn tokenizing_a_normalized_surface_matches_the_raw_one() {
        let raw = "Deep   Reinforcement-Learning";
        assert_eq!(tokenize(raw), tokenize(&normalize_surface(raw)));
    }
}
