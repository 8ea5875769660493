//! Tokenization shared by concept lookup and the text baseline.

use std::collections::BTreeSet;

/// Lowercases `text` and splits it on whitespace and punctuation.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn token_set(text: &str) -> BTreeSet<String> {
    tokenize(text).into_iter().collect()
}

/// Lowercases and collapses runs of whitespace to a single space.
pub fn normalize_label(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_punctuation() {
        assert_eq!(
            tokenize("Diabetes-Mellitus, type 2"),
            ["diabetes", "mellitus", "type", "2"]
        );
        assert!(tokenize("  --  ").is_empty());
    }

    #[test]
    fn keeps_single_character_tokens() {
        assert_eq!(tokenize("p53 a"), ["p53", "a"]);
    }

    #[test]
    fn normalizes_labels() {
        assert_eq!(
            normalize_label("  Diabetes   Mellitus "),
            "diabetes mellitus"
        );
    }
}
