//! Tokenization shared by featurization and translation scoring.

/// Lowercased word tokens: maximal runs of alphanumeric characters or `_`.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}
