//! Small text helpers shared by the word caps and the lexicon scorer.

/// Number of whitespace-separated words.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Keeps at most `cap` words, joined by single spaces.
///
/// Returns the text unchanged (not re-spaced) when it is already within the cap.
pub fn truncate_words(text: &str, cap: usize) -> String {
    if word_count(text) <= cap {
        return text.to_string();
    }
    text.split_whitespace()
        .take(cap)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Lowercased alphabetic tokens; apostrophes inside words are kept.
pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !(c.is_alphabetic() || c == '\''))
        .map(|t| t.trim_matches('\'').to_lowercase())
        .filter(|t| !t.is_empty())
}

/// Case- and surrounding-whitespace-insensitive entity name comparison.
pub fn same_name(a: &str, b: &str) -> bool {
    a.trim().to_lowercase() == b.trim().to_lowercase()
}
