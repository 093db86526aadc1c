//! Text normalization shared by tweet matching, name linking and the topic
//! model tokenizer.

use std::collections::BTreeSet;

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Case-fold, replace punctuation with spaces and collapse whitespace.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            out.push(c);
        } else {
            out.push(' ');
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// `normalize` with diacritics removed (NFD, combining marks dropped).
pub fn normalize_name(name: &str) -> String {
    let stripped: String = name.nfd().filter(|c| !is_combining_mark(*c)).collect();
    normalize(&stripped)
}

/// Tokens of a normalized name, ignoring single-letter initials.
pub fn name_token_set(name: &str) -> BTreeSet<String> {
    normalize_name(name)
        .split(' ')
        .filter(|t| t.chars().count() > 1)
        .map(str::to_string)
        .collect()
}

/// True when `needle` occurs in `haystack` on token boundaries. Both sides
/// must already be normalized.
pub fn contains_phrase(haystack: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    let h = format!(" {haystack} ");
    let n = format!(" {needle} ");
    h.contains(&n)
}

const STOP_WORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "am", "an", "and", "any", "are", "as", "at", "be",
    "because", "been", "but", "by", "can", "could", "did", "do", "does", "for", "from", "get",
    "got", "had", "has", "have", "he", "her", "here", "him", "his", "how", "i", "if", "in", "into",
    "is", "it", "its", "just", "me", "more", "my", "no", "not", "now", "of", "on", "one", "or",
    "our", "out", "rt", "she", "so", "some", "than", "that", "the", "their", "them", "then",
    "there", "these", "they", "this", "to", "too", "up", "us", "very", "was", "we", "were", "what",
    "when", "which", "who", "will", "with", "would", "you", "your",
];

pub fn is_stop_word(token: &str) -> bool {
    STOP_WORDS.binary_search(&token).is_ok()
}

fn is_url(token: &str) -> bool {
    let t = token.to_ascii_lowercase();
    t.starts_with("http://")
        || t.starts_with("https://")
        || t.starts_with("www.")
        || t.contains(".com/")
        || t.contains(".st/")
        || t.contains(".ly/")
}

/// Topic-model tokenizer: lowercase, drop URLs, @mentions, punctuation and
/// stop words, split on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter(|t| !t.starts_with('@') && !is_url(t))
        .flat_map(|t| {
            normalize(t)
                .split(' ')
                .filter(|w| w.chars().count() > 1 && !is_stop_word(w))
                .map(str::to_string)
                .collect::<Vec<_>>()
        })
        .collect()
}
