//! Surface tokenization shared by the vocabulary checks and builtin scorers.

use std::collections::BTreeSet;

/// Lowercased alphanumeric runs. A PropBank sense tag on a whitespace word
/// (`go-02`) is dropped first so linearized graphs tokenize like prose.
pub fn tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let word = strip_sense(word);
        for piece in word.split(|c: char| !c.is_alphanumeric()) {
            if !piece.is_empty() {
                out.push(piece.to_lowercase());
            }
        }
    }
    out
}

pub fn token_set(text: &str) -> BTreeSet<String> {
    tokens(text).into_iter().collect()
}

/// `work-01` -> `work`; other strings unchanged.
pub fn strip_sense(word: &str) -> &str {
    let b = word.as_bytes();
    if b.len() > 3 && b[b.len() - 3] == b'-' && b[b.len() - 2..].iter().all(u8::is_ascii_digit) {
        &word[..word.len() - 3]
    } else {
        word
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_and_lowercases() {
        assert_eq!(tokens("The boy's go-02 polarity:-"), ["the", "boy", "s", "go", "polarity"]);
        assert_eq!(tokens("  "), Vec::<String>::new());
        assert_eq!(tokens("Osaka, 2020."), ["osaka", "2020"]);
    }

    #[test]
    fn sense_tags() {
        assert_eq!(strip_sense("work-01"), "work");
        assert_eq!(strip_sense("date-entity"), "date-entity");
        assert_eq!(strip_sense("-01"), "-01");
    }
}
