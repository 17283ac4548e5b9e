use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

pub type Stopwords = HashSet<String>;

/// Lowercases `text` and splits it on runs of non-alphanumeric characters.
/// Tokens found in `stopwords` are dropped.
pub fn tokenize(text: &str, stopwords: Option<&Stopwords>) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && stopwords.is_none_or(|s| !s.contains(*t)))
        .map(str::to_owned)
        .collect()
}

/// Reads a stop-word list: whitespace separated words, `#` starts a comment line.
pub fn load_stopwords(path: &Path) -> Result<Stopwords> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(str::split_whitespace)
        .map(str::to_lowercase)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lowercases_and_removes_stopwords() {
        let stop: Stopwords = ["the".to_string()].into_iter().collect();
        assert_eq!(tokenize("The cat sat.", Some(&stop)), vec!["cat", "sat"]);
    }

    #[test]
    fn empty_text() {
        assert!(tokenize("", None).is_empty());
    }

    #[test]
    fn keeps_duplicates() {
        assert_eq!(tokenize("a a b", None), vec!["a", "a", "b"]);
    }

    #[test]
    fn splits_on_punctuation_runs() {
        assert_eq!(tokenize("x--y,,z 42", None), vec!["x", "y", "z", "42"]);
    }

    proptest! {
        #[test]
        fn idempotent_on_joined_output(text in "\\PC{0,80}") {
            let once = tokenize(&text, None);
            let twice = tokenize(&once.join(" "), None);
            prop_assert_eq!(once, twice);
        }
    }
}
