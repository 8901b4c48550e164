//! Text normalization and whitespace tokenization.
//!
//! Corpus text and embedding vocabularies have to agree on token boundaries,
//! so the rules here are fixed and small: URLs become a placeholder, a fixed
//! set of punctuation characters is padded with spaces, whitespace runs are
//! collapsed, and (optionally) everything is lowercased.

use std::sync::OnceLock;

use regex::Regex;

use crate::error::{Error, Result};

/// Characters padded with spaces when [`PreprocessRules::pad_punctuation`] is set.
pub const PUNCTUATION: &[char] = &[
    '.', ',', '!', '?', ';', ':', '(', ')', '[', ']', '"', '\'', '#', '@',
];

pub const DEFAULT_URL_PLACEHOLDER: &str = "<url>";

fn url_pattern() -> &'static Regex {
    static URL: OnceLock<Regex> = OnceLock::new();
    URL.get_or_init(|| Regex::new(r"(?:https?://|www\.)\S*").expect("valid URL regex"))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreprocessRules {
    url_placeholder: String,
    pub pad_punctuation: bool,
    pub lowercase: bool,
}

impl PreprocessRules {
    /// Builds a rule set, rejecting placeholders that would make
    /// [`preprocess`] non-idempotent.
    pub fn new(url_placeholder: &str, pad_punctuation: bool, lowercase: bool) -> Result<Self> {
        if url_placeholder.is_empty() {
            return Err(Error::Config("URL placeholder must not be empty".into()));
        }
        if url_placeholder.chars().any(char::is_whitespace) {
            return Err(Error::Config(
                "URL placeholder must not contain whitespace".into(),
            ));
        }
        if url_pattern().is_match(url_placeholder) {
            return Err(Error::Config(
                "URL placeholder must not itself look like a URL".into(),
            ));
        }
        if lowercase && url_placeholder.to_lowercase() != url_placeholder {
            return Err(Error::Config(
                "URL placeholder must be lowercase when lowercasing is enabled".into(),
            ));
        }
        Ok(PreprocessRules {
            url_placeholder: url_placeholder.to_owned(),
            pad_punctuation,
            lowercase,
        })
    }

    /// Rules for entity tagging: capitalization is kept since it is a feature.
    pub fn ner() -> Self {
        PreprocessRules {
            url_placeholder: DEFAULT_URL_PLACEHOLDER.to_owned(),
            pad_punctuation: true,
            lowercase: false,
        }
    }

    /// Rules for the sentence-level sentiment tasks.
    pub fn sentiment() -> Self {
        PreprocessRules {
            lowercase: true,
            ..Self::ner()
        }
    }

    pub fn url_placeholder(&self) -> &str {
        &self.url_placeholder
    }
}

impl Default for PreprocessRules {
    fn default() -> Self {
        Self::ner()
    }
}

/// Applies `rules` to `raw`. Total and idempotent.
pub fn preprocess(raw: &str, rules: &PreprocessRules) -> String {
    let lowered;
    let text = if rules.lowercase {
        lowered = raw.to_lowercase();
        lowered.as_str()
    } else {
        raw
    };

    let replaced = url_pattern().replace_all(text, regex::NoExpand(&rules.url_placeholder));

    let padded = if rules.pad_punctuation {
        let mut out = String::with_capacity(replaced.len() + replaced.len() / 4);
        for ch in replaced.chars() {
            if PUNCTUATION.contains(&ch) {
                out.push(' ');
                out.push(ch);
                out.push(' ');
            } else {
                out.push(ch);
            }
        }
        out
    } else {
        replaced.into_owned()
    };

    padded.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// A whitespace-delimited token and its 0-based position in the sequence.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Token {
    pub surface: String,
    pub position: usize,
}

impl Token {
    pub fn new(surface: impl Into<String>, position: usize) -> Self {
        Token {
            surface: surface.into(),
            position,
        }
    }
}

pub fn tokenize(prepared: &str) -> Vec<Token> {
    prepared
        .split_whitespace()
        .enumerate()
        .map(|(position, surface)| Token::new(surface, position))
        .collect()
}

/// Convenience for callers that only need the surfaces.
pub fn surfaces(tokens: &[Token]) -> Vec<&str> {
    tokens.iter().map(|t| t.surface.as_str()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn url_and_punctuation() {
        let rules = PreprocessRules::ner();
        assert_eq!(preprocess("see http://t.co/xyz now!", &rules), "see <url> now !");
        assert_eq!(preprocess("", &rules), "");
        assert_eq!(preprocess("a,b", &rules), "a , b");
        assert_eq!(preprocess("go to www.example.com/x?y=1", &rules), "go to <url>");
        assert_eq!(preprocess("HTTPS://A.B", &PreprocessRules::sentiment()), "<url>");
    }

    #[test]
    fn collapses_whitespace() {
        let rules = PreprocessRules::new("URL", false, false).unwrap();
        assert_eq!(preprocess("  a \t\n b  ", &rules), "a b");
        assert_eq!(preprocess("x https://q.r y", &rules), "x URL y");
    }

    #[test]
    fn placeholder_validation() {
        assert!(PreprocessRules::new("", true, false).is_err());
        assert!(PreprocessRules::new("a b", true, false).is_err());
        assert!(PreprocessRules::new("http://x", true, false).is_err());
        assert!(PreprocessRules::new("<URL>", true, true).is_err());
        assert!(PreprocessRules::new("<URL>", true, false).is_ok());
    }

    #[test]
    fn tokenize_positions() {
        let toks = tokenize("a , b");
        assert_eq!(
            toks,
            vec![Token::new("a", 0), Token::new(",", 1), Token::new("b", 2)]
        );
        assert!(tokenize("").is_empty());
        let toks = tokenize("CLUB BLU tonite");
        assert_eq!(surfaces(&toks), vec!["CLUB", "BLU", "tonite"]);
        assert_eq!(toks[2].position, 2);
    }

    fn any_rules() -> impl Strategy<Value = PreprocessRules> {
        (any::<bool>(), any::<bool>(), prop_oneof![Just("<url>"), Just("u.r.l"), Just("#link")])
            .prop_map(|(pad, lower, ph)| PreprocessRules::new(ph, pad, lower).unwrap())
    }

    proptest! {
        #[test]
        fn preprocess_is_idempotent(
            raw in r"(?:[a-zA-Z0-9 \t.,!?;:()\[\]'#@/]|http://|https://|www\.|É|ß|İ|ﬁ|\u{3000})*",
            rules in any_rules(),
        ) {
            let once = preprocess(&raw, &rules);
            prop_assert_eq!(preprocess(&once, &rules), once);
        }

        #[test]
        fn tokens_are_dense_and_whitespace_free(raw in "\\PC*") {
            let toks = tokenize(&preprocess(&raw, &PreprocessRules::ner()));
            for (i, t) in toks.iter().enumerate() {
                prop_assert_eq!(t.position, i);
                prop_assert!(!t.surface.is_empty());
                prop_assert!(!t.surface.chars().any(char::is_whitespace));
            }
        }
    }
}
