//! Tokenization and suffix-stripping stemming.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Word,
    Punctuation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Characters exactly as they appeared in the input.
    pub surface: String,
    /// Lowercased stem for words, the surface for punctuation.
    pub normalized: String,
}

impl Token {
    fn word(surface: String) -> Self {
        Token {
            kind: TokenKind::Word,
            normalized: surface.clone(),
            surface,
        }
    }

    fn punct(c: char) -> Self {
        Token {
            kind: TokenKind::Punctuation,
            surface: c.to_string(),
            normalized: c.to_string(),
        }
    }

    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProcessedText {
    pub tokens: Vec<Token>,
    pub sentence_count: usize,
    /// Non-whitespace characters in the raw text.
    pub char_count: usize,
    /// Whitespace characters in the raw text.
    pub blank_count: usize,
}

impl ProcessedText {
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.tokens
            .iter()
            .filter(|t| t.is_word())
            .map(|t| t.normalized.as_str())
    }

    pub fn word_count(&self) -> usize {
        self.tokens.iter().filter(|t| t.is_word()).count()
    }
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-')
}

pub(crate) fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Split text into word and punctuation tokens.
///
/// A word is a maximal run of letters and digits; an apostrophe or hyphen
/// joins the run only when a letter sits on both sides of it. Any other
/// non-whitespace character is a one-character punctuation token.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphanumeric() {
            let start = i;
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                let joined =
                    is_joiner(d) && chars[i - 1].is_alphabetic() && chars.get(i + 1).is_some_and(|n| n.is_alphabetic());
                if d.is_alphanumeric() || joined {
                    i += 1;
                } else {
                    break;
                }
            }
            tokens.push(Token::word(chars[start..i].iter().collect()));
        } else {
            tokens.push(Token::punct(c));
            i += 1;
        }
    }
    tokens
}

const MIN_STEM: usize = 3;

/// Suffix rules, longest suffix first.
const RULES: &[(&str, &str)] = &[
    ("sses", "ss"),
    ("ies", "y"),
    ("ing", ""),
    ("est", ""),
    ("ed", ""),
    ("er", ""),
    ("ly", ""),
    ("s", ""),
];

/// Stem endings that get their silent "e" back after "-ing"/"-ed" removal.
const RESTORE_E: &[&str] = &["at", "bl", "iz"];

fn strip_once(word: &str) -> Option<String> {
    for &(suffix, replacement) in RULES {
        let Some(base) = word.strip_suffix(suffix) else {
            continue;
        };
        if suffix == "s" && (base.ends_with('s') || base.ends_with('u')) {
            continue;
        }
        if base.chars().count() + replacement.chars().count() < MIN_STEM {
            continue;
        }
        let mut out = format!("{base}{replacement}");
        if matches!(suffix, "ing" | "ed") && RESTORE_E.iter().any(|e| out.ends_with(e)) {
            out.push('e');
        }
        return Some(out);
    }
    None
}

/// Reduce a lowercase word to its stem.
///
/// Rules are re-applied until none fires, so the result is a fixed point
/// and `stem(stem(w)) == stem(w)`. Every rule shortens the word, and none
/// leaves fewer than three characters.
pub fn stem(word: &str) -> String {
    let mut current = word.to_owned();
    while let Some(next) = strip_once(&current) {
        current = next;
    }
    current
}

/// Tokenize, lowercase and stem, and count sentences and characters.
pub fn preprocess(text: &str) -> ProcessedText {
    let mut tokens = tokenize(text);
    for tok in tokens.iter_mut().filter(|t| t.is_word()) {
        tok.normalized = stem(&tok.surface.to_lowercase());
    }

    let mut runs = 0;
    let mut in_run = false;
    for tok in &tokens {
        let term = tok.kind == TokenKind::Punctuation && tok.surface.chars().all(is_terminator);
        if term && !in_run {
            runs += 1;
        }
        in_run = term;
    }
    let sentence_count = if tokens.is_empty() { 0 } else { runs.max(1) };

    let blank_count = text.chars().filter(|c| c.is_whitespace()).count();
    let char_count = text.chars().count() - blank_count;
    ProcessedText {
        tokens,
        sentence_count,
        char_count,
        blank_count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shape(tokens: &[Token]) -> Vec<(TokenKind, &str)> {
        tokens.iter().map(|t| (t.kind, t.surface.as_str())).collect()
    }

    use TokenKind::{Punctuation as P, Word as W};

    #[test]
    fn tokenize_hello_world() {
        assert_eq!(
            shape(&tokenize("Hello, world.")),
            vec![(W, "Hello"), (P, ","), (W, "world"), (P, ".")]
        );
    }

    #[test]
    fn tokenize_empty() {
        assert!(tokenize("").is_empty());
        assert!(tokenize(" \t\n").is_empty());
    }

    #[test]
    fn tokenize_joiners() {
        assert_eq!(
            shape(&tokenize("don't stop--now")),
            vec![(W, "don't"), (W, "stop"), (P, "-"), (P, "-"), (W, "now")]
        );
        assert_eq!(shape(&tokenize("well-known")), vec![(W, "well-known")]);
        assert_eq!(shape(&tokenize("3-4")), vec![(W, "3"), (P, "-"), (W, "4")]);
        assert_eq!(shape(&tokenize("'tis")), vec![(P, "'"), (W, "tis")]);
        assert_eq!(shape(&tokenize("it’s")), vec![(W, "it’s")]);
    }

    #[test]
    fn tokenize_unicode_letters() {
        assert_eq!(
            shape(&tokenize("café—naïve")),
            vec![(W, "café"), (P, "—"), (W, "naïve")]
        );
    }

    #[test]
    fn stem_fish_family() {
        for w in ["fishing", "fished", "fisher", "fish"] {
            assert_eq!(stem(w), "fish", "{w}");
        }
    }

    #[test]
    fn stem_identity_fallback() {
        assert_eq!(stem("the"), "the");
        assert_eq!(stem("class"), "class");
        assert_eq!(stem("a"), "a");
    }

    #[test]
    fn stem_rules() {
        assert_eq!(stem("ponies"), "pony");
        assert_eq!(stem("classes"), "class");
        assert_eq!(stem("creating"), "create");
        assert_eq!(stem("quickly"), "quick");
        assert_eq!(stem("fastest"), "fast");
        assert_eq!(stem("cats"), "cat");
        assert_eq!(stem("sing"), "sing");
    }

    #[test]
    fn preprocess_fish_sentences() {
        let pt = preprocess("Fishing fished. Fisher!");
        let norm: Vec<&str> = pt.tokens.iter().map(|t| t.normalized.as_str()).collect();
        assert_eq!(norm, ["fish", "fish", ".", "fish", "!"]);
        assert_eq!(pt.sentence_count, 2);
        assert_eq!(pt.char_count, 21);
        assert_eq!(pt.blank_count, 2);
    }

    #[test]
    fn preprocess_empty_and_unterminated() {
        let pt = preprocess("");
        assert_eq!((pt.tokens.len(), pt.sentence_count, pt.char_count), (0, 0, 0));
        assert_eq!(preprocess("no terminator here").sentence_count, 1);
        assert_eq!(preprocess("Wait... what?!").sentence_count, 2);
    }

    proptest! {
        #[test]
        fn partition_property(s in "\\PC{0,60}") {
            let joined: String = tokenize(&s).iter().map(|t| t.surface.as_str()).collect();
            let stripped: String = s.chars().filter(|c| !c.is_whitespace()).collect();
            prop_assert_eq!(joined, stripped);
        }

        #[test]
        fn stem_is_idempotent_and_shrinking(w in "[a-z]{1,14}") {
            let s = stem(&w);
            prop_assert!(!s.is_empty());
            prop_assert!(s.chars().count() <= w.chars().count());
            prop_assert_eq!(stem(&s), s);
        }

        #[test]
        fn normalized_never_empty(s in "[a-zA-Z ,.!?'-]{0,80}") {
            let pt = preprocess(&s);
            prop_assert!(pt.tokens.iter().all(|t| !t.normalized.is_empty()));
            let surf: usize = pt.tokens.iter().map(|t| t.surface.chars().count()).sum();
            prop_assert_eq!(surf, pt.char_count);
            if !pt.tokens.is_empty() {
                prop_assert!(pt.sentence_count >= 1);
            }
        }
    }
}
