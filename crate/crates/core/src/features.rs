//! Stylometric feature extraction, vector layout and z-score scaling.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{ProcessedText, TokenKind};

/// Number of fixed (non-vocabulary) vector slots.
pub const FIXED_DIMS: usize = 16;

/// The seventeen per-document measurements.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StyleFeatures {
    pub periods: u64,
    pub commas: u64,
    pub question_marks: u64,
    pub colons: u64,
    pub semicolons: u64,
    pub blanks: u64,
    pub exclamations: u64,
    pub dashes: u64,
    pub underscores: u64,
    pub brackets: u64,
    pub quotations: u64,
    pub slashes: u64,
    pub word_count: u64,
    pub sentence_count: u64,
    pub char_count: u64,
    pub chars_per_sentence: f64,
    /// Most frequent normalized words, count descending then lexicographic.
    pub topk_words: Vec<(String, u64)>,
    /// Counts of every normalized word in the document.
    pub word_counts: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PunctClass {
    Period,
    Comma,
    Question,
    Colon,
    Semicolon,
    Exclamation,
    Dash,
    Underscore,
    Bracket,
    Quotation,
    Slash,
}

fn classify(c: char) -> Option<PunctClass> {
    use PunctClass::*;
    Some(match c {
        '.' => Period,
        ',' => Comma,
        '?' => Question,
        ':' => Colon,
        ';' => Semicolon,
        '!' => Exclamation,
        '-' | '\u{2013}' | '\u{2014}' => Dash,
        '_' => Underscore,
        '(' | ')' | '[' | ']' | '{' | '}' => Bracket,
        '"' | '\'' | '\u{201C}' | '\u{201D}' | '\u{2018}' | '\u{2019}' | '`' => Quotation,
        '/' | '\\' => Slash,
        _ => return None,
    })
}

impl StyleFeatures {
    /// The sixteen scalar features in canonical order.
    pub fn scalars(&self) -> [f64; FIXED_DIMS] {
        [
            self.periods as f64,
            self.commas as f64,
            self.question_marks as f64,
            self.colons as f64,
            self.semicolons as f64,
            self.blanks as f64,
            self.exclamations as f64,
            self.dashes as f64,
            self.underscores as f64,
            self.brackets as f64,
            self.quotations as f64,
            self.slashes as f64,
            self.word_count as f64,
            self.sentence_count as f64,
            self.char_count as f64,
            self.chars_per_sentence,
        ]
    }
}

/// Measure a processed document. `k` bounds the top-word list.
pub fn extract(pt: &ProcessedText, k: usize) -> StyleFeatures {
    let mut sf = StyleFeatures {
        blanks: pt.blank_count as u64,
        sentence_count: pt.sentence_count as u64,
        char_count: pt.char_count as u64,
        ..Default::default()
    };
    for tok in &pt.tokens {
        match tok.kind {
            TokenKind::Word => {
                sf.word_count += 1;
                *sf.word_counts.entry(tok.normalized.clone()).or_insert(0) += 1;
            }
            TokenKind::Punctuation => {
                let Some(c) = tok.surface.chars().next() else { continue };
                let slot = match classify(c) {
                    Some(PunctClass::Period) => &mut sf.periods,
                    Some(PunctClass::Comma) => &mut sf.commas,
                    Some(PunctClass::Question) => &mut sf.question_marks,
                    Some(PunctClass::Colon) => &mut sf.colons,
                    Some(PunctClass::Semicolon) => &mut sf.semicolons,
                    Some(PunctClass::Exclamation) => &mut sf.exclamations,
                    Some(PunctClass::Dash) => &mut sf.dashes,
                    Some(PunctClass::Underscore) => &mut sf.underscores,
                    Some(PunctClass::Bracket) => &mut sf.brackets,
                    Some(PunctClass::Quotation) => &mut sf.quotations,
                    Some(PunctClass::Slash) => &mut sf.slashes,
                    None => continue,
                };
                *slot += 1;
            }
        }
    }
    sf.chars_per_sentence = sf.char_count as f64 / sf.sentence_count.max(1) as f64;
    let mut ranked: Vec<(String, u64)> = sf.word_counts.iter().map(|(w, &c)| (w.clone(), c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    sf.topk_words = ranked;
    sf
}

/// Fixed stylometric slots followed by one slot per vocabulary word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    vocabulary: Vec<String>,
}

impl FeatureLayout {
    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn dims(&self) -> usize {
        FIXED_DIMS + self.vocabulary.len()
    }
}

pub fn build_layout<I, S>(vocab: I) -> Result<FeatureLayout>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let set: BTreeSet<String> = vocab.into_iter().map(Into::into).collect();
    if set.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    Ok(FeatureLayout {
        vocabulary: set.into_iter().collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn dims(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Project features onto `layout`.
///
/// Punctuation and blank counts become rates per non-whitespace character,
/// vocabulary slots become relative word frequencies.
pub fn vectorize(sf: &StyleFeatures, layout: &FeatureLayout) -> FeatureVector {
    let chars = sf.char_count.max(1) as f64;
    let words = sf.word_count.max(1) as f64;
    let scalars = sf.scalars();
    let mut v = Vec::with_capacity(layout.dims());
    v.extend(scalars[..12].iter().map(|c| c / chars));
    v.extend_from_slice(&scalars[12..]);
    v.extend(
        layout
            .vocabulary
            .iter()
            .map(|w| sf.word_counts.get(w).map_or(0.0, |&c| c as f64 / words)),
    );
    FeatureVector(v)
}

/// Per-dimension z-score transform learned on training vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stddevs: Vec<f64>,
}

const CONSTANT_STDDEV: f64 = 1e-12;

pub fn fit_scaler(vectors: &[FeatureVector]) -> Result<Scaler> {
    if vectors.len() < 2 {
        return Err(Error::InsufficientData);
    }
    let dims = vectors[0].dims();
    if let Some(bad) = vectors.iter().find(|v| v.dims() != dims) {
        return Err(Error::LayoutMismatch {
            expected: dims,
            got: bad.dims(),
        });
    }
    let n = vectors.len() as f64;
    let mut means = vec![0.0; dims];
    for v in vectors {
        for (m, x) in means.iter_mut().zip(&v.0) {
            *m += x;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut vars = vec![0.0; dims];
    for v in vectors {
        for ((s, x), m) in vars.iter_mut().zip(&v.0).zip(&means) {
            *s += (x - m) * (x - m);
        }
    }
    let stddevs = vars.into_iter().map(|s| (s / n).sqrt()).collect();
    Ok(Scaler { means, stddevs })
}

impl Scaler {
    pub fn dims(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, v: &FeatureVector) -> Result<FeatureVector> {
        if v.dims() != self.dims() {
            return Err(Error::LayoutMismatch {
                expected: self.dims(),
                got: v.dims(),
            });
        }
        Ok(FeatureVector(
            v.0.iter()
                .zip(&self.means)
                .zip(&self.stddevs)
                .map(|((x, m), s)| if *s < CONSTANT_STDDEV { 0.0 } else { (x - m) / s })
                .collect(),
        ))
    }
}

pub fn apply_scaler(scaler: &Scaler, v: &FeatureVector) -> Result<FeatureVector> {
    scaler.apply(v)
}

pub const CSV_HEADER: &str = "doc_id,author_id,periods,commas,questions,colons,semicolons,blanks,exclamations,dashes,underscores,brackets,quotations,slashes,words,sentences,chars,chars_per_sentence";

fn csv_safe(field: &str) -> bool {
    !field.is_empty()
        && field
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '/' | '.' | '-'))
}

/// One CSV row (without trailing newline) for a document's features.
pub fn csv_row(doc_id: &str, author_id: &str, sf: &StyleFeatures) -> Result<String> {
    for field in [doc_id, author_id] {
        if !csv_safe(field) {
            return Err(Error::InvalidInput(format!(
                "identifier `{field}` contains characters outside [A-Za-z0-9_/.-]"
            )));
        }
    }
    let mut row = format!("{doc_id},{author_id}");
    for x in &sf.scalars()[..15] {
        let _ = write!(row, ",{}", *x as u64);
    }
    let _ = write!(row, ",{}", sf.chars_per_sentence);
    Ok(row)
}
