//! Seeded synthetic authors for benchmarks and tests.
//!
//! Every author draws words from a Zipfian distribution over a private,
//! noisily permuted ranking of a shared word pool, and punctuates with its
//! own rates for commas, semicolons, dashes, quotes and so on. Pool words
//! are consonant-vowel syllables, so they end in a vowel and pass through
//! the stemmer unchanged.

use std::fs;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub authors: usize,
    pub docs_per_author: usize,
    pub words_per_doc: usize,
    pub vocab_size: usize,
    pub zipf_exponent: f64,
    /// Spread of each author's ranking around the shared base order, as the
    /// standard deviation of a log-rank perturbation.
    pub rank_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            authors: 5,
            docs_per_author: 20,
            words_per_doc: 500,
            vocab_size: 1500,
            zipf_exponent: 1.05,
            rank_noise: 1.5,
            seed: 2024,
        }
    }
}

const FUNCTION_WORDS: &[&str] = &[
    "the", "of", "and", "to", "a", "in", "that", "it", "was", "he", "she", "but",
];
const CONSONANTS: &[char] = &['b', 'd', 'f', 'g', 'k', 'l', 'm', 'n', 'p', 'r', 't', 'v', 'z'];
const VOWELS: &[char] = &['a', 'e', 'i', 'o', 'u'];

fn word_pool(n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.gen_range(2..=4);
        let w: String = (0..syllables)
            .flat_map(|_| [*CONSONANTS.choose(rng).unwrap(), *VOWELS.choose(rng).unwrap()])
            .collect();
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

#[derive(Debug, Clone)]
struct Style {
    words: Vec<String>,
    zipf: WeightedIndex<f64>,
    sentence_len: f64,
    comma: f64,
    semicolon: f64,
    colon: f64,
    dash: f64,
    quote: f64,
    paren: f64,
    exclaim: f64,
    question: f64,
    ellipsis: f64,
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn author_style(spec: &SyntheticSpec, pool: &[String], rng: &mut ChaCha8Rng) -> Style {
    let mut keyed: Vec<(f64, &String)> = pool
        .iter()
        .enumerate()
        .map(|(i, w)| (((i + 1) as f64).ln() + spec.rank_noise * standard_normal(rng), w))
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut func: Vec<&str> = FUNCTION_WORDS.to_vec();
    func.shuffle(rng);
    let words: Vec<String> = func
        .into_iter()
        .map(str::to_owned)
        .chain(keyed.into_iter().map(|(_, w)| w.clone()))
        .collect();
    let weights: Vec<f64> = (1..=words.len())
        .map(|r| (r as f64).powf(-spec.zipf_exponent))
        .collect();
    Style {
        words,
        zipf: WeightedIndex::new(weights).expect("positive weights"),
        sentence_len: rng.gen_range(7.0..22.0),
        comma: rng.gen_range(0.01..0.15),
        semicolon: rng.gen_range(0.0..0.03),
        colon: rng.gen_range(0.0..0.02),
        dash: rng.gen_range(0.0..0.03),
        quote: rng.gen_range(0.0..0.03),
        paren: rng.gen_range(0.0..0.02),
        exclaim: rng.gen_range(0.0..0.25),
        question: rng.gen_range(0.0..0.2),
        ellipsis: rng.gen_range(0.0..0.1),
    }
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn document(style: &Style, words: usize, rng: &mut ChaCha8Rng) -> String {
    let mut out = String::new();
    let mut written = 0;
    let mut sentences = 0;
    while written < words {
        let len = (style.sentence_len * rng.gen_range(0.5..1.5)).round().max(3.0) as usize;
        let len = len.min(words - written).max(1);
        let mut parts: Vec<String> = Vec::with_capacity(len);
        for i in 0..len {
            let w = &style.words[style.zipf.sample(rng)];
            let mut tok = if i == 0 { capitalize(w) } else { w.clone() };
            if rng.gen_bool(style.quote) {
                tok = format!("\"{tok}\"");
            } else if rng.gen_bool(style.paren) {
                tok = format!("({tok})");
            }
            if i + 1 < len {
                if rng.gen_bool(style.comma) {
                    tok.push(',');
                } else if rng.gen_bool(style.semicolon) {
                    tok.push(';');
                } else if rng.gen_bool(style.colon) {
                    tok.push(':');
                } else if rng.gen_bool(style.dash) {
                    tok.push_str(" -");
                }
            }
            parts.push(tok);
        }
        let roll: f64 = rng.gen();
        let end = if roll < style.exclaim {
            "!"
        } else if roll < style.exclaim + style.question {
            "?"
        } else if roll < style.exclaim + style.question + style.ellipsis {
            "..."
        } else {
            "."
        };
        if !out.is_empty() {
            out.push(if sentences % 5 == 0 { '\n' } else { ' ' });
        }
        out.push_str(&parts.join(" "));
        out.push_str(end);
        written += len;
        sentences += 1;
    }
    out.push('\n');
    out
}

/// Generate a labeled corpus; identical specs give identical corpora.
pub fn synthetic_corpus(spec: &SyntheticSpec) -> Result<Corpus> {
    if spec.authors == 0 || spec.docs_per_author == 0 || spec.words_per_doc == 0 || spec.vocab_size == 0 {
        return Err(Error::InvalidConfig(
            "synthetic corpus dimensions must be positive".into(),
        ));
    }
    let mut pool_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pool = word_pool(spec.vocab_size, &mut pool_rng);
    let mut docs = Vec::with_capacity(spec.authors * spec.docs_per_author);
    for a in 0..spec.authors {
        let mut rng = ChaCha8Rng::seed_from_u64(
            spec.seed
                .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(a as u64 + 1)),
        );
        let style = author_style(spec, &pool, &mut rng);
        let author = format!("author_{a:02}");
        for d in 0..spec.docs_per_author {
            let text = document(&style, spec.words_per_doc, &mut rng);
            docs.push(Document::new(author.clone(), format!("{author}/doc_{d:03}.txt"), text));
        }
    }
    Corpus::new(docs)
}

/// Write `corpus` as `<root>/<author>/<file>` text files.
pub fn write_corpus(corpus: &Corpus, root: &Path) -> Result<()> {
    for doc in corpus.documents() {
        let path = root.join(&doc.doc_id);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, &doc.text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
