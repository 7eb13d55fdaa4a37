//! Fuzzy fingerprints built from ranked top-k word lists.
//!
//! A fingerprint maps each of an author's top-k words to a membership in
//! (0, 1] that depends only on the word's rank. A query text gets its own
//! fingerprint and is attributed to the author whose fingerprint covers it
//! best.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ensemble::{Prediction, Source};
use crate::error::{Error, Result};
use crate::preprocess::ProcessedText;
use crate::topk::TopKSketch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FingerprintConfig {
    pub k: usize,
    pub sketch_capacity_m: usize,
}

impl Default for FingerprintConfig {
    fn default() -> Self {
        FingerprintConfig::with_k(100)
    }
}

impl FingerprintConfig {
    /// Config with the default sketch slack of `10 * k` counters.
    pub fn with_k(k: usize) -> Self {
        FingerprintConfig {
            k,
            sketch_capacity_m: 10 * k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.sketch_capacity_m < self.k {
            return Err(Error::InvalidConfig(format!(
                "sketch capacity {} is smaller than k = {}",
                self.sketch_capacity_m, self.k
            )));
        }
        Ok(())
    }
}

/// Linear rank decay: `(k - rank) / k`.
pub fn fuzzify(rank: usize, k: usize) -> Result<f64> {
    if rank >= k {
        return Err(Error::OutOfRange { rank, k });
    }
    Ok((k - rank) as f64 / k as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyFingerprint {
    pub owner: String,
    #[serde(with = "pairs")]
    pub entries: BTreeMap<String, f64>,
}

/// Serialize a word map as a sorted array of `[word, membership]` pairs.
mod pairs {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<(&String, &f64)> = map.iter().collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
        let v: Vec<(String, f64)> = Vec::deserialize(d)?;
        Ok(v.into_iter().collect())
    }
}

impl FuzzyFingerprint {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn membership(&self, word: &str) -> Option<f64> {
        self.entries.get(word).copied()
    }
}

/// Stream every word of `docs` through a Space-Saving sketch and fuzzify
/// the resulting top-k ranks.
pub fn build_fingerprint<'a, I>(owner: &str, docs: I, cfg: &FingerprintConfig) -> Result<FuzzyFingerprint>
where
    I: IntoIterator<Item = &'a ProcessedText>,
{
    cfg.validate()?;
    let mut sketch = TopKSketch::new(cfg.sketch_capacity_m)?;
    for pt in docs {
        for w in pt.words() {
            sketch.offer(w);
        }
    }
    if sketch.is_empty() {
        return Err(Error::EmptyFingerprint);
    }
    let entries = sketch
        .query_topk(cfg.k)
        .into_iter()
        .enumerate()
        .map(|(rank, e)| Ok((e.element, fuzzify(rank, cfg.k)?)))
        .collect::<Result<_>>()?;
    Ok(FuzzyFingerprint {
        owner: owner.to_owned(),
        entries,
    })
}

pub fn build_author_fingerprint(
    author: &str,
    docs: &[&ProcessedText],
    cfg: &FingerprintConfig,
) -> Result<FuzzyFingerprint> {
    build_fingerprint(author, docs.iter().copied(), cfg)
}

/// Query-normalized fuzzy overlap: `Σ min(μq, μa) / Σ μq`.
pub fn fingerprint_similarity(query: &FuzzyFingerprint, author: &FuzzyFingerprint) -> Result<f64> {
    if query.is_empty() {
        return Err(Error::EmptyFingerprint);
    }
    let mut overlap = 0.0;
    let mut mass = 0.0;
    for (w, &mq) in &query.entries {
        mass += mq;
        if let Some(ma) = author.membership(w) {
            overlap += mq.min(ma);
        }
    }
    Ok((overlap / mass).clamp(0.0, 1.0))
}

/// Trained fuzzy classifier: one fingerprint per author.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyModel {
    pub config: FingerprintConfig,
    pub fingerprints: BTreeMap<String, FuzzyFingerprint>,
}

impl FuzzyModel {
    /// Build fingerprints from `(author, document)` pairs; document order
    /// within an author is the order given.
    pub fn train(samples: &[(&str, &ProcessedText)], cfg: &FingerprintConfig) -> Result<Self> {
        cfg.validate()?;
        let mut grouped: BTreeMap<&str, Vec<&ProcessedText>> = BTreeMap::new();
        for &(author, pt) in samples {
            grouped.entry(author).or_default().push(pt);
        }
        let groups: Vec<(&str, Vec<&ProcessedText>)> = grouped.into_iter().collect();
        let fps = crate::exec::try_par_map(&groups, |(author, docs)| build_author_fingerprint(author, docs, cfg))?;
        Ok(FuzzyModel {
            config: *cfg,
            fingerprints: fps.into_iter().map(|f| (f.owner.clone(), f)).collect(),
        })
    }

    pub fn authors(&self) -> impl Iterator<Item = &str> {
        self.fingerprints.keys().map(String::as_str)
    }

    /// Union of all authors' fingerprint words.
    pub fn vocabulary(&self) -> std::collections::BTreeSet<&str> {
        self.fingerprints
            .values()
            .flat_map(|f| f.entries.keys().map(String::as_str))
            .collect()
    }

    pub fn predict(&self, pt: &ProcessedText) -> Result<Prediction> {
        classify_fuzzy(pt, &self.fingerprints, &self.config)
    }
}

pub fn classify_fuzzy(
    pt: &ProcessedText,
    fingerprints: &BTreeMap<String, FuzzyFingerprint>,
    cfg: &FingerprintConfig,
) -> Result<Prediction> {
    if fingerprints.is_empty() {
        return Err(Error::NeedsTwoClasses);
    }
    let query = build_fingerprint("query", [pt], cfg)?;
    let raw = fingerprints
        .iter()
        .map(|(a, f)| Ok((a.clone(), fingerprint_similarity(&query, f)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(Prediction::from_raw(raw, Source::Fuzzy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::preprocess;
    use proptest::prelude::*;

    fn fp(pairs: &[(&str, f64)]) -> FuzzyFingerprint {
        FuzzyFingerprint {
            owner: "t".into(),
            entries: pairs.iter().map(|(w, m)| (w.to_string(), *m)).collect(),
        }
    }

    #[test]
    fn fuzzify_values() {
        assert_eq!(fuzzify(0, 100).unwrap(), 1.0);
        assert_eq!(fuzzify(99, 100).unwrap(), 0.01);
        assert_eq!(fuzzify(50, 100).unwrap(), 0.5);
        assert!(matches!(fuzzify(100, 100), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn fingerprint_single_doc() {
        let pt = preprocess("a a b");
        let f = build_author_fingerprint("x", &[&pt], &FingerprintConfig::with_k(2)).unwrap();
        assert_eq!(f.entries, fp(&[("a", 1.0), ("b", 0.5)]).entries);
    }

    #[test]
    fn fingerprint_fewer_words_than_k() {
        let pt = preprocess("c c c b b a");
        let f = build_author_fingerprint("x", &[&pt], &FingerprintConfig::with_k(5)).unwrap();
        assert_eq!(f.entries, fp(&[("c", 1.0), ("b", 0.8), ("a", 0.6)]).entries);
    }

    #[test]
    fn fingerprint_order_independent_in_exact_regime() {
        let d1 = preprocess("red red blue");
        let d2 = preprocess("green blue blue blue");
        let cfg = FingerprintConfig::with_k(3);
        let a = build_author_fingerprint("x", &[&d1, &d2], &cfg).unwrap();
        let b = build_author_fingerprint("x", &[&d2, &d1], &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_fingerprint() {
        let pt = preprocess("... !!");
        assert!(matches!(
            build_author_fingerprint("x", &[&pt], &FingerprintConfig::default()),
            Err(Error::EmptyFingerprint)
        ));
        assert!(matches!(
            fingerprint_similarity(&fp(&[]), &fp(&[("a", 1.0)])),
            Err(Error::EmptyFingerprint)
        ));
    }

    #[test]
    fn similarity_examples() {
        let f = fp(&[("a", 1.0), ("b", 0.5)]);
        assert_eq!(fingerprint_similarity(&f, &f).unwrap(), 1.0);
        assert_eq!(fingerprint_similarity(&f, &fp(&[("z", 1.0)])).unwrap(), 0.0);
        let sim = fingerprint_similarity(&f, &fp(&[("a", 0.5), ("c", 1.0)])).unwrap();
        assert!((sim - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn classify_identity_and_tie() {
        let cfg = FingerprintConfig::with_k(10);
        let x = preprocess("apple banana apple cherry");
        let y = preprocess("delta echo foxtrot delta");
        let model = FuzzyModel::train(&[("x", &x), ("y", &y)], &cfg).unwrap();
        let p = model.predict(&x).unwrap();
        assert_eq!(p.winner, "x");
        assert_eq!(p.raw_scores["x"], 1.0);

        let tied = FuzzyModel::train(&[("b", &x), ("a", &x)], &cfg).unwrap();
        assert_eq!(tied.predict(&x).unwrap().winner, "a");
    }

    #[test]
    fn vocabulary_is_union() {
        let cfg = FingerprintConfig::with_k(2);
        let x = preprocess("a a b c");
        let y = preprocess("b b d");
        let model = FuzzyModel::train(&[("x", &x), ("y", &y)], &cfg).unwrap();
        assert_eq!(model.vocabulary().into_iter().collect::<Vec<_>>(), ["a", "b", "d"]);
    }

    fn arb_fp() -> impl Strategy<Value = FuzzyFingerprint> {
        (1usize..12, proptest::collection::vec(0u8..16, 1..12)).prop_map(|(k, words)| {
            let k = k.max(words.len());
            let mut seen = std::collections::BTreeSet::new();
            let ranked: Vec<String> = words
                .into_iter()
                .map(|w| format!("w{w}"))
                .filter(|w| seen.insert(w.clone()))
                .collect();
            FuzzyFingerprint {
                owner: "p".into(),
                entries: ranked
                    .into_iter()
                    .enumerate()
                    .map(|(r, w)| (w, fuzzify(r, k).unwrap()))
                    .collect(),
            }
        })
    }

    proptest! {
        #[test]
        fn similarity_properties(q in arb_fp(), a in arb_fp()) {
            let s = fingerprint_similarity(&q, &a).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert_eq!(fingerprint_similarity(&q, &q).unwrap(), 1.0);
            for w in q.entries.keys() {
                if a.entries.contains_key(w) {
                    let mut smaller = a.clone();
                    smaller.entries.remove(w);
                    prop_assert!(fingerprint_similarity(&q, &smaller).unwrap() <= s);
                }
            }
        }
    }
}
