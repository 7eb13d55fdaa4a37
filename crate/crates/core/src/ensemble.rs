//! Ranked author predictions and the accuracy-weighted combination of the
//! fuzzy and SVM classifiers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Fuzzy,
    Svm,
    Combined,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::Fuzzy, Source::Svm, Source::Combined];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Fuzzy => "fuzzy",
            Source::Svm => "svm",
            Source::Combined => "combined",
        }
    }
}

impl std::fmt::Display for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fuzzy" => Ok(Source::Fuzzy),
            "svm" => Ok(Source::Svm),
            "combined" => Ok(Source::Combined),
            other => Err(Error::InvalidConfig(format!("unknown classifier `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub winner: String,
    /// Scores min-max normalized to [0, 1] across authors.
    pub scores: BTreeMap<String, f64>,
    pub raw_scores: BTreeMap<String, f64>,
    pub source: Source,
}

/// Highest score; ties go to the lexicographically smallest key.
fn argmax(scores: &BTreeMap<String, f64>) -> &str {
    let mut best: Option<(&str, f64)> = None;
    for (a, &s) in scores {
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((a, s));
        }
    }
    best.map_or("", |(a, _)| a)
}

impl Prediction {
    /// Normalize raw per-author scores and pick the winner.
    ///
    /// When all raw scores are equal every normalized score is 1.0.
    pub fn from_raw(raw: BTreeMap<String, f64>, source: Source) -> Self {
        let lo = raw.values().copied().fold(f64::INFINITY, f64::min);
        let hi = raw.values().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        let scores: BTreeMap<String, f64> = raw
            .iter()
            .map(|(a, &r)| {
                let s = if span > 0.0 {
                    ((r - lo) / span).clamp(0.0, 1.0)
                } else {
                    1.0
                };
                (a.clone(), s)
            })
            .collect();
        Prediction {
            winner: argmax(&scores).to_owned(),
            scores,
            raw_scores: raw,
            source,
        }
    }

    /// Authors ordered by score, best first.
    pub fn ranked(&self) -> Vec<(&str, f64, f64)> {
        let mut v: Vec<(&str, f64, f64)> = self
            .scores
            .iter()
            .map(|(a, &s)| (a.as_str(), s, self.raw_scores[a]))
            .collect();
        v.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(y.0)));
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleWeights {
    pub w_fuzzy: f64,
    pub w_svm: f64,
    /// Validation accuracies the weights were derived from.
    pub acc_fuzzy: Option<f64>,
    pub acc_svm: Option<f64>,
    /// Set when the weights are the 0.5/0.5 fallback rather than fitted.
    pub degenerate: bool,
}

impl EnsembleWeights {
    pub fn new(w_fuzzy: f64, w_svm: f64) -> Result<Self> {
        if !(w_fuzzy >= 0.0 && w_svm >= 0.0) || ((w_fuzzy + w_svm) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "weights must be non-negative and sum to 1, got ({w_fuzzy}, {w_svm})"
            )));
        }
        Ok(EnsembleWeights {
            w_fuzzy,
            w_svm,
            acc_fuzzy: None,
            acc_svm: None,
            degenerate: false,
        })
    }

    /// Equal weighting, flagged as a fallback.
    pub fn fallback(acc_fuzzy: Option<f64>, acc_svm: Option<f64>) -> Self {
        EnsembleWeights {
            w_fuzzy: 0.5,
            w_svm: 0.5,
            acc_fuzzy,
            acc_svm,
            degenerate: true,
        }
    }
}

/// Weights proportional to each classifier's validation accuracy.
pub fn fit_weights(acc_fuzzy: f64, acc_svm: f64) -> Result<EnsembleWeights> {
    for acc in [acc_fuzzy, acc_svm] {
        if !(0.0..=1.0).contains(&acc) {
            return Err(Error::InvalidInput(format!("accuracy {acc} outside [0, 1]")));
        }
    }
    let total = acc_fuzzy + acc_svm;
    if total == 0.0 {
        return Err(Error::DegenerateValidation);
    }
    let w_fuzzy = acc_fuzzy / total;
    Ok(EnsembleWeights {
        w_fuzzy,
        w_svm: 1.0 - w_fuzzy,
        acc_fuzzy: Some(acc_fuzzy),
        acc_svm: Some(acc_svm),
        degenerate: false,
    })
}

/// Weighted sum of the two classifiers' normalized scores.
pub fn combine(fuzzy: &Prediction, svm: &Prediction, w: &EnsembleWeights) -> Result<Prediction> {
    if !fuzzy.scores.keys().eq(svm.scores.keys()) {
        return Err(Error::IncompatiblePredictions);
    }
    let scores: BTreeMap<String, f64> = fuzzy
        .scores
        .iter()
        .zip(svm.scores.values())
        .map(|((a, f), s)| (a.clone(), w.w_fuzzy * f + w.w_svm * s))
        .collect();
    // A shared input winner holds 1.0 in both maps, so it also wins here.
    let winner = argmax(&scores).to_owned();
    Ok(Prediction {
        winner,
        raw_scores: scores.clone(),
        scores,
        source: Source::Combined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pred(pairs: &[(&str, f64)], source: Source) -> Prediction {
        Prediction::from_raw(pairs.iter().map(|(a, s)| (a.to_string(), *s)).collect(), source)
    }

    #[test]
    fn from_raw_normalizes() {
        let p = pred(&[("a", -2.0), ("b", 0.0), ("c", 2.0)], Source::Svm);
        assert_eq!(p.winner, "c");
        assert_eq!(p.scores["a"], 0.0);
        assert_eq!(p.scores["b"], 0.5);
        assert_eq!(p.scores["c"], 1.0);
        let tie = pred(&[("b", 0.3), ("a", 0.3)], Source::Fuzzy);
        assert_eq!(tie.winner, "a");
        assert_eq!(tie.scores["b"], 1.0);
    }

    #[test]
    fn weights_examples() {
        let w = fit_weights(0.58, 0.70).unwrap();
        assert!((w.w_fuzzy - 0.58 / 1.28).abs() < 1e-12);
        assert!((w.w_svm - 0.70 / 1.28).abs() < 1e-12);
        assert!((w.w_fuzzy - 0.453125).abs() < 1e-12);
        let eq = fit_weights(0.6, 0.6).unwrap();
        assert_eq!((eq.w_fuzzy, eq.w_svm), (0.5, 0.5));
        let edge = fit_weights(0.0, 1.0).unwrap();
        assert_eq!((edge.w_fuzzy, edge.w_svm), (0.0, 1.0));
        assert!(matches!(fit_weights(0.0, 0.0), Err(Error::DegenerateValidation)));
        assert!(fit_weights(1.5, 0.0).is_err());
    }

    #[test]
    fn combine_examples() {
        let f = pred(&[("a", 1.0), ("b", 0.0)], Source::Fuzzy);
        let s = pred(&[("a", 0.0), ("b", 1.0)], Source::Svm);
        let c = combine(&f, &s, &EnsembleWeights::new(0.4, 0.6).unwrap()).unwrap();
        assert_eq!(c.winner, "b");
        assert!((c.scores["b"] - 0.6).abs() < 1e-15);
        assert_eq!(c.source, Source::Combined);
        let c = combine(&f, &s, &EnsembleWeights::new(1.0, 0.0).unwrap()).unwrap();
        assert_eq!(c.winner, "a");
        let c = combine(&f, &s, &EnsembleWeights::new(0.0, 1.0).unwrap()).unwrap();
        assert_eq!(c.winner, "b");
    }

    #[test]
    fn combine_rejects_mismatched_keys() {
        let f = pred(&[("a", 1.0), ("b", 0.0)], Source::Fuzzy);
        let s = pred(&[("a", 1.0), ("c", 0.0)], Source::Svm);
        assert!(matches!(
            combine(&f, &s, &EnsembleWeights::fallback(None, None)),
            Err(Error::IncompatiblePredictions)
        ));
    }

    fn arb_scores() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-5.0f64..5.0, 4)
    }

    fn named(v: &[f64], source: Source) -> Prediction {
        Prediction::from_raw(
            v.iter().enumerate().map(|(i, s)| (format!("a{i}"), *s)).collect(),
            source,
        )
    }

    proptest! {
        #[test]
        fn consensus_and_shift_invariance(f in arb_scores(), s in arb_scores(), w in 0.0f64..=1.0, shift in -3.0f64..3.0) {
            let pf = named(&f, Source::Fuzzy);
            let ps = named(&s, Source::Svm);
            let weights = EnsembleWeights::new(w, 1.0 - w).unwrap();
            let c = combine(&pf, &ps, &weights).unwrap();
            if pf.winner == ps.winner {
                prop_assert_eq!(&c.winner, &pf.winner);
            }
            // A uniform shift of fuzzy's raw scores leaves normalized scores unchanged.
            let shifted: Vec<f64> = f.iter().map(|x| x + shift).collect();
            let c2 = combine(&named(&shifted, Source::Fuzzy), &ps, &weights).unwrap();
            prop_assert_eq!(c.winner, c2.winner);
        }

        #[test]
        fn scale_invariance_of_winner(v in arb_scores(), scale in 0.01f64..100.0) {
            let p = named(&v, Source::Fuzzy);
            let scaled: Vec<f64> = v.iter().map(|x| x * scale).collect();
            prop_assert_eq!(p.winner, named(&scaled, Source::Fuzzy).winner);
        }
    }
}
