//! Accuracy and CPU-time evaluation of the three classifiers.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{stratified_folds, Corpus};
use crate::ensemble::{combine, Prediction, Source};
use crate::error::{Error, Result};
use crate::exec::{self, measure};
use crate::model::{fit_ensemble_weights, prepare, train_fuzzy, train_svm, CombinedModel, TrainConfig};

/// Tolerance, in accuracy units, of the combined ≥ svm ≥ fuzzy ordering check.
pub const ORDERING_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub accuracy: f64,
    /// `confusion[true][predicted]`, indexed like [`EvalReport::authors`].
    pub confusion: Vec<Vec<u64>>,
    /// `None` for authors without test documents.
    pub per_author_recall: BTreeMap<String, Option<f64>>,
}

impl ClassifierReport {
    fn from_confusion(authors: &[String], confusion: Vec<Vec<u64>>) -> Self {
        let n: u64 = confusion.iter().flatten().sum();
        let trace: u64 = (0..authors.len()).map(|i| confusion[i][i]).sum();
        let per_author_recall = authors
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let row: u64 = confusion[i].iter().sum();
                (a.clone(), (row > 0).then(|| confusion[i][i] as f64 / row as f64))
            })
            .collect();
        ClassifierReport {
            accuracy: if n == 0 { 0.0 } else { trace as f64 / n as f64 },
            confusion,
            per_author_recall,
        }
    }

    pub fn total(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }
}

/// How the combined classifier behaved where fuzzy and SVM agreed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsensusStats {
    pub agreements: u64,
    pub combined_followed: u64,
}

impl ConsensusStats {
    pub fn holds(&self) -> bool {
        self.agreements == self.combined_followed
    }
}

/// Whether `combined ≥ svm ≥ fuzzy` within a tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderingCheck {
    pub tolerance: f64,
    pub holds: bool,
}

impl OrderingCheck {
    pub fn evaluate(fuzzy: f64, svm: f64, combined: f64) -> Self {
        let t = ORDERING_TOLERANCE;
        OrderingCheck {
            tolerance: t,
            holds: combined + t >= svm && svm + t >= fuzzy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub authors: Vec<String>,
    pub n_test: u64,
    pub per_classifier: BTreeMap<Source, ClassifierReport>,
    pub consensus: ConsensusStats,
    pub ordering: OrderingCheck,
    pub config: TrainConfig,
}

impl EvalReport {
    fn build(
        authors: Vec<String>,
        confusions: BTreeMap<Source, Vec<Vec<u64>>>,
        consensus: ConsensusStats,
        config: TrainConfig,
    ) -> Self {
        let per_classifier: BTreeMap<Source, ClassifierReport> = confusions
            .into_iter()
            .map(|(s, c)| (s, ClassifierReport::from_confusion(&authors, c)))
            .collect();
        let n_test = per_classifier.values().next().map_or(0, ClassifierReport::total);
        let acc = |s| per_classifier[&s].accuracy;
        let ordering = OrderingCheck::evaluate(acc(Source::Fuzzy), acc(Source::Svm), acc(Source::Combined));
        EvalReport {
            authors,
            n_test,
            per_classifier,
            consensus,
            ordering,
            config,
        }
    }

    pub fn accuracy(&self, s: Source) -> f64 {
        self.per_classifier[&s].accuracy
    }

    /// Fixed-format accuracy table, percentages to one decimal.
    pub fn table(&self) -> String {
        let mut out = String::from("classifier  accuracy_pct\n");
        for s in Source::ALL {
            let _ = writeln!(out, "{:<10}  {:>12.1}", s.as_str(), 100.0 * self.accuracy(s));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub train_cpu_seconds: f64,
    pub train_wall_seconds: f64,
    pub predict_cpu_seconds_total: f64,
    pub predict_wall_seconds_total: f64,
    pub predict_per_doc_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub per_classifier: BTreeMap<Source, Timing>,
    /// Tokenizing and stemming of training and test texts, shared by all.
    pub preprocess_cpu_seconds: f64,
    pub single_threaded: bool,
    pub n_test: u64,
}

impl TimingReport {
    pub fn table(&self) -> String {
        let mut out = String::from("classifier  train_cpu_s  predict_cpu_s  predict_per_doc_ms\n");
        for s in Source::ALL {
            let t = self.per_classifier[&s];
            let _ = writeln!(
                out,
                "{:<10}  {:>11.6}  {:>13.6}  {:>18.6}",
                s.as_str(),
                t.train_cpu_seconds,
                t.predict_cpu_seconds_total,
                1e3 * t.predict_per_doc_mean
            );
        }
        out
    }

    fn accumulate(&mut self, other: &TimingReport) {
        for (s, t) in &other.per_classifier {
            let acc = self.per_classifier.entry(*s).or_default();
            acc.train_cpu_seconds += t.train_cpu_seconds;
            acc.train_wall_seconds += t.train_wall_seconds;
            acc.predict_cpu_seconds_total += t.predict_cpu_seconds_total;
            acc.predict_wall_seconds_total += t.predict_wall_seconds_total;
        }
        self.preprocess_cpu_seconds += other.preprocess_cpu_seconds;
        self.n_test += other.n_test;
        for t in self.per_classifier.values_mut() {
            t.predict_per_doc_mean = t.predict_cpu_seconds_total / self.n_test.max(1) as f64;
        }
    }
}

/// Evaluation plus timing, serialized together as `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub eval: EvalReport,
    pub timing: TimingReport,
}

fn empty_confusions(n: usize) -> BTreeMap<Source, Vec<Vec<u64>>> {
    Source::ALL.iter().map(|&s| (s, vec![vec![0; n]; n])).collect()
}

/// Train on `train`, score every document of `test` with all three
/// classifiers.
pub fn evaluate(train: &Corpus, test: &Corpus, cfg: &TrainConfig) -> Result<(EvalReport, TimingReport, CombinedModel)> {
    cfg.validate()?;
    if train.authors().len() < 2 {
        return Err(Error::NeedsTwoClasses);
    }
    if let Some(a) = test
        .authors()
        .iter()
        .find(|a| train.authors().binary_search(a).is_err())
    {
        return Err(Error::UnknownAuthor(a.clone()));
    }
    let authors = train.authors().to_vec();

    let ((train_docs, test_docs), prep_cpu, _) = measure(|| (prepare(train), prepare(test)));
    let (fuzzy, fz_cpu, fz_wall) = measure(|| train_fuzzy(&train_docs, &cfg.fingerprint));
    let fuzzy = fuzzy?;
    let (svm, svm_cpu, svm_wall) = measure(|| train_svm(&train_docs, &fuzzy, &cfg.svm));
    let svm = svm?;
    let (weights, w_cpu, w_wall) = measure(|| fit_ensemble_weights(train, cfg));
    let model = CombinedModel::assemble(fuzzy, svm, weights?);

    let (p_fuzzy, pf_cpu, pf_wall) = measure(|| exec::try_par_map(&test_docs, |d| model.fuzzy.predict(&d.text)));
    let p_fuzzy = p_fuzzy?;
    let (p_svm, ps_cpu, ps_wall) = measure(|| exec::try_par_map(&test_docs, |d| model.svm.predict(&d.text)));
    let p_svm = p_svm?;
    let pairs: Vec<(&Prediction, &Prediction)> = p_fuzzy.iter().zip(&p_svm).collect();
    let (p_comb, pc_cpu, pc_wall) = measure(|| exec::try_par_map(&pairs, |(f, s)| combine(f, s, &model.weights)));
    let p_comb = p_comb?;

    let index: BTreeMap<&str, usize> = authors.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
    let mut confusions = empty_confusions(authors.len());
    let mut consensus = ConsensusStats {
        agreements: 0,
        combined_followed: 0,
    };
    for (i, doc) in test_docs.iter().enumerate() {
        let truth = index[doc.author_id.as_str()];
        for (s, p) in [
            (Source::Fuzzy, &p_fuzzy[i]),
            (Source::Svm, &p_svm[i]),
            (Source::Combined, &p_comb[i]),
        ] {
            confusions.get_mut(&s).unwrap()[truth][index[p.winner.as_str()]] += 1;
        }
        if p_fuzzy[i].winner == p_svm[i].winner {
            consensus.agreements += 1;
            if p_comb[i].winner == p_fuzzy[i].winner {
                consensus.combined_followed += 1;
            }
        }
    }
    let report = EvalReport::build(authors, confusions, consensus, *cfg);

    let n = test_docs.len() as u64;
    let per_doc = |cpu: f64| cpu / n.max(1) as f64;
    let timing = |train_cpu, train_wall, cpu, wall| Timing {
        train_cpu_seconds: train_cpu,
        train_wall_seconds: train_wall,
        predict_cpu_seconds_total: cpu,
        predict_wall_seconds_total: wall,
        predict_per_doc_mean: per_doc(cpu),
    };
    let mut per_classifier = BTreeMap::new();
    per_classifier.insert(Source::Fuzzy, timing(fz_cpu, fz_wall, pf_cpu, pf_wall));
    per_classifier.insert(Source::Svm, timing(svm_cpu, svm_wall, ps_cpu, ps_wall));
    per_classifier.insert(
        Source::Combined,
        timing(
            fz_cpu + svm_cpu + w_cpu,
            fz_wall + svm_wall + w_wall,
            pf_cpu + ps_cpu + pc_cpu,
            pf_wall + ps_wall + pc_wall,
        ),
    );
    let timing = TimingReport {
        per_classifier,
        preprocess_cpu_seconds: prep_cpu,
        single_threaded: !exec::is_parallel(),
        n_test: n,
    };
    Ok((report, timing, model))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub pooled: EvalReport,
    pub folds: Vec<EvalReport>,
    pub timing: TimingReport,
}

/// Stratified k-fold evaluation with pooled confusion matrices.
pub fn cross_validate(corpus: &Corpus, folds: usize, seed: u64, cfg: &TrainConfig) -> Result<CrossValidation> {
    let parts = stratified_folds(corpus, folds, seed)?;
    let authors = corpus.authors().to_vec();
    let index: BTreeMap<&str, usize> = authors.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
    let mut pooled = empty_confusions(authors.len());
    let mut consensus = ConsensusStats {
        agreements: 0,
        combined_followed: 0,
    };
    let mut fold_reports = Vec::with_capacity(folds);
    let mut timing = TimingReport {
        per_classifier: BTreeMap::new(),
        preprocess_cpu_seconds: 0.0,
        single_threaded: !exec::is_parallel(),
        n_test: 0,
    };
    for (train, test) in &parts {
        let (report, t, _) = evaluate(train, test, cfg)?;
        // Fold authors may be a subset; remap onto the corpus-wide index.
        for (s, cr) in &report.per_classifier {
            let dst = pooled.get_mut(s).unwrap();
            for (i, row) in cr.confusion.iter().enumerate() {
                for (j, &c) in row.iter().enumerate() {
                    dst[index[report.authors[i].as_str()]][index[report.authors[j].as_str()]] += c;
                }
            }
        }
        consensus.agreements += report.consensus.agreements;
        consensus.combined_followed += report.consensus.combined_followed;
        timing.accumulate(&t);
        fold_reports.push(report);
    }
    Ok(CrossValidation {
        pooled: EvalReport::build(authors, pooled, consensus, *cfg),
        folds: fold_reports,
        timing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{split, Document, SplitSpec};
    use crate::synth::{synthetic_corpus, SyntheticSpec};

    fn small() -> Corpus {
        synthetic_corpus(&SyntheticSpec {
            authors: 3,
            docs_per_author: 6,
            words_per_doc: 200,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn confusion_mass_and_accuracy() {
        let c = small();
        let (train, test) = split(&c, SplitSpec::new(0.5, 1).unwrap()).unwrap();
        let (report, timing, _) = evaluate(&train, &test, &TrainConfig::default()).unwrap();
        assert_eq!(report.n_test, test.len() as u64);
        for cr in report.per_classifier.values() {
            assert_eq!(cr.total(), report.n_test);
            let trace: u64 = (0..3).map(|i| cr.confusion[i][i]).sum();
            assert_eq!(cr.accuracy, trace as f64 / report.n_test as f64);
            for (i, a) in report.authors.iter().enumerate() {
                let row: u64 = cr.confusion[i].iter().sum();
                assert_eq!(row as usize, test.by_author()[a.as_str()].len());
            }
        }
        assert!(report.consensus.holds());
        assert_eq!(timing.per_classifier.len(), 3);
        assert!(timing.per_classifier.values().all(|t| t.train_cpu_seconds >= 0.0));
    }

    #[test]
    fn single_document_test_set() {
        let c = small();
        let (train, _) = split(&c, SplitSpec::new(0.5, 1).unwrap()).unwrap();
        let one = Corpus::new(vec![train.documents()[0].clone()]).unwrap();
        let (report, _, _) = evaluate(&train, &one, &TrainConfig::default()).unwrap();
        assert_eq!(report.n_test, 1);
        for s in Source::ALL {
            assert_eq!(report.accuracy(s), 1.0);
            assert_eq!(report.per_classifier[&s].confusion[0][0], 1);
        }
    }

    #[test]
    fn unknown_author_rejected() {
        let c = small();
        let stranger = Corpus::new(vec![Document::new("zed", "zed/1", "who am I")]).unwrap();
        assert!(matches!(
            evaluate(&c, &stranger, &TrainConfig::default()),
            Err(Error::UnknownAuthor(a)) if a == "zed"
        ));
    }

    #[test]
    fn cross_validation_additivity_and_determinism() {
        let c = small();
        let cfg = TrainConfig::default();
        let cv = cross_validate(&c, 2, 5, &cfg).unwrap();
        assert_eq!(cv.pooled.n_test, c.len() as u64);
        for s in Source::ALL {
            let mut sum = vec![vec![0u64; 3]; 3];
            for f in &cv.folds {
                for (row, fold_row) in sum.iter_mut().zip(&f.per_classifier[&s].confusion) {
                    for (x, y) in row.iter_mut().zip(fold_row) {
                        *x += y;
                    }
                }
            }
            assert_eq!(sum, cv.pooled.per_classifier[&s].confusion);
        }
        let again = cross_validate(&c, 2, 5, &cfg).unwrap();
        assert_eq!(cv.pooled.to_json(), again.pooled.to_json());
    }

    #[test]
    fn ordering_check() {
        assert!(OrderingCheck::evaluate(0.58, 0.70, 0.76).holds);
        assert!(OrderingCheck::evaluate(0.80, 0.78, 0.75).holds);
        assert!(!OrderingCheck::evaluate(0.58, 0.70, 0.60).holds);
    }

    #[test]
    fn table_format() {
        let c = small();
        let (train, test) = split(&c, SplitSpec::new(0.5, 1).unwrap()).unwrap();
        let (report, timing, _) = evaluate(&train, &test, &TrainConfig::default()).unwrap();
        let t = report.table();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("fuzzy"));
        assert!(lines[3].starts_with("combined"));
        assert_eq!(timing.table().lines().count(), 4);
    }
}
