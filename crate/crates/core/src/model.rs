//! The trained three-classifier bundle and its on-disk format.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{split, Corpus, SplitSpec};
use crate::ensemble::{combine, fit_weights, EnsembleWeights, Prediction, Source};
use crate::error::{Error, Result};
use crate::exec;
use crate::features::{build_layout, extract, vectorize, FeatureLayout, Scaler};
use crate::fuzzy::{FingerprintConfig, FuzzyFingerprint, FuzzyModel};
use crate::preprocess::{preprocess, ProcessedText};
use crate::svm::{MultiSvmModel, OneVsRest, SvmOptions, SvmParams};

pub const FORMAT_VERSION: u32 = 1;

/// Fraction of the training split kept for fitting (the rest validates the
/// ensemble weights).
pub const VALIDATION_TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub fingerprint: FingerprintConfig,
    pub svm: SvmOptions,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            fingerprint: FingerprintConfig::default(),
            svm: SvmOptions::default(),
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.fingerprint.validate()?;
        self.svm.resolve(1).validate()?;
        if let Some(g) = self.svm.gamma {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::InvalidConfig(format!("gamma must be positive, got {g}")));
            }
        }
        Ok(())
    }
}

/// A document after preprocessing, with its identifiers.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub doc_id: String,
    pub author_id: String,
    pub text: ProcessedText,
}

pub fn prepare(corpus: &Corpus) -> Vec<Prepared> {
    exec::par_map(corpus.documents(), |d| Prepared {
        doc_id: d.doc_id.clone(),
        author_id: d.author_id.clone(),
        text: preprocess(&d.text),
    })
}

pub fn train_fuzzy(docs: &[Prepared], cfg: &FingerprintConfig) -> Result<FuzzyModel> {
    let samples: Vec<(&str, &ProcessedText)> = docs.iter().map(|p| (p.author_id.as_str(), &p.text)).collect();
    FuzzyModel::train(&samples, cfg)
}

/// SVM over the fingerprint vocabulary of `fuzzy`.
pub fn train_svm(docs: &[Prepared], fuzzy: &FuzzyModel, opts: &SvmOptions) -> Result<MultiSvmModel> {
    let layout = build_layout(fuzzy.vocabulary())?;
    let vectors = exec::par_map(docs, |p| vectorize(&extract(&p.text, 0), &layout));
    let samples: Vec<(&str, &str, _)> = docs
        .iter()
        .zip(vectors)
        .map(|(p, v)| (p.doc_id.as_str(), p.author_id.as_str(), v))
        .collect();
    MultiSvmModel::train(&samples, layout, opts)
}

fn accuracy<F>(docs: &[Prepared], predict: F) -> Result<f64>
where
    F: Fn(&ProcessedText) -> Result<Prediction> + Sync + Send,
{
    let hits = exec::try_par_map(docs, |p| predict(&p.text).map(|pr| pr.winner == p.author_id))?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / docs.len().max(1) as f64)
}

/// Ensemble weights from a stratified validation slice of `train`.
///
/// Falls back to flagged equal weights when the slice cannot be carved
/// (an author with a single document) or both classifiers score zero.
pub fn fit_ensemble_weights(train: &Corpus, cfg: &TrainConfig) -> Result<EnsembleWeights> {
    let spec = SplitSpec::new(VALIDATION_TRAIN_FRACTION, cfg.seed)?;
    let (fit, val) = match split(train, spec) {
        Ok(parts) => parts,
        Err(Error::InsufficientDocuments(_)) => return Ok(EnsembleWeights::fallback(None, None)),
        Err(e) => return Err(e),
    };
    let fit = prepare(&fit);
    let val = prepare(&val);
    let fuzzy = train_fuzzy(&fit, &cfg.fingerprint)?;
    let svm = train_svm(&fit, &fuzzy, &cfg.svm)?;
    let acc_fuzzy = accuracy(&val, |t| fuzzy.predict(t))?;
    let acc_svm = accuracy(&val, |t| svm.predict(t))?;
    match fit_weights(acc_fuzzy, acc_svm) {
        Ok(w) => Ok(w),
        Err(Error::DegenerateValidation) => Ok(EnsembleWeights::fallback(Some(acc_fuzzy), Some(acc_svm))),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombinedModel {
    pub authors: Vec<String>,
    pub fuzzy: FuzzyModel,
    pub svm: MultiSvmModel,
    pub weights: EnsembleWeights,
}

impl CombinedModel {
    /// Fit ensemble weights on a validation slice, then train both
    /// classifiers on the full training corpus.
    pub fn train(train: &Corpus, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        if train.authors().len() < 2 {
            return Err(Error::NeedsTwoClasses);
        }
        let weights = fit_ensemble_weights(train, cfg)?;
        let docs = prepare(train);
        let fuzzy = train_fuzzy(&docs, &cfg.fingerprint)?;
        let svm = train_svm(&docs, &fuzzy, &cfg.svm)?;
        Ok(CombinedModel::assemble(fuzzy, svm, weights))
    }

    pub fn assemble(fuzzy: FuzzyModel, svm: MultiSvmModel, weights: EnsembleWeights) -> Self {
        CombinedModel {
            authors: svm.authors().to_vec(),
            fuzzy,
            svm,
            weights,
        }
    }

    pub fn predict_processed(&self, pt: &ProcessedText, source: Source) -> Result<Prediction> {
        match source {
            Source::Fuzzy => self.fuzzy.predict(pt),
            Source::Svm => self.svm.predict(pt),
            Source::Combined => combine(&self.fuzzy.predict(pt)?, &self.svm.predict(pt)?, &self.weights),
        }
    }

    pub fn predict(&self, text: &str, source: Source) -> Result<Prediction> {
        self.predict_processed(&preprocess(text), source)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile::from_model(self);
        serde_json::to_string_pretty(&file).map_err(|e| Error::ParseError(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(s).map_err(|e| Error::ParseError(e.to_string()))?;
        match value.get("format_version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            Some(v) => {
                return Err(Error::IncompatibleModel(format!(
                    "format_version {v}, this build reads {FORMAT_VERSION}"
                )))
            }
            None => return Err(Error::ParseError("missing format_version".into())),
        }
        let file: ModelFile = serde_json::from_value(value).map_err(|e| Error::ParseError(e.to_string()))?;
        file.into_model()
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    authors: Vec<String>,
    scaler: Scaler,
    fuzzy: FuzzySection,
    svm: SvmSection,
    ensemble_weights: EnsembleWeights,
}

#[derive(Serialize, Deserialize)]
struct FuzzySection {
    config: FingerprintConfig,
    fingerprints: Vec<FuzzyFingerprint>,
}

#[derive(Serialize, Deserialize)]
struct SvmSection {
    params: SvmParams,
    layout: FeatureLayout,
    /// Support-vector block (scaled training vectors).
    vectors: Vec<crate::features::FeatureVector>,
    machines: Vec<crate::svm::MachineRecord>,
}

impl ModelFile {
    fn from_model(m: &CombinedModel) -> Self {
        ModelFile {
            format_version: FORMAT_VERSION,
            authors: m.authors.clone(),
            scaler: m.svm.scaler.clone(),
            fuzzy: FuzzySection {
                config: m.fuzzy.config,
                fingerprints: m.fuzzy.fingerprints.values().cloned().collect(),
            },
            svm: SvmSection {
                params: m.svm.machines.params,
                layout: m.svm.layout.clone(),
                vectors: m.svm.machines.vectors.clone(),
                machines: m.svm.machines.machines.clone(),
            },
            ensemble_weights: m.weights,
        }
    }

    fn into_model(self) -> Result<CombinedModel> {
        let dims = self.svm.layout.dims();
        if self.scaler.dims() != dims || self.scaler.stddevs.len() != dims {
            return Err(Error::IncompatibleModel("scaler does not match layout".into()));
        }
        if self.svm.vectors.iter().any(|v| v.dims() != dims) {
            return Err(Error::IncompatibleModel("support vector does not match layout".into()));
        }
        for m in &self.svm.machines {
            if m.support.len() != m.coefs.len() || m.support.iter().any(|&i| i >= self.svm.vectors.len()) {
                return Err(Error::ParseError(format!(
                    "machine `{}` references missing vectors",
                    m.class
                )));
            }
        }
        let classes: Vec<String> = self.svm.machines.iter().map(|m| m.class.clone()).collect();
        let fp_authors: Vec<String> = self.fuzzy.fingerprints.iter().map(|f| f.owner.clone()).collect();
        if classes != self.authors || fp_authors != self.authors {
            return Err(Error::IncompatibleModel(
                "author lists disagree between sections".into(),
            ));
        }
        let fingerprints: BTreeMap<String, FuzzyFingerprint> = self
            .fuzzy
            .fingerprints
            .into_iter()
            .map(|f| (f.owner.clone(), f))
            .collect();
        Ok(CombinedModel {
            authors: self.authors,
            fuzzy: FuzzyModel {
                config: self.fuzzy.config,
                fingerprints,
            },
            svm: MultiSvmModel {
                layout: self.svm.layout,
                scaler: self.scaler,
                machines: OneVsRest {
                    classes,
                    params: self.svm.params,
                    vectors: self.svm.vectors,
                    machines: self.svm.machines,
                },
            },
            weights: self.ensemble_weights,
        })
    }
}

pub fn save_model(model: &CombinedModel, path: &Path) -> Result<()> {
    let mut json = model.to_json()?;
    json.push('\n');
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<CombinedModel> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    CombinedModel::from_json(&s)
}
