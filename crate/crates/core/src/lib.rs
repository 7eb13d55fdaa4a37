//! Closed-set authorship attribution.
//!
//! The pipeline tokenizes and stems a text, measures stylometric features,
//! and scores it against a fixed set of candidate authors with three
//! classifiers:
//!
//! * fuzzy fingerprints over top-k word ranks ([`fuzzy`]), with the ranks
//!   gathered by a Space-Saving sketch ([`topk`]);
//! * a one-vs-rest RBF support vector machine ([`svm`]) over the
//!   stylometric feature vector ([`features`]);
//! * an accuracy-weighted combination of the two ([`ensemble`]).
//!
//! [`eval`] reproduces the accuracy table and CPU-time comparison for a
//! corpus, and [`cli`] wires everything into the `authid` binary.

pub mod cli;
pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod exec;
pub mod features;
pub mod fuzzy;
pub mod model;
pub mod preprocess;
pub mod svm;
pub mod synth;
pub mod topk;

pub use corpus::{load_corpus, split, Corpus, Document, LoadOptions, SplitSpec};
pub use ensemble::{combine, fit_weights, EnsembleWeights, Prediction, Source};
pub use error::{Error, Result};
pub use eval::{cross_validate, evaluate, EvalReport, TimingReport};
pub use features::{extract, FeatureLayout, FeatureVector, Scaler, StyleFeatures};
pub use fuzzy::{FingerprintConfig, FuzzyFingerprint, FuzzyModel};
pub use model::{load_model, save_model, CombinedModel, TrainConfig};
pub use preprocess::{preprocess, stem, tokenize, ProcessedText, Token, TokenKind};
pub use svm::{MultiSvmModel, SvmOptions, SvmParams};
pub use topk::{TopKEntry, TopKSketch};
