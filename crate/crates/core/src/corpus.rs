//! Author-labeled document collections and deterministic splits.
//!
//! On disk a corpus is one directory per author:
//!
//! ```text
//! <root>/<author_id>/<file>.txt
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub author_id: String,
    pub text: String,
}

impl Document {
    pub fn new(author_id: impl Into<String>, doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            doc_id: doc_id.into(),
            author_id: author_id.into(),
            text: text.into(),
        }
    }
}

/// Immutable, canonically ordered set of documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
    authors: Vec<String>,
}

impl Corpus {
    /// Build a corpus, sorting by (author_id, doc_id).
    ///
    /// Rejects duplicate doc ids and documents that are empty after trimming.
    pub fn new(mut documents: Vec<Document>) -> Result<Self> {
        documents.sort_by(|a, b| (&a.author_id, &a.doc_id).cmp(&(&b.author_id, &b.doc_id)));
        let mut ids = BTreeSet::new();
        for doc in &documents {
            if doc.text.trim().is_empty() {
                return Err(Error::EmptyDocument(doc.doc_id.clone()));
            }
            if !ids.insert(doc.doc_id.as_str()) {
                return Err(Error::DuplicateDocument(doc.doc_id.clone()));
            }
        }
        let authors: BTreeSet<&str> = documents.iter().map(|d| d.author_id.as_str()).collect();
        let authors = authors.into_iter().map(str::to_owned).collect();
        Ok(Corpus { documents, authors })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn authors(&self) -> &[String] {
        &self.authors
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Documents grouped per author, both levels in canonical order.
    pub fn by_author(&self) -> BTreeMap<&str, Vec<&Document>> {
        let mut out: BTreeMap<&str, Vec<&Document>> = BTreeMap::new();
        for doc in &self.documents {
            out.entry(doc.author_id.as_str()).or_default().push(doc);
        }
        out
    }

    fn from_refs(docs: &[&Document]) -> Result<Self> {
        Corpus::new(docs.iter().map(|&d| d.clone()).collect())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Skip files that are not valid UTF-8 instead of failing.
    pub permissive: bool,
}

/// Read a corpus laid out as one subdirectory per author.
pub fn load_corpus(root: &Path, opts: LoadOptions) -> Result<Corpus> {
    if !root.is_dir() {
        return Err(Error::NotFound(root.to_path_buf()));
    }
    let mut author_dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let path = entry.path();
        let name = entry.file_name().to_string_lossy().into_owned();
        if path.is_dir() && !name.starts_with('.') {
            author_dirs.push((name, path));
        }
    }
    if author_dirs.is_empty() {
        return Err(Error::EmptyCorpus(root.to_path_buf()));
    }
    author_dirs.sort();

    let mut documents = Vec::new();
    for (author, dir) in author_dirs {
        let mut files = Vec::new();
        for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if entry.path().is_file() && !name.starts_with('.') {
                files.push((name, entry.path()));
            }
        }
        files.sort();
        let mut loaded = 0usize;
        for (name, path) in files {
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let text = match String::from_utf8(bytes) {
                Ok(t) => t,
                Err(_) if opts.permissive => continue,
                Err(_) => return Err(Error::EncodingError(path)),
            };
            documents.push(Document::new(author.clone(), format!("{author}/{name}"), text));
            loaded += 1;
        }
        if loaded == 0 {
            return Err(Error::EmptyAuthor(author));
        }
    }
    Corpus::new(documents)
}

/// Fraction of each author's documents assigned to the first side of a split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "train fraction must lie strictly between 0 and 1, got {train_fraction}"
            )));
        }
        Ok(SplitSpec { train_fraction, seed })
    }

    pub fn train_fraction(&self) -> f64 {
        self.train_fraction
    }
}

/// Number of documents an author with `n` documents contributes to train.
pub(crate) fn train_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).round() as usize).clamp(1, n - 1)
}

/// Stratified, seeded split. Each author keeps at least one document per side.
pub fn split(corpus: &Corpus, spec: SplitSpec) -> Result<(Corpus, Corpus)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (author, mut docs) in corpus.by_author() {
        if docs.len() < 2 {
            return Err(Error::InsufficientDocuments(author.to_owned()));
        }
        docs.shuffle(&mut rng);
        let n_train = train_count(docs.len(), spec.train_fraction);
        train.extend_from_slice(&docs[..n_train]);
        test.extend_from_slice(&docs[n_train..]);
    }
    Ok((Corpus::from_refs(&train)?, Corpus::from_refs(&test)?))
}

/// Stratified k-fold partition: `folds` disjoint test sets covering the corpus.
pub fn stratified_folds(corpus: &Corpus, folds: usize, seed: u64) -> Result<Vec<(Corpus, Corpus)>> {
    if folds < 2 {
        return Err(Error::InvalidConfig(format!("folds must be at least 2, got {folds}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment: Vec<Vec<&Document>> = vec![Vec::new(); folds];
    for (author, mut docs) in corpus.by_author() {
        if docs.len() < folds {
            return Err(Error::InsufficientDocuments(author.to_owned()));
        }
        docs.shuffle(&mut rng);
        for (i, doc) in docs.into_iter().enumerate() {
            assignment[i % folds].push(doc);
        }
    }
    (0..folds)
        .map(|f| {
            let train: Vec<&Document> = assignment
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, docs)| docs.iter().copied())
                .collect();
            Ok((Corpus::from_refs(&train)?, Corpus::from_refs(&assignment[f])?))
        })
        .collect()
}
