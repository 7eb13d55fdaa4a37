//! The `authid` command line.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::corpus::{load_corpus, split, Corpus, LoadOptions, SplitSpec};
use crate::ensemble::Source;
use crate::error::{Error, Result};
use crate::eval::{cross_validate, evaluate, ReportFile};
use crate::exec;
use crate::features::{csv_row, extract, CSV_HEADER};
use crate::fuzzy::FingerprintConfig;
use crate::model::{load_model, prepare, save_model, CombinedModel, TrainConfig};
use crate::svm::SvmOptions;

#[derive(Debug, Parser)]
#[command(
    name = "authid",
    version,
    about = "Identify the author of a text from a closed set of candidates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train all classifiers on a corpus and write a model file.
    Train {
        corpus_dir: PathBuf,
        model_out: PathBuf,
        #[command(flatten)]
        opts: TrainArgs,
    },
    /// Print the most likely author of a text.
    Predict {
        model: PathBuf,
        text: PathBuf,
        #[arg(long, default_value = "combined", value_parser = parse_source)]
        classifier: Source,
        /// Also print every author's score.
        #[arg(long)]
        verbose: bool,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Split a corpus, train, and report accuracy and CPU time.
    Evaluate {
        corpus_dir: PathBuf,
        #[command(flatten)]
        opts: TrainArgs,
        #[command(flatten)]
        split: SplitArgs,
        /// Directory for report.txt and report.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Measure with parallelism disabled.
        #[arg(long)]
        single_thread_timing: bool,
    },
    /// Stratified k-fold evaluation with pooled confusion matrices.
    CrossValidate {
        corpus_dir: PathBuf,
        #[command(flatten)]
        opts: TrainArgs,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// CPU-time comparison of the three classifiers, single-threaded.
    Bench {
        corpus_dir: PathBuf,
        #[command(flatten)]
        opts: TrainArgs,
        #[command(flatten)]
        split: SplitArgs,
        /// Optional path for the timing report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write per-document stylometric features as CSV.
    ExportFeatures {
        corpus_dir: PathBuf,
        csv_out: PathBuf,
        #[arg(long)]
        permissive: bool,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
}

#[derive(Debug, Args, Clone)]
pub struct TrainArgs {
    /// Fingerprint size (top-k words per author).
    #[arg(long, default_value_t = 100)]
    pub k: usize,
    /// Space-Saving counters per author; defaults to 10 * k.
    #[arg(long)]
    pub sketch_capacity: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub svm_c: f64,
    /// RBF width; defaults to 1 / feature dimensions.
    #[arg(long)]
    pub svm_gamma: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub svm_tol: f64,
    #[arg(long, default_value_t = 200)]
    pub svm_max_passes: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads for per-document work; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Skip files that are not valid UTF-8.
    #[arg(long)]
    pub permissive: bool,
}

#[derive(Debug, Args, Clone)]
pub struct SplitArgs {
    #[arg(long, default_value_t = 0.7)]
    pub train_fraction: f64,
}

fn parse_source(s: &str) -> std::result::Result<Source, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl TrainArgs {
    pub fn config(&self) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            fingerprint: FingerprintConfig {
                k: self.k,
                sketch_capacity_m: self.sketch_capacity.unwrap_or(10 * self.k),
            },
            svm: SvmOptions {
                c: self.svm_c,
                gamma: self.svm_gamma,
                tol: self.svm_tol,
                max_passes: self.svm_max_passes,
            },
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn load(&self, dir: &Path) -> Result<Corpus> {
        load_corpus(
            dir,
            LoadOptions {
                permissive: self.permissive,
            },
        )
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

pub fn cmd_train(corpus_dir: &Path, model_out: &Path, opts: &TrainArgs) -> Result<()> {
    let cfg = opts.config()?;
    let corpus = opts.load(corpus_dir)?;
    let model = exec::with_threads(opts.threads, || CombinedModel::train(&corpus, &cfg))?;
    save_model(&model, model_out)?;
    let sv = model.svm.machines.vectors.len();
    println!(
        "fuzzy: {} fingerprints, k = {}",
        model.fuzzy.fingerprints.len(),
        model.fuzzy.config.k
    );
    println!(
        "svm: {} machines, {} support vectors, {} dims",
        model.svm.machines.machines.len(),
        sv,
        model.svm.layout.dims()
    );
    let acc = |a: Option<f64>| a.map_or("n/a".to_owned(), |x| format!("{x:.3}"));
    println!(
        "combined: w_fuzzy = {:.4}, w_svm = {:.4} (validation accuracy fuzzy {}, svm {}){}",
        model.weights.w_fuzzy,
        model.weights.w_svm,
        acc(model.weights.acc_fuzzy),
        acc(model.weights.acc_svm),
        if model.weights.degenerate {
            ", fallback weights"
        } else {
            ""
        }
    );
    Ok(())
}

pub fn cmd_predict(model_path: &Path, text_path: &Path, classifier: Source, verbose: bool) -> Result<String> {
    let model = load_model(model_path)?;
    if !text_path.exists() {
        return Err(Error::NotFound(text_path.to_path_buf()));
    }
    let bytes = fs::read(text_path).map_err(|e| Error::io(text_path, e))?;
    let text = String::from_utf8(bytes).map_err(|_| Error::EncodingError(text_path.to_path_buf()))?;
    let p = model.predict(&text, classifier)?;
    let mut out = format!("{}\n", p.winner);
    if verbose {
        for (author, score, raw) in p.ranked() {
            out.push_str(&format!("{author}\t{score:.6}\t{raw:.6}\n"));
        }
    }
    Ok(out)
}

pub fn cmd_evaluate(
    corpus_dir: &Path,
    opts: &TrainArgs,
    split_args: &SplitArgs,
    out: &Path,
    single_thread: bool,
) -> Result<ReportFile> {
    let cfg = opts.config()?;
    let spec = SplitSpec::new(split_args.train_fraction, opts.seed)?;
    let corpus = opts.load(corpus_dir)?;
    let (train, test) = split(&corpus, spec)?;
    let threads = if single_thread { 1 } else { opts.threads };
    let (eval, timing, _) = exec::with_threads(threads, || evaluate(&train, &test, &cfg))?;
    let file = ReportFile { eval, timing };
    write(&out.join("report.txt"), &file.eval.table())?;
    write(&out.join("report.json"), &to_json(&file))?;
    print!("{}", file.eval.table());
    eprintln!(
        "ordering combined >= svm >= fuzzy (tolerance {:.0} pp): {}",
        100.0 * file.eval.ordering.tolerance,
        if file.eval.ordering.holds {
            "holds"
        } else {
            "does not hold"
        }
    );
    Ok(file)
}

pub fn cmd_cross_validate(corpus_dir: &Path, opts: &TrainArgs, folds: usize, out: &Path) -> Result<()> {
    let cfg = opts.config()?;
    let corpus = opts.load(corpus_dir)?;
    let cv = exec::with_threads(opts.threads, || cross_validate(&corpus, folds, opts.seed, &cfg))?;
    write(&out.join("report.txt"), &cv.pooled.table())?;
    write(&out.join("report.json"), &to_json(&cv))?;
    print!("{}", cv.pooled.table());
    Ok(())
}

pub fn cmd_bench(corpus_dir: &Path, opts: &TrainArgs, split_args: &SplitArgs, out: Option<&Path>) -> Result<String> {
    let cfg = opts.config()?;
    let spec = SplitSpec::new(split_args.train_fraction, opts.seed)?;
    let corpus = opts.load(corpus_dir)?;
    let (train, test) = split(&corpus, spec)?;
    let (_, timing, _) = exec::with_threads(1, || evaluate(&train, &test, &cfg))?;
    if let Some(path) = out {
        write(path, &to_json(&timing))?;
    }
    Ok(timing.table())
}

pub fn cmd_export_features(corpus_dir: &Path, csv_out: &Path, permissive: bool) -> Result<usize> {
    let corpus = load_corpus(corpus_dir, LoadOptions { permissive })?;
    let docs = prepare(&corpus);
    let rows = exec::try_par_map(&docs, |d| csv_row(&d.doc_id, &d.author_id, &extract(&d.text, 0)))?;
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(row);
        csv.push('\n');
    }
    write(csv_out, &csv)?;
    Ok(rows.len())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            corpus_dir,
            model_out,
            opts,
        } => cmd_train(&corpus_dir, &model_out, &opts),
        Command::Predict {
            model,
            text,
            classifier,
            verbose,
            threads,
        } => {
            let out = exec::with_threads(threads, || cmd_predict(&model, &text, classifier, verbose))?;
            print!("{out}");
            Ok(())
        }
        Command::Evaluate {
            corpus_dir,
            opts,
            split,
            out,
            single_thread_timing,
        } => cmd_evaluate(&corpus_dir, &opts, &split, &out, single_thread_timing).map(drop),
        Command::CrossValidate {
            corpus_dir,
            opts,
            folds,
            out,
        } => cmd_cross_validate(&corpus_dir, &opts, folds, &out),
        Command::Bench {
            corpus_dir,
            opts,
            split,
            out,
        } => {
            print!("{}", cmd_bench(&corpus_dir, &opts, &split, out.as_deref())?);
            Ok(())
        }
        Command::ExportFeatures {
            corpus_dir,
            csv_out,
            permissive,
            threads,
        } => {
            let n = exec::with_threads(threads, || cmd_export_features(&corpus_dir, &csv_out, permissive))?;
            eprintln!("wrote {n} rows to {}", csv_out.display());
            Ok(())
        }
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            1
        }
    }
}
