//! Write a synthetic corpus to disk: `synth_corpus <dir> [authors] [docs_per_author] [seed]`.

use std::path::PathBuf;

use authid::synth::{synthetic_corpus, write_corpus, SyntheticSpec};

fn main() -> authid::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(dir) = args.first().map(PathBuf::from) else {
        eprintln!("usage: synth_corpus <dir> [authors] [docs_per_author] [seed]");
        std::process::exit(2);
    };
    let arg = |i: usize| args.get(i).map(|s| s.parse().expect("numeric argument"));
    let mut spec = SyntheticSpec::default();
    spec.authors = arg(1).unwrap_or(spec.authors as u64) as usize;
    spec.docs_per_author = arg(2).unwrap_or(spec.docs_per_author as u64) as usize;
    spec.seed = arg(3).unwrap_or(spec.seed);
    let corpus = synthetic_corpus(&spec)?;
    write_corpus(&corpus, &dir)?;
    println!(
        "wrote {} documents by {} authors to {}",
        corpus.len(),
        corpus.authors().len(),
        dir.display()
    );
    Ok(())
}
