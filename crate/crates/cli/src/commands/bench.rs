use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use docembed::model::EncoderModel;
use docembed::tensor::Mode;
use docembed::text::read_corpus;

use crate::bundle::Bundle;
use crate::CliError;

#[derive(Clone, Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Comma-separated batch sizes.
    #[arg(long, value_delimiter = ',', default_value = "1,32")]
    pub batch_sizes: Vec<usize>,
    /// Use at most this many documents.
    #[arg(long)]
    pub max_docs: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub batch_size: usize,
    pub docs: usize,
    pub tokens: usize,
    pub seconds: f64,
}

impl BenchRow {
    pub fn tokens_per_sec(&self) -> f64 {
        self.tokens as f64 / self.seconds.max(1e-12)
    }
}

impl fmt::Display for BenchRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{:.4}\t{:.0}",
            self.batch_size,
            self.docs,
            self.tokens,
            self.seconds,
            self.tokens_per_sec()
        )
    }
}

pub const HEADER: &str = "batch_size\tdocs\ttokens\tseconds\ttokens_per_sec";

/// Times eval-mode forward passes over `docs`, `batch_size` documents per
/// pass, one pass at a time. The first batch is run once beforehand as a
/// warm-up and not timed. Tokenization is not part of the measurement.
pub fn measure(model: &EncoderModel<f32>, docs: &[&[u32]], batch_size: usize) -> Result<BenchRow, CliError> {
    let batch_size = batch_size.max(1);
    if let Some(first) = docs.chunks(batch_size).next() {
        model.forward_sequences(first, Mode::Eval)?;
    }
    let started = Instant::now();
    for chunk in docs.chunks(batch_size) {
        model.forward_sequences(chunk, Mode::Eval)?;
    }
    Ok(BenchRow {
        batch_size,
        docs: docs.len(),
        tokens: docs.iter().map(|d| d.len()).sum(),
        seconds: started.elapsed().as_secs_f64(),
    })
}

pub fn run(args: &BenchArgs) -> Result<Vec<BenchRow>, CliError> {
    let bundle = Bundle::load(&args.checkpoint)?;
    let mut raw = read_corpus(&args.corpus, false)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.corpus.display())))?;
    if let Some(n) = args.max_docs {
        raw.truncate(n);
    }
    if raw.is_empty() {
        return Err(CliError::Data(format!("{}: empty corpus", args.corpus.display())));
    }
    let docs: Vec<Vec<u32>> = raw.iter().map(|d| bundle.encode_text(&d.text)).collect();
    let refs: Vec<&[u32]> = docs.iter().map(Vec::as_slice).collect();
    args.batch_sizes
        .iter()
        .map(|&b| measure(&bundle.model, &refs, b))
        .collect()
}
