use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use docembed::text::write_keyed_vectors;

use crate::bundle::Bundle;
use crate::CliError;

#[derive(Clone, Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// One document per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Embeddings in word2vec text format keyed by 0-based line number.
    #[arg(long)]
    pub output: PathBuf,
    /// Documents per forward pass.
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
}

/// Embeds every line of `input`; returns the number of documents written.
pub fn run(args: &EmbedArgs) -> Result<usize, CliError> {
    let bundle = Bundle::load(&args.checkpoint)?;
    let text = fs::read_to_string(&args.input)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.input.display())))?;
    let docs: Vec<Vec<u32>> = text.lines().map(|l| bundle.encode_text(l)).collect();
    let mut w = BufWriter::new(File::create(&args.output)?);
    if !docs.is_empty() {
        let refs: Vec<&[u32]> = docs.iter().map(Vec::as_slice).collect();
        let vectors = bundle.model.embed_many(&refs, args.batch_size)?;
        let records: Vec<(String, Vec<f32>)> = vectors
            .into_iter()
            .enumerate()
            .map(|(i, v)| (i.to_string(), v))
            .collect();
        write_keyed_vectors(&mut w, bundle.model.dim(), &records)?;
    }
    w.flush()?;
    Ok(docs.len())
}
