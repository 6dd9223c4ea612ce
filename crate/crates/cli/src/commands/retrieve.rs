use std::path::PathBuf;

use clap::Args;
use docembed::eval::EmbeddingIndex;
use docembed::text::read_corpus;

use crate::bundle::Bundle;
use crate::CliError;

#[derive(Clone, Debug, Args)]
pub struct RetrieveArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Documents to search, one per line (an integer `label<TAB>` prefix is
    /// skipped).
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub query: String,
    #[arg(long, default_value_t = 3)]
    pub top_k: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hit {
    pub score: f64,
    pub doc_id: usize,
    pub snippet: String,
}

impl Hit {
    /// `score<TAB>doc_id<TAB>snippet`.
    pub fn line(&self) -> String {
        format!("{:.3}\t{}\t{}", self.score, self.doc_id, self.snippet)
    }
}

const SNIPPET_CHARS: usize = 80;

fn snippet(text: &str) -> String {
    let flat: String = text
        .chars()
        .map(|c| if c.is_whitespace() { ' ' } else { c })
        .collect();
    let mut s: String = flat.trim().chars().take(SNIPPET_CHARS).collect();
    if flat.trim().chars().count() > SNIPPET_CHARS {
        s.push_str("...");
    }
    s
}

/// Ranks corpus documents by cosine similarity to the query. Documents whose
/// word ids equal the query's are the query itself and are left out.
pub fn run(args: &RetrieveArgs) -> Result<Vec<Hit>, CliError> {
    let bundle = Bundle::load(&args.checkpoint)?;
    let raw = read_corpus(&args.corpus, false)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.corpus.display())))?;
    if raw.is_empty() {
        return Err(CliError::Data(format!("{}: empty corpus", args.corpus.display())));
    }
    let docs: Vec<Vec<u32>> = raw.iter().map(|d| bundle.encode_text(&d.text)).collect();
    let refs: Vec<&[u32]> = docs.iter().map(Vec::as_slice).collect();
    let vectors = bundle.model.embed_many(&refs, args.batch_size)?;
    let index = EmbeddingIndex::build(raw.iter().map(|d| d.id).collect(), vectors)?;
    let query = bundle.encode_text(&args.query);
    let self_matches: Vec<usize> = raw
        .iter()
        .zip(&docs)
        .filter(|(_, d)| **d == query)
        .map(|(r, _)| r.id)
        .collect();
    let q = bundle.model.embed_sequence(&query)?;
    let ranked = index.retrieve(&q, args.top_k, &self_matches)?;
    Ok(ranked
        .into_iter()
        .map(|(id, score)| Hit {
            score,
            doc_id: id,
            snippet: snippet(&raw[id].text),
        })
        .collect())
}
