//! Tokenization, vocabulary, document encoding and word-vector files.

mod corpus;
mod tokenizer;
mod vectors;
mod vocab;

use thiserror::Error;

pub use corpus::{read_corpus, RawDocument};
pub use tokenizer::{tokenize, TokenizerConfig};
pub use vectors::{
    detect_format, load_word_vectors, save_word_vectors, vector_format, vector_format_names,
    write_keyed_vectors, BinaryFormat, LoadReport, TextFormat, VectorFormat, WordTable,
};
pub use vocab::{build_vocab, decode, encode, Document, Vocabulary, UNK_ID, UNK_TOKEN};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("min_count must be >= 1")]
    InvalidMinCount,
    #[error("empty document")]
    EmptyDocument,
    #[error("dimension mismatch: expected m = {expected}, file has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    /// `line` is the 1-based text line, or the 1-based record for binary files.
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: invalid label `{value}`")]
    Label { line: usize, value: String },
    #[error("unknown vector format `{0}`")]
    UnknownFormat(String),
    #[error("vocabulary: {0}")]
    Vocab(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
