use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::CorpusError;

pub const UNK_ID: u32 = 0;
pub const UNK_TOKEN: &str = "<unk>";

/// Token ↔ id map. Id 0 is reserved for unknown tokens; the remaining ids are
/// ordered by descending corpus frequency, ties broken lexicographically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, u32>,
    id_to_token: Vec<String>,
    counts: Vec<u64>,
    min_count: u64,
}

/// An encoded document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub id: usize,
    pub word_ids: Vec<u32>,
    /// Only read by evaluation, never by training.
    pub label: Option<i64>,
}

impl Document {
    pub fn len(&self) -> usize {
        self.word_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word_ids.is_empty()
    }
}

pub fn build_vocab<S: AsRef<str>>(docs: &[Vec<S>], min_count: u64) -> Result<Vocabulary, CorpusError> {
    if min_count == 0 {
        return Err(CorpusError::InvalidMinCount);
    }
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for doc in docs {
        for t in doc {
            *freq.entry(t.as_ref()).or_default() += 1;
        }
    }
    if freq.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut unk_count = freq.remove(UNK_TOKEN).unwrap_or(0);
    let mut kept: Vec<(&str, u64)> = Vec::with_capacity(freq.len());
    for (t, c) in freq {
        if c >= min_count {
            kept.push((t, c));
        } else {
            unk_count += c;
        }
    }
    kept.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut id_to_token = Vec::with_capacity(kept.len() + 1);
    let mut counts = Vec::with_capacity(kept.len() + 1);
    id_to_token.push(UNK_TOKEN.to_string());
    counts.push(unk_count);
    for (t, c) in kept {
        id_to_token.push(t.to_string());
        counts.push(c);
    }
    Ok(Vocabulary::from_parts(id_to_token, counts, min_count))
}

impl Vocabulary {
    fn from_parts(id_to_token: Vec<String>, counts: Vec<u64>, min_count: u64) -> Self {
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self {
            token_to_id,
            id_to_token,
            counts,
            min_count,
        }
    }

    /// Number of ids, including the unknown id.
    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.len() <= 1
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// Id of `token`, or [`UNK_ID`] when it is not in the vocabulary.
    pub fn id(&self, token: &str) -> u32 {
        self.token_to_id.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts.get(id as usize).copied().unwrap_or(0)
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    /// One `token<TAB>count` line per id after a `# min_count=N` header.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), CorpusError> {
        writeln!(w, "# min_count={}", self.min_count)?;
        for (t, c) in self.id_to_token.iter().zip(&self.counts) {
            writeln!(w, "{t}\t{c}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self, CorpusError> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| CorpusError::Vocab("empty vocabulary file".into()))??;
        let min_count = header
            .strip_prefix("# min_count=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| CorpusError::Malformed {
                line: 1,
                msg: "expected `# min_count=N` header".into(),
            })?;
        let mut tokens = Vec::new();
        let mut counts = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let (t, c) = line.rsplit_once('\t').ok_or_else(|| CorpusError::Malformed {
                line: i + 2,
                msg: "expected token<TAB>count".into(),
            })?;
            let c = c.parse().map_err(|_| CorpusError::Malformed {
                line: i + 2,
                msg: format!("bad count `{c}`"),
            })?;
            tokens.push(t.to_string());
            counts.push(c);
        }
        if tokens.first().map(String::as_str) != Some(UNK_TOKEN) {
            return Err(CorpusError::Vocab(format!("first entry must be {UNK_TOKEN}")));
        }
        let vocab = Self::from_parts(tokens, counts, min_count);
        if vocab.token_to_id.len() + 1 != vocab.len() {
            return Err(CorpusError::Vocab("duplicate tokens".into()));
        }
        Ok(vocab)
    }
}

/// Maps tokens to ids, unknown tokens to [`UNK_ID`], preserving order.
pub fn encode<S: AsRef<str>>(
    tokens: &[S],
    vocab: &Vocabulary,
    id: usize,
    label: Option<i64>,
) -> Result<Document, CorpusError> {
    if tokens.is_empty() {
        return Err(CorpusError::EmptyDocument);
    }
    Ok(Document {
        id,
        word_ids: tokens.iter().map(|t| vocab.id(t.as_ref())).collect(),
        label,
    })
}

pub fn decode(doc: &Document, vocab: &Vocabulary) -> Vec<String> {
    doc.word_ids
        .iter()
        .map(|&w| vocab.token(w).unwrap_or(UNK_TOKEN).to_string())
        .collect()
}
