use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::CorpusError;

/// One line of a corpus file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawDocument {
    /// 0-based line number.
    pub id: usize,
    pub label: Option<i64>,
    pub text: String,
}

/// Reads one document per line. Lines of the form `label<TAB>text` carry an
/// integer label; with `require_labels` every line must have one.
pub fn read_corpus(path: impl AsRef<Path>, require_labels: bool) -> Result<Vec<RawDocument>, CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let mut docs = Vec::new();
    for (id, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let (label, text) = match line.split_once('\t') {
            Some((head, text)) => match head.trim().parse::<i64>() {
                Ok(l) => (Some(l), text),
                Err(_) if require_labels => {
                    return Err(CorpusError::Label {
                        line: id + 1,
                        value: head.to_string(),
                    })
                }
                Err(_) => (None, line),
            },
            None if require_labels => {
                return Err(CorpusError::Label {
                    line: id + 1,
                    value: String::new(),
                })
            }
            None => (None, line),
        };
        docs.push(RawDocument {
            id,
            label,
            text: text.to_string(),
        });
    }
    Ok(docs)
}
