//! Word vector tables and the word2vec interchange formats.
//!
//! Both formats start with a `"<count> <dim>\n"` header. The text format then
//! has one `token v1 … vm` line per word; the binary format stores the token,
//! a space, `dim` little-endian IEEE-754 `f32` values and a newline.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;

use super::{CorpusError, Vocabulary, UNK_ID};
use crate::tensor::{Scalar, Tensor2};

/// Trainable word vectors; row `w` is the vector of word id `w`.
#[derive(Clone, Debug, PartialEq)]
pub struct WordTable<T> {
    pub vectors: Tensor2<T>,
}

impl<T: Scalar> WordTable<T> {
    pub fn zeros(vocab_size: usize, dim: usize) -> Self {
        Self {
            vectors: Tensor2::zeros(vocab_size, dim),
        }
    }

    /// Uniform in `[-0.5/dim, 0.5/dim]`, with a zero unknown-word row.
    pub fn random<R: Rng>(vocab_size: usize, dim: usize, rng: &mut R) -> Self {
        Self::uniform(vocab_size, dim, 0.5 / dim as f64, rng)
    }

    /// Uniform in `[-bound, bound]`, with a zero unknown-word row.
    pub fn uniform<R: Rng>(vocab_size: usize, dim: usize, bound: f64, rng: &mut R) -> Self {
        let mut table = Self::zeros(vocab_size, dim);
        for w in 1..vocab_size {
            for v in table.vectors.row_mut(w) {
                *v = T::of(rng.random_range(-bound..=bound));
            }
        }
        table
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn len(&self) -> usize {
        self.vectors.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.rows() == 0
    }

    #[inline]
    pub fn row(&self, id: u32) -> &[T] {
        self.vectors.row(id as usize)
    }

    pub fn cast<U: Scalar>(&self) -> WordTable<U> {
        WordTable {
            vectors: self.vectors.cast(),
        }
    }
}

/// A word-vector file encoding.
pub trait VectorFormat: Send + Sync {
    fn name(&self) -> &'static str;

    /// Streams every record to `sink`, checking the header dimension against
    /// `expected_dim`. Returns the number of records.
    fn read(
        &self,
        r: &mut dyn BufRead,
        expected_dim: usize,
        sink: &mut dyn FnMut(&str, &[f32]),
    ) -> Result<usize, CorpusError>;

    fn write(
        &self,
        w: &mut dyn Write,
        dim: usize,
        records: &[(&str, &[f32])],
    ) -> Result<(), CorpusError>;
}

fn parse_header(line: &str, expected_dim: usize) -> Result<usize, CorpusError> {
    let mut parts = line.split_whitespace();
    let bad = || CorpusError::Malformed {
        line: 1,
        msg: format!("expected `<count> <dim>` header, found `{}`", line.trim()),
    };
    let count: usize = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
    let dim: usize = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
    if parts.next().is_some() {
        return Err(bad());
    }
    if dim != expected_dim {
        return Err(CorpusError::DimensionMismatch {
            expected: expected_dim,
            found: dim,
        });
    }
    Ok(count)
}

fn read_header(r: &mut dyn BufRead, expected_dim: usize) -> Result<usize, CorpusError> {
    let mut header = String::new();
    r.read_line(&mut header)?;
    parse_header(&header, expected_dim)
}

fn check_records(records: &[(&str, &[f32])], dim: usize) -> Result<(), CorpusError> {
    for (i, (token, v)) in records.iter().enumerate() {
        if v.len() != dim {
            return Err(CorpusError::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        if token.is_empty() || token.contains(char::is_whitespace) {
            return Err(CorpusError::Malformed {
                line: i + 2,
                msg: format!("token `{token}` cannot be written"),
            });
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default)]
pub struct TextFormat;

impl VectorFormat for TextFormat {
    fn name(&self) -> &'static str {
        "text"
    }

    fn read(
        &self,
        r: &mut dyn BufRead,
        expected_dim: usize,
        sink: &mut dyn FnMut(&str, &[f32]),
    ) -> Result<usize, CorpusError> {
        let count = read_header(r, expected_dim)?;
        let mut values = Vec::with_capacity(expected_dim);
        let mut line = String::new();
        let mut seen = 0;
        let mut line_no = 1;
        loop {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                break;
            }
            line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let token = parts.next().expect("non-empty line");
            values.clear();
            for p in parts {
                let v: f32 = p.parse().map_err(|_| CorpusError::Malformed {
                    line: line_no,
                    msg: format!("bad value `{p}`"),
                })?;
                values.push(v);
            }
            if values.len() != expected_dim {
                return Err(CorpusError::Malformed {
                    line: line_no,
                    msg: format!("expected {expected_dim} values, found {}", values.len()),
                });
            }
            seen += 1;
            if seen > count {
                return Err(CorpusError::Malformed {
                    line: line_no,
                    msg: format!("more records than the {count} declared in the header"),
                });
            }
            sink(token, &values);
        }
        if seen != count {
            return Err(CorpusError::Malformed {
                line: line_no + 1,
                msg: format!("header declares {count} records, found {seen}"),
            });
        }
        Ok(seen)
    }

    fn write(
        &self,
        w: &mut dyn Write,
        dim: usize,
        records: &[(&str, &[f32])],
    ) -> Result<(), CorpusError> {
        check_records(records, dim)?;
        writeln!(w, "{} {}", records.len(), dim)?;
        let mut line = String::new();
        for (token, v) in records {
            line.clear();
            line.push_str(token);
            for x in *v {
                // `Display` for f32 is the shortest string that round-trips.
                line.push(' ');
                line.push_str(&x.to_string());
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct BinaryFormat;

impl VectorFormat for BinaryFormat {
    fn name(&self) -> &'static str {
        "binary"
    }

    fn read(
        &self,
        r: &mut dyn BufRead,
        expected_dim: usize,
        sink: &mut dyn FnMut(&str, &[f32]),
    ) -> Result<usize, CorpusError> {
        let count = read_header(r, expected_dim)?;
        let mut token = Vec::new();
        let mut raw = vec![0u8; expected_dim * 4];
        let mut values = vec![0f32; expected_dim];
        for record in 1..=count {
            let malformed = |msg: &str| CorpusError::Malformed {
                line: record,
                msg: msg.to_string(),
            };
            // Records may be separated by a newline; skip it.
            loop {
                let buf = r.fill_buf()?;
                match buf.first() {
                    Some(b'\n') | Some(b'\r') => r.consume(1),
                    Some(_) => break,
                    None => return Err(malformed("unexpected end of file")),
                }
            }
            token.clear();
            r.read_until(b' ', &mut token)?;
            if token.pop() != Some(b' ') {
                return Err(malformed("unterminated token"));
            }
            let token = std::str::from_utf8(&token).map_err(|_| malformed("token is not UTF-8"))?;
            r.read_exact(&mut raw)
                .map_err(|_| malformed("truncated vector"))?;
            for (v, c) in values.iter_mut().zip(raw.chunks_exact(4)) {
                *v = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            }
            sink(token, &values);
        }
        Ok(count)
    }

    fn write(
        &self,
        w: &mut dyn Write,
        dim: usize,
        records: &[(&str, &[f32])],
    ) -> Result<(), CorpusError> {
        check_records(records, dim)?;
        writeln!(w, "{} {}", records.len(), dim)?;
        let mut buf = Vec::with_capacity(dim * 4 + 32);
        for (token, v) in records {
            buf.clear();
            buf.extend_from_slice(token.as_bytes());
            buf.push(b' ');
            for x in *v {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            buf.push(b'\n');
            w.write_all(&buf)?;
        }
        Ok(())
    }
}

static FORMATS: [&dyn VectorFormat; 2] = [&TextFormat, &BinaryFormat];

pub fn vector_format(name: &str) -> Result<&'static dyn VectorFormat, CorpusError> {
    FORMATS
        .iter()
        .copied()
        .find(|f| f.name() == name)
        .ok_or_else(|| CorpusError::UnknownFormat(name.to_string()))
}

pub fn vector_format_names() -> Vec<&'static str> {
    FORMATS.iter().map(|f| f.name()).collect()
}

/// Guesses the format by checking whether the first record parses as text.
pub fn detect_format(path: impl AsRef<Path>) -> Result<&'static dyn VectorFormat, CorpusError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = String::new();
    r.read_line(&mut header)?;
    let dim = header
        .split_whitespace()
        .nth(1)
        .and_then(|d| d.parse::<usize>().ok())
        .ok_or_else(|| CorpusError::Malformed {
            line: 1,
            msg: "expected `<count> <dim>` header".into(),
        })?;
    let mut first = Vec::new();
    r.take(1 << 20).read_until(b'\n', &mut first)?;
    let looks_textual = std::str::from_utf8(&first).is_ok_and(|line| {
        let mut parts = line.split_whitespace();
        parts.next().is_some() && {
            let values: Vec<&str> = parts.collect();
            values.len() == dim && values.iter().all(|v| v.parse::<f32>().is_ok())
        }
    });
    Ok(if looks_textual || first.is_empty() {
        &TextFormat
    } else {
        &BinaryFormat
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadReport {
    pub format: &'static str,
    pub file_records: usize,
    /// Vocabulary words (excluding unk) that received a vector from the file.
    pub found: usize,
    /// `found / (vocab size − 1)`.
    pub coverage: f64,
}

/// Loads vectors for the words of `vocab`. Words absent from the file get a
/// small random vector, the unknown row stays zero.
pub fn load_word_vectors<R: Rng>(
    path: impl AsRef<Path>,
    vocab: &Vocabulary,
    dim: usize,
    format: Option<&str>,
    rng: &mut R,
) -> Result<(WordTable<f32>, LoadReport), CorpusError> {
    let path = path.as_ref();
    let fmt = match format {
        Some(name) => vector_format(name)?,
        None => detect_format(path)?,
    };
    let mut table = WordTable::<f32>::random(vocab.len(), dim, rng);
    let mut hit = vec![false; vocab.len()];
    let mut reader = BufReader::new(File::open(path)?);
    let records = fmt.read(&mut reader, dim, &mut |token, values| {
        if let Some(id) = vocab.get(token) {
            table.vectors.row_mut(id as usize).copy_from_slice(values);
            hit[id as usize] = true;
        }
    })?;
    table.vectors.row_mut(UNK_ID as usize).fill(0.0);
    hit[UNK_ID as usize] = false;
    let found = hit.iter().filter(|&&h| h).count();
    let coverage = if vocab.len() > 1 {
        found as f64 / (vocab.len() - 1) as f64
    } else {
        0.0
    };
    Ok((
        table,
        LoadReport {
            format: fmt.name(),
            file_records: records,
            found,
            coverage,
        },
    ))
}

/// Writes every row of `table` keyed by its vocabulary token.
pub fn save_word_vectors(
    table: &WordTable<f32>,
    vocab: &Vocabulary,
    path: impl AsRef<Path>,
    format: &str,
) -> Result<(), CorpusError> {
    if table.len() != vocab.len() {
        return Err(CorpusError::Vocab(format!(
            "table has {} rows, vocabulary has {} ids",
            table.len(),
            vocab.len()
        )));
    }
    let records: Vec<(&str, &[f32])> = vocab
        .tokens()
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), table.vectors.row(i)))
        .collect();
    let mut w = BufWriter::new(File::create(path)?);
    vector_format(format)?.write(&mut w, table.dim(), &records)?;
    w.flush()?;
    Ok(())
}

/// Writes arbitrary keyed vectors (e.g. document embeddings keyed by id) in
/// the word2vec text format.
pub fn write_keyed_vectors<W: Write>(
    w: &mut W,
    dim: usize,
    records: &[(String, Vec<f32>)],
) -> Result<(), CorpusError> {
    let refs: Vec<(&str, &[f32])> = records
        .iter()
        .map(|(k, v)| (k.as_str(), v.as_slice()))
        .collect();
    TextFormat.write(w, dim, &refs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::build_vocab;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vocab() -> Vocabulary {
        let docs = vec![vec!["the", "the", "cat", "sat"]];
        build_vocab(&docs, 1).unwrap()
    }

    fn write_file(bytes: &[u8]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(bytes).unwrap();
        f
    }

    #[test]
    fn text_file_loads_and_reports_coverage() {
        let f = write_file(b"2 3\nthe 1 2 3\ndog 4 5 6\n");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (t, rep) = load_word_vectors(f.path(), &vocab(), 3, None, &mut rng).unwrap();
        assert_eq!(rep.format, "text");
        assert_eq!(rep.found, 1);
        assert!((rep.coverage - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(t.row(vocab().id("the")), &[1.0, 2.0, 3.0]);
        assert_eq!(t.row(UNK_ID), &[0.0, 0.0, 0.0]);
        let bound = 0.5 / 3.0;
        assert!(t.row(vocab().id("cat")).iter().all(|v| v.abs() <= bound));
    }

    #[test]
    fn dimension_mismatch_names_expected_dim() {
        let f = write_file(b"1 100\nthe 0\n");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = load_word_vectors(f.path(), &vocab(), 300, Some("text"), &mut rng).unwrap_err();
        assert!(matches!(err, CorpusError::DimensionMismatch { expected: 300, found: 100 }));
        assert!(err.to_string().contains("300"));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let f = write_file(b"2 2\nthe 1 2\ncat 1 x\n");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        match load_word_vectors(f.path(), &vocab(), 2, Some("text"), &mut rng) {
            Err(CorpusError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let f = write_file(b"2 2\nthe 1 2\ncat 1\n");
        match load_word_vectors(f.path(), &vocab(), 2, Some("text"), &mut rng) {
            Err(CorpusError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn binary_layout_is_little_endian() {
        let mut bytes = b"1 2\nsat ".to_vec();
        bytes.extend(1.5f32.to_le_bytes());
        bytes.extend((-0.25f32).to_le_bytes());
        bytes.push(b'\n');
        let f = write_file(&bytes);
        assert_eq!(detect_format(f.path()).unwrap().name(), "binary");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (t, rep) = load_word_vectors(f.path(), &vocab(), 2, None, &mut rng).unwrap();
        assert_eq!(rep.format, "binary");
        assert_eq!(t.row(vocab().id("sat")), &[1.5, -0.25]);
    }

    #[test]
    fn truncated_binary_is_an_error() {
        let mut bytes = b"2 2\nsat ".to_vec();
        bytes.extend(1.5f32.to_le_bytes());
        bytes.extend(1.5f32.to_le_bytes());
        bytes.extend(b"\ncat ");
        bytes.extend(1.5f32.to_le_bytes());
        let f = write_file(&bytes);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        match load_word_vectors(f.path(), &vocab(), 2, Some("binary"), &mut rng) {
            Err(CorpusError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_format_name() {
        assert!(vector_format("glove").is_err());
        assert_eq!(vector_format_names(), ["text", "binary"]);
    }
}
