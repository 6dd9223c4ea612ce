//! Tab-separated embedding files: `id<TAB>label<TAB>v1<TAB>…<TAB>vp`, one
//! row per document in id order. Values carry 9 significant digits, which is
//! enough to restore every `f32` exactly. A missing label is an empty field.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::EvalError;

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingRow {
    pub id: usize,
    pub label: Option<i64>,
    pub vector: Vec<f32>,
}

pub fn write_embeddings<W: Write>(w: &mut W, rows: &[EmbeddingRow]) -> Result<(), EvalError> {
    let mut order: Vec<&EmbeddingRow> = rows.iter().collect();
    order.sort_by_key(|r| r.id);
    for r in order {
        write!(w, "{}\t", r.id)?;
        if let Some(l) = r.label {
            write!(w, "{l}")?;
        }
        for v in &r.vector {
            write!(w, "\t{v:.8e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn export_embeddings(path: impl AsRef<Path>, rows: &[EmbeddingRow]) -> Result<(), EvalError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_embeddings(&mut w, rows)?;
    w.flush()?;
    Ok(())
}

pub fn read_embeddings<R: BufRead>(r: R) -> Result<Vec<EmbeddingRow>, EvalError> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let bad = |msg: String| EvalError::Parse { line: n + 1, msg };
        let mut fields = line.split('\t');
        let id = fields
            .next()
            .unwrap_or_default()
            .parse()
            .map_err(|e| bad(format!("id: {e}")))?;
        let label = match fields.next() {
            Some("") => None,
            Some(l) => Some(l.parse().map_err(|e| bad(format!("label: {e}")))?),
            None => return Err(bad("missing label field".into())),
        };
        let vector = fields
            .map(|f| f.parse::<f32>().map_err(|e| bad(format!("value `{f}`: {e}"))))
            .collect::<Result<_, _>>()?;
        out.push(EmbeddingRow { id, label, vector });
    }
    Ok(out)
}

pub fn import_embeddings(path: impl AsRef<Path>) -> Result<Vec<EmbeddingRow>, EvalError> {
    read_embeddings(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_rows_round_trip() {
        let rows = vec![
            EmbeddingRow { id: 2, label: Some(1), vector: vec![0.1, -3.0e-7, 12345.678] },
            EmbeddingRow { id: 0, label: None, vector: vec![1.0, 2.0, f32::MIN_POSITIVE] },
            EmbeddingRow { id: 1, label: Some(-4), vector: vec![std::f32::consts::PI, 0.0, -1.0] },
        ];
        let mut buf = Vec::new();
        write_embeddings(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.split('\t').count() == 5));
        assert!(lines[0].starts_with("0\t\t"));
        assert!(lines[2].starts_with("2\t1\t1.00000001e-1"));
        let mut back = read_embeddings(buf.as_slice()).unwrap();
        back.sort_by_key(|r| r.id);
        let mut expected = rows.clone();
        expected.sort_by_key(|r| r.id);
        assert_eq!(back, expected);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match read_embeddings("0\t1\t0.5\n1\tx\t0.5\n".as_bytes()) {
            Err(EvalError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
