use std::cmp::Ordering;
use std::collections::BTreeSet;

use super::EvalError;

/// Document embeddings with cached norms for cosine lookup.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingIndex {
    ids: Vec<usize>,
    vectors: Vec<Vec<f32>>,
    norms: Vec<f64>,
}

fn norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
}

/// Cosine similarity computed in double precision; 0 if either vector is zero.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

impl EmbeddingIndex {
    pub fn build(ids: Vec<usize>, vectors: Vec<Vec<f32>>) -> Result<Self, EvalError> {
        if ids.is_empty() {
            return Err(EvalError::Empty("index"));
        }
        if ids.len() != vectors.len() {
            return Err(EvalError::DimensionMismatch {
                expected: ids.len(),
                found: vectors.len(),
            });
        }
        let dim = vectors[0].len();
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(EvalError::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        let mut seen = BTreeSet::new();
        if let Some(&dup) = ids.iter().find(|&&id| !seen.insert(id)) {
            return Err(EvalError::DuplicateId(dup));
        }
        let norms = vectors.iter().map(|v| norm(v)).collect();
        Ok(Self { ids, vectors, norms })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn vector(&self, id: usize) -> Option<&[f32]> {
        self.ids.iter().position(|&i| i == id).map(|p| self.vectors[p].as_slice())
    }

    /// The `top_k` most cosine-similar documents, best first, ties broken by
    /// ascending id. Ids in `exclude` (typically the query's own) are skipped.
    pub fn retrieve(&self, query: &[f32], top_k: usize, exclude: &[usize]) -> Result<Vec<(usize, f64)>, EvalError> {
        if query.len() != self.dim() {
            return Err(EvalError::DimensionMismatch {
                expected: self.dim(),
                found: query.len(),
            });
        }
        let qn = norm(query);
        if qn == 0.0 {
            return Err(EvalError::ZeroQuery);
        }
        let mut scored: Vec<(usize, f64)> = self
            .ids
            .iter()
            .zip(&self.vectors)
            .zip(&self.norms)
            .filter(|((id, _), _)| !exclude.contains(id))
            .map(|((&id, v), &n)| {
                let s = if n == 0.0 {
                    0.0
                } else {
                    let dot: f64 = query.iter().zip(v).map(|(&a, &b)| a as f64 * b as f64).sum();
                    (dot / (qn * n)).clamp(-1.0, 1.0)
                };
                (id, s)
            })
            .collect();
        scored.sort_by(|a, b| match b.1.total_cmp(&a.1) {
            Ordering::Equal => a.0.cmp(&b.0),
            o => o,
        });
        scored.truncate(top_k);
        Ok(scored)
    }
}
