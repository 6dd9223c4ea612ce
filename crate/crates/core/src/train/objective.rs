//! Sigmoid word probability and the multi-target cross-entropy objective.

use crate::tensor::{sigmoid, softplus, Scalar};
use crate::text::WordTable;

use super::TrainError;

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// `σ(φ(w)ᵀ f)`.
pub fn word_probability<T: Scalar>(embedding: &[T], word_vec: &[T]) -> Result<T, TrainError> {
    if embedding.len() != word_vec.len() {
        return Err(TrainError::DimensionMismatch {
            embedding: embedding.len(),
            word: word_vec.len(),
        });
    }
    Ok(sigmoid(dot(embedding, word_vec)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossOutput<T> {
    pub loss: T,
    pub d_embedding: Vec<T>,
    /// One entry per target occurrence; repeated ids appear repeatedly.
    pub d_words: Vec<(u32, Vec<T>)>,
}

/// `−Σ_pos log σ(s) − Σ_neg log(1 − σ(s))` with `s = φ(w)ᵀ f`, written as
/// `softplus(−s)` and `softplus(s)` so large scores never overflow.
pub fn loss<T: Scalar>(
    embedding: &[T],
    positives: &[u32],
    negatives: &[u32],
    words: &WordTable<T>,
) -> Result<LossOutput<T>, TrainError> {
    if positives.is_empty() {
        return Err(TrainError::EmptyPositives);
    }
    if embedding.len() != words.dim() {
        return Err(TrainError::DimensionMismatch {
            embedding: embedding.len(),
            word: words.dim(),
        });
    }
    let mut total = T::zero();
    let mut d_embedding = vec![T::zero(); embedding.len()];
    let mut d_words = Vec::with_capacity(positives.len() + negatives.len());
    let targets = positives
        .iter()
        .map(|&w| (w, true))
        .chain(negatives.iter().map(|&w| (w, false)));
    for (w, positive) in targets {
        let v = words.row(w);
        let s = dot(embedding, v);
        let (l, g) = if positive {
            (softplus(-s), sigmoid(s) - T::one())
        } else {
            (softplus(s), sigmoid(s))
        };
        total += l;
        for (d, &x) in d_embedding.iter_mut().zip(v) {
            *d += g * x;
        }
        d_words.push((w, embedding.iter().map(|&e| g * e).collect()));
    }
    Ok(LossOutput {
        loss: total,
        d_embedding,
        d_words,
    })
}
