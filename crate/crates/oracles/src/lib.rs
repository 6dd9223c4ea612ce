//! Slow, obviously-correct reference computations. Nothing here depends on
//! the `docembed` crate; matrices are plain nested `Vec`s indexed
//! `[row][column]`, kernels `[out][in][tap]` with tap 0 the oldest step.

use statrs::distribution::{ChiSquared, ContinuousCDF};

pub type Matrix = Vec<Vec<f64>>;
pub type Kernels = Vec<Vec<Vec<f64>>>;

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Causal convolution by triple loop: output column `t` reads input columns
/// `t - (d-1) ..= t`, zero before the start.
pub fn conv_causal(x: &Matrix, w: &Kernels, bias: &[f64]) -> Matrix {
    let t_len = x.first().map_or(0, Vec::len);
    let d = w[0][0].len();
    let mut out = vec![vec![0.0; t_len]; w.len()];
    for (o, row) in out.iter_mut().enumerate() {
        for (t, slot) in row.iter_mut().enumerate() {
            let mut acc = bias[o];
            for (c, xc) in x.iter().enumerate() {
                for tap in 0..d {
                    let src = t as isize - (d as isize - 1) + tap as isize;
                    if src >= 0 {
                        acc += w[o][c][tap] * xc[src as usize];
                    }
                }
            }
            *slot = acc;
        }
    }
    out
}

/// Train-mode batch normalization of each row with biased variance.
pub fn batch_norm_rows(x: &Matrix, gamma: &[f64], beta: &[f64], eps: f64) -> Matrix {
    x.iter()
        .enumerate()
        .map(|(c, row)| {
            let n = row.len() as f64;
            let mean = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            row.iter()
                .map(|v| (v - mean) / (var + eps).sqrt() * gamma[c] + beta[c])
                .collect()
        })
        .collect()
}

/// Eval-mode batch normalization with fixed statistics.
pub fn batch_norm_fixed(x: &Matrix, mean: &[f64], var: &[f64], gamma: &[f64], beta: &[f64], eps: f64) -> Matrix {
    x.iter()
        .enumerate()
        .map(|(c, row)| {
            row.iter()
                .map(|v| (v - mean[c]) / (var[c] + eps).sqrt() * gamma[c] + beta[c])
                .collect()
        })
        .collect()
}

/// `A ⊗ σ(B)` elementwise.
pub fn gate(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(&x, &y)| x * sigmoid(y)).collect())
        .collect()
}

/// GLU layer without normalization.
pub fn glu(x: &Matrix, wa: &Kernels, ba: &[f64], wb: &Kernels, bb: &[f64]) -> Matrix {
    gate(&conv_causal(x, wa, ba), &conv_causal(x, wb, bb))
}

/// Maximum of a row and the first index attaining it.
pub fn max_with_index(row: &[f64]) -> (f64, usize) {
    let mut best = 0;
    for t in 1..row.len() {
        if row[t] > row[best] {
            best = t;
        }
    }
    (row[best], best)
}

/// Top-k values in temporal order by sorting all positions on
/// (value descending, position ascending); short rows are left-filled with
/// zeros.
pub fn top_k_temporal(row: &[f64], k: usize) -> (Vec<f64>, Vec<Option<usize>>) {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap().then(a.cmp(&b)));
    let mut chosen: Vec<usize> = idx.into_iter().take(k).collect();
    chosen.sort_unstable();
    let fill = k - chosen.len();
    let mut values = vec![0.0; fill];
    let mut positions = vec![None; fill];
    values.extend(chosen.iter().map(|&t| row[t]));
    positions.extend(chosen.into_iter().map(Some));
    (values, positions)
}

/// Cosine similarity of two vectors (0 if either is zero).
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// All-pairs ranking by repeated selection of the best remaining entry
/// (highest similarity, then lowest id).
pub fn retrieve(ids: &[usize], vectors: &[Vec<f64>], query: &[f64], top_k: usize, exclude: &[usize]) -> Vec<(usize, f64)> {
    let mut pool: Vec<(usize, f64)> = ids
        .iter()
        .zip(vectors)
        .filter(|(id, _)| !exclude.contains(id))
        .map(|(&id, v)| (id, cosine(query, v)))
        .collect();
    let mut out = Vec::new();
    while out.len() < top_k && !pool.is_empty() {
        let mut best = 0;
        for j in 1..pool.len() {
            let (id, s) = pool[j];
            let (bid, bs) = pool[best];
            if s > bs || (s == bs && id < bid) {
                best = j;
            }
        }
        out.push(pool.remove(best));
    }
    out
}

/// Cross-entropy of one embedding against positive and negative word
/// vectors, written directly from the logs.
pub fn prediction_loss(embedding: &[f64], positives: &[Vec<f64>], negatives: &[Vec<f64>]) -> f64 {
    let dot = |v: &[f64]| v.iter().zip(embedding).map(|(a, b)| a * b).sum::<f64>();
    -positives.iter().map(|v| sigmoid(dot(v)).ln()).sum::<f64>()
        - negatives.iter().map(|v| (1.0 - sigmoid(dot(v))).ln()).sum::<f64>()
}

/// Central differences `(f(x+h) − f(x−h)) / 2h` for every coordinate.
pub fn central_difference(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `|a − b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Scalar Adam trajectory on `f(p) = p²/2` (gradient `p`).
pub fn adam_quadratic(p0: f64, steps: usize, lr: f64, b1: f64, b2: f64, eps: f64) -> Vec<f64> {
    let (mut p, mut m, mut v) = (p0, 0.0, 0.0);
    let mut out = Vec::with_capacity(steps);
    for t in 1..=steps {
        let g = p;
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        let mh = m / (1.0 - b1.powi(t as i32));
        let vh = v / (1.0 - b2.powi(t as i32));
        p -= lr * mh / (vh.sqrt() + eps);
        out.push(p);
    }
    out
}

/// Scalar SGD-with-momentum trajectory for a fixed gradient sequence.
pub fn sgd_momentum_trajectory(p0: f64, grads: &[f64], lr: f64, mu: f64) -> Vec<f64> {
    let (mut p, mut v) = (p0, 0.0);
    grads
        .iter()
        .map(|g| {
            v = mu * v + g;
            p -= lr * v;
            p
        })
        .collect()
}

/// p-value of Pearson's χ² test that `counts` come from a uniform
/// distribution over the bins.
pub fn chi_square_uniform(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let expected = n as f64 / counts.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).expect("at least two bins");
    1.0 - dist.cdf(stat)
}

/// Fraction of points whose nearest other point (cosine) shares its label.
pub fn nearest_neighbor_purity(vectors: &[Vec<f64>], labels: &[usize]) -> f64 {
    let hits = (0..vectors.len())
        .filter(|&i| {
            let mut best = None::<(usize, f64)>;
            for j in 0..vectors.len() {
                if j == i {
                    continue;
                }
                let s = cosine(&vectors[i], &vectors[j]);
                if best.is_none_or(|(_, bs)| s > bs) {
                    best = Some((j, s));
                }
            }
            best.is_some_and(|(j, _)| labels[j] == labels[i])
        })
        .count();
    hits as f64 / vectors.len() as f64
}

/// Token frequencies by straightforward counting, sorted by descending
/// count then token.
pub fn token_counts(docs: &[Vec<String>]) -> Vec<(String, u64)> {
    let mut counts: Vec<(String, u64)> = Vec::new();
    for tok in docs.iter().flatten() {
        match counts.iter_mut().find(|(t, _)| t == tok) {
            Some(e) => e.1 += 1,
            None => counts.push((tok.clone(), 1)),
        }
    }
    counts.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    counts
}

/// SplitMix64, enough randomness for fixtures without pulling in a crate.
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `0..n` (modulo bias is irrelevant for fixtures).
    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

/// Synthetic corpus of `2 * per_topic` documents over two disjoint
/// vocabularies of `topic_words` ids each (topic 0 uses ids
/// `1..=topic_words`, topic 1 the next block; id 0 is left unused). Every
/// document repeats a motif of `motif` distinct words from its topic, so any
/// window of `motif` consecutive words is the whole motif. Returns
/// `(documents, topic labels)`.
pub fn two_topic_corpus(
    per_topic: usize,
    topic_words: usize,
    motif: usize,
    lengths: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> (Vec<Vec<u32>>, Vec<usize>) {
    let mut rng = SplitMix(seed);
    let (mut docs, mut labels) = (Vec::new(), Vec::new());
    for k in 0..2 * per_topic {
        let topic = k % 2;
        let mut pool: Vec<u32> = (1..=topic_words as u32)
            .map(|w| w + (topic * topic_words) as u32)
            .collect();
        let mut words = Vec::with_capacity(motif);
        for _ in 0..motif {
            words.push(pool.swap_remove(rng.below(pool.len())));
        }
        let span = lengths.end() - lengths.start() + 1;
        let len = lengths.start() + rng.below(span);
        docs.push((0..len).map(|t| words[t % motif]).collect());
        labels.push(topic);
    }
    (docs, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_identity() {
        let x = vec![vec![1.0, 2.0, 3.0]];
        let w = vec![vec![vec![0.0, 1.0]]];
        assert_eq!(conv_causal(&x, &w, &[0.0]), x);
        let shift = vec![vec![vec![1.0, 0.0]]];
        assert_eq!(conv_causal(&x, &shift, &[0.5]), vec![vec![0.5, 1.5, 2.5]]);
    }

    #[test]
    fn top_k_examples() {
        assert_eq!(top_k_temporal(&[1.0, 5.0, 3.0, 9.0, 2.0], 3).0, [5.0, 3.0, 9.0]);
        assert_eq!(top_k_temporal(&[7.0, 7.0, 1.0], 2).0, [7.0, 7.0]);
        assert_eq!(top_k_temporal(&[4.0, 6.0], 3).0, [0.0, 4.0, 6.0]);
        assert_eq!(max_with_index(&[2.0, 2.0]), (2.0, 0));
    }

    #[test]
    fn chi_square_sanity() {
        assert!(chi_square_uniform(&[1000, 1000, 1000]) > 0.99);
        assert!(chi_square_uniform(&[2000, 500, 500]) < 1e-6);
    }

    #[test]
    fn finite_differences_of_a_cubic() {
        let g = central_difference(|x| x[0].powi(3) + 2.0 * x[1], &[2.0, 5.0], 1e-4);
        assert!((g[0] - 12.0).abs() < 1e-6);
        assert!((g[1] - 2.0).abs() < 1e-9);
    }
}
