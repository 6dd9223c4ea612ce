//! Prediction points and negative words.

use std::collections::BTreeSet;
use std::fmt::Debug;

use rand::seq::index;
use rand::Rng;

use super::TrainError;

/// Valid prediction points `[ε_eff, |D| − h]` for a document, or `None`
/// when the document is too short to leave `h` words after a prefix of two.
pub fn prediction_interval(doc_len: usize, h: usize, epsilon: usize) -> Option<(usize, usize)> {
    if doc_len <= h + 1 {
        return None;
    }
    let hi = doc_len - h;
    let lo = epsilon.min(hi).max(2);
    Some((lo, hi))
}

/// Uniform prediction point, `None` for a too-short document.
pub fn sample_prediction_point<R: Rng>(
    doc_len: usize,
    h: usize,
    epsilon: usize,
    rng: &mut R,
) -> Option<usize> {
    prediction_interval(doc_len, h, epsilon).map(|(lo, hi)| rng.random_range(lo..=hi))
}

/// `count` distinct ids drawn uniformly from `0..vocab_size` minus `exclude`.
pub fn sample_negatives<R: Rng>(
    vocab_size: usize,
    exclude: &BTreeSet<u32>,
    count: usize,
    rng: &mut R,
) -> Result<Vec<u32>, TrainError> {
    let excluded = exclude.range(..vocab_size as u32).count();
    let eligible = vocab_size - excluded;
    if count > eligible {
        return Err(TrainError::InfeasibleNegatives {
            requested: count,
            eligible,
        });
    }
    if 2 * count >= eligible {
        // Dense case: pick positions among the eligible ids directly.
        let pool: Vec<u32> = (0..vocab_size as u32).filter(|w| !exclude.contains(w)).collect();
        return Ok(index::sample(rng, pool.len(), count)
            .into_iter()
            .map(|p| pool[p])
            .collect());
    }
    let mut picked = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let w = rng.random_range(0..vocab_size as u32);
        if !exclude.contains(&w) && picked.insert(w) {
            out.push(w);
        }
    }
    Ok(out)
}

/// Decides which words may not be drawn as shared negatives for a batch.
pub trait NegativeSampler: Debug + Send + Sync {
    fn name(&self) -> &'static str;

    /// `docs` are the full documents of the batch, `i` the shared prediction
    /// point and `h` the window length.
    fn exclusion(&self, docs: &[&[u32]], i: usize, h: usize) -> BTreeSet<u32>;
}

/// Excludes every word that is a positive target of some batch member.
#[derive(Clone, Copy, Debug)]
pub struct BatchWindow;

impl NegativeSampler for BatchWindow {
    fn name(&self) -> &'static str {
        "batch_window"
    }

    fn exclusion(&self, docs: &[&[u32]], i: usize, h: usize) -> BTreeSet<u32> {
        docs.iter()
            .flat_map(|d| d[i.min(d.len())..(i + h).min(d.len())].iter().copied())
            .collect()
    }
}

/// Excludes every word of every batch member.
#[derive(Clone, Copy, Debug)]
pub struct WholeDocument;

impl NegativeSampler for WholeDocument {
    fn name(&self) -> &'static str {
        "document"
    }

    fn exclusion(&self, docs: &[&[u32]], _: usize, _: usize) -> BTreeSet<u32> {
        docs.iter().flat_map(|d| d.iter().copied()).collect()
    }
}

static SAMPLERS: [&dyn NegativeSampler; 2] = [&BatchWindow, &WholeDocument];

pub fn negative_sampler_names() -> Vec<&'static str> {
    SAMPLERS.iter().map(|s| s.name()).collect()
}

pub fn negative_sampler(name: &str) -> Result<&'static dyn NegativeSampler, TrainError> {
    SAMPLERS
        .iter()
        .copied()
        .find(|s| s.name() == name)
        .ok_or_else(|| {
            TrainError::Config(format!(
                "unknown negative sampler `{name}` (known: {})",
                negative_sampler_names().join(", ")
            ))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn interval_examples() {
        assert_eq!(prediction_interval(20, 10, 10), Some((10, 10)));
        assert_eq!(prediction_interval(8, 10, 10), None);
        assert_eq!(prediction_interval(11, 10, 10), None);
        assert_eq!(prediction_interval(12, 10, 10), Some((2, 2)));
        assert_eq!(prediction_interval(100, 10, 10), Some((10, 90)));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            assert_eq!(sample_prediction_point(20, 10, 10, &mut rng), Some(10));
        }
    }

    #[test]
    fn negatives_are_distinct_and_allowed() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let exclude: BTreeSet<u32> = (0..40).step_by(3).collect();
        for count in [1, 10, 50] {
            let got = sample_negatives(100, &exclude, count, &mut rng).unwrap();
            assert_eq!(got.len(), count);
            let set: BTreeSet<_> = got.iter().collect();
            assert_eq!(set.len(), count);
            assert!(got.iter().all(|w| !exclude.contains(w) && *w < 100));
        }
    }

    #[test]
    fn nearly_full_exclusion_leaves_the_rest() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let exclude: BTreeSet<u32> = (0..20).filter(|w| ![4, 9, 17].contains(w)).collect();
        let mut got = sample_negatives(20, &exclude, 3, &mut rng).unwrap();
        got.sort();
        assert_eq!(got, [4, 9, 17]);
        assert!(sample_negatives(20, &exclude, 4, &mut rng).is_err());
    }

    #[test]
    fn samplers_exclude_windows_or_documents() {
        let a = [1u32, 2, 3, 4, 5];
        let b = [6u32, 7, 8, 9];
        let docs: [&[u32]; 2] = [&a, &b];
        let win = negative_sampler("batch_window").unwrap().exclusion(&docs, 2, 2);
        assert_eq!(win.into_iter().collect::<Vec<_>>(), [3, 4, 8, 9]);
        let all = negative_sampler("document").unwrap().exclusion(&docs, 2, 2);
        assert_eq!(all.len(), 9);
        assert!(negative_sampler("unigram").is_err());
    }
}
