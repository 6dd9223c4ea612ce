//! Length-bucketed mini-batches with a shared prediction point and shared
//! negatives.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::sampling::{prediction_interval, sample_negatives, NegativeSampler};
use super::TrainError;

/// Bucket index of a document length: lengths in `[2^k, 2^(k+1))` share `k`.
pub fn length_bucket(len: usize) -> u32 {
    usize::BITS - 1 - len.max(1).leading_zeros()
}

/// Indices of the documents longer than `h + 1`, which are the only ones
/// that can be trained on.
pub fn eligible(lengths: &[usize], h: usize) -> Vec<usize> {
    (0..lengths.len()).filter(|&d| lengths[d] > h + 1).collect()
}

/// Splits the eligible documents into batches of at most `batch_size`, each
/// drawn from a single length bucket. Every eligible document appears in
/// exactly one batch.
pub fn plan_epoch<R: Rng>(
    lengths: &[usize],
    h: usize,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>, TrainError> {
    let pool = eligible(lengths, h);
    if pool.is_empty() {
        return Err(TrainError::NoEligibleDocuments { h });
    }
    let mut buckets: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for d in pool {
        buckets.entry(length_bucket(lengths[d])).or_default().push(d);
    }
    let mut batches = Vec::new();
    for (_, mut docs) in buckets {
        docs.shuffle(rng);
        batches.extend(docs.chunks(batch_size.max(1)).map(<[usize]>::to_vec));
    }
    batches.shuffle(rng);
    Ok(batches)
}

/// One training step's worth of data.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSample {
    pub doc_ids: Vec<usize>,
    /// Shared prediction point (1-based): prefixes are words `1..=i`.
    pub i: usize,
    /// Words `i+1..=i+h` of each document.
    pub positives: Vec<Vec<u32>>,
    pub negatives: Vec<u32>,
}

/// The prediction points valid for all members. When the per-document
/// intervals do not overlap the lower bound is relaxed, never the upper one,
/// so every member keeps a full window of `h` targets.
pub fn shared_interval(lengths: &[usize], h: usize, epsilon: usize) -> Option<(usize, usize)> {
    let mut lo = 0;
    let mut hi = usize::MAX;
    for &len in lengths {
        let (l, u) = prediction_interval(len, h, epsilon)?;
        lo = lo.max(l);
        hi = hi.min(u);
    }
    Some((lo.min(hi), hi))
}

#[allow(clippy::too_many_arguments)]
pub fn make_minibatch<R: Rng>(
    docs: &[&[u32]],
    doc_ids: &[usize],
    h: usize,
    epsilon: usize,
    neg_samples: usize,
    vocab_size: usize,
    sampler: &dyn NegativeSampler,
    rng: &mut R,
) -> Result<TrainingSample, TrainError> {
    if docs.is_empty() {
        return Err(TrainError::NoEligibleDocuments { h });
    }
    let lengths: Vec<usize> = docs.iter().map(|d| d.len()).collect();
    let (lo, hi) = shared_interval(&lengths, h, epsilon).ok_or(TrainError::NoEligibleDocuments { h })?;
    let i = rng.random_range(lo..=hi);
    let positives = docs.iter().map(|d| d[i..i + h].to_vec()).collect();
    let exclude = sampler.exclusion(docs, i, h);
    let negatives = sample_negatives(vocab_size, &exclude, neg_samples, rng)?;
    Ok(TrainingSample {
        doc_ids: doc_ids.to_vec(),
        i,
        positives,
        negatives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::sampling::BatchWindow;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn buckets_are_powers_of_two() {
        assert_eq!(length_bucket(1), 0);
        assert_eq!(length_bucket(2), 1);
        assert_eq!(length_bucket(3), 1);
        assert_eq!(length_bucket(4), 2);
        assert_eq!(length_bucket(1023), 9);
        assert_eq!(length_bucket(1024), 10);
    }

    #[test]
    fn interval_intersection() {
        assert_eq!(shared_interval(&[25, 40], 10, 10), Some((10, 15)));
        assert_eq!(shared_interval(&[30, 30, 30], 10, 10), prediction_interval(30, 10, 10));
        assert_eq!(shared_interval(&[16, 31], 10, 10), Some((6, 6)));
        assert_eq!(shared_interval(&[16, 5], 10, 10), None);
    }

    #[test]
    fn minibatch_shares_point_and_negatives() {
        let a: Vec<u32> = (0..25).collect();
        let b: Vec<u32> = (100..140).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let s = make_minibatch(&[&a, &b], &[0, 1], 10, 10, 20, 500, &BatchWindow, &mut rng).unwrap();
            assert!((10..=15).contains(&s.i));
            assert_eq!(s.positives[0], a[s.i..s.i + 10]);
            assert_eq!(s.positives[1], b[s.i..s.i + 10]);
            assert_eq!(s.negatives.len(), 20);
            assert!(s.negatives.iter().all(|w| !s.positives.iter().flatten().any(|p| p == w)));
        }
    }

    #[test]
    fn epoch_covers_each_eligible_document_once() {
        let lengths: Vec<usize> = (0..300).map(|i| (i * 37) % 200 + 1).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let plan = plan_epoch(&lengths, 10, 16, &mut rng).unwrap();
        let mut seen: Vec<usize> = plan.iter().flatten().copied().collect();
        seen.sort();
        assert_eq!(seen, eligible(&lengths, 10));
        for batch in &plan {
            assert!(batch.len() <= 16);
            let b = length_bucket(lengths[batch[0]]);
            assert!(batch.iter().all(|&d| length_bucket(lengths[d]) == b));
        }
        assert!(plan_epoch(&[3, 4], 10, 4, &mut rng).is_err());
    }
}
