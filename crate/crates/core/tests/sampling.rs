mod common;

use common::*;
use docembed::model::{EncoderModel, ModelConfig};
use docembed::text::WordTable;
use docembed::train::{eligible, fit, TrainConfig};
use rand::Rng;

#[test]
fn draws_are_uniform() {
    let rep = sampling_statistics(200_000);
    assert!(rep.prediction_point_p > 0.01, "{rep:?}");
    assert!(rep.negatives_dense_p > 0.01, "{rep:?}");
    assert!(rep.negatives_sparse_p > 0.01, "{rep:?}");
    assert!(rep.negatives_valid, "{rep:?}");
}

#[test]
fn plans_cover_each_eligible_document_once() {
    assert!(epoch_accounting(20));
}

#[test]
fn fit_counts_each_eligible_document_once_per_epoch() {
    let mut r = rng(5);
    let docs: Vec<Vec<u32>> = (0..37)
        .map(|_| (0..r.random_range(3..30)).map(|_| r.random_range(1..40)).collect())
        .collect();
    let refs: Vec<&[u32]> = docs.iter().map(Vec::as_slice).collect();
    let config = ModelConfig {
        dim: 4,
        layers: 1,
        channels: 3,
        kernel_width: 2,
        aggregation: "max_pool".into(),
        ..Default::default()
    };
    let mut model = EncoderModel::<f32>::build(&config, WordTable::random(40, 4, &mut r), 1).unwrap();
    let train = TrainConfig {
        h: 4,
        epsilon: 2,
        neg_samples: 3,
        batch_size: 5,
        epochs: 3,
        ..Default::default()
    };
    let lengths: Vec<usize> = docs.iter().map(Vec::len).collect();
    let expected = eligible(&lengths, train.h).len();
    assert!(expected < docs.len());
    let history = fit(&mut model, &refs, &train, |_, _| Ok(())).unwrap();
    assert!(history.iter().all(|e| e.docs == expected), "{history:?}");
}
