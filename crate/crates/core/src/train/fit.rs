use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{EncoderModel, ModelGrads};
use crate::tensor::{build_optimizer, Mode, Optimizer, Scalar, Tensor2};

use super::batching::{eligible, make_minibatch, plan_epoch, TrainingSample};
use super::objective::loss;
use super::sampling::negative_sampler;
use super::{TrainConfig, TrainError};

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Mean over batches of the per-batch loss (sum over documents / batch size).
    pub mean_loss: f64,
    pub docs: usize,
    pub batches: usize,
    /// Prefix words fed through the encoder.
    pub tokens: usize,
    pub seconds: f64,
}

impl EpochStats {
    pub fn tokens_per_sec(&self) -> f64 {
        if self.seconds > 0.0 {
            self.tokens as f64 / self.seconds
        } else {
            0.0
        }
    }

    /// `epoch<TAB>mean_loss<TAB>docs<TAB>tokens_per_sec`.
    pub fn log_line(&self) -> String {
        format!(
            "{}\t{:.6}\t{}\t{:.1}",
            self.epoch,
            self.mean_loss,
            self.docs,
            self.tokens_per_sec()
        )
    }
}

#[derive(Clone, Debug)]
pub struct StepOutcome<T> {
    /// Batch loss: summed over targets and documents, divided by batch size.
    pub loss: T,
    pub grads: ModelGrads<T>,
}

/// Loss and gradients of every parameter (word table included) for one
/// sample, without touching the model. `docs[b]` must be the full document
/// of `sample.doc_ids[b]`.
pub fn batch_step<T: Scalar>(
    model: &EncoderModel<T>,
    docs: &[&[u32]],
    sample: &TrainingSample,
    mode: Mode,
) -> Result<(StepOutcome<T>, crate::model::ForwardCache<T>), TrainError> {
    let prefixes: Vec<&[u32]> = docs.iter().map(|d| &d[..sample.i]).collect();
    let (emb, cache) = model.forward_sequences(&prefixes, mode)?;
    let scale = T::one() / T::of(docs.len() as f64);
    let mut total = T::zero();
    let mut d_emb = Tensor2::zeros(emb.rows(), emb.cols());
    let mut head = Vec::new();
    for (b, positives) in sample.positives.iter().enumerate() {
        let out = loss(&emb.column(b), positives, &sample.negatives, &model.words)?;
        total += out.loss;
        for (r, g) in out.d_embedding.into_iter().enumerate() {
            d_emb.set(r, b, g * scale);
        }
        head.extend(out.d_words);
    }
    let mut grads = model.backward(&cache, &d_emb);
    for (w, mut g) in head {
        g.iter_mut().for_each(|v| *v *= scale);
        grads.add_word_grad(w, &g);
    }
    Ok((
        StepOutcome {
            loss: total * scale,
            grads,
        },
        cache,
    ))
}

/// Trains `model` for `config.epochs` epochs over `docs`. `on_epoch` sees the
/// statistics and the model after every epoch (used for logging and
/// checkpoints); an error from it stops training.
pub fn fit<T: Scalar>(
    model: &mut EncoderModel<T>,
    docs: &[&[u32]],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats, &EncoderModel<T>) -> Result<(), TrainError>,
) -> Result<Vec<EpochStats>, TrainError> {
    config.validate()?;
    let sampler = negative_sampler(&config.negative_sampler)?;
    let mut optimizer: Box<dyn Optimizer<T>> = build_optimizer(&config.optimizer)?;
    let lengths: Vec<usize> = docs.iter().map(|d| d.len()).collect();
    let usable = eligible(&lengths, config.h).len();
    if usable < docs.len() {
        log::warn!(
            "skipping {} of {} documents with at most h + 1 = {} words",
            docs.len() - usable,
            docs.len(),
            config.h + 1
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vocab = model.words.len();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let started = Instant::now();
        let plan = plan_epoch(&lengths, config.h, config.batch_size, &mut rng)?;
        let (mut loss_sum, mut tokens, mut seen) = (0.0, 0, 0);
        for (b, ids) in plan.iter().enumerate() {
            let batch: Vec<&[u32]> = ids.iter().map(|&d| docs[d]).collect();
            let sample = make_minibatch(
                &batch,
                ids,
                config.h,
                config.epsilon,
                config.neg_samples,
                vocab,
                sampler,
                &mut rng,
            )?;
            let (step, cache) = batch_step(model, &batch, &sample, Mode::Train)?;
            if !step.loss.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    epoch,
                    batch: b,
                    doc_ids: sample.doc_ids,
                    i: sample.i,
                });
            }
            model.apply_step(&step.grads, optimizer.as_mut())?;
            model.commit_statistics(&cache);
            loss_sum += step.loss.as_f64();
            tokens += sample.i * ids.len();
            seen += ids.len();
        }
        let stats = EpochStats {
            epoch,
            mean_loss: loss_sum / plan.len() as f64,
            docs: seen,
            batches: plan.len(),
            tokens,
            seconds: started.elapsed().as_secs_f64(),
        };
        log::info!("{}", stats.log_line());
        on_epoch(&stats, model)?;
        history.push(stats);
    }
    Ok(history)
}
