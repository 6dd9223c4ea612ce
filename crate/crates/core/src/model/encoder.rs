use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::tensor::{
    glu_layer, glu_layer_backward, BatchNormState, ConvKernelSet, Dense, DenseGrads, GluCache,
    GluGrads, GluNorms, Mode, Optimizer, ParamGroup, Scalar, Tensor2, TensorError,
};
use crate::text::{Document, WordTable};

use super::{build_aggregator, Aggregator, ModelConfig, ModelError, Selection};

/// One gated convolution layer with a batch-norm state per branch.
#[derive(Clone, Debug, PartialEq)]
pub struct GluBlock<T> {
    pub linear: ConvKernelSet<T>,
    pub gate: ConvKernelSet<T>,
    pub norm_linear: BatchNormState<T>,
    pub norm_gate: BatchNormState<T>,
}

impl<T: Scalar> GluBlock<T> {
    fn norms(&self, enabled: bool) -> Option<GluNorms<'_, T>> {
        enabled.then_some(GluNorms {
            linear: &self.norm_linear,
            gate: &self.norm_gate,
        })
    }
}

#[derive(Debug)]
pub struct EncoderModel<T: Scalar> {
    config: ModelConfig,
    pub layers: Vec<GluBlock<T>>,
    pub output: Dense<T>,
    /// Shared between the encoder input and the prediction targets.
    pub words: WordTable<T>,
    aggregator: Box<dyn Aggregator<T>>,
}

impl<T: Scalar> Clone for EncoderModel<T> {
    fn clone(&self) -> Self {
        Self {
            config: self.config.clone(),
            layers: self.layers.clone(),
            output: self.output.clone(),
            words: self.words.clone(),
            aggregator: build_aggregator(&self.config).expect("config was validated"),
        }
    }
}

/// Everything the backward pass needs from a train-mode forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    /// Word id feeding each input column; `None` for padding.
    pub columns: Vec<Option<u32>>,
    pub lengths: Vec<usize>,
    pub glu: Vec<GluCache<T>>,
    pub pooled: Tensor2<T>,
    pub selection: Selection,
}

#[derive(Clone, Debug)]
pub struct ModelGrads<T> {
    pub layers: Vec<GluGrads<T>>,
    pub output: DenseGrads<T>,
    /// Sparse gradient of the word table, keyed by word id.
    pub words: BTreeMap<u32, Vec<T>>,
}

impl<T: Scalar> ModelGrads<T> {
    pub fn add_word_grad(&mut self, id: u32, grad: &[T]) {
        let dim = grad.len();
        let slot = self.words.entry(id).or_insert_with(|| vec![T::zero(); dim]);
        for (s, &g) in slot.iter_mut().zip(grad) {
            *s += g;
        }
    }

    /// Flattened gradients in the order of [`EncoderModel::named_params`];
    /// the word table gradient is expanded to a dense `vocab × dim` buffer.
    pub fn named(&self, vocab: usize, dim: usize) -> Vec<(String, Vec<T>)> {
        let mut out = Vec::new();
        for (l, g) in self.layers.iter().enumerate() {
            out.push((format!("layer{l}.linear.weight"), g.linear.weights.data().to_vec()));
            out.push((format!("layer{l}.linear.bias"), g.linear.bias.clone()));
            out.push((format!("layer{l}.gate.weight"), g.gate.weights.data().to_vec()));
            out.push((format!("layer{l}.gate.bias"), g.gate.bias.clone()));
            if let (Some((ga, ba)), Some((gg, bg))) = (&g.norm_linear, &g.norm_gate) {
                out.push((format!("layer{l}.linear_norm.gamma"), ga.clone()));
                out.push((format!("layer{l}.linear_norm.beta"), ba.clone()));
                out.push((format!("layer{l}.gate_norm.gamma"), gg.clone()));
                out.push((format!("layer{l}.gate_norm.beta"), bg.clone()));
            }
        }
        out.push(("output.weight".into(), self.output.weights.data().to_vec()));
        out.push(("output.bias".into(), self.output.bias.clone()));
        let mut words = vec![T::zero(); vocab * dim];
        for (&id, g) in &self.words {
            let start = id as usize * dim;
            words[start..start + dim].copy_from_slice(g);
        }
        out.push(("words".into(), words));
        out
    }
}

/// The input words that produced one pooled activation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SalientSpan {
    pub channel: usize,
    /// 1-based position of the winning column.
    pub position: usize,
    /// Inclusive 1-based word range seen by that column.
    pub start: usize,
    pub end: usize,
}

fn uniform_fill<T: Scalar, R: Rng>(values: &mut [T], bound: f64, rng: &mut R) {
    for v in values {
        *v = T::of(rng.random_range(-bound..=bound));
    }
}

impl<T: Scalar> EncoderModel<T> {
    /// Fan-in scaled uniform initialisation `±1/√fan_in`, zero biases, unit
    /// batch-norm scale.
    pub fn build(config: &ModelConfig, words: WordTable<T>, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        if words.dim() != config.dim {
            return Err(ModelError::Config(format!(
                "word vectors have dimension {}, model expects {}",
                words.dim(),
                config.dim
            )));
        }
        let aggregator = build_aggregator::<T>(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.kernel_width;
        let mut layers = Vec::with_capacity(config.layers);
        for l in 0..config.layers {
            let input = if l == 0 { config.dim } else { config.channels };
            let bound = 1.0 / ((input * d) as f64).sqrt();
            let mut linear = ConvKernelSet::new(config.channels, input, d)?;
            let mut gate = ConvKernelSet::new(config.channels, input, d)?;
            uniform_fill(linear.weights.data_mut(), bound, &mut rng);
            uniform_fill(gate.weights.data_mut(), bound, &mut rng);
            layers.push(GluBlock {
                linear,
                gate,
                norm_linear: BatchNormState::new(config.channels),
                norm_gate: BatchNormState::new(config.channels),
            });
        }
        let pooled = aggregator.output_width(config.channels);
        let mut output = Dense::zeros(config.dim, pooled);
        uniform_fill(output.weights.data_mut(), 1.0 / (pooled as f64).sqrt(), &mut rng);
        Ok(Self {
            config: config.clone(),
            layers,
            output,
            words,
            aggregator,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn aggregator(&self) -> &dyn Aggregator<T> {
        self.aggregator.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    /// Trainable values excluding the word table.
    pub fn parameter_count(&self) -> usize {
        self.named_params()
            .iter()
            .filter(|(n, _, _)| n != "words")
            .map(|(_, _, v)| v.len())
            .sum()
    }

    /// The `m × (j − i + 1)` matrix of word vectors for words `i..=j`
    /// (1-based, inclusive).
    pub fn lookup(&self, doc: &[u32], i: usize, j: usize) -> Result<Tensor2<T>, ModelError> {
        if i < 1 || i > j || j > doc.len() {
            return Err(ModelError::Range { i, j, len: doc.len() });
        }
        let ids: Vec<Option<u32>> = doc[i - 1..j].iter().map(|&w| Some(w)).collect();
        self.gather_words(&ids)
    }

    fn gather_words(&self, ids: &[Option<u32>]) -> Result<Tensor2<T>, ModelError> {
        let m = self.words.dim();
        let mut t = Tensor2::zeros(ids.len(), m);
        for (c, id) in ids.iter().enumerate() {
            if let Some(w) = *id {
                if w as usize >= self.words.len() {
                    return Err(ModelError::WordOutOfRange {
                        id: w,
                        len: self.words.len(),
                    });
                }
                t.row_mut(c).copy_from_slice(self.words.row(w));
            }
        }
        Ok(t.transpose())
    }

    fn input_columns(&self, seqs: &[&[u32]]) -> Result<(Vec<Option<u32>>, Vec<usize>), ModelError> {
        if seqs.is_empty() || seqs.iter().any(|s| s.is_empty()) {
            return Err(ModelError::EmptyDocument);
        }
        let mut columns = Vec::new();
        let mut lengths = Vec::with_capacity(seqs.len());
        for s in seqs {
            match self.aggregator.input_len() {
                Some(len) if s.len() >= len => columns.extend(s[..len].iter().map(|&w| Some(w))),
                Some(len) => {
                    columns.extend(std::iter::repeat_n(None, len - s.len()));
                    columns.extend(s.iter().map(|&w| Some(w)));
                }
                None => columns.extend(s.iter().map(|&w| Some(w))),
            }
            lengths.push(self.aggregator.input_len().unwrap_or(s.len()));
        }
        Ok((columns, lengths))
    }

    /// Embeds a batch of word sequences; returns `p × batch` and the cache
    /// for [`Self::backward`]. Sequences never interact except through the
    /// batch statistics of train mode.
    pub fn forward_sequences(
        &self,
        seqs: &[&[u32]],
        mode: Mode,
    ) -> Result<(Tensor2<T>, ForwardCache<T>), ModelError> {
        let (columns, lengths) = self.input_columns(seqs)?;
        let x = self.gather_words(&columns)?;
        let bn = self.config.batch_norm;
        let mut outs: Vec<Tensor2<T>> = Vec::with_capacity(self.layers.len());
        let mut caches = Vec::with_capacity(self.layers.len());
        for (l, block) in self.layers.iter().enumerate() {
            let input = if l == 0 { &x } else { &outs[l - 1] };
            let (mut out, cache) =
                glu_layer(input, &lengths, &block.linear, &block.gate, block.norms(bn), mode)?;
            if let Some(src) = self.config.residual_source(l + 1) {
                out.add_assign(&outs[src - 1]);
            }
            caches.push(cache);
            outs.push(out);
        }
        let last = outs.pop().expect("at least one layer");
        drop(outs);
        let pooled = self.aggregator.forward(&last, &lengths)?;
        let emb = self.output.forward(&pooled.values)?;
        Ok((
            emb,
            ForwardCache {
                columns,
                lengths,
                glu: caches,
                pooled: pooled.values,
                selection: pooled.selection,
            },
        ))
    }

    /// Gradients of all parameters given `d_emb = ∂L/∂embeddings`.
    pub fn backward(&self, cache: &ForwardCache<T>, d_emb: &Tensor2<T>) -> ModelGrads<T> {
        let n = self.layers.len();
        let bn = self.config.batch_norm;
        let (d_pooled, output) = self.output.backward(&cache.pooled, d_emb);
        let mut d_outs: Vec<Option<Tensor2<T>>> = vec![None; n];
        d_outs[n - 1] = Some(self.aggregator.backward(
            &cache.selection,
            &d_pooled,
            &cache.lengths,
            self.config.channels,
        ));
        let accumulate = |slot: &mut Option<Tensor2<T>>, g: &Tensor2<T>| match slot {
            Some(s) => s.add_assign(g),
            None => *slot = Some(g.clone()),
        };
        let mut layer_grads = Vec::with_capacity(n);
        let mut d_input = None;
        for l in (0..n).rev() {
            let d = d_outs[l].take().expect("every layer output reaches the loss");
            if let Some(src) = self.config.residual_source(l + 1) {
                accumulate(&mut d_outs[src - 1], &d);
            }
            let block = &self.layers[l];
            let (dx, g) = glu_layer_backward(&cache.glu[l], &block.linear, &block.gate, block.norms(bn), &d);
            if l > 0 {
                accumulate(&mut d_outs[l - 1], &dx);
            } else {
                d_input = Some(dx);
            }
            layer_grads.push(g);
        }
        layer_grads.reverse();
        let d_input = d_input.expect("layer 0 visited").transpose();
        let mut grads = ModelGrads {
            layers: layer_grads,
            output,
            words: BTreeMap::new(),
        };
        for (c, id) in cache.columns.iter().enumerate() {
            if let Some(w) = *id {
                grads.add_word_grad(w, d_input.row(c));
            }
        }
        grads
    }

    /// Folds the batch statistics of a train-mode pass into the running
    /// averages used by eval mode.
    pub fn commit_statistics(&mut self, cache: &ForwardCache<T>) {
        for (block, c) in self.layers.iter_mut().zip(&cache.glu) {
            if let (Some(a), Some(b)) = (&c.norm_linear, &c.norm_gate) {
                block.norm_linear.update_running(a);
                block.norm_gate.update_running(b);
            }
        }
    }

    /// Eval-mode embedding of one sequence (or any prefix of a document).
    pub fn embed_sequence(&self, ids: &[u32]) -> Result<Vec<T>, ModelError> {
        let (emb, _) = self.forward_sequences(&[ids], Mode::Eval)?;
        Ok(emb.column(0))
    }

    pub fn embed_document(&self, doc: &Document) -> Result<Vec<T>, ModelError> {
        self.embed_sequence(&doc.word_ids)
    }

    /// Eval-mode embeddings of many sequences, `batch_size` per forward pass,
    /// batches spread over the worker pool.
    pub fn embed_many(&self, seqs: &[&[u32]], batch_size: usize) -> Result<Vec<Vec<T>>, ModelError> {
        let chunks: Vec<Vec<Vec<T>>> = seqs
            .par_chunks(batch_size.max(1))
            .map(|chunk| {
                let (emb, _) = self.forward_sequences(chunk, Mode::Eval)?;
                Ok((0..emb.cols()).map(|c| emb.column(c)).collect())
            })
            .collect::<Result<_, ModelError>>()?;
        Ok(chunks.into_iter().flatten().collect())
    }

    /// For each pooled value, the span of input words that the winning
    /// activation could see.
    pub fn trace_salient_words(&self, ids: &[u32]) -> Result<Vec<SalientSpan>, ModelError> {
        let slots = self
            .aggregator
            .trace_slots()
            .ok_or_else(|| ModelError::TraceUnsupported(self.aggregator.name().into()))?;
        let (_, cache) = self.forward_sequences(&[ids], Mode::Eval)?;
        let reach = self.config.receptive_field();
        let Selection::Columns(cols) = &cache.selection else {
            return Err(ModelError::TraceUnsupported(self.aggregator.name().into()));
        };
        Ok(cols[0]
            .iter()
            .enumerate()
            .filter_map(|(j, c)| {
                c.map(|c| SalientSpan {
                    channel: j / slots,
                    position: c + 1,
                    start: (c + 2).saturating_sub(reach).max(1),
                    end: c + 1,
                })
            })
            .collect())
    }

    /// Every trainable buffer with its name and shape, in a fixed order.
    pub fn named_params(&self) -> Vec<(String, Vec<usize>, &[T])> {
        let mut out: Vec<(String, Vec<usize>, &[T])> = Vec::new();
        for (l, b) in self.layers.iter().enumerate() {
            let shape = vec![b.linear.weights.rows(), b.linear.weights.cols()];
            let r = b.linear.bias.len();
            out.push((format!("layer{l}.linear.weight"), shape.clone(), b.linear.weights.data()));
            out.push((format!("layer{l}.linear.bias"), vec![r], &b.linear.bias));
            out.push((format!("layer{l}.gate.weight"), shape, b.gate.weights.data()));
            out.push((format!("layer{l}.gate.bias"), vec![r], &b.gate.bias));
            if self.config.batch_norm {
                out.push((format!("layer{l}.linear_norm.gamma"), vec![r], &b.norm_linear.gamma));
                out.push((format!("layer{l}.linear_norm.beta"), vec![r], &b.norm_linear.beta));
                out.push((format!("layer{l}.gate_norm.gamma"), vec![r], &b.norm_gate.gamma));
                out.push((format!("layer{l}.gate_norm.beta"), vec![r], &b.norm_gate.beta));
            }
        }
        let (o, i) = self.output.weights.shape();
        out.push(("output.weight".into(), vec![o, i], self.output.weights.data()));
        out.push(("output.bias".into(), vec![o], &self.output.bias));
        out.push(("words".into(), vec![self.words.len(), self.words.dim()], self.words.vectors.data()));
        out
    }

    /// Mutable view of [`Self::named_params`], same order.
    pub fn named_params_mut(&mut self) -> Vec<(String, &mut [T])> {
        let bn = self.config.batch_norm;
        let mut out: Vec<(String, &mut [T])> = Vec::new();
        for (l, b) in self.layers.iter_mut().enumerate() {
            out.push((format!("layer{l}.linear.weight"), b.linear.weights.data_mut()));
            out.push((format!("layer{l}.linear.bias"), &mut b.linear.bias));
            out.push((format!("layer{l}.gate.weight"), b.gate.weights.data_mut()));
            out.push((format!("layer{l}.gate.bias"), &mut b.gate.bias));
            if bn {
                out.push((format!("layer{l}.linear_norm.gamma"), &mut b.norm_linear.gamma));
                out.push((format!("layer{l}.linear_norm.beta"), &mut b.norm_linear.beta));
                out.push((format!("layer{l}.gate_norm.gamma"), &mut b.norm_gate.gamma));
                out.push((format!("layer{l}.gate_norm.beta"), &mut b.norm_gate.beta));
            }
        }
        out.push(("output.weight".into(), self.output.weights.data_mut()));
        out.push(("output.bias".into(), &mut self.output.bias));
        out.push(("words".into(), self.words.vectors.data_mut()));
        out
    }

    /// One optimizer update of every parameter group, word table included.
    pub fn apply_step(
        &mut self,
        grads: &ModelGrads<T>,
        optimizer: &mut dyn Optimizer<T>,
    ) -> Result<(), TensorError> {
        let flat = grads.named(self.words.len(), self.words.dim());
        let mut params = self.named_params_mut();
        if params.len() != flat.len() {
            return Err(TensorError::Shape {
                op: "apply_step",
                expected: format!("{} parameter groups", params.len()),
                found: flat.len().to_string(),
            });
        }
        let mut groups: Vec<ParamGroup<'_, T>> = params
            .iter_mut()
            .zip(&flat)
            .map(|((name, values), (_, g))| ParamGroup {
                name: name.as_str(),
                values: &mut **values,
                grads: g.as_slice(),
            })
            .collect();
        optimizer.step(&mut groups)
    }

    pub fn cast<U: Scalar>(&self) -> EncoderModel<U> {
        EncoderModel {
            config: self.config.clone(),
            layers: self
                .layers
                .iter()
                .map(|b| GluBlock {
                    linear: b.linear.cast(),
                    gate: b.gate.cast(),
                    norm_linear: b.norm_linear.cast(),
                    norm_gate: b.norm_gate.cast(),
                })
                .collect(),
            output: self.output.cast(),
            words: self.words.cast(),
            aggregator: build_aggregator(&self.config).expect("config was validated"),
        }
    }

    /// Makes eval mode usable on an untrained model by setting every
    /// batch-norm state to mean 0, variance 1.
    pub fn reset_statistics(&mut self) {
        let c = self.config.channels;
        for b in &mut self.layers {
            for s in [&mut b.norm_linear, &mut b.norm_gate] {
                s.set_statistics(vec![T::zero(); c], vec![T::one(); c])
                    .expect("channel count matches");
            }
        }
    }
}
