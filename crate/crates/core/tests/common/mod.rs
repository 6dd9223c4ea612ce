//! Checks shared by the core integration tests and the CLI acceptance suite
//! (which includes this file by path). Each check returns a report instead
//! of asserting so callers can print or assert as they see fit.
#![allow(dead_code)]

use std::collections::BTreeSet;

use docembed::model::{EncoderModel, ModelConfig, Selection};
use docembed::tensor::{
    batch_norm, batch_norm_backward, conv1d_causal_backward, conv1d_causal_segmented, glu_layer,
    glu_layer_backward, max_k_pool_time, max_k_pool_time_backward, max_pool_time, max_pool_time_backward,
    BatchNormState, ConvKernelSet, Dense, GluNorms, Mode, Tensor2,
};
use docembed::text::WordTable;
use docembed::train::{batch_step, loss, TrainingSample};
use docembed_oracles as oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-4;
/// Denominator floor of the relative error, so that gradients which are zero
/// up to rounding compare on an absolute scale.
pub const REL_FLOOR: f64 = 1e-4;

#[derive(Clone, Debug, Default)]
pub struct GradReport {
    pub checked: usize,
    /// Coordinates whose perturbation changed a pooling winner.
    pub skipped: usize,
    pub max_rel: f64,
    pub worst: String,
}

impl GradReport {
    pub fn merge(&mut self, other: GradReport) {
        self.checked += other.checked;
        self.skipped += other.skipped;
        if other.max_rel > self.max_rel {
            self.max_rel = other.max_rel;
            self.worst = other.worst;
        }
    }

    fn record(&mut self, name: &str, idx: usize, analytic: f64, numeric: f64) {
        let rel = oracle::relative_error(analytic, numeric, REL_FLOOR);
        self.checked += 1;
        if rel > self.max_rel {
            self.max_rel = rel;
            self.worst = format!("{name}[{idx}]: analytic {analytic:e}, numeric {numeric:e}");
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor2<f64> {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor2::from_vec(rows, cols, data).unwrap()
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn weighted(t: &Tensor2<f64>, r: &Tensor2<f64>) -> f64 {
    t.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

/// Compares `analytic` against central differences of `f` around `x`.
fn compare(report: &mut GradReport, name: &str, analytic: &[f64], x: &[f64], f: impl FnMut(&[f64]) -> f64) {
    let numeric = oracle::central_difference(f, x, FD_STEP);
    for (i, (&a, &n)) in analytic.iter().zip(&numeric).enumerate() {
        report.record(name, i, a, n);
    }
}

fn random_kernels(rng: &mut ChaCha8Rng, out: usize, input: usize, width: usize) -> ConvKernelSet<f64> {
    let w = random_tensor(rng, out, input * width);
    ConvKernelSet::from_parts(w, random_vec(rng, out), input, width).unwrap()
}

fn with_weights(k: &ConvKernelSet<f64>, w: &[f64]) -> ConvKernelSet<f64> {
    let mut k = k.clone();
    k.weights.data_mut().copy_from_slice(w);
    k
}

fn with_bias(k: &ConvKernelSet<f64>, b: &[f64]) -> ConvKernelSet<f64> {
    let mut k = k.clone();
    k.bias.copy_from_slice(b);
    k
}

fn reshape(like: &Tensor2<f64>, data: &[f64]) -> Tensor2<f64> {
    Tensor2::from_vec(like.rows(), like.cols(), data.to_vec()).unwrap()
}

/// Causal convolution over two concatenated sequences.
pub fn conv_gradients(seed: u64) -> GradReport {
    let mut rng = rng(seed);
    let lengths = [5, 4];
    let x = random_tensor(&mut rng, 4, 9);
    let k = random_kernels(&mut rng, 3, 4, 3);
    let r = random_tensor(&mut rng, 3, 9);
    let (dx, grads) = conv1d_causal_backward(&x, &lengths, &k, &r).unwrap();
    let f = |x: &Tensor2<f64>, k: &ConvKernelSet<f64>| weighted(&conv1d_causal_segmented(x, &lengths, k).unwrap(), &r);
    let mut rep = GradReport::default();
    compare(&mut rep, "conv.x", dx.data(), x.data(), |v| f(&reshape(&x, v), &k));
    compare(&mut rep, "conv.w", grads.weights.data(), k.weights.data(), |v| f(&x, &with_weights(&k, v)));
    compare(&mut rep, "conv.b", &grads.bias, &k.bias, |v| f(&x, &with_bias(&k, v)));
    rep
}

fn random_norm(rng: &mut ChaCha8Rng, channels: usize) -> BatchNormState<f64> {
    let mut s = BatchNormState::new(channels);
    s.gamma = (0..channels).map(|_| rng.random_range(0.5..1.5)).collect();
    s.beta = random_vec(rng, channels);
    s
}

/// Train-mode batch normalization.
pub fn batch_norm_gradients(seed: u64) -> GradReport {
    let mut rng = rng(seed);
    let x = random_tensor(&mut rng, 3, 7);
    let state = random_norm(&mut rng, 3);
    let r = random_tensor(&mut rng, 3, 7);
    let (_, cache) = batch_norm(&x, &state, Mode::Train).unwrap();
    let (dx, dg, db) = batch_norm_backward(&cache, &state, &r);
    let f = |x: &Tensor2<f64>, s: &BatchNormState<f64>| weighted(&batch_norm(x, s, Mode::Train).unwrap().0, &r);
    let mut rep = GradReport::default();
    compare(&mut rep, "bn.x", dx.data(), x.data(), |v| f(&reshape(&x, v), &state));
    compare(&mut rep, "bn.gamma", &dg, &state.gamma, |v| {
        let mut s = state.clone();
        s.gamma.copy_from_slice(v);
        f(&x, &s)
    });
    compare(&mut rep, "bn.beta", &db, &state.beta, |v| {
        let mut s = state.clone();
        s.beta.copy_from_slice(v);
        f(&x, &s)
    });
    rep
}

/// One GLU layer, with or without batch normalization of its branches.
pub fn glu_gradients(seed: u64, normalized: bool) -> GradReport {
    let mut rng = rng(seed);
    let lengths = [4, 6];
    let x = random_tensor(&mut rng, 3, 10);
    let a = random_kernels(&mut rng, 4, 3, 2);
    let b = random_kernels(&mut rng, 4, 3, 2);
    let na = random_norm(&mut rng, 4);
    let nb = random_norm(&mut rng, 4);
    let r = random_tensor(&mut rng, 4, 10);
    let f = |x: &Tensor2<f64>, a: &ConvKernelSet<f64>, b: &ConvKernelSet<f64>, na: &BatchNormState<f64>, nb: &BatchNormState<f64>| {
        let n = normalized.then_some(GluNorms { linear: na, gate: nb });
        weighted(&glu_layer(x, &lengths, a, b, n, Mode::Train).unwrap().0, &r)
    };
    let norms = normalized.then_some(GluNorms { linear: &na, gate: &nb });
    let (_, cache) = glu_layer(&x, &lengths, &a, &b, norms, Mode::Train).unwrap();
    let (dx, g) = glu_layer_backward(&cache, &a, &b, norms, &r);
    let mut rep = GradReport::default();
    compare(&mut rep, "glu.x", dx.data(), x.data(), |v| f(&reshape(&x, v), &a, &b, &na, &nb));
    compare(&mut rep, "glu.W", g.linear.weights.data(), a.weights.data(), |v| {
        f(&x, &with_weights(&a, v), &b, &na, &nb)
    });
    compare(&mut rep, "glu.b", &g.linear.bias, &a.bias, |v| f(&x, &with_bias(&a, v), &b, &na, &nb));
    compare(&mut rep, "glu.V", g.gate.weights.data(), b.weights.data(), |v| {
        f(&x, &a, &with_weights(&b, v), &na, &nb)
    });
    compare(&mut rep, "glu.c", &g.gate.bias, &b.bias, |v| f(&x, &a, &with_bias(&b, v), &na, &nb));
    if let (Some((dga, dba)), Some((dgb, dbb))) = (&g.norm_linear, &g.norm_gate) {
        let mut set = |name: &str, analytic: &[f64], pick: fn(&mut BatchNormState<f64>) -> &mut Vec<f64>, gate: bool| {
            let base = if gate { nb.clone() } else { na.clone() };
            let mut probe = base.clone();
            let x0 = pick(&mut probe).clone();
            compare(&mut rep, name, analytic, &x0, |v| {
                let mut s = base.clone();
                pick(&mut s).copy_from_slice(v);
                if gate {
                    f(&x, &a, &b, &na, &s)
                } else {
                    f(&x, &a, &b, &s, &nb)
                }
            });
        };
        set("glu.linear_norm.gamma", dga, |s| &mut s.gamma, false);
        set("glu.linear_norm.beta", dba, |s| &mut s.beta, false);
        set("glu.gate_norm.gamma", dgb, |s| &mut s.gamma, true);
        set("glu.gate_norm.beta", dbb, |s| &mut s.beta, true);
    }
    rep
}

/// Fully connected output layer applied to a batch of columns.
pub fn dense_gradients(seed: u64) -> GradReport {
    let mut rng = rng(seed);
    let x = random_tensor(&mut rng, 10, 3);
    let layer = Dense {
        weights: random_tensor(&mut rng, 4, 10),
        bias: random_vec(&mut rng, 4),
    };
    let r = random_tensor(&mut rng, 4, 3);
    let (dx, g) = layer.backward(&x, &r);
    let f = |x: &Tensor2<f64>, l: &Dense<f64>| weighted(&l.forward(x).unwrap(), &r);
    let mut rep = GradReport::default();
    compare(&mut rep, "dense.x", dx.data(), x.data(), |v| f(&reshape(&x, v), &layer));
    compare(&mut rep, "dense.W", g.weights.data(), layer.weights.data(), |v| {
        let mut l = layer.clone();
        l.weights.data_mut().copy_from_slice(v);
        f(&x, &l)
    });
    compare(&mut rep, "dense.b", &g.bias, &layer.bias, |v| {
        let mut l = layer.clone();
        l.bias.copy_from_slice(v);
        f(&x, &l)
    });
    rep
}

/// Max and max-k pooling. Perturbations that change a winner are skipped;
/// the function is not differentiable there.
pub fn pooling_gradients(seed: u64) -> GradReport {
    let mut rng = rng(seed);
    let x = random_tensor(&mut rng, 4, 8);
    let mut rep = GradReport::default();
    for k in [1, 3, 10] {
        let r = random_tensor(&mut rng, 4, k);
        let top = max_k_pool_time(&x, k).unwrap();
        let dx = max_k_pool_time_backward(&r, &top.indices, x.cols());
        let numeric = oracle::central_difference(
            |v| weighted(&max_k_pool_time(&reshape(&x, v), k).unwrap().values, &r),
            x.data(),
            FD_STEP,
        );
        for (i, (&a, &n)) in dx.data().iter().zip(&numeric).enumerate() {
            if winners_move(&x, i, k) {
                rep.skipped += 1;
            } else {
                rep.record(&format!("max_k{k}.x"), i, a, n);
            }
        }
    }
    let r = random_vec(&mut rng, 4);
    let (_, argmax) = max_pool_time(&x).unwrap();
    let dx = max_pool_time_backward(&r, &argmax, x.cols());
    compare(&mut rep, "max.x", dx.data(), x.data(), |v| {
        let (vals, _) = max_pool_time(&reshape(&x, v)).unwrap();
        vals.iter().zip(&r).map(|(a, b)| a * b).sum()
    });
    rep
}

fn winners_move(x: &Tensor2<f64>, idx: usize, k: usize) -> bool {
    let base = max_k_pool_time(x, k).unwrap().indices;
    [FD_STEP, -FD_STEP].iter().any(|&d| {
        let mut p = x.clone();
        p.data_mut()[idx] += d;
        max_k_pool_time(&p, k).unwrap().indices != base
    })
}

/// Prediction loss with respect to the embedding and every word vector.
pub fn objective_gradients(seed: u64) -> GradReport {
    let mut rng = rng(seed);
    let (vocab, dim) = (12, 5);
    let words = WordTable {
        vectors: random_tensor(&mut rng, vocab, dim),
    };
    let emb = random_vec(&mut rng, dim);
    let positives = [1, 4, 4];
    let negatives = [2, 7, 9, 11];
    let out = loss(&emb, &positives, &negatives, &words).unwrap();
    let mut d_words = vec![0.0; vocab * dim];
    for (w, g) in &out.d_words {
        for (j, v) in g.iter().enumerate() {
            d_words[*w as usize * dim + j] += v;
        }
    }
    let mut rep = GradReport::default();
    compare(&mut rep, "loss.embedding", &out.d_embedding, &emb, |v| {
        loss(v, &positives, &negatives, &words).unwrap().loss
    });
    compare(&mut rep, "loss.words", &d_words, words.vectors.data(), |v| {
        let w = WordTable {
            vectors: reshape(&words.vectors, v),
        };
        loss(&emb, &positives, &negatives, &w).unwrap().loss
    });
    rep
}

/// The end-to-end fixture: 2 GLU layers of 8 channels, m = 6, kernel width
/// 2, max-3 pooling, two documents of 12 words, 3 positives, 5 negatives.
pub fn end_to_end_fixture(seed: u64) -> (EncoderModel<f64>, Vec<Vec<u32>>, TrainingSample) {
    let mut rng = rng(seed);
    let vocab = 20;
    let config = ModelConfig {
        dim: 6,
        layers: 2,
        channels: 8,
        kernel_width: 2,
        aggregation: "max_k_pool".into(),
        pool_k: 3,
        ..Default::default()
    };
    let words = WordTable::uniform(vocab, 6, 0.5, &mut rng);
    let mut model = EncoderModel::<f64>::build(&config, words, seed).unwrap();
    for block in &mut model.layers {
        for s in [&mut block.norm_linear, &mut block.norm_gate] {
            for g in &mut s.gamma {
                *g = rng.random_range(0.5..1.5);
            }
            for b in &mut s.beta {
                *b = rng.random_range(-0.5..0.5);
            }
        }
    }
    let docs: Vec<Vec<u32>> = (0..2)
        .map(|_| (0..12).map(|_| rng.random_range(1..vocab as u32)).collect())
        .collect();
    let h = 3;
    let i = rng.random_range(3..=12 - h);
    let positives: Vec<Vec<u32>> = docs.iter().map(|d| d[i..i + h].to_vec()).collect();
    let taken: BTreeSet<u32> = positives.iter().flatten().copied().collect();
    let mut pool: Vec<u32> = (1..vocab as u32).filter(|w| !taken.contains(w)).collect();
    let negatives = (0..5).map(|_| pool.swap_remove(rng.random_range(0..pool.len()))).collect();
    let sample = TrainingSample {
        doc_ids: vec![0, 1],
        i,
        positives,
        negatives,
    };
    (model, docs, sample)
}

/// Every parameter of the end-to-end fixture, word table included.
pub fn end_to_end_gradients(seed: u64) -> GradReport {
    let (mut model, docs, sample) = end_to_end_fixture(seed);
    let refs: Vec<&[u32]> = docs.iter().map(Vec::as_slice).collect();
    let eval = |m: &EncoderModel<f64>| -> (f64, Selection) {
        let (out, cache) = batch_step(m, &refs, &sample, Mode::Train).unwrap();
        (out.loss, cache.selection)
    };
    let (base, cache) = batch_step(&model, &refs, &sample, Mode::Train).unwrap();
    let analytic = base.grads.named(model.words.len(), model.words.dim());
    let mut rep = GradReport::default();
    for (g, (name, grad)) in analytic.iter().enumerate() {
        for idx in 0..grad.len() {
            let orig = model.named_params_mut()[g].1[idx];
            model.named_params_mut()[g].1[idx] = orig + FD_STEP;
            let (up, sel_up) = eval(&model);
            model.named_params_mut()[g].1[idx] = orig - FD_STEP;
            let (down, sel_down) = eval(&model);
            model.named_params_mut()[g].1[idx] = orig;
            if sel_up != cache.selection || sel_down != cache.selection {
                rep.skipped += 1;
                continue;
            }
            rep.record(name, idx, grad[idx], (up - down) / (2.0 * FD_STEP));
        }
    }
    rep
}

/// Every op check plus the end-to-end check for one seed.
pub fn all_gradients(seed: u64) -> GradReport {
    let mut rep = conv_gradients(seed);
    rep.merge(batch_norm_gradients(seed));
    rep.merge(glu_gradients(seed, false));
    rep.merge(glu_gradients(seed, true));
    rep.merge(dense_gradients(seed));
    rep.merge(pooling_gradients(seed));
    rep.merge(objective_gradients(seed));
    rep.merge(end_to_end_gradients(seed));
    rep
}

/// Outcome of comparing one kernel against its oracle on many instances.
#[derive(Clone, Debug, Default)]
pub struct OracleReport {
    pub instances: usize,
    pub max_abs: f64,
    /// Instances whose discrete output (winner positions, ranking) differed.
    pub mismatches: usize,
}

impl OracleReport {
    fn value(&mut self, a: f64, b: f64) {
        self.max_abs = self.max_abs.max((a - b).abs());
    }

    fn matrix(&mut self, ours: &Tensor2<f64>, theirs: &oracle::Matrix) {
        for (r, row) in theirs.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                self.value(ours.get(r, c), v);
            }
        }
    }
}

fn to_rows(t: &Tensor2<f64>) -> oracle::Matrix {
    (0..t.rows()).map(|r| t.row(r).to_vec()).collect()
}

fn segment(t: &Tensor2<f64>, start: usize, len: usize) -> Tensor2<f64> {
    t.columns(start, start + len)
}

fn kernel_rows(k: &ConvKernelSet<f64>) -> oracle::Kernels {
    (0..k.out_channels())
        .map(|o| {
            (0..k.in_channels())
                .map(|c| (0..k.width()).map(|t| k.weight(o, c, t)).collect())
                .collect()
        })
        .collect()
}

fn random_lengths(rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..rng.random_range(1..=3)).map(|_| rng.random_range(1..=8)).collect()
}

/// Batched causal convolution against the triple-loop oracle applied to
/// each sequence on its own.
pub fn conv_oracle(instances: u64) -> OracleReport {
    let mut rep = OracleReport::default();
    for seed in 0..instances {
        let mut rng = rng(1000 + seed);
        let lengths = random_lengths(&mut rng);
        let (cin, cout, width) = (rng.random_range(1..=5), rng.random_range(1..=5), rng.random_range(1..=4));
        let x = random_tensor(&mut rng, cin, lengths.iter().sum());
        let k = random_kernels(&mut rng, cout, cin, width);
        let ours = conv1d_causal_segmented(&x, &lengths, &k).unwrap();
        let mut start = 0;
        for &l in &lengths {
            let theirs = oracle::conv_causal(&to_rows(&segment(&x, start, l)), &kernel_rows(&k), &k.bias);
            rep.matrix(&segment(&ours, start, l), &theirs);
            start += l;
        }
        rep.instances += 1;
    }
    rep
}

/// GLU layers (plain and batch-normalized, train and eval mode) against the
/// composition of the convolution, normalization and gate oracles.
pub fn glu_oracle(instances: u64) -> OracleReport {
    let mut rep = OracleReport::default();
    for seed in 0..instances {
        let mut rng = rng(2000 + seed);
        let lengths = random_lengths(&mut rng);
        let total: usize = lengths.iter().sum();
        let (cin, cout, width) = (rng.random_range(1..=4), rng.random_range(1..=4), rng.random_range(1..=3));
        let x = random_tensor(&mut rng, cin, total);
        let a = random_kernels(&mut rng, cout, cin, width);
        let b = random_kernels(&mut rng, cout, cin, width);
        let mut na = random_norm(&mut rng, cout);
        let mut nb = random_norm(&mut rng, cout);
        let variant = seed % 3;
        let conv_all = |k: &ConvKernelSet<f64>| -> oracle::Matrix {
            let mut rows = vec![Vec::with_capacity(total); k.out_channels()];
            let mut start = 0;
            for &l in &lengths {
                let part = oracle::conv_causal(&to_rows(&segment(&x, start, l)), &kernel_rows(k), &k.bias);
                for (r, row) in rows.iter_mut().zip(part) {
                    r.extend(row);
                }
                start += l;
            }
            rows
        };
        let (ca, cb) = (conv_all(&a), conv_all(&b));
        let (ours, theirs) = match variant {
            0 => {
                let (y, _) = glu_layer(&x, &lengths, &a, &b, None, Mode::Train).unwrap();
                (y, oracle::gate(&ca, &cb))
            }
            1 if total >= 2 => {
                let norms = Some(GluNorms { linear: &na, gate: &nb });
                let (y, _) = glu_layer(&x, &lengths, &a, &b, norms, Mode::Train).unwrap();
                let eps = na.epsilon;
                let ya = oracle::batch_norm_rows(&ca, &na.gamma, &na.beta, eps);
                let yb = oracle::batch_norm_rows(&cb, &nb.gamma, &nb.beta, eps);
                (y, oracle::gate(&ya, &yb))
            }
            _ => {
                for s in [&mut na, &mut nb] {
                    let mean = random_vec(&mut rng, cout);
                    let var = (0..cout).map(|_| rng.random_range(0.2..2.0)).collect();
                    s.set_statistics(mean, var).unwrap();
                }
                let norms = Some(GluNorms { linear: &na, gate: &nb });
                let (y, _) = glu_layer(&x, &lengths, &a, &b, norms, Mode::Eval).unwrap();
                let eps = na.epsilon;
                let ya = oracle::batch_norm_fixed(&ca, &na.running_mean, &na.running_var, &na.gamma, &na.beta, eps);
                let yb = oracle::batch_norm_fixed(&cb, &nb.running_mean, &nb.running_var, &nb.gamma, &nb.beta, eps);
                (y, oracle::gate(&ya, &yb))
            }
        };
        rep.matrix(&ours, &theirs);
        rep.instances += 1;
    }
    rep
}

/// Max and max-k pooling, alone and through the registered aggregators on
/// batched input. Rows hold small integers so that ties are common.
pub fn pooling_oracle(instances: u64) -> OracleReport {
    use docembed::model::build_aggregator;
    let mut rep = OracleReport::default();
    for seed in 0..instances {
        let mut rng = rng(3000 + seed);
        let lengths = random_lengths(&mut rng);
        let total: usize = lengths.iter().sum();
        let rows = rng.random_range(1..=4);
        let k = rng.random_range(1..=5);
        let data = (0..rows * total).map(|_| rng.random_range(-3..=3) as f64).collect();
        let x = Tensor2::from_vec(rows, total, data).unwrap();

        let whole = max_k_pool_time(&x, k).unwrap();
        let (mx, arg) = max_pool_time(&x).unwrap();
        let mut bad = false;
        for r in 0..rows {
            let (vals, pos) = oracle::top_k_temporal(x.row(r), k);
            bad |= pos != whole.indices[r * k..(r + 1) * k];
            for (s, v) in vals.iter().enumerate() {
                rep.value(whole.values.get(r, s), *v);
            }
            let (v, i) = oracle::max_with_index(x.row(r));
            bad |= i != arg[r];
            rep.value(mx[r], v);
        }

        for (name, slots) in [("max_pool", 1), ("max_k_pool", k)] {
            let config = ModelConfig {
                aggregation: name.into(),
                pool_k: k,
                ..Default::default()
            };
            let agg = build_aggregator::<f64>(&config).unwrap();
            let pooled = agg.forward(&x, &lengths).unwrap();
            let mut start = 0;
            for (b, &l) in lengths.iter().enumerate() {
                let part = segment(&x, start, l);
                for r in 0..rows {
                    let (vals, _) = oracle::top_k_temporal(part.row(r), slots);
                    for (s, v) in vals.iter().enumerate() {
                        let got = pooled.values.get(r * slots + s, b);
                        bad |= got != *v;
                        rep.value(got, *v);
                    }
                }
                start += l;
            }
        }
        rep.mismatches += bad as usize;
        rep.instances += 1;
    }
    rep
}

/// Cosine retrieval against all-pairs selection. Vectors hold small integers
/// (duplicates included) so tie-breaking is exercised.
pub fn retrieve_oracle(instances: u64) -> OracleReport {
    use docembed::eval::EmbeddingIndex;
    let mut rep = OracleReport::default();
    for seed in 0..instances {
        let mut rng = rng(4000 + seed);
        let n = rng.random_range(1..=12);
        let dim = rng.random_range(1..=5);
        let mut vectors: Vec<Vec<f32>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-2..=2) as f32).collect())
            .collect();
        if n > 2 {
            vectors[n - 1] = vectors[0].clone();
        }
        let mut ids: Vec<usize> = (0..n).map(|i| i * 3 + 1).collect();
        ids.reverse();
        let mut query: Vec<f32> = (0..dim).map(|_| rng.random_range(-2..=2) as f32).collect();
        query[0] = 1.0;
        let exclude: Vec<usize> = ids.iter().copied().filter(|_| rng.random_bool(0.2)).collect();
        let top_k = rng.random_range(1..=n + 1);
        let index = EmbeddingIndex::build(ids.clone(), vectors.clone()).unwrap();
        let ours = index.retrieve(&query, top_k, &exclude).unwrap();
        let as64 = |v: &[f32]| v.iter().map(|&x| x as f64).collect::<Vec<_>>();
        let v64: Vec<Vec<f64>> = vectors.iter().map(|v| as64(v)).collect();
        let theirs = oracle::retrieve(&ids, &v64, &as64(&query), top_k, &exclude);
        let order = |r: &[(usize, f64)]| r.iter().map(|p| p.0).collect::<Vec<_>>();
        if order(&ours) != order(&theirs) {
            rep.mismatches += 1;
        }
        for (a, b) in ours.iter().zip(&theirs) {
            rep.value(a.1, b.1);
        }
        rep.instances += 1;
    }
    rep
}

/// χ² p-values of the sampling distributions.
#[derive(Clone, Debug)]
pub struct SamplingReport {
    pub draws: usize,
    pub prediction_point_p: f64,
    /// Dense (rejection-free) and sparse (rejection) negative sampling paths.
    pub negatives_dense_p: f64,
    pub negatives_sparse_p: f64,
    /// Every draw was distinct within its call and outside the exclusion set.
    pub negatives_valid: bool,
}

fn negative_counts(vocab: usize, exclude: &BTreeSet<u32>, per_call: usize, calls: usize, seed: u64) -> (Vec<u64>, bool) {
    use docembed::train::sample_negatives;
    let mut rng = rng(seed);
    let mut counts = vec![0u64; vocab];
    let mut valid = true;
    for _ in 0..calls {
        let draw = sample_negatives(vocab, exclude, per_call, &mut rng).unwrap();
        let distinct: BTreeSet<u32> = draw.iter().copied().collect();
        valid &= distinct.len() == per_call && distinct.is_disjoint(exclude);
        for w in draw {
            counts[w as usize] += 1;
        }
    }
    let kept = (0..vocab as u32)
        .filter(|w| !exclude.contains(w))
        .map(|w| counts[w as usize])
        .collect();
    (kept, valid)
}

pub fn sampling_statistics(draws: usize) -> SamplingReport {
    use docembed::train::{prediction_interval, sample_prediction_point};
    let mut rng = rng(77);
    let (len, h, eps) = (60, 10, 10);
    let (lo, hi) = prediction_interval(len, h, eps).unwrap();
    let mut counts = vec![0u64; hi - lo + 1];
    for _ in 0..draws {
        let i = sample_prediction_point(len, h, eps, &mut rng).unwrap();
        counts[i - lo] += 1;
    }
    let prediction_point_p = oracle::chi_square_uniform(&counts);

    let per_call = 50;
    let dense_exclude: BTreeSet<u32> = (0..200).step_by(7).collect();
    let (dense, ok_dense) = negative_counts(200, &dense_exclude, per_call, draws / per_call, 78);
    let sparse_exclude: BTreeSet<u32> = (0..5000).step_by(13).collect();
    let (sparse, ok_sparse) = negative_counts(5000, &sparse_exclude, per_call, draws / per_call, 79);
    SamplingReport {
        draws,
        prediction_point_p,
        negatives_dense_p: oracle::chi_square_uniform(&dense),
        negatives_sparse_p: oracle::chi_square_uniform(&sparse),
        negatives_valid: ok_dense && ok_sparse,
    }
}

/// Over several epochs of `plan_epoch` on random lengths, whether every
/// eligible document lands in exactly one batch, no ineligible one appears,
/// batches respect the size limit and stay within one length bucket.
pub fn epoch_accounting(epochs: usize) -> bool {
    use docembed::train::{eligible, length_bucket, plan_epoch};
    let mut rng = rng(80);
    let lengths: Vec<usize> = (0..500).map(|_| rng.random_range(1..300)).collect();
    let (h, batch) = (10, 16);
    let expected = eligible(&lengths, h);
    (0..epochs).all(|_| {
        let plan = plan_epoch(&lengths, h, batch, &mut rng).unwrap();
        let mut seen: Vec<usize> = plan.iter().flatten().copied().collect();
        seen.sort_unstable();
        let buckets_ok = plan.iter().all(|b| {
            !b.is_empty() && b.len() <= batch && b.iter().all(|&d| length_bucket(lengths[d]) == length_bucket(lengths[b[0]]))
        });
        seen == expected && buckets_ok
    })
}
