//! One-hidden-layer tanh network trained on frozen embeddings.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::tensor::{row_argmax, sgd_momentum_step, Dense, SgdMomentumState, Tensor2};

use super::EvalError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Shift and scale every input feature to zero mean, unit variance
    /// using training-set statistics.
    pub standardize: bool,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            hidden: 100,
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 100,
            epochs: 50,
            seed: 7,
            standardize: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShallowClassifier {
    pub hidden: Dense<f32>,
    pub output: Dense<f32>,
    pub shift: Vec<f32>,
    pub scale: Vec<f32>,
}

impl ShallowClassifier {
    pub fn inputs(&self) -> usize {
        self.hidden.inputs()
    }

    pub fn classes(&self) -> usize {
        self.output.outputs()
    }

    fn matrix(&self, x: &[Vec<f32>]) -> Result<Tensor2<f32>, EvalError> {
        if let Some(bad) = x.iter().find(|v| v.len() != self.inputs()) {
            return Err(EvalError::DimensionMismatch {
                expected: self.inputs(),
                found: bad.len(),
            });
        }
        let mut m = Tensor2::zeros(self.inputs(), x.len());
        for (c, v) in x.iter().enumerate() {
            for (r, &val) in v.iter().enumerate() {
                m.set(r, c, (val - self.shift[r]) * self.scale[r]);
            }
        }
        Ok(m)
    }

    fn forward(&self, x: &Tensor2<f32>) -> (Tensor2<f32>, Tensor2<f32>) {
        let hidden = self.hidden.forward(x).expect("shape checked").map(f32::tanh);
        let logits = self.output.forward(&hidden).expect("shape checked");
        (hidden, logits)
    }

    /// Class with the largest score; ties go to the lowest index.
    pub fn predict(&self, x: &[Vec<f32>]) -> Result<Vec<usize>, EvalError> {
        let (_, logits) = self.forward(&self.matrix(x)?);
        let t = logits.transpose();
        Ok((0..t.rows()).map(|r| row_argmax(t.row(r))).collect())
    }
}

/// Column-wise softmax probabilities.
fn softmax_columns(logits: &Tensor2<f32>) -> Tensor2<f32> {
    let mut t = logits.transpose();
    for r in 0..t.rows() {
        let row = t.row_mut(r);
        let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    t.transpose()
}

fn init_dense<R: Rng>(outputs: usize, inputs: usize, rng: &mut R) -> Dense<f32> {
    let mut d = Dense::zeros(outputs, inputs);
    let bound = 1.0 / (inputs as f32).sqrt();
    for w in d.weights.data_mut() {
        *w = rng.random_range(-bound..=bound);
    }
    d
}

/// Trains with softmax cross-entropy and SGD with momentum. Returns the
/// classifier and the accuracy on `(x, labels)` after each epoch.
pub fn train_classifier(
    x: &[Vec<f32>],
    labels: &[usize],
    config: &ClassifierConfig,
) -> Result<(ShallowClassifier, Vec<f64>), EvalError> {
    if x.is_empty() {
        return Err(EvalError::Empty("training set"));
    }
    if x.len() != labels.len() {
        return Err(EvalError::DimensionMismatch {
            expected: x.len(),
            found: labels.len(),
        });
    }
    let dim = x[0].len();
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut present = labels.to_vec();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(EvalError::SingleClass);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (mut shift, mut scale) = (vec![0.0f32; dim], vec![1.0f32; dim]);
    if config.standardize {
        for r in 0..dim {
            let n = x.len() as f64;
            let mean = x.iter().map(|v| v[r] as f64).sum::<f64>() / n;
            let var = x.iter().map(|v| (v[r] as f64 - mean).powi(2)).sum::<f64>() / n;
            shift[r] = mean as f32;
            scale[r] = if var > 1e-12 { (1.0 / var.sqrt()) as f32 } else { 1.0 };
        }
    }
    let mut clf = ShallowClassifier {
        hidden: init_dense(config.hidden, dim, &mut rng),
        output: init_dense(classes, config.hidden, &mut rng),
        shift,
        scale,
    };
    let inputs = clf.matrix(x)?;
    let mut states = vec![SgdMomentumState::<f32>::default(); 4];
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut curve = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size.max(1)) {
            let mut xb = Tensor2::zeros(dim, chunk.len());
            for (c, &i) in chunk.iter().enumerate() {
                for r in 0..dim {
                    xb.set(r, c, inputs.get(r, i));
                }
            }
            let (hidden, logits) = clf.forward(&xb);
            let mut d_logits = softmax_columns(&logits);
            let inv = 1.0 / chunk.len() as f32;
            for (c, &i) in chunk.iter().enumerate() {
                let v = d_logits.get(labels[i], c);
                d_logits.set(labels[i], c, v - 1.0);
            }
            d_logits.data_mut().iter_mut().for_each(|v| *v *= inv);
            let (mut d_hidden, g_out) = clf.output.backward(&hidden, &d_logits);
            for (d, &h) in d_hidden.data_mut().iter_mut().zip(hidden.data()) {
                *d *= 1.0 - h * h;
            }
            let (_, g_hidden) = clf.hidden.backward(&xb, &d_hidden);
            let (lr, mu) = (config.learning_rate, config.momentum);
            let steps: [(&str, &mut [f32], &[f32]); 4] = [
                ("hidden.weight", clf.hidden.weights.data_mut(), g_hidden.weights.data()),
                ("hidden.bias", &mut clf.hidden.bias, &g_hidden.bias),
                ("output.weight", clf.output.weights.data_mut(), g_out.weights.data()),
                ("output.bias", &mut clf.output.bias, &g_out.bias),
            ];
            for ((name, p, g), st) in steps.into_iter().zip(states.iter_mut()) {
                sgd_momentum_step(name, p, g, st, lr, mu)?;
            }
        }
        curve.push(evaluate_accuracy(&clf, x, labels)?);
    }
    Ok((clf, curve))
}

/// Fraction of examples whose predicted class equals the label.
pub fn evaluate_accuracy(clf: &ShallowClassifier, x: &[Vec<f32>], labels: &[usize]) -> Result<f64, EvalError> {
    if x.is_empty() {
        return Err(EvalError::Empty("evaluation set"));
    }
    if x.len() != labels.len() {
        return Err(EvalError::DimensionMismatch {
            expected: x.len(),
            found: labels.len(),
        });
    }
    let pred = clf.predict(x)?;
    let correct = pred.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(correct as f64 / x.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(n: usize, dim: usize, classes: usize, spread: f32, seed: u64) -> (Vec<Vec<f32>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers: Vec<Vec<f32>> = (0..classes)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let c = i % classes;
            x.push(centers[c].iter().map(|&v| v + rng.random_range(-spread..spread)).collect());
            y.push(c);
        }
        (x, y)
    }

    #[test]
    fn separable_blobs() {
        let (x, y) = blobs(400, 300, 2, 0.3, 1);
        let (tx, ty) = blobs(200, 300, 2, 0.3, 1);
        let (clf, curve) = train_classifier(&x, &y, &ClassifierConfig::default()).unwrap();
        assert_eq!(curve.len(), 50);
        assert!(evaluate_accuracy(&clf, &tx, &ty).unwrap() >= 0.99);
    }

    #[test]
    fn all_correct_and_errors() {
        let (x, y) = blobs(200, 5, 2, 0.01, 2);
        let (clf, _) = train_classifier(&x, &y, &ClassifierConfig::default()).unwrap();
        assert_eq!(evaluate_accuracy(&clf, &x, &y).unwrap(), 1.0);
        assert!(evaluate_accuracy(&clf, &[], &[]).is_err());
        assert!(evaluate_accuracy(&clf, &[vec![0.0; 4]], &[0]).is_err());
        assert!(matches!(
            train_classifier(&x, &vec![1; x.len()], &ClassifierConfig::default()),
            Err(EvalError::SingleClass)
        ));
    }

    #[test]
    fn deterministic_given_seed() {
        let (x, y) = blobs(150, 8, 3, 0.5, 3);
        let a = train_classifier(&x, &y, &ClassifierConfig::default()).unwrap();
        let b = train_classifier(&x, &y, &ClassifierConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
