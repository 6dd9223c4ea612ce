use rayon::prelude::*;

use super::{Scalar, Tensor2, TensorError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Per-channel batch normalization parameters and running statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchNormState<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub momentum: T,
    pub epsilon: T,
    initialized: bool,
}

/// Values saved by the forward pass for the backward pass.
#[derive(Clone, Debug)]
pub struct BatchNormCache<T> {
    pub x_hat: Tensor2<T>,
    pub inv_std: Vec<T>,
    /// Batch mean and unbiased variance (train mode only).
    pub batch_mean: Vec<T>,
    pub batch_var: Vec<T>,
    pub mode: Mode,
}

impl<T: Scalar> BatchNormState<T> {
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: vec![T::one(); channels],
            beta: vec![T::zero(); channels],
            running_mean: vec![T::zero(); channels],
            running_var: vec![T::one(); channels],
            momentum: T::of(0.1),
            epsilon: T::of(1e-5),
            initialized: false,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    pub fn cast<U: Scalar>(&self) -> BatchNormState<U> {
        let c = |v: &[T]| v.iter().map(|&x| U::of(x.as_f64())).collect();
        BatchNormState {
            gamma: c(&self.gamma),
            beta: c(&self.beta),
            running_mean: c(&self.running_mean),
            running_var: c(&self.running_var),
            momentum: U::of(self.momentum.as_f64()),
            epsilon: U::of(self.epsilon.as_f64()),
            initialized: self.initialized,
        }
    }

    /// Sets the running statistics explicitly, which also makes eval mode
    /// usable before any training step.
    pub fn set_statistics(&mut self, mean: Vec<T>, var: Vec<T>) -> Result<(), TensorError> {
        if mean.len() != self.channels() || var.len() != self.channels() {
            return Err(TensorError::shape("BatchNormState", self.channels(), mean.len()));
        }
        if var.iter().any(|&v| v < T::zero()) {
            return Err(TensorError::invalid("BatchNormState", "negative running variance"));
        }
        self.running_mean = mean;
        self.running_var = var;
        self.initialized = true;
        Ok(())
    }

    /// Folds the statistics of one train-mode batch into the running averages.
    pub fn update_running(&mut self, cache: &BatchNormCache<T>) {
        if cache.mode != Mode::Train {
            return;
        }
        let keep = T::one() - self.momentum;
        for c in 0..self.channels() {
            self.running_mean[c] = keep * self.running_mean[c] + self.momentum * cache.batch_mean[c];
            self.running_var[c] = keep * self.running_var[c] + self.momentum * cache.batch_var[c];
        }
        self.initialized = true;
    }
}

/// Normalizes each channel (row) over all columns of `x`, i.e. over batch and
/// time jointly. Running statistics are not modified here; see
/// [`BatchNormState::update_running`].
pub fn batch_norm<T: Scalar>(
    x: &Tensor2<T>,
    state: &BatchNormState<T>,
    mode: Mode,
) -> Result<(Tensor2<T>, BatchNormCache<T>), TensorError> {
    let channels = state.channels();
    if x.rows() != channels {
        return Err(TensorError::shape("batch_norm", channels, x.rows()));
    }
    let n = x.cols();
    if n == 0 {
        return Err(TensorError::Empty("batch_norm"));
    }
    let (mean, var_biased, var_unbiased) = match mode {
        Mode::Train => {
            if n < 2 {
                return Err(TensorError::invalid(
                    "batch_norm",
                    "train mode needs at least 2 samples per channel",
                ));
            }
            let nf = T::of(n as f64);
            let stats: Vec<(T, T)> = (0..channels)
                .into_par_iter()
                .map(|c| {
                    let row = x.row(c);
                    let mean = row.iter().copied().sum::<T>() / nf;
                    let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / nf;
                    (mean, var)
                })
                .collect();
            let mean: Vec<T> = stats.iter().map(|s| s.0).collect();
            let var: Vec<T> = stats.iter().map(|s| s.1).collect();
            let unbiased = var
                .iter()
                .map(|&v| v * nf / T::of((n - 1) as f64))
                .collect();
            (mean, var, unbiased)
        }
        Mode::Eval => {
            if !state.is_initialized() {
                return Err(TensorError::UninitializedStatistics);
            }
            (state.running_mean.clone(), state.running_var.clone(), Vec::new())
        }
    };
    let inv_std: Vec<T> = var_biased
        .iter()
        .map(|&v| T::one() / (v + state.epsilon).sqrt())
        .collect();
    let mut x_hat = Tensor2::zeros(channels, n);
    let mut y = Tensor2::zeros(channels, n);
    x_hat
        .data_mut()
        .par_chunks_mut(n)
        .zip(y.data_mut().par_chunks_mut(n))
        .enumerate()
        .for_each(|(c, (xh, yr))| {
            let (m, s, g, b) = (mean[c], inv_std[c], state.gamma[c], state.beta[c]);
            for ((h, o), &v) in xh.iter_mut().zip(yr.iter_mut()).zip(x.row(c)) {
                *h = (v - m) * s;
                *o = g * *h + b;
            }
        });
    Ok((
        y,
        BatchNormCache {
            x_hat,
            inv_std,
            batch_mean: mean,
            batch_var: var_unbiased,
            mode,
        },
    ))
}

/// Returns `(d_x, d_gamma, d_beta)`.
pub fn batch_norm_backward<T: Scalar>(
    cache: &BatchNormCache<T>,
    state: &BatchNormState<T>,
    d_y: &Tensor2<T>,
) -> (Tensor2<T>, Vec<T>, Vec<T>) {
    let (channels, n) = cache.x_hat.shape();
    assert_eq!(d_y.shape(), (channels, n), "batch_norm_backward shape");
    let nf = T::of(n as f64);
    let mut dx = Tensor2::zeros(channels, n);
    let sums: Vec<(T, T)> = dx
        .data_mut()
        .par_chunks_mut(n)
        .enumerate()
        .map(|(c, dxr)| {
            let dyr = d_y.row(c);
            let xh = cache.x_hat.row(c);
            let d_beta: T = dyr.iter().copied().sum();
            let d_gamma: T = dyr.iter().zip(xh).map(|(&g, &h)| g * h).sum();
            let scale = state.gamma[c] * cache.inv_std[c];
            match cache.mode {
                Mode::Train => {
                    let k = scale / nf;
                    for ((d, &g), &h) in dxr.iter_mut().zip(dyr).zip(xh) {
                        *d = k * (nf * g - d_beta - h * d_gamma);
                    }
                }
                Mode::Eval => {
                    for (d, &g) in dxr.iter_mut().zip(dyr) {
                        *d = scale * g;
                    }
                }
            }
            (d_gamma, d_beta)
        })
        .collect();
    let d_gamma = sums.iter().map(|s| s.0).collect();
    let d_beta = sums.iter().map(|s| s.1).collect();
    (dx, d_gamma, d_beta)
}
