use super::gemm::{gemm, Op};
use super::{offsets, Scalar, Tensor2, TensorError};

/// A bank of `out_channels` causal kernels, each spanning `width` time steps
/// over `in_channels` input rows.
///
/// Weight column `tap * in_channels + c` multiplies input channel `c` at time
/// `t - (width - 1) + tap`, so tap `width - 1` sees the current step.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvKernelSet<T> {
    pub weights: Tensor2<T>,
    pub bias: Vec<T>,
    in_channels: usize,
    width: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvGrads<T> {
    pub weights: Tensor2<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> ConvGrads<T> {
    pub fn zeros_like(k: &ConvKernelSet<T>) -> Self {
        ConvGrads {
            weights: Tensor2::zeros(k.weights.rows(), k.weights.cols()),
            bias: vec![T::zero(); k.bias.len()],
        }
    }
}

impl<T: Scalar> ConvKernelSet<T> {
    pub fn new(out_channels: usize, in_channels: usize, width: usize) -> Result<Self, TensorError> {
        if width == 0 {
            return Err(TensorError::invalid("ConvKernelSet", "kernel width must be >= 1"));
        }
        Ok(Self {
            weights: Tensor2::zeros(out_channels, in_channels * width),
            bias: vec![T::zero(); out_channels],
            in_channels,
            width,
        })
    }

    pub fn from_parts(
        weights: Tensor2<T>,
        bias: Vec<T>,
        in_channels: usize,
        width: usize,
    ) -> Result<Self, TensorError> {
        if width == 0 {
            return Err(TensorError::invalid("ConvKernelSet", "kernel width must be >= 1"));
        }
        if weights.cols() != in_channels * width {
            return Err(TensorError::shape(
                "ConvKernelSet",
                format!("{} weight columns", in_channels * width),
                weights.cols(),
            ));
        }
        if bias.len() != weights.rows() {
            return Err(TensorError::shape("ConvKernelSet", weights.rows(), bias.len()));
        }
        Ok(Self {
            weights,
            bias,
            in_channels,
            width,
        })
    }

    pub fn out_channels(&self) -> usize {
        self.weights.rows()
    }

    pub fn cast<U: Scalar>(&self) -> ConvKernelSet<U> {
        ConvKernelSet {
            weights: self.weights.cast(),
            bias: self.bias.iter().map(|&b| U::of(b.as_f64())).collect(),
            in_channels: self.in_channels,
            width: self.width,
        }
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn weight(&self, out: usize, input: usize, tap: usize) -> T {
        self.weights.get(out, tap * self.in_channels + input)
    }

    #[inline]
    pub fn set_weight(&mut self, out: usize, input: usize, tap: usize, v: T) {
        self.weights.set(out, tap * self.in_channels + input, v);
    }

    /// `W · cols + b` on an already unfolded input.
    pub fn apply_cols(&self, cols: &Tensor2<T>) -> Tensor2<T> {
        let mut out = Tensor2::zeros(self.out_channels(), cols.cols());
        gemm(Op::plain(&self.weights), Op::plain(cols), T::zero(), &mut out);
        for (o, &b) in self.bias.iter().enumerate() {
            for v in out.row_mut(o) {
                *v += b;
            }
        }
        out
    }

    /// Accumulates weight and bias gradients into `grads` and returns the
    /// gradient with respect to the unfolded input.
    pub fn backward_cols(
        &self,
        cols: &Tensor2<T>,
        d_out: &Tensor2<T>,
        grads: &mut ConvGrads<T>,
    ) -> Tensor2<T> {
        gemm(Op::plain(d_out), Op::trans(cols), T::one(), &mut grads.weights);
        for (g, s) in grads.bias.iter_mut().zip(d_out.sum_rows()) {
            *g += s;
        }
        let mut d_cols = Tensor2::zeros(cols.rows(), cols.cols());
        gemm(Op::trans(&self.weights), Op::plain(d_out), T::zero(), &mut d_cols);
        d_cols
    }

    fn check_input(&self, x: &Tensor2<T>, lengths: &[usize]) -> Result<(), TensorError> {
        if x.rows() != self.in_channels {
            return Err(TensorError::shape(
                "conv1d_causal",
                format!("{} input channels", self.in_channels),
                x.rows(),
            ));
        }
        check_lengths("conv1d_causal", x, lengths)
    }
}

pub(crate) fn check_lengths<T: Scalar>(
    op: &'static str,
    x: &Tensor2<T>,
    lengths: &[usize],
) -> Result<(), TensorError> {
    let total: usize = lengths.iter().sum();
    if total != x.cols() {
        return Err(TensorError::shape(op, format!("{total} columns"), x.cols()));
    }
    Ok(())
}

/// Unfolds `x` (channels × time) into `(channels·width) × time` so that a
/// causal convolution becomes a single matrix product. Positions before the
/// start of each sequence read as zero.
pub fn im2col<T: Scalar>(x: &Tensor2<T>, lengths: &[usize], width: usize) -> Tensor2<T> {
    let channels = x.rows();
    let mut cols = Tensor2::zeros(channels * width, x.cols());
    for (&off, &len) in offsets(lengths).iter().zip(lengths) {
        for tap in 0..width {
            let shift = width - 1 - tap;
            if shift >= len {
                continue;
            }
            for c in 0..channels {
                let src = &x.row(c)[off..off + len - shift];
                cols.row_mut(tap * channels + c)[off + shift..off + len].copy_from_slice(src);
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: folds unfolded gradients back onto the input.
pub fn col2im<T: Scalar>(
    d_cols: &Tensor2<T>,
    lengths: &[usize],
    channels: usize,
    width: usize,
) -> Tensor2<T> {
    let mut dx = Tensor2::zeros(channels, d_cols.cols());
    for (&off, &len) in offsets(lengths).iter().zip(lengths) {
        for tap in 0..width {
            let shift = width - 1 - tap;
            if shift >= len {
                continue;
            }
            for c in 0..channels {
                let src = &d_cols.row(tap * channels + c)[off + shift..off + len];
                for (d, &s) in dx.row_mut(c)[off..off + len - shift].iter_mut().zip(src) {
                    *d += s;
                }
            }
        }
    }
    dx
}

/// Causal 1-D convolution of a single sequence.
pub fn conv1d_causal<T: Scalar>(
    x: &Tensor2<T>,
    kernels: &ConvKernelSet<T>,
) -> Result<Tensor2<T>, TensorError> {
    conv1d_causal_segmented(x, &[x.cols()], kernels)
}

/// Causal 1-D convolution over a batch of concatenated sequences.
pub fn conv1d_causal_segmented<T: Scalar>(
    x: &Tensor2<T>,
    lengths: &[usize],
    kernels: &ConvKernelSet<T>,
) -> Result<Tensor2<T>, TensorError> {
    kernels.check_input(x, lengths)?;
    let out = kernels.apply_cols(&im2col(x, lengths, kernels.width()));
    Ok(out)
}

/// Gradients of a causal convolution with respect to its input and kernels.
pub fn conv1d_causal_backward<T: Scalar>(
    x: &Tensor2<T>,
    lengths: &[usize],
    kernels: &ConvKernelSet<T>,
    d_out: &Tensor2<T>,
) -> Result<(Tensor2<T>, ConvGrads<T>), TensorError> {
    kernels.check_input(x, lengths)?;
    if d_out.shape() != (kernels.out_channels(), x.cols()) {
        return Err(TensorError::shape(
            "conv1d_causal_backward",
            format!("{}x{}", kernels.out_channels(), x.cols()),
            format!("{}x{}", d_out.rows(), d_out.cols()),
        ));
    }
    let cols = im2col(x, lengths, kernels.width());
    let mut grads = ConvGrads::zeros_like(kernels);
    let d_cols = kernels.backward_cols(&cols, d_out, &mut grads);
    Ok((col2im(&d_cols, lengths, x.rows(), kernels.width()), grads))
}
