use super::batchnorm::{batch_norm, batch_norm_backward, BatchNormCache, BatchNormState, Mode};
use super::conv::{check_lengths, col2im, im2col, ConvGrads, ConvKernelSet};
use super::{sigmoid, Scalar, Tensor2, TensorError};

/// Batch-norm states for the two convolution branches of a GLU layer.
#[derive(Clone, Copy, Debug)]
pub struct GluNorms<'a, T> {
    pub linear: &'a BatchNormState<T>,
    pub gate: &'a BatchNormState<T>,
}

#[derive(Clone, Debug)]
pub struct GluCache<T> {
    pub cols: Tensor2<T>,
    /// Linear branch after normalization.
    pub linear_out: Tensor2<T>,
    /// Sigmoid of the (normalized) gate branch.
    pub gate_out: Tensor2<T>,
    pub norm_linear: Option<BatchNormCache<T>>,
    pub norm_gate: Option<BatchNormCache<T>>,
    pub lengths: Vec<usize>,
    pub in_channels: usize,
}

#[derive(Clone, Debug)]
pub struct GluGrads<T> {
    pub linear: ConvGrads<T>,
    pub gate: ConvGrads<T>,
    /// `(d_gamma, d_beta)` per branch when batch norm is enabled.
    pub norm_linear: Option<(Vec<T>, Vec<T>)>,
    pub norm_gate: Option<(Vec<T>, Vec<T>)>,
}

/// `(x * W + b) ⊗ σ(x * V + c)` with causal convolutions; each branch is
/// batch-normalized before the product when `norms` is given.
pub fn glu_layer<T: Scalar>(
    x: &Tensor2<T>,
    lengths: &[usize],
    linear: &ConvKernelSet<T>,
    gate: &ConvKernelSet<T>,
    norms: Option<GluNorms<'_, T>>,
    mode: Mode,
) -> Result<(Tensor2<T>, GluCache<T>), TensorError> {
    if linear.weights.shape() != gate.weights.shape() || linear.width() != gate.width() {
        return Err(TensorError::shape(
            "glu_layer",
            format!("{:?}", linear.weights.shape()),
            format!("{:?}", gate.weights.shape()),
        ));
    }
    if x.rows() != linear.in_channels() {
        return Err(TensorError::shape(
            "glu_layer",
            format!("{} input channels", linear.in_channels()),
            x.rows(),
        ));
    }
    check_lengths("glu_layer", x, lengths)?;

    let cols = im2col(x, lengths, linear.width());
    let mut a = linear.apply_cols(&cols);
    let mut b = gate.apply_cols(&cols);
    let (mut norm_linear, mut norm_gate) = (None, None);
    if let Some(n) = norms {
        let (an, ac) = batch_norm(&a, n.linear, mode)?;
        let (bn, bc) = batch_norm(&b, n.gate, mode)?;
        a = an;
        b = bn;
        norm_linear = Some(ac);
        norm_gate = Some(bc);
    }
    let s = b.map(sigmoid);
    let mut out = a.clone();
    for (o, &g) in out.data_mut().iter_mut().zip(s.data()) {
        *o *= g;
    }
    Ok((
        out,
        GluCache {
            cols,
            linear_out: a,
            gate_out: s,
            norm_linear,
            norm_gate,
            lengths: lengths.to_vec(),
            in_channels: x.rows(),
        },
    ))
}

/// Returns the input gradient and the parameter gradients of one GLU layer.
pub fn glu_layer_backward<T: Scalar>(
    cache: &GluCache<T>,
    linear: &ConvKernelSet<T>,
    gate: &ConvKernelSet<T>,
    norms: Option<GluNorms<'_, T>>,
    d_out: &Tensor2<T>,
) -> (Tensor2<T>, GluGrads<T>) {
    let mut d_a = d_out.clone();
    let mut d_b = d_out.clone();
    for ((da, db), (&a, &s)) in d_a
        .data_mut()
        .iter_mut()
        .zip(d_b.data_mut().iter_mut())
        .zip(cache.linear_out.data().iter().zip(cache.gate_out.data()))
    {
        *da *= s;
        *db *= a * s * (T::one() - s);
    }
    let (mut norm_linear, mut norm_gate) = (None, None);
    if let (Some(n), Some(ca), Some(cb)) = (norms, &cache.norm_linear, &cache.norm_gate) {
        let (dxa, dga, dba) = batch_norm_backward(ca, n.linear, &d_a);
        let (dxb, dgb, dbb) = batch_norm_backward(cb, n.gate, &d_b);
        d_a = dxa;
        d_b = dxb;
        norm_linear = Some((dga, dba));
        norm_gate = Some((dgb, dbb));
    }
    let mut g_linear = ConvGrads::zeros_like(linear);
    let mut g_gate = ConvGrads::zeros_like(gate);
    let mut d_cols = linear.backward_cols(&cache.cols, &d_a, &mut g_linear);
    d_cols.add_assign(&gate.backward_cols(&cache.cols, &d_b, &mut g_gate));
    let dx = col2im(&d_cols, &cache.lengths, cache.in_channels, linear.width());
    (
        dx,
        GluGrads {
            linear: g_linear,
            gate: g_gate,
            norm_linear,
            norm_gate,
        },
    )
}
