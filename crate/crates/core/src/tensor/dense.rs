use super::gemm::{gemm, Op};
use super::{Scalar, Tensor2, TensorError};

/// Fully connected layer `y = W x + b` with `W` stored outputs × inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T> {
    pub weights: Tensor2<T>,
    pub bias: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseGrads<T> {
    pub weights: Tensor2<T>,
    pub bias: Vec<T>,
}

/// Affine map of a single vector.
pub fn dense<T: Scalar>(x: &[T], weights: &Tensor2<T>, bias: &[T]) -> Result<Vec<T>, TensorError> {
    if weights.cols() != x.len() || weights.rows() != bias.len() {
        return Err(TensorError::shape(
            "dense",
            format!("{}x{} weights, {} bias", weights.rows(), x.len(), weights.rows()),
            format!("{}x{} weights, {} bias", weights.rows(), weights.cols(), bias.len()),
        ));
    }
    Ok((0..weights.rows())
        .map(|o| {
            weights
                .row(o)
                .iter()
                .zip(x)
                .map(|(&w, &v)| w * v)
                .sum::<T>()
                + bias[o]
        })
        .collect())
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(outputs: usize, inputs: usize) -> Self {
        Dense {
            weights: Tensor2::zeros(outputs, inputs),
            bias: vec![T::zero(); outputs],
        }
    }

    pub fn cast<U: Scalar>(&self) -> Dense<U> {
        Dense {
            weights: self.weights.cast(),
            bias: self.bias.iter().map(|&b| U::of(b.as_f64())).collect(),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }

    /// Applies the layer to every column of `x` (inputs × batch).
    pub fn forward(&self, x: &Tensor2<T>) -> Result<Tensor2<T>, TensorError> {
        if x.rows() != self.inputs() {
            return Err(TensorError::shape("dense", self.inputs(), x.rows()));
        }
        let mut y = Tensor2::zeros(self.outputs(), x.cols());
        gemm(Op::plain(&self.weights), Op::plain(x), T::zero(), &mut y);
        for (o, &b) in self.bias.iter().enumerate() {
            for v in y.row_mut(o) {
                *v += b;
            }
        }
        Ok(y)
    }

    /// Returns `(d_x, grads)` for the batch `x` and output gradient `d_y`.
    pub fn backward(&self, x: &Tensor2<T>, d_y: &Tensor2<T>) -> (Tensor2<T>, DenseGrads<T>) {
        let mut d_w = Tensor2::zeros(self.outputs(), self.inputs());
        gemm(Op::plain(d_y), Op::trans(x), T::zero(), &mut d_w);
        let mut d_x = Tensor2::zeros(self.inputs(), x.cols());
        gemm(Op::trans(&self.weights), Op::plain(d_y), T::zero(), &mut d_x);
        (
            d_x,
            DenseGrads {
                weights: d_w,
                bias: d_y.sum_rows(),
            },
        )
    }
}
