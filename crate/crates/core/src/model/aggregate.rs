//! Aggregators turn the variable-length output of the last GLU layer into a
//! fixed-width vector per document. Each variant is registered by name and
//! chosen through [`ModelConfig::aggregation`].

use std::fmt::Debug;

use crate::tensor::{offsets, row_argmax, row_top_k, Scalar, Tensor2, TensorError};

use super::{ModelConfig, ModelError};

/// Which activation fed each pooled value.
#[derive(Clone, Debug, PartialEq)]
pub enum Selection {
    /// Per document, per output slot: absolute column of the activation
    /// matrix (`None` = zero fill).
    Columns(Vec<Vec<Option<usize>>>),
    /// Averages; no single source.
    Mean,
}

#[derive(Clone, Debug)]
pub struct Pooled<T> {
    /// output width × batch.
    pub values: Tensor2<T>,
    pub selection: Selection,
}

pub trait Aggregator<T: Scalar>: Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn output_width(&self, channels: usize) -> usize;

    /// Fixed input length the encoder must pad or truncate to, if any.
    fn input_len(&self) -> Option<usize> {
        None
    }

    /// Output slots per channel when each pooled value has a single winning
    /// column that can be traced back to the input.
    fn trace_slots(&self) -> Option<usize> {
        None
    }

    fn forward(&self, acts: &Tensor2<T>, lengths: &[usize]) -> Result<Pooled<T>, TensorError>;

    /// Gradient with respect to the activation matrix.
    fn backward(&self, selection: &Selection, d_out: &Tensor2<T>, lengths: &[usize], channels: usize) -> Tensor2<T>;
}

fn check_segments<T: Scalar>(op: &'static str, acts: &Tensor2<T>, lengths: &[usize]) -> Result<(), TensorError> {
    if lengths.iter().sum::<usize>() != acts.cols() {
        return Err(TensorError::Shape {
            op,
            expected: format!("{} columns", lengths.iter().sum::<usize>()),
            found: acts.cols().to_string(),
        });
    }
    if lengths.iter().any(|&l| l == 0) {
        return Err(TensorError::Empty(op));
    }
    Ok(())
}

fn gather<T: Scalar>(
    acts: &Tensor2<T>,
    cols: &[Vec<Option<usize>>],
    slots: usize,
) -> Tensor2<T> {
    let width = cols.first().map_or(0, Vec::len);
    let mut out = Tensor2::zeros(width, cols.len());
    for (b, doc) in cols.iter().enumerate() {
        for (j, c) in doc.iter().enumerate() {
            if let Some(c) = c {
                out.set(j, b, acts.get(j / slots, *c));
            }
        }
    }
    out
}

fn scatter<T: Scalar>(
    selection: &Selection,
    d_out: &Tensor2<T>,
    lengths: &[usize],
    channels: usize,
    slots: usize,
) -> Tensor2<T> {
    let total = lengths.iter().sum();
    let mut d = Tensor2::zeros(channels, total);
    if let Selection::Columns(cols) = selection {
        for (b, doc) in cols.iter().enumerate() {
            for (j, c) in doc.iter().enumerate() {
                if let Some(c) = c {
                    let r = j / slots;
                    let v = d.get(r, *c) + d_out.get(j, b);
                    d.set(r, *c, v);
                }
            }
        }
    }
    d
}

/// Max over time per channel.
#[derive(Clone, Debug)]
pub struct MaxPool;

impl<T: Scalar> Aggregator<T> for MaxPool {
    fn name(&self) -> &'static str {
        "max_pool"
    }

    fn output_width(&self, channels: usize) -> usize {
        channels
    }

    fn trace_slots(&self) -> Option<usize> {
        Some(1)
    }

    fn forward(&self, acts: &Tensor2<T>, lengths: &[usize]) -> Result<Pooled<T>, TensorError> {
        check_segments("max_pool", acts, lengths)?;
        let cols: Vec<Vec<Option<usize>>> = offsets(lengths)
            .iter()
            .zip(lengths)
            .map(|(&o, &l)| {
                (0..acts.rows())
                    .map(|c| Some(o + row_argmax(&acts.row(c)[o..o + l])))
                    .collect()
            })
            .collect();
        Ok(Pooled {
            values: gather(acts, &cols, 1),
            selection: Selection::Columns(cols),
        })
    }

    fn backward(&self, selection: &Selection, d_out: &Tensor2<T>, lengths: &[usize], channels: usize) -> Tensor2<T> {
        scatter(selection, d_out, lengths, channels, 1)
    }
}

/// k largest values per channel in temporal order, flattened channel-major.
#[derive(Clone, Debug)]
pub struct MaxKPool {
    pub k: usize,
}

impl<T: Scalar> Aggregator<T> for MaxKPool {
    fn name(&self) -> &'static str {
        "max_k_pool"
    }

    fn output_width(&self, channels: usize) -> usize {
        channels * self.k
    }

    fn trace_slots(&self) -> Option<usize> {
        Some(self.k)
    }

    fn forward(&self, acts: &Tensor2<T>, lengths: &[usize]) -> Result<Pooled<T>, TensorError> {
        check_segments("max_k_pool", acts, lengths)?;
        let cols: Vec<Vec<Option<usize>>> = offsets(lengths)
            .iter()
            .zip(lengths)
            .map(|(&o, &l)| {
                (0..acts.rows())
                    .flat_map(|c| {
                        row_top_k(&acts.row(c)[o..o + l], self.k)
                            .into_iter()
                            .map(move |s| s.map(|t| o + t))
                    })
                    .collect()
            })
            .collect();
        Ok(Pooled {
            values: gather(acts, &cols, self.k),
            selection: Selection::Columns(cols),
        })
    }

    fn backward(&self, selection: &Selection, d_out: &Tensor2<T>, lengths: &[usize], channels: usize) -> Tensor2<T> {
        scatter(selection, d_out, lengths, channels, self.k)
    }
}

/// Fixed-length input; the whole activation matrix is flattened
/// channel-major into the dense layer.
#[derive(Clone, Debug)]
pub struct PadFlatten {
    pub len: usize,
}

impl<T: Scalar> Aggregator<T> for PadFlatten {
    fn name(&self) -> &'static str {
        "pad"
    }

    fn output_width(&self, channels: usize) -> usize {
        channels * self.len
    }

    fn input_len(&self) -> Option<usize> {
        Some(self.len)
    }

    fn forward(&self, acts: &Tensor2<T>, lengths: &[usize]) -> Result<Pooled<T>, TensorError> {
        check_segments("pad", acts, lengths)?;
        if let Some(&l) = lengths.iter().find(|&&l| l != self.len) {
            return Err(TensorError::Shape {
                op: "pad",
                expected: format!("sequences of length {}", self.len),
                found: l.to_string(),
            });
        }
        let cols: Vec<Vec<Option<usize>>> = offsets(lengths)
            .iter()
            .map(|&o| {
                (0..acts.rows())
                    .flat_map(|_| (0..self.len).map(move |t| Some(o + t)))
                    .collect()
            })
            .collect();
        Ok(Pooled {
            values: gather(acts, &cols, self.len),
            selection: Selection::Columns(cols),
        })
    }

    fn backward(&self, selection: &Selection, d_out: &Tensor2<T>, lengths: &[usize], channels: usize) -> Tensor2<T> {
        scatter(selection, d_out, lengths, channels, self.len)
    }
}

/// Mean over time per channel.
#[derive(Clone, Debug)]
pub struct MeanPool;

impl<T: Scalar> Aggregator<T> for MeanPool {
    fn name(&self) -> &'static str {
        "mean_pool"
    }

    fn output_width(&self, channels: usize) -> usize {
        channels
    }

    fn forward(&self, acts: &Tensor2<T>, lengths: &[usize]) -> Result<Pooled<T>, TensorError> {
        check_segments("mean_pool", acts, lengths)?;
        let mut values = Tensor2::zeros(acts.rows(), lengths.len());
        for (b, (&o, &l)) in offsets(lengths).iter().zip(lengths).enumerate() {
            for c in 0..acts.rows() {
                let s: T = acts.row(c)[o..o + l].iter().copied().sum();
                values.set(c, b, s / T::of(l as f64));
            }
        }
        Ok(Pooled {
            values,
            selection: Selection::Mean,
        })
    }

    fn backward(&self, _: &Selection, d_out: &Tensor2<T>, lengths: &[usize], channels: usize) -> Tensor2<T> {
        let mut d = Tensor2::zeros(channels, lengths.iter().sum());
        for (b, (&o, &l)) in offsets(lengths).iter().zip(lengths).enumerate() {
            for c in 0..channels {
                let g = d_out.get(c, b) / T::of(l as f64);
                d.row_mut(c)[o..o + l].fill(g);
            }
        }
        d
    }
}

type Factory<T> = fn(&ModelConfig) -> Box<dyn Aggregator<T>>;

fn registry<T: Scalar>() -> [(&'static str, Factory<T>); 4] {
    [
        ("max_pool", |_| Box::new(MaxPool)),
        ("max_k_pool", |c| Box::new(MaxKPool { k: c.pool_k })),
        ("pad", |c| Box::new(PadFlatten { len: c.pad_len })),
        ("mean_pool", |_| Box::new(MeanPool)),
    ]
}

pub fn aggregator_names() -> Vec<&'static str> {
    registry::<f32>().iter().map(|(n, _)| *n).collect()
}

pub fn build_aggregator<T: Scalar>(config: &ModelConfig) -> Result<Box<dyn Aggregator<T>>, ModelError> {
    registry::<T>()
        .iter()
        .find(|(n, _)| *n == config.aggregation)
        .map(|(_, f)| f(config))
        .ok_or_else(|| {
            ModelError::Config(format!(
                "unknown aggregation `{}` (known: {})",
                config.aggregation,
                aggregator_names().join(", ")
            ))
        })
}

/// Left-pads with zero columns or keeps the first `target_len` columns.
pub fn pad_or_truncate<T: Scalar>(input: &Tensor2<T>, target_len: usize) -> Tensor2<T> {
    let t = input.cols();
    if t >= target_len {
        return input.columns(0, target_len);
    }
    let mut out = Tensor2::zeros(input.rows(), target_len);
    let shift = target_len - t;
    for r in 0..input.rows() {
        out.row_mut(r)[shift..].copy_from_slice(input.row(r));
    }
    out
}
