use super::{Scalar, Tensor2, TensorError};

/// Index of the largest value; the first occurrence wins ties.
pub fn row_argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Positions of the `k` largest values in temporal order. Ties prefer the
/// earlier position. When the row is shorter than `k` the leading slots are
/// `None` so the selected values occupy the rightmost slots.
pub fn row_top_k<T: Scalar>(row: &[T], k: usize) -> Vec<Option<usize>> {
    let mut kept: Vec<usize> = Vec::with_capacity(k);
    for (i, &v) in row.iter().enumerate() {
        if kept.len() < k {
            kept.push(i);
            continue;
        }
        // Weakest kept entry: smallest value, latest position among equals.
        let (slot, &worst) = kept
            .iter()
            .enumerate()
            .min_by(|(_, &a), (_, &b)| {
                row[a]
                    .partial_cmp(&row[b])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(b.cmp(&a))
            })
            .expect("k >= 1");
        if v > row[worst] {
            kept[slot] = i;
        }
    }
    kept.sort_unstable();
    let mut out = vec![None; k - kept.len()];
    out.extend(kept.into_iter().map(Some));
    out
}

/// Max over time for every row: `(values, argmax)`.
pub fn max_pool_time<T: Scalar>(x: &Tensor2<T>) -> Result<(Vec<T>, Vec<usize>), TensorError> {
    if x.cols() == 0 {
        return Err(TensorError::Empty("max_pool_time"));
    }
    let argmax: Vec<usize> = (0..x.rows()).map(|r| row_argmax(x.row(r))).collect();
    let values = argmax.iter().enumerate().map(|(r, &c)| x.get(r, c)).collect();
    Ok((values, argmax))
}

/// Routes each pooled gradient to its winning column.
pub fn max_pool_time_backward<T: Scalar>(grad: &[T], argmax: &[usize], cols: usize) -> Tensor2<T> {
    let mut dx = Tensor2::zeros(grad.len(), cols);
    for (r, (&g, &c)) in grad.iter().zip(argmax).enumerate() {
        dx.set(r, c, g);
    }
    dx
}

#[derive(Clone, Debug, PartialEq)]
pub struct TopK<T> {
    /// rows × k pooled values.
    pub values: Tensor2<T>,
    /// Source column of each pooled value, row-major; `None` marks zero fill.
    pub indices: Vec<Option<usize>>,
}

/// Per-row k largest values kept in their original temporal order.
pub fn max_k_pool_time<T: Scalar>(x: &Tensor2<T>, k: usize) -> Result<TopK<T>, TensorError> {
    if k == 0 {
        return Err(TensorError::invalid("max_k_pool_time", "k must be >= 1"));
    }
    if x.cols() == 0 {
        return Err(TensorError::Empty("max_k_pool_time"));
    }
    let mut values = Tensor2::zeros(x.rows(), k);
    let mut indices = Vec::with_capacity(x.rows() * k);
    for r in 0..x.rows() {
        let sel = row_top_k(x.row(r), k);
        for (s, idx) in sel.iter().enumerate() {
            if let Some(c) = idx {
                values.set(r, s, x.get(r, *c));
            }
        }
        indices.extend(sel);
    }
    Ok(TopK { values, indices })
}

pub fn max_k_pool_time_backward<T: Scalar>(
    d_out: &Tensor2<T>,
    indices: &[Option<usize>],
    cols: usize,
) -> Tensor2<T> {
    let k = d_out.cols();
    let mut dx = Tensor2::zeros(d_out.rows(), cols);
    for r in 0..d_out.rows() {
        for s in 0..k {
            if let Some(c) = indices[r * k + s] {
                let v = dx.get(r, c) + d_out.get(r, s);
                dx.set(r, c, v);
            }
        }
    }
    dx
}
