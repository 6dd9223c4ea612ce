use rayon::prelude::*;

use super::{Scalar, Tensor2};

/// Smallest row block handed to one worker. The packed kernel accumulates
/// every element of C in the same order whatever the row split, so blocks
/// can follow the thread count without changing results (tested below).
const ROW_BLOCK: usize = 32;
/// Below this many multiply-adds a single call beats the scheduling overhead.
const PAR_MIN_WORK: usize = 1 << 18;

/// Read-only view of `op(A)` where op is identity or transpose.
#[derive(Clone, Copy)]
pub(crate) struct Op<'a, T> {
    data: &'a [T],
    rows: usize,
    cols: usize,
    rs: isize,
    cs: isize,
}

impl<'a, T: Scalar> Op<'a, T> {
    pub(crate) fn plain(t: &'a Tensor2<T>) -> Self {
        Op {
            data: t.data(),
            rows: t.rows(),
            cols: t.cols(),
            rs: t.cols() as isize,
            cs: 1,
        }
    }

    pub(crate) fn trans(t: &'a Tensor2<T>) -> Self {
        Op {
            data: t.data(),
            rows: t.cols(),
            cols: t.rows(),
            rs: 1,
            cs: t.cols() as isize,
        }
    }
}

/// `C = A·B + beta·C`.
pub(crate) fn gemm<T: Scalar>(a: Op<'_, T>, b: Op<'_, T>, beta: T, c: &mut Tensor2<T>) {
    // One block per worker: every block repacks all of B, so fewer is faster.
    let per_thread = a.rows.div_ceil(rayon::current_num_threads());
    gemm_blocked(a, b, beta, c, per_thread.next_multiple_of(8).max(ROW_BLOCK));
}

fn gemm_blocked<T: Scalar>(a: Op<'_, T>, b: Op<'_, T>, beta: T, c: &mut Tensor2<T>, row_block: usize) {
    let (m, k, n) = (a.rows, a.cols, b.cols);
    assert_eq!(k, b.rows, "gemm inner dimension");
    assert_eq!((m, n), c.shape(), "gemm output shape");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for v in c.data_mut() {
            *v *= beta;
        }
        return;
    }
    let c_data = c.data_mut();
    if m <= row_block || m * k * n < PAR_MIN_WORK {
        // SAFETY: extents and strides come from live tensors checked above.
        unsafe {
            T::gemm_raw(
                m,
                k,
                n,
                T::one(),
                a.data.as_ptr(),
                a.rs,
                a.cs,
                b.data.as_ptr(),
                b.rs,
                b.cs,
                beta,
                c_data.as_mut_ptr(),
                n as isize,
                1,
            );
        }
        return;
    }
    c_data
        .par_chunks_mut(row_block * n)
        .enumerate()
        .for_each(|(block, chunk)| {
            let r0 = block * row_block;
            let rows = chunk.len() / n;
            // SAFETY: row offset r0 < m, and each chunk owns its rows of C.
            unsafe {
                T::gemm_raw(
                    rows,
                    k,
                    n,
                    T::one(),
                    a.data.as_ptr().offset(r0 as isize * a.rs),
                    a.rs,
                    a.cs,
                    b.data.as_ptr(),
                    b.rs,
                    b.cs,
                    beta,
                    chunk.as_mut_ptr(),
                    n as isize,
                    1,
                );
            }
        });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &Tensor2<f64>, b: &Tensor2<f64>) -> Tensor2<f64> {
        let mut out = Tensor2::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for k in 0..a.cols() {
                    s += a.get(i, k) * b.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    fn pseudo(rows: usize, cols: usize, salt: u64) -> Tensor2<f64> {
        let data = (0..rows * cols)
            .map(|i| (((i as u64 * 2654435761 + salt) % 1000) as f64) / 500.0 - 1.0)
            .collect();
        Tensor2::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn transposed_operands_and_parallel_blocks() {
        let a = pseudo(70, 90, 1);
        let b = pseudo(90, 80, 2);
        let expected = naive(&a, &b);

        let mut c = Tensor2::zeros(70, 80);
        gemm(Op::plain(&a), Op::plain(&b), 0.0, &mut c);
        for (x, y) in c.data().iter().zip(expected.data()) {
            assert!((x - y).abs() < 1e-9);
        }

        let at = a.transpose();
        let bt = b.transpose();
        let mut c2 = Tensor2::zeros(70, 80);
        gemm(Op::trans(&at), Op::trans(&bt), 0.0, &mut c2);
        for (x, y) in c2.data().iter().zip(expected.data()) {
            assert!((x - y).abs() < 1e-9);
        }

        // beta accumulates
        gemm(Op::plain(&a), Op::plain(&b), 1.0, &mut c2);
        for (x, y) in c2.data().iter().zip(expected.data()) {
            assert!((x - 2.0 * y).abs() < 1e-9);
        }
    }

    #[test]
    fn row_split_does_not_change_bits() {
        for (m, k, n) in [(100, 300, 77), (257, 64, 1000), (64, 900, 33)] {
            let a: Tensor2<f32> = pseudo(m, k, 3).cast();
            let b: Tensor2<f32> = pseudo(k, n, 4).cast();
            let mut whole = Tensor2::zeros(m, n);
            gemm_blocked(Op::plain(&a), Op::plain(&b), 0.0, &mut whole, usize::MAX);
            for block in [32, 40, 96] {
                let mut split = Tensor2::zeros(m, n);
                gemm_blocked(Op::plain(&a), Op::plain(&b), 0.0, &mut split, block);
                assert_eq!(whole, split, "{m}x{k}x{n} block {block}");
            }
        }
    }
}
