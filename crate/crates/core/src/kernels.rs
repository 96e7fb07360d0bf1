//! Dense row-major kernels behind the autograd ops.
//!
//! Every kernel partitions work by output row and computes each output
//! element with a fixed sequential inner loop, so the parallel and
//! sequential paths produce bit-identical results. The `parallel` feature
//! selects the rayon path for the default entry points; both paths stay
//! reachable through [`seq`] and [`par`] for benchmarking.

/// Below this many multiply-adds a kernel stays on the calling thread.
#[cfg(feature = "parallel")]
const PAR_THRESHOLD: usize = 1 << 15;

/// `out[m×n] = a[m×k] · b[k×n]`.
pub fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    #[cfg(feature = "parallel")]
    if m * k * n >= PAR_THRESHOLD && m > 1 {
        return par::matmul(a, b, m, k, n);
    }
    seq::matmul(a, b, m, k, n)
}

/// `out[m×n] = a[m×k] · bᵀ` where `b` is stored as `[n×k]`.
pub fn matmul_bt(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    #[cfg(feature = "parallel")]
    if m * k * n >= PAR_THRESHOLD && m > 1 {
        return par::matmul_bt(a, b, m, k, n);
    }
    seq::matmul_bt(a, b, m, k, n)
}

/// `out[k×n] = aᵀ · g` where `a` is `[m×k]` and `g` is `[m×n]`.
pub fn matmul_at(a: &[f64], g: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let at = transpose(a, m, k);
    matmul(&at, g, k, m, n)
}

pub fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = a[r * cols + c];
        }
    }
    out
}

fn matmul_row(a_row: &[f64], b: &[f64], n: usize, out_row: &mut [f64]) {
    for (p, &av) in a_row.iter().enumerate() {
        let b_row = &b[p * n..(p + 1) * n];
        for (o, &bv) in out_row.iter_mut().zip(b_row) {
            *o += av * bv;
        }
    }
}

fn matmul_bt_row(a_row: &[f64], b: &[f64], k: usize, out_row: &mut [f64]) {
    for (j, o) in out_row.iter_mut().enumerate() {
        let b_row = &b[j * k..(j + 1) * k];
        *o = a_row.iter().zip(b_row).map(|(x, y)| x * y).sum();
    }
}

pub mod seq {
    pub fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        debug_assert_eq!(a.len(), m * k);
        debug_assert_eq!(b.len(), k * n);
        let mut out = vec![0.0; m * n];
        if n == 0 {
            return out;
        }
        for (i, out_row) in out.chunks_mut(n).enumerate() {
            super::matmul_row(&a[i * k..(i + 1) * k], b, n, out_row);
        }
        out
    }

    pub fn matmul_bt(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        debug_assert_eq!(a.len(), m * k);
        debug_assert_eq!(b.len(), n * k);
        let mut out = vec![0.0; m * n];
        if n == 0 {
            return out;
        }
        for (i, out_row) in out.chunks_mut(n).enumerate() {
            super::matmul_bt_row(&a[i * k..(i + 1) * k], b, k, out_row);
        }
        out
    }
}

#[cfg(feature = "parallel")]
pub mod par {
    use rayon::prelude::*;

    pub fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        debug_assert_eq!(a.len(), m * k);
        debug_assert_eq!(b.len(), k * n);
        let mut out = vec![0.0; m * n];
        if n == 0 {
            return out;
        }
        out.par_chunks_mut(n).enumerate().for_each(|(i, out_row)| {
            super::matmul_row(&a[i * k..(i + 1) * k], b, n, out_row);
        });
        out
    }

    pub fn matmul_bt(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        debug_assert_eq!(a.len(), m * k);
        debug_assert_eq!(b.len(), n * k);
        let mut out = vec![0.0; m * n];
        if n == 0 {
            return out;
        }
        out.par_chunks_mut(n).enumerate().for_each(|(i, out_row)| {
            super::matmul_bt_row(&a[i * k..(i + 1) * k], b, k, out_row);
        });
        out
    }
}

/// Maps `f` over `items`, in parallel when the feature is enabled. Output
/// order always equals input order.
pub fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
