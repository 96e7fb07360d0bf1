use super::{Tensor, TensorError};
use crate::kernels;

/// Lower and upper probability clamp applied by [`bce_loss`].
pub const PROB_CLAMP: (f64, f64) = (1e-7, 1.0 - 1e-7);

pub(crate) enum Op {
    MatMul(Tensor, Tensor),
    Add(Tensor, Tensor),
    AddRow(Tensor, Tensor),
    Prelu { x: Tensor, alpha: Tensor },
    Sigmoid(Tensor),
    Gather { table: Tensor, rows: Vec<Option<usize>> },
    RowOuter(Tensor, Tensor),
    GroupPool { vectors: Tensor, weights: Tensor, group: usize },
    Concat(Vec<Tensor>),
    Bce { pred: Tensor, labels: Vec<f64> },
    Sum(Tensor),
    FmPairwise { x: Tensor, fields: usize },
    Reshape(Tensor),
}

impl Op {
    pub(crate) fn inputs(&self) -> Vec<&Tensor> {
        match self {
            Op::MatMul(a, b) | Op::Add(a, b) | Op::AddRow(a, b) | Op::RowOuter(a, b) => vec![a, b],
            Op::Prelu { x, alpha } => vec![x, alpha],
            Op::Sigmoid(x) | Op::Sum(x) | Op::Reshape(x) => vec![x],
            Op::Gather { table, .. } => vec![table],
            Op::GroupPool {
                vectors, weights, ..
            } => vec![vectors, weights],
            Op::Concat(parts) => parts.iter().collect(),
            Op::Bce { pred, .. } => vec![pred],
            Op::FmPairwise { x, .. } => vec![x],
        }
    }

    /// Gradient contributions for each input given the output values and
    /// the upstream gradient.
    pub(crate) fn backward(&self, out: &[f64], g: &[f64]) -> Vec<(&Tensor, Vec<f64>)> {
        match self {
            Op::MatMul(a, b) => {
                let (m, k) = (a.shape()[0], a.shape()[1]);
                let n = b.shape()[1];
                let mut res = Vec::with_capacity(2);
                if a.requires_grad() {
                    res.push((a, kernels::matmul_bt(g, &b.data(), m, n, k)));
                }
                if b.requires_grad() {
                    res.push((b, kernels::matmul_at(&a.data(), g, m, k, n)));
                }
                res
            }
            Op::Add(a, b) => vec![(a, g.to_vec()), (b, g.to_vec())],
            Op::AddRow(x, bias) => {
                let n = bias.numel();
                let mut gb = vec![0.0; n];
                for row in g.chunks(n) {
                    gb.iter_mut().zip(row).for_each(|(s, v)| *s += v);
                }
                vec![(x, g.to_vec()), (bias, gb)]
            }
            Op::Prelu { x, alpha } => {
                let a = alpha.item();
                let xd = x.data();
                let mut gx = Vec::with_capacity(g.len());
                let mut ga = 0.0;
                for (&xv, &gv) in xd.iter().zip(g) {
                    if xv > 0.0 {
                        gx.push(gv);
                    } else {
                        gx.push(a * gv);
                        ga += xv * gv;
                    }
                }
                vec![(x, gx), (alpha, vec![ga])]
            }
            Op::Sigmoid(x) => {
                let gx = out.iter().zip(g).map(|(y, gv)| gv * y * (1.0 - y)).collect();
                vec![(x, gx)]
            }
            Op::Gather { table, rows } => {
                let d = table.shape()[1];
                let mut gt = vec![0.0; table.numel()];
                for (r, row) in rows.iter().enumerate() {
                    if let Some(idx) = row {
                        let dst = &mut gt[idx * d..(idx + 1) * d];
                        dst.iter_mut()
                            .zip(&g[r * d..(r + 1) * d])
                            .for_each(|(a, b)| *a += b);
                    }
                }
                vec![(table, gt)]
            }
            Op::RowOuter(u, v) => {
                let d = u.shape()[1];
                let (ud, vd) = (u.data(), v.data());
                let mut gu = vec![0.0; ud.len()];
                let mut gv = vec![0.0; vd.len()];
                for r in 0..u.shape()[0] {
                    let gr = &g[r * d * d..(r + 1) * d * d];
                    let (ur, vr) = (&ud[r * d..(r + 1) * d], &vd[r * d..(r + 1) * d]);
                    for i in 0..d {
                        let gi = &gr[i * d..(i + 1) * d];
                        gu[r * d + i] = gi.iter().zip(vr).map(|(a, b)| a * b).sum();
                        for j in 0..d {
                            gv[r * d + j] += gi[j] * ur[i];
                        }
                    }
                }
                vec![(u, gu), (v, gv)]
            }
            Op::GroupPool {
                vectors,
                weights,
                group,
            } => {
                let d = vectors.shape()[1];
                let (vd, wd) = (vectors.data(), weights.data());
                let mut gvec = vec![0.0; vd.len()];
                let mut gw = vec![0.0; wd.len()];
                for (row, &w) in wd.iter().enumerate() {
                    let gb = &g[(row / group) * d..(row / group + 1) * d];
                    let vr = &vd[row * d..(row + 1) * d];
                    gw[row] = vr.iter().zip(gb).map(|(a, b)| a * b).sum();
                    gvec[row * d..(row + 1) * d]
                        .iter_mut()
                        .zip(gb)
                        .for_each(|(dst, gv)| *dst = w * gv);
                }
                vec![(vectors, gvec), (weights, gw)]
            }
            Op::Concat(parts) => {
                let rows = parts[0].shape()[0];
                let total: usize = parts.iter().map(|p| p.shape()[1]).sum();
                let mut offset = 0;
                let mut res = Vec::with_capacity(parts.len());
                for p in parts {
                    let w = p.shape()[1];
                    let mut gp = Vec::with_capacity(rows * w);
                    for r in 0..rows {
                        gp.extend_from_slice(&g[r * total + offset..r * total + offset + w]);
                    }
                    offset += w;
                    res.push((p, gp));
                }
                res
            }
            Op::Bce { pred, labels } => {
                let (lo, hi) = PROB_CLAMP;
                let scale = g[0] / labels.len() as f64;
                let gp = pred
                    .data()
                    .iter()
                    .zip(labels)
                    .map(|(&p, &y)| {
                        if p < lo || p > hi {
                            0.0
                        } else {
                            scale * (-y / p + (1.0 - y) / (1.0 - p))
                        }
                    })
                    .collect();
                vec![(pred, gp)]
            }
            Op::Sum(x) => vec![(x, vec![g[0]; x.numel()])],
            Op::FmPairwise { x, fields } => {
                let width = x.shape()[1];
                let d = width / fields;
                let xd = x.data();
                let mut gx = vec![0.0; xd.len()];
                for (r, &gr) in g.iter().enumerate() {
                    let row = &xd[r * width..(r + 1) * width];
                    let mut total = vec![0.0; d];
                    for f in 0..*fields {
                        total
                            .iter_mut()
                            .zip(&row[f * d..(f + 1) * d])
                            .for_each(|(s, v)| *s += v);
                    }
                    for f in 0..*fields {
                        for c in 0..d {
                            gx[r * width + f * d + c] = gr * (total[c] - row[f * d + c]);
                        }
                    }
                }
                vec![(x, gx)]
            }
            Op::Reshape(x) => vec![(x, g.to_vec())],
        }
    }
}

fn expect_rank(op: &'static str, t: &Tensor, rank: usize) -> Result<(), TensorError> {
    if t.shape().len() != rank {
        return Err(TensorError::Rank {
            op,
            expected: rank,
            shape: t.shape().to_vec(),
        });
    }
    Ok(())
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> TensorError {
    TensorError::Shape {
        op,
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
    }
}

/// Matrix product of `a[m×k]` and `b[k×n]`.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
    expect_rank("matmul", a, 2)?;
    expect_rank("matmul", b, 2)?;
    let (m, k) = (a.shape()[0], a.shape()[1]);
    let (k2, n) = (b.shape()[0], b.shape()[1]);
    if k != k2 {
        return Err(mismatch("matmul", a, b));
    }
    let data = kernels::matmul(&a.data(), &b.data(), m, k, n);
    Ok(Tensor::from_op(data, vec![m, n], Op::MatMul(a.clone(), b.clone())))
}

/// Elementwise sum of two tensors of identical shape.
pub fn add(a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
    if a.shape() != b.shape() {
        return Err(mismatch("add", a, b));
    }
    let data = a.data().iter().zip(b.data().iter()).map(|(x, y)| x + y).collect();
    Ok(Tensor::from_op(data, a.shape().to_vec(), Op::Add(a.clone(), b.clone())))
}

/// Adds the vector `bias[n]` to every row of `x[m×n]`.
pub fn add_row(x: &Tensor, bias: &Tensor) -> Result<Tensor, TensorError> {
    expect_rank("add_row", x, 2)?;
    let n = x.shape()[1];
    if bias.numel() != n {
        return Err(mismatch("add_row", x, bias));
    }
    let bd = bias.data();
    let mut data = x.to_vec();
    for row in data.chunks_mut(n) {
        row.iter_mut().zip(bd.iter()).for_each(|(v, b)| *v += b);
    }
    Ok(Tensor::from_op(data, x.shape().to_vec(), Op::AddRow(x.clone(), bias.clone())))
}

/// Parametric rectifier with a single learnable slope.
pub fn prelu(x: &Tensor, alpha: &Tensor) -> Result<Tensor, TensorError> {
    if alpha.numel() != 1 {
        return Err(mismatch("prelu", x, alpha));
    }
    let a = alpha.item();
    let data = x
        .data()
        .iter()
        .map(|&v| if v > 0.0 { v } else { a * v })
        .collect();
    Ok(Tensor::from_op(
        data,
        x.shape().to_vec(),
        Op::Prelu {
            x: x.clone(),
            alpha: alpha.clone(),
        },
    ))
}

/// Logistic function, evaluated without overflow for any finite input.
pub fn stable_sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &Tensor) -> Tensor {
    let data = x.data().iter().map(|&v| stable_sigmoid(v)).collect();
    Tensor::from_op(data, x.shape().to_vec(), Op::Sigmoid(x.clone()))
}

/// Row `index` of `table[V×d]` as a `[d]` vector.
pub fn embedding_lookup(table: &Tensor, index: usize) -> Result<Tensor, TensorError> {
    let rows = gather_rows(table, &[index], None)?;
    reshape(&rows, &[table.shape()[1]])
}

/// Stacks rows of `table[V×d]` into `[len×d]`. Rows equal to `padding`
/// come out as zeros and receive no gradient.
pub fn gather_rows(
    table: &Tensor,
    indices: &[usize],
    padding: Option<usize>,
) -> Result<Tensor, TensorError> {
    expect_rank("gather_rows", table, 2)?;
    let (v, d) = (table.shape()[0], table.shape()[1]);
    if indices.is_empty() {
        return Err(TensorError::Empty("gather_rows"));
    }
    let td = table.data();
    let mut data = Vec::with_capacity(indices.len() * d);
    let mut rows = Vec::with_capacity(indices.len());
    for &idx in indices {
        if idx >= v {
            return Err(TensorError::Index { index: idx, len: v });
        }
        if Some(idx) == padding {
            data.extend(std::iter::repeat_n(0.0, d));
            rows.push(None);
        } else {
            data.extend_from_slice(&td[idx * d..(idx + 1) * d]);
            rows.push(Some(idx));
        }
    }
    drop(td);
    Ok(Tensor::from_op(
        data,
        vec![indices.len(), d],
        Op::Gather {
            table: table.clone(),
            rows,
        },
    ))
}

/// `u[d] ⊗ v[d]` as a `[d×d]` matrix.
pub fn outer_product(u: &Tensor, v: &Tensor) -> Result<Tensor, TensorError> {
    expect_rank("outer_product", u, 1)?;
    if u.shape() != v.shape() {
        return Err(mismatch("outer_product", u, v));
    }
    let d = u.numel();
    let uu = reshape(u, &[1, d])?;
    let vv = reshape(v, &[1, d])?;
    reshape(&row_outer(&uu, &vv)?, &[d, d])
}

/// Row-wise outer products: `out[r] = flatten(u[r] ⊗ v[r])`, giving `[m×d²]`.
pub fn row_outer(u: &Tensor, v: &Tensor) -> Result<Tensor, TensorError> {
    expect_rank("row_outer", u, 2)?;
    if u.shape() != v.shape() {
        return Err(mismatch("row_outer", u, v));
    }
    let (m, d) = (u.shape()[0], u.shape()[1]);
    let (ud, vd) = (u.data(), v.data());
    let mut data = Vec::with_capacity(m * d * d);
    for r in 0..m {
        let vr = &vd[r * d..(r + 1) * d];
        for &ui in &ud[r * d..(r + 1) * d] {
            data.extend(vr.iter().map(|vj| ui * vj));
        }
    }
    drop((ud, vd));
    Ok(Tensor::from_op(data, vec![m, d * d], Op::RowOuter(u.clone(), v.clone())))
}

/// `Σₖ weights[k]·vectors[k]` for `vectors[K×d]`, `weights[K]`.
pub fn weighted_sum_pool(vectors: &Tensor, weights: &Tensor) -> Result<Tensor, TensorError> {
    expect_rank("weighted_sum_pool", vectors, 2)?;
    let k = vectors.shape()[0];
    let pooled = group_pool(vectors, weights, k)?;
    reshape(&pooled, &[vectors.shape()[1]])
}

/// Batched weighted pooling: rows of `vectors[(B·group)×d]` are summed in
/// consecutive runs of `group`, each scaled by its entry in `weights`.
/// Returns `[B×d]`.
pub fn group_pool(vectors: &Tensor, weights: &Tensor, group: usize) -> Result<Tensor, TensorError> {
    expect_rank("group_pool", vectors, 2)?;
    if group == 0 {
        return Err(TensorError::EmptyHistory);
    }
    let (rows, d) = (vectors.shape()[0], vectors.shape()[1]);
    if weights.numel() != rows || rows % group != 0 {
        return Err(mismatch("weighted_sum_pool", vectors, weights));
    }
    let (vd, wd) = (vectors.data(), weights.data());
    let mut data = vec![0.0; rows / group * d];
    for (row, &w) in wd.iter().enumerate() {
        let dst = &mut data[(row / group) * d..(row / group + 1) * d];
        dst.iter_mut()
            .zip(&vd[row * d..(row + 1) * d])
            .for_each(|(o, v)| *o += w * v);
    }
    drop((vd, wd));
    Ok(Tensor::from_op(
        data,
        vec![rows / group, d],
        Op::GroupPool {
            vectors: vectors.clone(),
            weights: weights.clone(),
            group,
        },
    ))
}

/// Joins `[m×nᵢ]` matrices side by side into `[m×Σnᵢ]`.
pub fn concat_cols(parts: &[Tensor]) -> Result<Tensor, TensorError> {
    let first = parts.first().ok_or(TensorError::Empty("concat_cols"))?;
    for p in parts {
        expect_rank("concat_cols", p, 2)?;
        if p.shape()[0] != first.shape()[0] {
            return Err(mismatch("concat_cols", first, p));
        }
    }
    let rows = first.shape()[0];
    let total: usize = parts.iter().map(|p| p.shape()[1]).sum();
    let mut data = Vec::with_capacity(rows * total);
    let views: Vec<_> = parts.iter().map(|p| p.data()).collect();
    for r in 0..rows {
        for (p, view) in parts.iter().zip(&views) {
            let w = p.shape()[1];
            data.extend_from_slice(&view[r * w..(r + 1) * w]);
        }
    }
    drop(views);
    Ok(Tensor::from_op(data, vec![rows, total], Op::Concat(parts.to_vec())))
}

/// Mean binary cross-entropy of probabilities against 0/1 labels, with
/// predictions clamped to [`PROB_CLAMP`].
pub fn bce_loss(pred: &Tensor, labels: &[f64]) -> Result<Tensor, TensorError> {
    if pred.numel() != labels.len() {
        return Err(TensorError::Shape {
            op: "bce_loss",
            lhs: pred.shape().to_vec(),
            rhs: vec![labels.len()],
        });
    }
    if let Some((position, &value)) = labels
        .iter()
        .enumerate()
        .find(|(_, &y)| y != 0.0 && y != 1.0)
    {
        return Err(TensorError::Label { position, value });
    }
    let (lo, hi) = PROB_CLAMP;
    let total: f64 = pred
        .data()
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(lo, hi);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    Ok(Tensor::from_op(
        vec![total / labels.len() as f64],
        vec![1],
        Op::Bce {
            pred: pred.clone(),
            labels: labels.to_vec(),
        },
    ))
}

pub fn sum(x: &Tensor) -> Tensor {
    let total = x.data().iter().sum();
    Tensor::from_op(vec![total], vec![1], Op::Sum(x.clone()))
}

/// Factorization-machine pairwise term. `x[B×(F·d)]` holds `F` field
/// embeddings of width `d` per row; the result `[B×1]` is
/// `Σ_{i<j} ⟨eᵢ, eⱼ⟩ = ½(‖Σeᵢ‖² − Σ‖eᵢ‖²)`.
pub fn fm_pairwise(x: &Tensor, fields: usize) -> Result<Tensor, TensorError> {
    expect_rank("fm_pairwise", x, 2)?;
    let (rows, width) = (x.shape()[0], x.shape()[1]);
    if fields == 0 || width % fields != 0 {
        return Err(TensorError::Shape {
            op: "fm_pairwise",
            lhs: x.shape().to_vec(),
            rhs: vec![fields],
        });
    }
    let d = width / fields;
    let xd = x.data();
    let mut data = Vec::with_capacity(rows);
    for r in 0..rows {
        let row = &xd[r * width..(r + 1) * width];
        let mut pair = 0.0;
        for c in 0..d {
            let mut s = 0.0;
            let mut sq = 0.0;
            for f in 0..fields {
                let v = row[f * d + c];
                s += v;
                sq += v * v;
            }
            pair += s * s - sq;
        }
        data.push(0.5 * pair);
    }
    drop(xd);
    Ok(Tensor::from_op(data, vec![rows, 1], Op::FmPairwise { x: x.clone(), fields }))
}

/// Same values under a new shape with the same element count.
pub fn reshape(x: &Tensor, shape: &[usize]) -> Result<Tensor, TensorError> {
    if shape.iter().product::<usize>() != x.numel() || shape.contains(&0) {
        return Err(TensorError::Shape {
            op: "reshape",
            lhs: x.shape().to_vec(),
            rhs: shape.to_vec(),
        });
    }
    Ok(Tensor::from_op(x.to_vec(), shape.to_vec(), Op::Reshape(x.clone())))
}
