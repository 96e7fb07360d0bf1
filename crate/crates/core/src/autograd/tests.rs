use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::gradcheck;

const STEP: f64 = 1e-3;
const TOL: f64 = 1e-4;

fn uniform(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
}

fn rand_param(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    Tensor::param(uniform(rng, shape.iter().product()), shape).unwrap()
}

/// A fixed random projection that turns any tensor into a scalar loss with
/// non-trivial upstream gradients.
fn project(t: &Tensor, salt: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(salt);
    let w = Tensor::constant(uniform(&mut rng, t.numel()), &[t.numel(), 1]).unwrap();
    let flat = reshape(t, &[1, t.numel()]).unwrap();
    sum(&matmul(&flat, &w).unwrap())
}

fn assert_gradcheck(params: &[Tensor], f: impl Fn() -> Tensor) {
    let report = gradcheck::check(params, f, STEP);
    assert!(report.checked > 0);
    assert!(
        report.max_rel_error < TOL,
        "max rel error {} at {:?}",
        report.max_rel_error,
        report.worst
    );
}

#[test]
fn matmul_examples() {
    let eye = Tensor::constant(vec![1.0, 0.0, 0.0, 1.0], &[2, 2]).unwrap();
    let b = Tensor::constant(vec![3.0, 4.0, 5.0, 6.0], &[2, 2]).unwrap();
    assert_eq!(matmul(&eye, &b).unwrap().to_vec(), vec![3.0, 4.0, 5.0, 6.0]);

    let row = Tensor::constant(vec![1.0, 2.0], &[1, 2]).unwrap();
    let col = Tensor::constant(vec![3.0, 4.0], &[2, 1]).unwrap();
    let dot = matmul(&row, &col).unwrap();
    assert_eq!(dot.shape(), &[1, 1]);
    assert_eq!(dot.to_vec(), vec![11.0]);
}

#[test]
fn matmul_shape_mismatch_names_both_shapes() {
    let a = Tensor::constant(vec![0.0; 6], &[2, 3]).unwrap();
    let b = Tensor::constant(vec![0.0; 4], &[2, 2]).unwrap();
    let err = matmul(&a, &b).unwrap_err();
    assert_eq!(
        err,
        TensorError::Shape {
            op: "matmul",
            lhs: vec![2, 3],
            rhs: vec![2, 2]
        }
    );
    assert!(err.to_string().contains("[2, 3]") && err.to_string().contains("[2, 2]"));
}

#[test]
fn matmul_gradients() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = rand_param(&mut rng, &[3, 4]);
        let b = rand_param(&mut rng, &[4, 2]);
        assert_gradcheck(&[a.clone(), b.clone()], || project(&matmul(&a, &b).unwrap(), seed));
    }
}

#[test]
fn outer_product_examples() {
    let u = Tensor::constant(vec![1.0, 0.0], &[2]).unwrap();
    let v = Tensor::constant(vec![0.0, 1.0], &[2]).unwrap();
    assert_eq!(outer_product(&u, &v).unwrap().to_vec(), vec![0.0, 1.0, 0.0, 0.0]);
    let w = Tensor::constant(vec![2.0, 3.0], &[2]).unwrap();
    let sym = outer_product(&w, &w).unwrap();
    assert_eq!(sym.shape(), &[2, 2]);
    assert_eq!(sym.to_vec(), vec![4.0, 6.0, 6.0, 9.0]);

    let short = Tensor::constant(vec![1.0], &[1]).unwrap();
    assert!(matches!(outer_product(&u, &short), Err(TensorError::Shape { .. })));
}

#[test]
fn outer_product_gradients() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let u = rand_param(&mut rng, &[5]);
        let v = rand_param(&mut rng, &[5]);
        assert_gradcheck(&[u.clone(), v.clone()], || {
            project(&outer_product(&u, &v).unwrap(), seed)
        });
        let ub = rand_param(&mut rng, &[3, 4]);
        let vb = rand_param(&mut rng, &[3, 4]);
        assert_gradcheck(&[ub.clone(), vb.clone()], || {
            project(&row_outer(&ub, &vb).unwrap(), seed)
        });
    }
}

#[test]
fn prelu_examples() {
    let x = Tensor::constant(vec![-2.0, 0.0, 3.0], &[3]).unwrap();
    let quarter = Tensor::scalar(0.25);
    assert_eq!(prelu(&x, &quarter).unwrap().to_vec(), vec![-0.5, 0.0, 3.0]);
    let one = Tensor::scalar(1.0);
    assert_eq!(prelu(&x, &one).unwrap().to_vec(), x.to_vec());
}

#[test]
fn prelu_gradients() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        let mut values = uniform(&mut rng, 12);
        // keep every entry clear of the kink
        for v in &mut values {
            if v.abs() < 1e-2 {
                *v += 0.5;
            }
        }
        let x = Tensor::param(values, &[3, 4]).unwrap();
        let alpha = Tensor::param(vec![rng.random_range(-1.0..1.0)], &[1]).unwrap();
        assert_gradcheck(&[x.clone(), alpha.clone()], || {
            project(&prelu(&x, &alpha).unwrap(), seed)
        });
    }
}

#[test]
fn prelu_alpha_gradient_sums_negative_inputs() {
    let x = Tensor::constant(vec![-2.0, -1.0, 4.0], &[3]).unwrap();
    let alpha = Tensor::param(vec![0.25], &[1]).unwrap();
    sum(&prelu(&x, &alpha).unwrap()).backward().unwrap();
    assert_eq!(alpha.grad().unwrap(), vec![-3.0]);
}

#[test]
fn sigmoid_examples() {
    let x = Tensor::constant(vec![0.0, -745.0, 2.0, 800.0], &[4]).unwrap();
    let y = sigmoid(&x).to_vec();
    assert_eq!(y[0], 0.5);
    assert!(y[1] > 0.0 && y[1] <= 1e-300, "{}", y[1]);
    assert!((y[2] - 0.880_797_077_977_882_3).abs() < 1e-15);
    assert_eq!(y[3], 1.0);
    assert!(y.iter().all(|v| v.is_finite()));
}

#[test]
fn sigmoid_gradients() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
        let x = rand_param(&mut rng, &[2, 5]);
        assert_gradcheck(std::slice::from_ref(&x), || project(&sigmoid(&x), seed));
    }
}

#[test]
fn embedding_lookup_examples() {
    let table = Tensor::param(vec![1.0, 2.0, 3.0, 4.0], &[2, 2]).unwrap();
    let row = embedding_lookup(&table, 1).unwrap();
    assert_eq!(row.to_vec(), vec![3.0, 4.0]);
    sum(&row).backward().unwrap();
    assert_eq!(table.grad().unwrap(), vec![0.0, 0.0, 1.0, 1.0]);

    assert_eq!(
        embedding_lookup(&table, 2).unwrap_err(),
        TensorError::Index { index: 2, len: 2 }
    );
}

#[test]
fn embedding_padding_row_is_zero_and_gradient_free() {
    let table = Tensor::param(vec![9.0, 9.0, 1.0, 2.0], &[2, 2]).unwrap();
    let rows = gather_rows(&table, &[0, 1, 0], Some(0)).unwrap();
    assert_eq!(rows.to_vec(), vec![0.0, 0.0, 1.0, 2.0, 0.0, 0.0]);
    sum(&rows).backward().unwrap();
    assert_eq!(table.grad().unwrap(), vec![0.0, 0.0, 1.0, 1.0]);
}

#[test]
fn embedding_gradients_accumulate_repeated_rows() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
        let table = rand_param(&mut rng, &[4, 3]);
        assert_gradcheck(std::slice::from_ref(&table), || {
            let a = embedding_lookup(&table, 2).unwrap();
            let b = embedding_lookup(&table, 2).unwrap();
            let c = gather_rows(&table, &[0, 2, 3], None).unwrap();
            let ab = add(&a, &b).unwrap();
            let total = add(&sum(&sigmoid(&ab)), &project(&c, seed)).unwrap();
            total
        });
    }
}

#[test]
fn weighted_sum_pool_examples() {
    let single = Tensor::constant(vec![0.3, -1.5, 2.0], &[1, 3]).unwrap();
    let one = Tensor::constant(vec![1.0], &[1]).unwrap();
    assert_eq!(weighted_sum_pool(&single, &one).unwrap().to_vec(), single.to_vec());

    let basis = Tensor::constant(vec![1.0, 0.0, 0.0, 1.0], &[2, 2]).unwrap();
    let w = Tensor::constant(vec![2.0, 3.0], &[2]).unwrap();
    assert_eq!(weighted_sum_pool(&basis, &w).unwrap().to_vec(), vec![2.0, 3.0]);

    assert_eq!(
        group_pool(&basis, &w, 0).unwrap_err(),
        TensorError::EmptyHistory
    );
}

#[test]
fn weighted_sum_pool_gradients() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let v = rand_param(&mut rng, &[5, 8]);
        let w = rand_param(&mut rng, &[5]);
        assert_gradcheck(&[v.clone(), w.clone()], || {
            project(&weighted_sum_pool(&v, &w).unwrap(), seed)
        });
        let vb = rand_param(&mut rng, &[6, 3]);
        let wb = rand_param(&mut rng, &[6]);
        assert_gradcheck(&[vb.clone(), wb.clone()], || {
            project(&group_pool(&vb, &wb, 3).unwrap(), seed)
        });
    }
}

#[test]
fn bce_loss_examples() {
    let half = Tensor::constant(vec![0.5], &[1]).unwrap();
    let loss = bce_loss(&half, &[1.0]).unwrap().item();
    assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);

    let perfect = Tensor::constant(vec![1.0, 0.0], &[2]).unwrap();
    let loss = bce_loss(&perfect, &[1.0, 0.0]).unwrap().item();
    assert!(loss <= 1e-6 * (1e-7f64).ln().abs());

    let pred = Tensor::constant(vec![0.9, 0.2], &[2]).unwrap();
    let loss = bce_loss(&pred, &[1.0, 0.0]).unwrap().item();
    let expected = (-(0.9f64).ln() - (0.8f64).ln()) / 2.0;
    assert!((loss - expected).abs() < 1e-15);
    assert!((loss - 0.164252).abs() < 1e-6);

    assert_eq!(
        bce_loss(&pred, &[1.0, 0.5]).unwrap_err(),
        TensorError::Label {
            position: 1,
            value: 0.5
        }
    );
}

#[test]
fn bce_gradients() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let z = rand_param(&mut rng, &[6]);
        let labels: Vec<f64> = (0..6).map(|i| ((i + seed as usize) % 2) as f64).collect();
        assert_gradcheck(std::slice::from_ref(&z), || {
            bce_loss(&sigmoid(&z), &labels).unwrap()
        });
    }
}

#[test]
fn concat_add_row_and_fm_gradients() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(700 + seed);
        let a = rand_param(&mut rng, &[3, 2]);
        let b = rand_param(&mut rng, &[3, 4]);
        let bias = rand_param(&mut rng, &[6]);
        assert_gradcheck(&[a.clone(), b.clone(), bias.clone()], || {
            let joined = concat_cols(&[a.clone(), b.clone()]).unwrap();
            let shifted = add_row(&joined, &bias).unwrap();
            let fm = fm_pairwise(&shifted, 3).unwrap();
            add(&project(&shifted, seed), &sum(&fm)).unwrap()
        });
    }
}

#[test]
fn fm_single_pair_is_dot_product() {
    let x = Tensor::constant(vec![1.0, 2.0, 3.0, -4.0, 0.5, 2.0], &[1, 6]).unwrap();
    let fm = fm_pairwise(&x, 2).unwrap();
    assert_eq!(fm.to_vec(), vec![1.0 * -4.0 + 2.0 * 0.5 + 3.0 * 2.0]);
}

#[test]
fn sum_backward_gives_ones() {
    let x = Tensor::param(vec![0.1, -3.0, 2.0, 7.0, 0.0, 1.0], &[2, 3]).unwrap();
    sum(&x).backward().unwrap();
    assert_eq!(x.grad().unwrap(), vec![1.0; 6]);
}

#[test]
fn single_neuron_matches_closed_form() {
    let w = Tensor::param(vec![0.7, -0.3], &[2, 1]).unwrap();
    let x = Tensor::constant(vec![1.5, 2.0], &[1, 2]).unwrap();
    let y = sigmoid(&matmul(&x, &w).unwrap());
    sum(&y).backward().unwrap();
    let z: f64 = 0.7 * 1.5 - 0.3 * 2.0;
    let s = 1.0 / (1.0 + (-z).exp());
    let dz = s * (1.0 - s);
    let g = w.grad().unwrap();
    assert!((g[0] - dz * 1.5).abs() < 1e-15);
    assert!((g[1] - dz * 2.0).abs() < 1e-15);
}

#[test]
fn shared_input_accumulates_both_paths() {
    let x = Tensor::param(vec![1.5, -0.5], &[2]).unwrap();
    // loss = sum(x + sigmoid(x))
    let loss = sum(&add(&x, &sigmoid(&x)).unwrap());
    loss.backward().unwrap();
    let g = x.grad().unwrap();
    for (gi, xi) in g.iter().zip([1.5f64, -0.5]) {
        let s = 1.0 / (1.0 + (-xi).exp());
        assert!((gi - (1.0 + s * (1.0 - s))).abs() < 1e-15);
    }
}

#[test]
fn repeated_backward_accumulates() {
    let x = Tensor::param(vec![2.0, 3.0], &[2]).unwrap();
    let loss = sum(&x);
    loss.backward().unwrap();
    loss.backward().unwrap();
    assert_eq!(x.grad().unwrap(), vec![2.0, 2.0]);
    x.zero_grad();
    assert!(x.grad().is_none());
}

#[test]
fn backward_rejects_non_scalar() {
    let x = Tensor::param(vec![1.0, 2.0], &[2]).unwrap();
    let y = sigmoid(&x);
    assert_eq!(y.backward().unwrap_err(), TensorError::NonScalarLoss(vec![2]));
}

#[test]
fn ops_do_not_mutate_inputs_and_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a = rand_param(&mut rng, &[4, 3]);
    let b = rand_param(&mut rng, &[3, 3]);
    let (a0, b0) = (a.to_vec(), b.to_vec());
    let run = || {
        let h = matmul(&a, &b).unwrap();
        let o = row_outer(&h, &h).unwrap();
        let loss = project(&o, 1);
        loss.backward().unwrap();
        loss.item()
    };
    let first = run();
    let g1 = a.grad().unwrap();
    a.zero_grad();
    b.zero_grad();
    let second = run();
    assert_eq!(first.to_bits(), second.to_bits());
    assert_eq!(g1, a.grad().unwrap());
    assert_eq!(a.to_vec(), a0);
    assert_eq!(b.to_vec(), b0);
}

#[test]
fn constructor_rejects_inconsistent_shape() {
    assert!(matches!(
        Tensor::constant(vec![1.0; 5], &[2, 3]),
        Err(TensorError::Length { .. })
    ));
    assert!(Tensor::constant(vec![], &[0]).is_err());
}
