//! Central finite-difference gradient checking.
//!
//! The check only calls the forward closure and reads/writes parameter
//! values, so it stays independent of the analytic backward pass it is
//! used to verify.

use crate::autograd::Tensor;

/// Below this magnitude gradients are compared in absolute terms.
pub const REL_ERR_FLOOR: f64 = 1e-6;

/// `|a − n| / max(|a|, |n|, REL_ERR_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(REL_ERR_FLOOR);
    (analytic - numeric).abs() / scale
}

/// Agreement over the checked entries of one parameter tensor.
#[derive(Debug, Clone, Default)]
pub struct TensorCheck {
    pub checked: usize,
    /// Largest per-entry [`relative_error`].
    pub max_rel_error: f64,
    /// `‖a − n‖ / max(‖a‖, ‖n‖, REL_ERR_FLOOR)` over the checked entries.
    pub norm_rel_error: f64,
}

#[derive(Debug, Clone, Default)]
pub struct GradCheckReport {
    pub checked: usize,
    /// Coordinates whose ±step probe changed the sign of some PReLU input.
    pub skipped_kinks: usize,
    pub max_rel_error: f64,
    /// (param index, element index, analytic, numeric) of the worst entry.
    pub worst: Option<(usize, usize, f64, f64)>,
    /// One entry per parameter, in input order.
    pub per_tensor: Vec<TensorCheck>,
}

impl GradCheckReport {
    /// Largest per-tensor norm relative error.
    pub fn max_tensor_error(&self) -> f64 {
        self.per_tensor.iter().map(|t| t.norm_rel_error).fold(0.0, f64::max)
    }
}

/// Compares analytic gradients of `loss_fn` against central differences.
///
/// `loss_fn` must rebuild the graph from the current parameter values on
/// every call and return a one-element loss. Parameter gradients are reset
/// before and after the check.
pub fn check<F>(params: &[Tensor], loss_fn: F, step: f64) -> GradCheckReport
where
    F: Fn() -> Tensor,
{
    for p in params {
        p.zero_grad();
    }
    let loss = loss_fn();
    let base_signs = loss.prelu_input_signs();
    loss.backward().expect("loss must be scalar");
    let analytic: Vec<Vec<f64>> = params
        .iter()
        .map(|p| p.grad().unwrap_or_else(|| vec![0.0; p.numel()]))
        .collect();
    drop(loss);

    let mut report = GradCheckReport::default();
    for (pi, p) in params.iter().enumerate() {
        let mut tensor = TensorCheck::default();
        let (mut diff_sq, mut a_sq, mut n_sq) = (0.0, 0.0, 0.0);
        for ei in 0..p.numel() {
            let original = p.data()[ei];
            p.data_mut()[ei] = original + step;
            let plus = loss_fn();
            p.data_mut()[ei] = original - step;
            let minus = loss_fn();
            p.data_mut()[ei] = original;
            if plus.prelu_input_signs() != base_signs || minus.prelu_input_signs() != base_signs {
                report.skipped_kinks += 1;
                continue;
            }
            let numeric = (plus.item() - minus.item()) / (2.0 * step);
            let a = analytic[pi][ei];
            let err = relative_error(a, numeric);
            report.checked += 1;
            tensor.checked += 1;
            tensor.max_rel_error = tensor.max_rel_error.max(err);
            diff_sq += (a - numeric) * (a - numeric);
            a_sq += a * a;
            n_sq += numeric * numeric;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(err);
                if err >= report.max_rel_error {
                    report.worst = Some((pi, ei, a, numeric));
                }
            }
        }
        tensor.norm_rel_error = diff_sq.sqrt() / a_sq.sqrt().max(n_sq.sqrt()).max(REL_ERR_FLOOR);
        report.per_tensor.push(tensor);
    }
    for p in params {
        p.zero_grad();
    }
    report
}
