//! Central finite-difference check of [`MlpNet::backward`].

use super::mlp::LossProbe;
use super::{MlpNet, Mode};
use crate::error::check_len;
use crate::Result;

/// Relative error with a small absolute floor so that two near-zero
/// gradients do not produce a spurious large ratio.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(1e-6);
    (analytic - numeric).abs() / scale
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub checked: usize,
    /// Parameters whose ±h perturbation flipped a leaky-ReLU branch; the
    /// function is not differentiable across the kink so they are skipped.
    pub skipped_kinks: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_relative_error < tolerance && self.checked > 0
    }
}

/// Compares the analytic gradient of `L(θ) = Σ_n upstream[n]·f_θ(x_n)` with
/// a Richardson-extrapolated central difference, `(4·D(h/2) − D(h))/3`,
/// for every parameter of `net`. The extrapolation cancels the `O(h²)` term,
/// so `h` can be large enough to keep roundoff negligible even where batch
/// normalization makes the loss strongly curved.
pub fn gradient_check(
    net: &MlpNet,
    inputs: &[Vec<f64>],
    upstream: &[Vec<f64>],
    mode: Mode,
    h: f64,
) -> Result<GradCheckReport> {
    let mut scratch = net.clone();
    scratch.forward_batch(inputs, mode)?;
    let analytic = scratch.backward(upstream)?;

    check_len("upstream batch", inputs.len(), upstream.len())?;
    let probe = LossProbe::new(net, inputs, upstream, mode)?;
    let base = net.params();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        checked: 0,
        skipped_kinks: 0,
    };
    for (i, &g) in analytic.iter().enumerate() {
        let at = |offset: f64, kinks: bool| probe.loss_at(i, base[i] + offset, kinks);
        let (plus, sig_plus) = at(h, true);
        let (minus, sig_minus) = at(-h, true);
        let (half_plus, _) = at(0.5 * h, false);
        let (half_minus, _) = at(-0.5 * h, false);
        if sig_plus != sig_minus {
            report.skipped_kinks += 1;
            continue;
        }
        let wide = (plus - minus) / (2.0 * h);
        let narrow = (half_plus - half_minus) / h;
        let numeric = (4.0 * narrow - wide) / 3.0;
        report.max_relative_error = report.max_relative_error.max(relative_error(g, numeric));
        report.checked += 1;
    }
    Ok(report)
}
