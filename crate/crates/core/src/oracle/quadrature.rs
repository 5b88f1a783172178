//! Adaptive Simpson quadrature.

/// Default absolute tolerance.
pub const QUADRATURE_TOLERANCE: f64 = 1e-8;
/// Gaussian expectations integrate over `μ ± WIDTH·σ`.
pub const QUADRATURE_WIDTH: f64 = 8.0;

const MAX_DEPTH: u32 = 50;
/// Refinement levels forced before the error estimate is trusted. A panel
/// whose five samples all vanish (e.g. a kink between zeros of the
/// integrand) would otherwise be accepted as exactly zero.
const MIN_DEPTH: u32 = 6;

fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(fa, flm, fm, a, m);
    let right = simpson(fm, frm, fb, m, b);
    let delta = left + right - whole;
    if depth == 0 || (depth <= MAX_DEPTH - MIN_DEPTH && delta.abs() <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + refine(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Panels evaluated before adaptive refinement starts.
const INITIAL_PANELS: usize = 16;

/// `∫_a^b f` to absolute tolerance `tol` (Richardson-corrected Simpson).
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let f: &dyn Fn(f64) -> f64 = &f;
    let width = (b - a) / INITIAL_PANELS as f64;
    let panel_tol = tol / INITIAL_PANELS as f64;
    let mut total = 0.0;
    let mut lo = a;
    let mut flo = f(lo);
    for i in 1..=INITIAL_PANELS {
        let hi = if i == INITIAL_PANELS { b } else { a + width * i as f64 };
        let m = 0.5 * (lo + hi);
        let (fm, fhi) = (f(m), f(hi));
        let whole = simpson(flo, fm, fhi, lo, hi);
        total += refine(f, lo, hi, flo, fm, fhi, whole, panel_tol, MAX_DEPTH);
        lo = hi;
        flo = fhi;
    }
    total
}

/// `E[g(X)]` for `X ~ N(mean, σ²)` over `mean ± 8σ`, integrated in the
/// standardized variable so the tolerance is scale free.
pub fn gaussian_expectation(g: impl Fn(f64) -> f64, mean: f64, sigma: f64, tol: f64) -> f64 {
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    adaptive_simpson(
        |z| norm * (-0.5 * z * z).exp() * g(mean + sigma * z),
        -QUADRATURE_WIDTH,
        QUADRATURE_WIDTH,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_transcendentals() {
        assert!((adaptive_simpson(|x| x * x, 0.0, 3.0, 1e-10) - 9.0).abs() < 1e-10);
        assert!((adaptive_simpson(f64::sin, 0.0, std::f64::consts::PI, 1e-10) - 2.0).abs() < 1e-9);
        assert!((adaptive_simpson(|x| x.abs(), -1.0, 2.0, 1e-10) - 2.5).abs() < 1e-9);
    }

    #[test]
    fn kink_between_sample_zeros_is_resolved() {
        // zero at every coarse node of [-1, 1], non-zero on (-0.1, 0)
        let f = |x: f64| if x > -0.1 && x < 0.0 { x * (x + 0.1) } else { 0.0 };
        let exact = -(0.1f64.powi(3)) / 6.0;
        assert!((adaptive_simpson(f, -1.0, 1.0, 1e-12) - exact).abs() < 1e-10);
    }

    #[test]
    fn gaussian_moments() {
        let m0 = gaussian_expectation(|_| 1.0, 0.3, 0.2, 1e-10);
        let m2 = gaussian_expectation(|x| (x - 0.3).powi(2), 0.3, 0.2, 1e-10);
        assert!((m0 - 1.0).abs() < 1e-9);
        assert!((m2 - 0.04).abs() < 1e-9);
    }
}
