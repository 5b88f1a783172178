//! Sign agreement between the CAC and DPG directions on the 1-D quadratic
//! bandit, by quadrature with the exact advantage of the Gaussian policy.

use super::quadrature::{gaussian_expectation, QUADRATURE_TOLERANCE};
use crate::env::QuadraticBandit;
use crate::error::check_len;
use crate::updates::heaviside;
use crate::{Error, Result};

/// `A^π(a) = R(a) − E_π[R]` for `π = N(θ, σ²)` and `R(a) = −(a − a*)²`.
pub fn exact_advantage_1d(target: f64, theta: f64, sigma: f64, action: f64) -> f64 {
    -(action - target).powi(2) + (theta - target).powi(2) + sigma * sigma
}

#[derive(Debug, Clone, PartialEq)]
pub struct GplusEstimate {
    pub sigma: f64,
    /// `(1/σ²) E_π[H(A)·A·(a − θ)]`.
    pub delta_cac: f64,
    /// `∇_a A^μ(a)|_{a=θ} = −2(θ − a*)`.
    pub delta_dpg: f64,
    /// `Δ_CAC / Δ_DPG`; `None` on the `Δ_DPG = 0` branch.
    pub ratio: Option<f64>,
}

impl GplusEstimate {
    /// Ratio in `[0, 1]` (up to `tol`), or `|Δ_CAC| ≤ tol` when `Δ_DPG = 0`.
    pub fn holds(&self, tol: f64) -> bool {
        match self.ratio {
            Some(r) => r >= -tol && r <= 1.0 + tol,
            None => self.delta_cac.abs() <= tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GplusSuite {
    pub theta: f64,
    pub target: f64,
    pub estimates: Vec<GplusEstimate>,
}

/// Quadrature estimate of the CAC/DPG ratio for each `σ` at parameter `θ`.
pub fn estimate_gplus(bandit: &QuadraticBandit, theta: f64, sigmas: &[f64]) -> Result<GplusSuite> {
    check_len("bandit action dimension", 1, bandit.action_dim())?;
    let target = bandit.target()[0];
    let delta_dpg = -2.0 * (theta - target);
    let mut estimates = Vec::with_capacity(sigmas.len());
    for &sigma in sigmas {
        if !(sigma > 0.0) {
            return Err(Error::invalid(format!("σ must be positive, got {sigma}")));
        }
        let inv_var = 1.0 / (sigma * sigma);
        let delta_cac = gaussian_expectation(
            |a| {
                let adv = exact_advantage_1d(target, theta, sigma, a);
                inv_var * heaviside(adv) * adv * (a - theta)
            },
            theta,
            sigma,
            QUADRATURE_TOLERANCE,
        );
        let ratio = (delta_dpg != 0.0).then(|| delta_cac / delta_dpg);
        estimates.push(GplusEstimate {
            sigma,
            delta_cac,
            delta_dpg,
            ratio,
        });
    }
    Ok(GplusSuite {
        theta,
        target,
        estimates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{Continuous, ContinuousCDF, Normal};

    /// `(1/σ²)∫_{x−}^{x+} φ_σ(x)(−x³ − 2dx² + σ²x) dx` from Gaussian partial
    /// moments, where `x = a − θ`, `d = θ − a*` and `x± = −d ± √(d² + σ²)`.
    fn closed_form(target: f64, theta: f64, sigma: f64) -> f64 {
        let d = theta - target;
        let root = (d * d + sigma * sigma).sqrt();
        let (lo, hi) = ((-d - root) / sigma, (-d + root) / sigma);
        let n = Normal::new(0.0, 1.0).unwrap();
        let (pl, ph) = (n.pdf(lo), n.pdf(hi));
        let m0 = n.cdf(hi) - n.cdf(lo);
        let m1 = sigma * (pl - ph);
        let m2 = sigma.powi(2) * (m0 + lo * pl - hi * ph);
        let m3 = sigma.powi(3) * ((lo * lo + 2.0) * pl - (hi * hi + 2.0) * ph);
        (-m3 - 2.0 * d * m2 + sigma * sigma * m1) / (sigma * sigma)
    }

    #[test]
    fn quadrature_matches_partial_moments() {
        let bandit = QuadraticBandit::new(vec![0.6]).unwrap();
        for theta in [-0.4, 0.0, 0.3, 0.59] {
            let suite = estimate_gplus(&bandit, theta, &[0.5, 0.2, 0.1, 0.05]).unwrap();
            for e in &suite.estimates {
                let exact = closed_form(0.6, theta, e.sigma);
                assert!((e.delta_cac - exact).abs() < 1e-7, "θ={theta} σ={} {} vs {exact}", e.sigma, e.delta_cac);
            }
        }
    }

    #[test]
    fn ratios_lie_in_unit_interval() {
        let bandit = QuadraticBandit::new(vec![1.0]).unwrap();
        let suite = estimate_gplus(&bandit, 0.0, &[0.5, 0.2, 0.1, 0.05]).unwrap();
        for e in &suite.estimates {
            let r = e.ratio.unwrap();
            assert!(r > 0.0 && r <= 1.0, "{e:?}");
        }
    }

    #[test]
    fn optimum_branch_cancels() {
        let bandit = QuadraticBandit::new(vec![0.3]).unwrap();
        let suite = estimate_gplus(&bandit, 0.3, &[0.01]).unwrap();
        let e = &suite.estimates[0];
        assert_eq!(e.ratio, None);
        assert!(e.delta_cac.abs() < 1e-6);
    }
}
