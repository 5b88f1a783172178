//! Small statistics helpers for comparing learning runs across seeds.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n − 1` denominator); zero for one sample.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Average ranks (1-based), ties share the mean of their positions.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSumTest {
    /// Mann–Whitney `U` of the first sample.
    pub u: f64,
    pub z: f64,
    /// One-sided p-value for "first sample tends to be larger".
    pub p_greater: f64,
}

/// Wilcoxon rank-sum (Mann–Whitney) test, normal approximation with tie
/// and continuity corrections.
pub fn rank_sum_greater(first: &[f64], second: &[f64]) -> Result<RankSumTest> {
    let (n1, n2) = (first.len(), second.len());
    if n1 == 0 || n2 == 0 {
        return Err(Error::invalid("rank-sum test needs two non-empty samples"));
    }
    if first.iter().chain(second).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("rank-sum sample"));
    }
    let pooled: Vec<f64> = first.iter().chain(second).copied().collect();
    let r = ranks(&pooled);
    let r1: f64 = r[..n1].iter().sum();
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let u = r1 - n1f * (n1f + 1.0) / 2.0;
    let n = n1f + n2f;
    let mut tie_term = 0.0;
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n1f * n2f / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    let centred = u - n1f * n2f / 2.0;
    let (z, p) = if var > 0.0 {
        let z = (centred - 0.5) / var.sqrt();
        (z, 1.0 - Normal::standard().cdf(z))
    } else {
        (0.0, 1.0)
    };
    Ok(RankSumTest { u, z, p_greater: p })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub rho: f64,
    /// One-sided p-value for `ρ > 0` (Student-t approximation).
    pub p_positive: f64,
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<Correlation> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::invalid("Spearman correlation needs two aligned samples of size ≥ 3"));
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let (mx, my) = (mean(&rx), mean(&ry));
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return Ok(Correlation { rho: 0.0, p_positive: 1.0 });
    }
    let rho = cov / (vx * vy).sqrt();
    let df = xs.len() as f64 - 2.0;
    let p_positive = if rho >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        1.0 - StudentsT::new(0.0, 1.0, df).map_err(|e| Error::invalid(e.to_string()))?.cdf(t)
    };
    Ok(Correlation { rho, p_positive })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_average_ties() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn separated_samples_are_significant() {
        let a: Vec<f64> = (0..20).map(|i| 10.0 + i as f64).collect();
        let b: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let t = rank_sum_greater(&a, &b).unwrap();
        assert_eq!(t.u, 400.0);
        assert!(t.p_greater < 1e-6);
        assert!(rank_sum_greater(&b, &a).unwrap().p_greater > 0.99);
    }

    #[test]
    fn identical_samples_are_not_significant() {
        let a = vec![1.0; 20];
        assert_eq!(rank_sum_greater(&a, &a).unwrap().p_greater, 1.0);
    }

    #[test]
    fn rank_sum_matches_reference_value() {
        // scipy.stats.mannwhitneyu([1,2,3,4,5,6], [3.5,7,8,9,10,11], alternative="greater",
        // method="asymptotic") gives U = 3, p ≈ 0.993467
        let t = rank_sum_greater(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[3.5, 7.0, 8.0, 9.0, 10.0, 11.0]).unwrap();
        assert_eq!(t.u, 3.0);
        assert!((t.p_greater - 0.993467).abs() < 1e-5, "{t:?}");
    }

    #[test]
    fn spearman_monotone() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| v.powi(3)).collect();
        let c = spearman(&x, &y).unwrap();
        assert_eq!(c.rho, 1.0);
        assert_eq!(c.p_positive, 0.0);
        let z: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!(spearman(&x, &z).unwrap().p_positive > 0.99);
    }

    #[test]
    fn std_dev_known() {
        assert!((std_dev(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]) - 2.138089935299395).abs() < 1e-12);
    }
}
