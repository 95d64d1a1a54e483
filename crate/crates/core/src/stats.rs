//! Summary statistics, normal QQ data and the one-sample KS test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const MIN_QQ_POINTS: usize = 10;

fn std_normal() -> Normal {
    Normal::standard()
}

pub fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

pub fn normal_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (divisor `n − 1`); `None` for fewer than two values.
pub fn sample_sd(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    Some((xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt())
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QqPoint {
    /// Standardized sample order statistic.
    pub sample: f64,
    /// Standard-normal quantile at `(i − 0.5)/n`.
    pub theoretical: f64,
}

/// Sorted `(x − center)/scale` paired with normal plotting positions.
pub fn qq_data(estimates: &[f64], center: f64, scale: f64) -> Result<Vec<QqPoint>> {
    if estimates.len() < MIN_QQ_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_QQ_POINTS,
            got: estimates.len(),
        });
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidArgument(format!("QQ scale must be positive, got {scale}")));
    }
    let mut z: Vec<f64> = estimates.iter().map(|x| (x - center) / scale).collect();
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    Ok(z
        .into_iter()
        .enumerate()
        .map(|(i, sample)| QqPoint {
            sample,
            theoretical: normal_quantile((i as f64 + 0.5) / n),
        })
        .collect())
}

pub fn qq_correlation(points: &[QqPoint]) -> f64 {
    let s: Vec<f64> = points.iter().map(|p| p.sample).collect();
    let t: Vec<f64> = points.iter().map(|p| p.theoretical).collect();
    pearson(&s, &t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov survival function `P(K > x)`.
fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test against N(0, 1). The p-value uses the
/// asymptotic distribution with Stephens' small-sample correction.
pub fn ks_test_standard_normal(samples: &[f64]) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let statistic = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            (f - i as f64 / n).max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max);
    let sqrt_n = n.sqrt();
    let p_value = kolmogorov_sf(statistic * (sqrt_n + 0.12 + 0.11 / sqrt_n));
    Ok(KsResult { statistic, p_value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_quantiles_correlate_perfectly() {
        let n = 50;
        let xs: Vec<f64> = (0..n).map(|i| normal_quantile((i as f64 + 0.5) / n as f64)).collect();
        let qq = qq_data(&xs, 0.0, 1.0).unwrap();
        assert_relative_eq!(qq_correlation(&qq), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn qq_errors() {
        assert!(matches!(qq_data(&[1.0; 5], 0.0, 1.0), Err(Error::InsufficientData { .. })));
        assert!(qq_data(&[1.0; 20], 1.0, 0.0).is_err());
    }

    #[test]
    fn kolmogorov_reference_values() {
        // classical critical values: P(K > 1.3581) = 0.05, P(K > 1.6276) = 0.01
        assert_relative_eq!(kolmogorov_sf(1.3581), 0.05, epsilon = 1e-4);
        assert_relative_eq!(kolmogorov_sf(1.6276), 0.01, epsilon = 1e-4);
    }

    #[test]
    fn ks_rejects_shifted_sample() {
        let xs: Vec<f64> = (0..200).map(|i| normal_quantile((i as f64 + 0.5) / 200.0) + 1.0).collect();
        assert!(ks_test_standard_normal(&xs).unwrap().p_value < 1e-6);
        let ys: Vec<f64> = (0..200).map(|i| normal_quantile((i as f64 + 0.5) / 200.0)).collect();
        assert!(ks_test_standard_normal(&ys).unwrap().p_value > 0.99);
    }

    #[test]
    fn sd_of_short_samples() {
        assert_eq!(sample_sd(&[1.0]), None);
        assert_relative_eq!(sample_sd(&[1.0, 3.0]).unwrap(), std::f64::consts::SQRT_2);
    }
}
