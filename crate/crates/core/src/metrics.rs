//! Regression and agreement statistics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {} values", a.len(), b.len())));
    }
    Ok(())
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (n − 1). Zero for fewer than two values.
pub fn sample_sd(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

/// Median; the mean of the middle pair for even lengths.
pub fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub n: usize,
    /// `None` when the targets are constant.
    pub r2: Option<f64>,
    pub rmse: f64,
    pub mae: f64,
}

pub fn r_squared(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    check_pair(predicted, actual)?;
    let m = mean(actual);
    let ss_tot: f64 = actual.iter().map(|a| (a - m) * (a - m)).sum();
    if ss_tot == 0.0 {
        return Err(Error::ConstantTargets);
    }
    let ss_res: f64 = predicted.iter().zip(actual).map(|(p, a)| (a - p) * (a - p)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

pub fn regression_metrics(predicted: &[f64], actual: &[f64]) -> Result<RegressionMetrics> {
    check_pair(predicted, actual)?;
    let n = actual.len() as f64;
    let mse = predicted.iter().zip(actual).map(|(p, a)| (a - p) * (a - p)).sum::<f64>() / n;
    let mae = predicted.iter().zip(actual).map(|(p, a)| (a - p).abs()).sum::<f64>() / n;
    let r2 = match r_squared(predicted, actual) {
        Ok(r) => Some(r),
        Err(Error::ConstantTargets) => None,
        Err(e) => return Err(e),
    };
    Ok(RegressionMetrics { n: actual.len(), r2, rmse: mse.sqrt(), mae })
}

/// Sample Pearson correlation and its two-sided p-value from the t-transform.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    check_pair(x, y)?;
    let n = x.len();
    if n < 3 {
        return Err(Error::TooFewRows { needed: 3, got: n });
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantInput);
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p = if 1.0 - r * r <= 0.0 { 0.0 } else { two_sided(r * (df / (1.0 - r * r)).sqrt(), df) };
    Ok((r, p))
}

fn two_sided(t: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mad: f64,
    pub median_ad: f64,
    /// mean(actual − predicted)
    pub mean_difference: f64,
    pub predicted_mean: f64,
    pub predicted_sd: f64,
    pub actual_mean: f64,
    pub actual_sd: f64,
}

pub fn error_stats(predicted: &[f64], actual: &[f64]) -> Result<ErrorStats> {
    check_pair(predicted, actual)?;
    let abs: Vec<f64> = predicted.iter().zip(actual).map(|(p, a)| (a - p).abs()).collect();
    let diff: Vec<f64> = predicted.iter().zip(actual).map(|(p, a)| a - p).collect();
    Ok(ErrorStats {
        mad: mean(&abs),
        median_ad: median(&abs),
        mean_difference: mean(&diff),
        predicted_mean: mean(predicted),
        predicted_sd: sample_sd(predicted),
        actual_mean: mean(actual),
        actual_sd: sample_sd(actual),
    })
}

/// Fraction of pairs with |actual − predicted| ≤ τ, per threshold.
pub fn threshold_rates(predicted: &[f64], actual: &[f64], thresholds: &[f64]) -> Result<Vec<f64>> {
    check_pair(predicted, actual)?;
    let n = actual.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| predicted.iter().zip(actual).filter(|(p, a)| (*a - *p).abs() <= t).count() as f64 / n)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn regression_examples() {
        let m = regression_metrics(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((m.r2, m.rmse, m.mae), (Some(1.0), 0.0, 0.0));
        let m = regression_metrics(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.r2, Some(0.0));
        let m = regression_metrics(&[1.0, 1.0], &[0.0, 2.0]).unwrap();
        assert_eq!((m.r2, m.rmse, m.mae), (Some(0.0), 1.0, 1.0));
        let m = regression_metrics(&[1.0, 2.0], &[3.0, 3.0]).unwrap();
        assert_eq!(m.r2, None);
        assert!(matches!(r_squared(&[1.0, 2.0], &[3.0, 3.0]), Err(Error::ConstantTargets)));
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_abs_diff_eq!(pearson(&x, &x).unwrap().0, 1.0, epsilon = 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_abs_diff_eq!(pearson(&x, &neg).unwrap().0, -1.0, epsilon = 1e-12);
        // Sxy = 4.7, Sxx = 5, Syy = 4.5 → r = 4.7 / sqrt(22.5) = 0.990847
        let (r, p) = pearson(&x, &[1.1, 1.9, 3.2, 3.8]).unwrap();
        assert_abs_diff_eq!(r, 0.990847, epsilon = 1e-6);
        assert!(p > 0.0 && p < 0.01);
        assert!(matches!(pearson(&x, &[1.0; 4]), Err(Error::ConstantInput)));
    }

    #[test]
    fn pearson_p_value_reference() {
        // r = 0.5, n = 12 → t = 1.8257, two-sided p ≈ 0.0979 (t table, 10 df)
        let x: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let (r, _) = pearson(&x, &x).unwrap();
        assert_eq!(r, 1.0);
        let t: f64 = 0.5 * (10.0f64 / 0.75).sqrt();
        assert_abs_diff_eq!(two_sided(t, 10.0), 0.0979, epsilon = 1e-3);
    }

    #[test]
    fn error_stat_examples() {
        let s = error_stats(&[12.0, 16.0], &[10.0, 20.0]).unwrap();
        assert_eq!((s.mad, s.median_ad, s.mean_difference), (3.0, 3.0, 1.0));
        let s = error_stats(&[40.0], &[50.0]).unwrap();
        assert_eq!(s.mad, 10.0);
        let s = error_stats(&[5.0, 6.0], &[5.0, 6.0]).unwrap();
        assert_eq!((s.mad, s.median_ad, s.mean_difference), (0.0, 0.0, 0.0));
    }

    #[test]
    fn thresholds_are_inclusive() {
        let r = threshold_rates(&[0.0, 0.0, 0.0], &[10.0, 20.0, 30.0], &[15.0, 25.0]).unwrap();
        assert_eq!(r, vec![1.0 / 3.0, 2.0 / 3.0]);
        assert_eq!(threshold_rates(&[0.0], &[15.0], &[15.0]).unwrap(), vec![1.0]);
    }
}
