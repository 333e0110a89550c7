use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STD_FLOOR: f64 = 1e-8;

/// Column-wise standardization fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    /// Population standard deviation. Columns below [`STD_FLOOR`] get 1,
    /// as scikit-learn does; a tiny floor turns a term that is absent from
    /// the training rows into a 1e8-sized input at prediction time.
    pub std: Vec<f64>,
}

impl ScalerParams {
    pub fn fit<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::TooFewRows { needed: 2, got: rows.len() });
        }
        let width = rows[0].as_ref().len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; width];
        for r in rows {
            let r = r.as_ref();
            if r.len() != width {
                return Err(Error::DimensionMismatch { what: "scaler row", expected: width, got: r.len() });
            }
            mean.iter_mut().zip(r).for_each(|(m, x)| *m += x);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; width];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(r.as_ref()).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var.into_iter().map(|v| {
            let sd = (v / n).sqrt();
            if sd < STD_FLOOR {
                1.0
            } else {
                sd
            }
        }).collect();
        Ok(ScalerParams { mean, std })
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.len() {
            return Err(Error::DimensionMismatch { what: "scaler input", expected: self.len(), got: x.len() });
        }
        Ok(x.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_column_scales_to_zero() {
        let rows = vec![vec![3.0, 1.0], vec![3.0, 2.0], vec![3.0, 6.0]];
        let p = ScalerParams::fit(&rows).unwrap();
        assert_eq!(p.std[0], 1.0);
        for r in &rows {
            assert_eq!(p.apply(r).unwrap()[0], 0.0);
        }
        // unseen value stays on the input scale
        assert_eq!(p.apply(&[3.5, 1.0]).unwrap()[0], 0.5);
    }

    #[test]
    fn moments_after_scaling() {
        let rows: Vec<Vec<f64>> = (0..37).map(|i| vec![i as f64 * 0.7 - 3.0, ((i * i) % 11) as f64, 5.0]).collect();
        let p = ScalerParams::fit(&rows).unwrap();
        let scaled: Vec<Vec<f64>> = rows.iter().map(|r| p.apply(r).unwrap()).collect();
        let n = scaled.len() as f64;
        for c in 0..2 {
            let mean = scaled.iter().map(|r| r[c]).sum::<f64>() / n;
            let sd = (scaled.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n).sqrt();
            assert!(mean.abs() < 1e-9);
            assert!((sd - 1.0).abs() < 1e-6);
        }
        assert!(p.apply(&rows[0]).unwrap().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn needs_two_rows() {
        assert!(matches!(ScalerParams::fit(&[vec![1.0]]), Err(Error::TooFewRows { .. })));
    }
}
