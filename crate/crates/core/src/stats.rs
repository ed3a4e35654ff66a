//! Summation, ensemble statistics and log-log regression.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
}

impl MeanEstimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_err: f64::NAN,
                n,
            };
        }
        let mean = compensated_sum(values.iter().copied()) / n as f64;
        let std_err = if n > 1 {
            let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
            (ss / (n as f64 - 1.0) / n as f64).sqrt()
        } else {
            f64::INFINITY
        };
        Self { mean, std_err, n }
    }

    /// `|mean - target| <= k * std_err`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_err
    }

    /// Number of standard errors between the mean and `target`.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target) / self.std_err
    }
}

/// Sample covariance of paired observations with the standard error of the
/// mean product (valid for centered variables).
pub fn mean_product(a: &[f64], b: &[f64]) -> MeanEstimate {
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    MeanEstimate::from_samples(&prods)
}

/// Median of the means of `groups` contiguous blocks.
pub fn median_of_means(values: &[f64], groups: usize) -> Result<f64> {
    if groups == 0 || values.len() < groups {
        return Err(Error::InsufficientData(format!(
            "median of means needs at least {groups} values, got {}",
            values.len()
        )));
    }
    let size = values.len() / groups;
    let mut means: Vec<f64> = (0..groups)
        .map(|g| compensated_sum(values[g * size..(g + 1) * size].iter().copied()) / size as f64)
        .collect();
    means.sort_by(|a, b| a.total_cmp(b));
    let mid = groups / 2;
    Ok(if groups % 2 == 1 {
        means[mid]
    } else {
        0.5 * (means[mid - 1] + means[mid])
    })
}

/// Two-sided 95% Student-t quantile for `dof` degrees of freedom.
pub fn t_quantile_975(dof: usize) -> f64 {
    const TABLE: [f64; 30] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179,
        2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
        2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
    ];
    match dof {
        0 => f64::INFINITY,
        1..=30 => TABLE[dof - 1],
        31..=60 => 2.042 - (dof as f64 - 30.0) / 30.0 * (2.042 - 2.000),
        61..=120 => 2.000 - (dof as f64 - 60.0) / 60.0 * (2.000 - 1.980),
        _ => 1.960,
    }
}

/// A straight-line fit `y = intercept + slope * x`, usually in log-log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub r_squared: f64,
    pub abscissae: Vec<f64>,
    pub ordinates: Vec<f64>,
    pub sample_sizes: Vec<usize>,
    /// Diagnostics raised while producing the fit.
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ScalingFit {
    /// Ordinary least squares; the slope error comes from the residuals.
    pub fn ols(x: &[f64], y: &[f64], sample_sizes: Vec<usize>) -> Result<Self> {
        Self::weighted(x, y, None, sample_sizes)
    }

    /// Weighted least squares with per-point standard deviations `sigma`.
    ///
    /// The covariance is scaled by the reduced chi-square when it exceeds one,
    /// so a fit that is poorer than its error bars reports a wider slope error.
    pub fn weighted(
        x: &[f64],
        y: &[f64],
        sigma: Option<&[f64]>,
        sample_sizes: Vec<usize>,
    ) -> Result<Self> {
        let n = x.len();
        if n != y.len() || sigma.is_some_and(|s| s.len() != n) {
            return Err(Error::InvalidArgument("fit inputs differ in length".into()));
        }
        if n < 3 {
            return Err(Error::InsufficientData(format!(
                "a scaling fit needs at least 3 abscissae, got {n}"
            )));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::InsufficientData("non-finite value in fit input".into()));
        }
        let w: Vec<f64> = match sigma {
            Some(s) => s.iter().map(|s| 1.0 / (s * s)).collect(),
            None => vec![1.0; n],
        };
        if w.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::InsufficientData("non-positive fit weight".into()));
        }
        let sw = compensated_sum(w.iter().copied());
        let mx = compensated_sum(w.iter().zip(x).map(|(w, x)| w * x)) / sw;
        let my = compensated_sum(w.iter().zip(y).map(|(w, y)| w * y)) / sw;
        let sxx = compensated_sum(w.iter().zip(x).map(|(w, x)| w * (x - mx) * (x - mx)));
        if sxx <= 0.0 {
            return Err(Error::InsufficientData("abscissae are all equal".into()));
        }
        let sxy = compensated_sum(
            w.iter()
                .zip(x.iter().zip(y))
                .map(|(w, (x, y))| w * (x - mx) * (y - my)),
        );
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let chi2 = compensated_sum(
            w.iter()
                .zip(x.iter().zip(y))
                .map(|(w, (x, y))| w * (y - intercept - slope * x).powi(2)),
        );
        let syy = compensated_sum(w.iter().zip(y).map(|(w, y)| w * (y - my) * (y - my)));
        let dof = (n - 2) as f64;
        let slope_var = match sigma {
            Some(_) => (chi2 / dof).max(1.0) / sxx,
            None => chi2 / dof / sxx,
        };
        let r_squared = if syy > 0.0 { 1.0 - chi2 / syy } else { 1.0 };
        Ok(Self {
            slope,
            intercept,
            slope_se: slope_var.sqrt(),
            r_squared,
            abscissae: x.to_vec(),
            ordinates: y.to_vec(),
            sample_sizes,
            warnings: Vec::new(),
        })
    }

    /// Two-sided 95% confidence interval for the slope.
    pub fn slope_interval_95(&self) -> (f64, f64) {
        let t = t_quantile_975(self.abscissae.len().saturating_sub(2));
        (self.slope - t * self.slope_se, self.slope + t * self.slope_se)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut values = vec![1e16, 1.0, -1e16];
        values.extend(std::iter::repeat_n(1.0, 10));
        assert_eq!(compensated_sum(values), 11.0);
    }

    #[test]
    fn exact_line_has_zero_slope_error() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|x| 1.5 - 2.0 * x).collect();
        let fit = ScalingFit::ols(&x, &y, vec![1; 4]).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-14);
        assert!((fit.intercept - 1.5).abs() < 1e-14);
        assert!(fit.slope_se < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_requires_three_points() {
        assert!(matches!(
            ScalingFit::ols(&[0.0, 1.0], &[0.0, 1.0], vec![]),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn mean_estimate_of_constant() {
        let m = MeanEstimate::from_samples(&[2.0; 10]);
        assert_eq!(m.mean, 2.0);
        assert_eq!(m.std_err, 0.0);
    }

    #[test]
    fn median_of_means_ignores_one_outlier_block() {
        let mut v = vec![1.0; 40];
        v[3] = 1e6;
        assert_eq!(median_of_means(&v, 5).unwrap(), 1.0);
    }
}
