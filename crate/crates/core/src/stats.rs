//! Binomial confidence intervals and least-squares fits.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    if successes > trials {
        return Err(Error::InvalidParameter(format!("{successes} successes in {trials} trials")));
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    Ok(((center - half).max(0.0).min(p), (center + half).min(1.0).max(p)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    /// The upper confidence limit is below the bound.
    Pass,
    Fail,
    /// The bound exceeds 1 and says nothing.
    Vacuous,
}

/// Monte Carlo frequency of an event with its Wilson interval, compared to a
/// theoretical upper bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub trials: u64,
    pub successes: u64,
    pub point: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub bound: f64,
    pub status: BoundStatus,
    pub pass: bool,
}

impl ProbabilityEstimate {
    pub fn new(successes: u64, trials: u64, bound: f64) -> Result<Self> {
        let (ci_lo, ci_hi) = wilson_interval(successes, trials)?;
        let status = if bound > 1.0 {
            BoundStatus::Vacuous
        } else if ci_hi <= bound {
            BoundStatus::Pass
        } else {
            BoundStatus::Fail
        };
        Ok(Self {
            trials,
            successes,
            point: successes as f64 / trials as f64,
            ci_lo,
            ci_hi,
            bound,
            status,
            pass: status == BoundStatus::Pass,
        })
    }

    pub fn ci_width(&self) -> f64 {
        self.ci_hi - self.ci_lo
    }
}

/// Ordinary least squares `y = intercept + slope x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    /// Root mean square residual.
    pub residual: f64,
    pub points: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch("x and y differ in length".into()));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidParameter("a line needs at least two points".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("all abscissae coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_se = if n > 2 { (ss / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(LinearFit { slope, intercept, slope_se, residual: (ss / nf).sqrt(), points: n })
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation; zero for fewer than two values.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// Median of a nonempty slice.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_in_a_hundred() {
        let e = ProbabilityEstimate::new(5, 100, 0.5).unwrap();
        assert_eq!(e.point, 0.05);
        // Closed form of the Wilson interval at 5/100.
        assert!((e.ci_lo - 0.021544).abs() < 1e-6);
        assert!((e.ci_hi - 0.111750).abs() < 1e-6);
        assert_eq!(e.status, BoundStatus::Pass);
        assert!(ProbabilityEstimate::new(0, 0, 0.5).is_err());
    }

    #[test]
    fn vacuous_and_failing_bounds() {
        let e = ProbabilityEstimate::new(10, 10, 2.0).unwrap();
        assert_eq!(e.status, BoundStatus::Vacuous);
        assert!(!e.pass);
        let e = ProbabilityEstimate::new(10, 100, 0.01).unwrap();
        assert_eq!(e.status, BoundStatus::Fail);
    }

    #[test]
    fn interval_contains_point() {
        for trials in [1u64, 2, 7, 200] {
            for s in 0..=trials {
                let (lo, hi) = wilson_interval(s, trials).unwrap();
                let p = s as f64 / trials as f64;
                assert!(lo <= p && p <= hi && lo >= 0.0 && hi <= 1.0);
            }
        }
    }

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 1.5 - 0.7 * v).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope + 0.7).abs() < 1e-14);
        assert!((f.intercept - 1.5).abs() < 1e-14);
        assert!(f.residual < 1e-14);
        assert!(linear_fit(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn order_statistics() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!((std_dev(&[1.0, 3.0]) - 2f64.sqrt()).abs() < 1e-15);
    }
}
