use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{HarnessError, Result};
use crate::run::SummaryRow;

pub const MIN_POINTS: usize = 4;
/// Required ratio between the largest and smallest oracle-call counts.
pub const MIN_SPAN: f64 = 100.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitPoint {
    pub oracle_calls: f64,
    pub mean_grad_norm: f64,
    /// Fitted `ln(mean)`.
    pub fitted_log: f64,
    /// Standard error of the fitted `ln(mean)` at this point.
    pub std_error: f64,
}

/// Least-squares fit of `ln(mean grad norm) = intercept + slope ln(calls)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_std_error: f64,
    pub intercept_std_error: f64,
    /// 95% confidence half-widths from the t distribution with `n - 2` degrees of freedom.
    pub slope_half_width: f64,
    pub intercept_half_width: f64,
    pub points: Vec<FitPoint>,
}

impl RateFit {
    pub fn slope_interval(&self) -> (f64, f64) {
        (self.slope - self.slope_half_width, self.slope + self.slope_half_width)
    }
}

pub fn fit_rate(data: &[(f64, f64)]) -> Result<RateFit> {
    if data.len() < MIN_POINTS {
        return Err(HarnessError::Fit(format!("need at least {MIN_POINTS} budget points, got {}", data.len())));
    }
    if let Some((c, m)) = data.iter().find(|(c, m)| !(*c > 0.0 && *m > 0.0 && c.is_finite() && m.is_finite())) {
        return Err(HarnessError::Fit(format!("calls and means must be positive, got ({c}, {m})")));
    }
    let lo = data.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = data.iter().map(|p| p.0).fold(0.0, f64::max);
    if hi < MIN_SPAN * lo * (1.0 - 1e-12) {
        return Err(HarnessError::Fit(format!("budget points span {lo}..{hi}, less than two decades")));
    }

    let n = data.len() as f64;
    let xs: Vec<f64> = data.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = data.iter().map(|p| p.1.ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let dof = n - 2.0;
    let s2 = sse / dof;
    let slope_std_error = (s2 / sxx).sqrt();
    let intercept_std_error = (s2 * (1.0 / n + x_mean * x_mean / sxx)).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| HarnessError::Fit(e.to_string()))?
        .inverse_cdf(0.975);
    let points = data
        .iter()
        .zip(&xs)
        .map(|(&(c, m), &x)| FitPoint {
            oracle_calls: c,
            mean_grad_norm: m,
            fitted_log: intercept + slope * x,
            std_error: (s2 * (1.0 / n + (x - x_mean).powi(2) / sxx)).sqrt(),
        })
        .collect();
    Ok(RateFit {
        slope,
        intercept,
        slope_std_error,
        intercept_std_error,
        slope_half_width: t * slope_std_error,
        intercept_half_width: t * intercept_std_error,
        points,
    })
}

/// Fits the summary rows of one experiment (rows must share an `experiment_id`).
pub fn fit_summary(rows: &[SummaryRow]) -> Result<RateFit> {
    if let Some(first) = rows.first() {
        if let Some(other) = rows.iter().find(|r| r.experiment_id != first.experiment_id) {
            return Err(HarnessError::Fit(format!(
                "summary mixes experiments `{}` and `{}`",
                first.experiment_id, other.experiment_id
            )));
        }
    }
    let data: Vec<(f64, f64)> = rows.iter().map(|r| (r.oracle_calls as f64, r.mean_grad_norm)).collect();
    fit_rate(&data)
}
