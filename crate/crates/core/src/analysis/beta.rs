use serde::{Deserialize, Serialize};

use super::{AnalysisError, TimelinePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaFilter {
    All,
    PreFirstHint,
    PostFirstHint,
    AfterHintAvg,
}

/// Divides by the Euclidean norm; a zero vector stays zero.
pub fn normalize(xs: &[f64]) -> Vec<f64> {
    let norm = xs.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        xs.to_vec()
    } else {
        xs.iter().map(|x| x / norm).collect()
    }
}

/// Least-squares slope of `y` on `x` with an intercept.
pub fn ols_slope(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    let n = x.len();
    if n < 2 {
        return Err(AnalysisError::InsufficientPoints(n));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(AnalysisError::ConstantTime);
    }
    Ok(sxy / sxx)
}

/// Slope of normalized distance on normalized elapsed time over one window.
pub fn window_beta(points: &[TimelinePoint]) -> Result<f64, AnalysisError> {
    if points.len() < 2 {
        return Err(AnalysisError::InsufficientPoints(points.len()));
    }
    let t: Vec<f64> = points.iter().map(|p| p.t_elapsed).collect();
    let d: Vec<f64> = points.iter().map(|p| p.dist_sol as f64).collect();
    ols_slope(&normalize(&t), &normalize(&d))
}

/// Windows starting at each hint employment and running up to the next
/// one or the end.
pub fn hint_windows(points: &[TimelinePoint]) -> Vec<&[TimelinePoint]> {
    let starts: Vec<usize> = (0..points.len()).filter(|&i| points[i].hint_employed).collect();
    starts
        .iter()
        .enumerate()
        .map(|(k, &s)| &points[s..starts.get(k + 1).copied().unwrap_or(points.len())])
        .collect()
}

pub fn fit_beta(points: &[TimelinePoint], filter: BetaFilter) -> Result<f64, AnalysisError> {
    let first = points.iter().position(|p| p.hint_employed);
    match filter {
        BetaFilter::All => window_beta(points),
        BetaFilter::PreFirstHint => window_beta(&points[..first.unwrap_or(points.len())]),
        BetaFilter::PostFirstHint => window_beta(&points[first.unwrap_or(points.len())..]),
        BetaFilter::AfterHintAvg => {
            let betas: Vec<f64> = hint_windows(points).into_iter().filter_map(|w| window_beta(w).ok()).collect();
            if betas.is_empty() {
                return Err(AnalysisError::InsufficientPoints(0));
            }
            Ok(betas.iter().sum::<f64>() / betas.len() as f64)
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BetaSet {
    pub beta_all: Option<f64>,
    pub beta_pre_first_hint: Option<f64>,
    pub beta_post_first_hint: Option<f64>,
    pub beta_after_hint_avg: Option<f64>,
    pub delta_beta: Option<f64>,
}

impl BetaSet {
    pub fn from_points(points: &[TimelinePoint]) -> BetaSet {
        let fit = |f| fit_beta(points, f).ok();
        let pre = fit(BetaFilter::PreFirstHint);
        let aha = fit(BetaFilter::AfterHintAvg);
        BetaSet {
            beta_all: fit(BetaFilter::All),
            beta_pre_first_hint: pre,
            beta_post_first_hint: fit(BetaFilter::PostFirstHint),
            beta_after_hint_avg: aha,
            delta_beta: aha.zip(pre).map(|(a, p)| a - p),
        }
    }
}
