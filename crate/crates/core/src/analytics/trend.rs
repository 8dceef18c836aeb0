use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::sessions::WorkSession;
use crate::error::{Error, Result};

/// Mean AI edit share at one session index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexMean {
    pub index: u32,
    pub mean_share: f64,
    pub std_error: f64,
    pub n_users: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendResult {
    pub pearson_r: f64,
    pub p_value: f64,
    pub weighted_slope: f64,
    pub weighted_intercept: f64,
    pub n_points: usize,
    /// Set when either axis has zero variance; `pearson_r` is then 0.
    pub zero_variance: bool,
    pub per_index: Vec<IndexMean>,
}

/// Pearson correlation with a two-sided p-value from the t distribution
/// on n - 2 degrees of freedom. Returns `(r, p, zero_variance)`.
pub fn pearson(xs: &[f64], ys: &[f64]) -> (f64, f64, bool) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return (0.0, 1.0, true);
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    (r, p_value(r, xs.len()), false)
}

fn p_value(r: f64, n: usize) -> f64 {
    if n <= 2 {
        return 1.0;
    }
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

/// Least-squares line through `(x, y)` with weights `w`.
pub fn weighted_fit(points: &[(f64, f64, f64)]) -> (f64, f64) {
    let total: f64 = points.iter().map(|p| p.2).sum();
    let mx = points.iter().map(|p| p.2 * p.0).sum::<f64>() / total;
    let my = points.iter().map(|p| p.2 * p.1).sum::<f64>() / total;
    let sxx: f64 = points.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return (0.0, my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Trend of AI edit share over successive work sessions, pooled across
/// users. Sessions without edits are skipped.
pub fn ai_share_trend(sessions: &[WorkSession]) -> Result<TrendResult> {
    let points: Vec<(f64, f64)> = sessions
        .iter()
        .filter_map(|s| s.ai_edit_share.map(|share| (s.index as f64, share)))
        .collect();
    if points.len() < 2 {
        return Err(Error::UndefinedTrend(format!(
            "need at least 2 sessions with edits, found {}",
            points.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (pearson_r, p_value, zero_variance) = pearson(&xs, &ys);

    let mut by_index: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for s in sessions {
        if let Some(share) = s.ai_edit_share {
            by_index.entry(s.index).or_default().push(share);
        }
    }
    let per_index: Vec<IndexMean> = by_index
        .into_iter()
        .map(|(index, shares)| {
            let n = shares.len() as f64;
            let mean = shares.iter().sum::<f64>() / n;
            let std_error = if shares.len() > 1 {
                let var = shares.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            } else {
                0.0
            };
            IndexMean {
                index,
                mean_share: mean,
                std_error,
                n_users: shares.len() as u32,
            }
        })
        .collect();
    let weighted: Vec<(f64, f64, f64)> = per_index
        .iter()
        .map(|m| (m.index as f64, m.mean_share, m.n_users as f64))
        .collect();
    let (weighted_slope, weighted_intercept) = weighted_fit(&weighted);

    Ok(TrendResult {
        pearson_r,
        p_value,
        weighted_slope,
        weighted_intercept,
        n_points: points.len(),
        zero_variance,
        per_index,
    })
}
