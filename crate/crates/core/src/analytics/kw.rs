use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::AnalyticsError;

pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KwResult {
    pub h_statistic: f64,
    pub degrees_freedom: usize,
    pub p_value: f64,
    pub significant: bool,
}

/// Mid-ranks (1-based, ties averaged) of `values`, plus Σ(t³ − t) over tie
/// groups.
pub fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

/// Kruskal-Wallis H test with tie correction; p from the chi-square
/// approximation with `groups - 1` degrees of freedom.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<KwResult, AnalyticsError> {
    if groups.len() < 2 {
        return Err(AnalyticsError::Precondition(format!(
            "Kruskal-Wallis needs at least 2 groups, got {}",
            groups.len()
        )));
    }
    if let Some(i) = groups.iter().position(Vec::is_empty) {
        return Err(AnalyticsError::Precondition(format!("group {i} is empty")));
    }
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(AnalyticsError::Precondition(
            "non-finite value in groups".into(),
        ));
    }
    let df = groups.len() - 1;
    let n = pooled.len() as f64;
    let (ranks, ties) = midranks(&pooled);
    let correction = 1.0 - ties / (n * n * n - n);
    if correction <= 0.0 {
        return Ok(KwResult {
            h_statistic: 0.0,
            degrees_freedom: df,
            p_value: 1.0,
            significant: false,
        });
    }
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        sum += r * r / g.len() as f64;
        offset += g.len();
    }
    let h = (12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0)) / correction;
    let h = h.max(0.0);
    let chi =
        ChiSquared::new(df as f64).map_err(|e| AnalyticsError::Precondition(e.to_string()))?;
    let p = chi.sf(h).clamp(0.0, 1.0);
    Ok(KwResult {
        h_statistic: h,
        degrees_freedom: df,
        p_value: p,
        significant: p < ALPHA,
    })
}
