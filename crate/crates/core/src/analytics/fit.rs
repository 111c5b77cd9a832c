use serde::{Deserialize, Serialize};

use super::AnalyticsError;

/// Least-squares quadratic `y = a2 x² + a1 x + a0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendFit {
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
    /// Euclidean norm of the residual vector.
    pub residual_norm: f64,
}

impl TrendFit {
    pub fn eval(&self, x: f64) -> f64 {
        (self.a2 * x + self.a1) * x + self.a0
    }
}

/// Decade start year to fit abscissa: 1950s -> 0, 1960s -> 1, ...
pub fn decade_index(decade: u16) -> f64 {
    (f64::from(decade) - 1950.0) / 10.0
}

/// Solves the 3x3 normal equations by Gaussian elimination with partial
/// pivoting.
pub fn polyfit2(points: &[(f64, f64)]) -> Result<TrendFit, AnalyticsError> {
    if points.len() < 3 {
        return Err(AnalyticsError::Precondition(format!(
            "quadratic fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mut s = [0.0f64; 5];
    let mut t = [0.0f64; 3];
    for &(x, y) in points {
        let mut p = 1.0;
        for (k, sk) in s.iter_mut().enumerate() {
            *sk += p;
            if k < 3 {
                t[k] += p * y;
            }
            p *= x;
        }
    }
    // Unknowns ordered (a0, a1, a2).
    let mut a = [
        [s[0], s[1], s[2], t[0]],
        [s[1], s[2], s[3], t[1]],
        [s[2], s[3], s[4], t[2]],
    ];
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        if a[piv][col].abs() < 1e-12 * s[0].max(1.0) {
            return Err(AnalyticsError::Precondition(
                "quadratic fit needs at least 3 distinct x values".into(),
            ));
        }
        a.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut c = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| a[row][k] * c[k]).sum();
        c[row] = (a[row][3] - tail) / a[row][row];
    }
    let mut fit = TrendFit {
        a2: c[2],
        a1: c[1],
        a0: c[0],
        residual_norm: 0.0,
    };
    fit.residual_norm = points
        .iter()
        .map(|&(x, y)| (y - fit.eval(x)).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(fit)
}
