use serde::{Deserialize, Serialize};

use crate::data::{Granularity, InteractionMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::traversal::weibull::fit_weibull_discrete;
use crate::traversal::{Regression, TraversalParams};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitWeighting {
    /// Rows weighted by their raw connection strength, jumps by `S[i,j]`.
    #[default]
    Strength,
    /// Every non-zero row and every non-zero jump counts once.
    Unweighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub regression: Regression,
    pub r_squared: f64,
}

/// Weighted ordinary least squares for `y = intercept + slope · x`.
pub fn ols(points: &[(f64, f64, f64)]) -> Result<LinearFit> {
    let w: f64 = points.iter().map(|p| p.2).sum();
    if points.len() < 2 || !(w > 0.0) {
        return Err(Error::Degenerate("regression needs at least two weighted points".into()));
    }
    let mx = points.iter().map(|p| p.2 * p.0).sum::<f64>() / w;
    let my = points.iter().map(|p| p.2 * p.1).sum::<f64>() / w;
    let sxx: f64 = points.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("regression needs two distinct positions".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = points.iter().map(|p| p.2 * (p.1 - my).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| p.2 * (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LinearFit {
        regression: Regression { intercept, slope },
        r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraversalFit {
    pub params: TraversalParams,
    pub forward_r_squared: f64,
    pub backward_r_squared: f64,
    pub forward_log_likelihood: f64,
    pub backward_log_likelihood: f64,
}

/// Fits the traversal model to raw ground-truth matrices (one per session).
///
/// Each non-zero row `i` of a session with `n` tokens contributes the points
/// `(u, Σ_{j>i} S̄_ij)` and `(u, Σ_{j<i} S̄_ij)` with `u = i / (n - 1)` and `S̄`
/// the row-normalized matrix; every off-diagonal entry contributes a jump of
/// distance `|j - i|` to the forward or backward Weibull fit.
pub fn fit_traversal_params<T: Scalar>(
    sessions: &[InteractionMatrix<T>],
    weighting: FitWeighting,
) -> Result<TraversalFit> {
    if sessions.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "fitting needs at least two sessions, got {}",
            sessions.len()
        )));
    }
    let mut fwd_points = Vec::new();
    let mut bwd_points = Vec::new();
    let mut fwd_jumps = Vec::new();
    let mut bwd_jumps = Vec::new();
    for s in sessions {
        if s.granularity() != Granularity::Token || s.n_rows() != s.n_cols() {
            return Err(Error::InvalidParameter("sessions must be square token-level matrices".into()));
        }
        let n = s.n_rows();
        if n < 2 {
            continue;
        }
        for (i, row) in s.rows().enumerate() {
            let total: f64 = row.iter().map(|v| v.as_f64()).sum();
            if total == 0.0 {
                continue;
            }
            let u = i as f64 / (n - 1) as f64;
            let fwd: f64 = row[i + 1..].iter().map(|v| v.as_f64()).sum();
            let bwd: f64 = row[..i].iter().map(|v| v.as_f64()).sum();
            let row_w = match weighting {
                FitWeighting::Strength => total,
                FitWeighting::Unweighted => 1.0,
            };
            fwd_points.push((u, fwd / total, row_w));
            bwd_points.push((u, bwd / total, row_w));
            for (j, v) in row.iter().enumerate() {
                let v = v.as_f64();
                if v == 0.0 || j == i {
                    continue;
                }
                let w = match weighting {
                    FitWeighting::Strength => v,
                    FitWeighting::Unweighted => 1.0,
                };
                if j > i {
                    fwd_jumps.push(((j - i) as u64, w));
                } else {
                    bwd_jumps.push(((i - j) as u64, w));
                }
            }
        }
    }
    if fwd_jumps.is_empty() && bwd_jumps.is_empty() {
        return Err(Error::Degenerate("all connection mass lies on the diagonal".into()));
    }
    let fwd_lin = ols(&fwd_points)?;
    let bwd_lin = ols(&bwd_points)?;
    let fwd_w = fit_weibull_discrete(&fwd_jumps)?;
    let bwd_w = fit_weibull_discrete(&bwd_jumps)?;
    Ok(TraversalFit {
        params: TraversalParams {
            forward: fwd_lin.regression,
            backward: bwd_lin.regression,
            forward_weibull: fwd_w.params,
            backward_weibull: bwd_w.params,
        },
        forward_r_squared: fwd_lin.r_squared,
        backward_r_squared: bwd_lin.r_squared,
        forward_log_likelihood: fwd_w.log_likelihood,
        backward_log_likelihood: bwd_w.log_likelihood,
    })
}
