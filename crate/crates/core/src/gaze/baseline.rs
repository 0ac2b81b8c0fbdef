//! Offset baseline B(δ): the average row-normalized connection strength from a
//! token to the token δ positions away, used to divide out the bias towards
//! nearby targets.

use serde::{Deserialize, Serialize};

use crate::data::{normalize_rows, Granularity, InteractionMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::traversal::{weibull_discrete_pmf, TraversalParams};

/// Floor applied to every baseline value.
pub const BASELINE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMode {
    /// Binned-by-offset average over the provided sessions.
    #[default]
    Empirical,
    /// Built from the traversal model.
    Parametric,
    /// No neighbor normalization.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetBaseline {
    /// Smallest offset on the support.
    pub min_offset: i64,
    /// `values[k] = B(min_offset + k)`.
    pub values: Vec<f64>,
}

impl OffsetBaseline {
    pub fn max_offset(&self) -> i64 {
        self.min_offset + self.values.len() as i64 - 1
    }

    /// `B(δ)`; offsets beyond the support take the nearest edge value.
    pub fn get(&self, delta: i64) -> f64 {
        let k = (delta - self.min_offset).clamp(0, self.values.len() as i64 - 1);
        self.values[k as usize]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("baseline serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let b: OffsetBaseline = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if b.values.is_empty() || b.values.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Parse("baseline values must be positive and non-empty".into()));
        }
        Ok(b)
    }

    /// Baseline predicted by the traversal model, averaging the direction masses
    /// over relative positions `u` in `[0, 1]`.
    pub fn parametric(p: &TraversalParams, max_tokens: usize) -> Result<Self> {
        if max_tokens < 2 {
            return Err(Error::InvalidParameter("parametric baseline needs at least two tokens".into()));
        }
        let reach = max_tokens - 1;
        let fwd = weibull_discrete_pmf(p.forward_weibull.shape, p.forward_weibull.scale, reach)?;
        let bwd = weibull_discrete_pmf(p.backward_weibull.shape, p.backward_weibull.scale, reach)?;
        const GRID: usize = 100;
        let (mut f, mut b, mut s) = (0.0, 0.0, 0.0);
        for k in 0..=GRID {
            let (pf, pb, ps) = p.direction_masses(k as f64 / GRID as f64);
            f += pf;
            b += pb;
            s += ps;
        }
        let norm = (GRID + 1) as f64;
        let (f, b, s) = (f / norm, b / norm, s / norm);
        let mut values = Vec::with_capacity(2 * reach + 1);
        values.extend((1..=reach).rev().map(|d| b * bwd[d - 1]));
        values.push(s);
        values.extend((1..=reach).map(|d| f * fwd[d - 1]));
        Ok(Self {
            min_offset: -(reach as i64),
            values: values.into_iter().map(|v| v.max(BASELINE_FLOOR)).collect(),
        })
    }
}

/// Pools row-normalized strengths of every session by signed offset `δ = j - i`
/// and averages them over all non-zero rows that reach that offset.
pub fn offset_baseline<T: Scalar>(sessions: &[InteractionMatrix<T>]) -> Result<OffsetBaseline> {
    if sessions.is_empty() {
        return Err(Error::Empty("no sessions for the offset baseline"));
    }
    let max_n = sessions.iter().map(|s| s.n_rows()).max().unwrap_or(0);
    if max_n == 0 {
        return Err(Error::Empty("sessions have no tokens"));
    }
    let reach = max_n as i64 - 1;
    let width = 2 * max_n - 1;
    let mut sum = vec![0.0f64; width];
    let mut count = vec![0u64; width];
    for s in sessions {
        if s.granularity() != Granularity::Token || s.n_rows() != s.n_cols() {
            return Err(Error::InvalidParameter("baseline needs square token-level matrices".into()));
        }
        let norm = normalize_rows(s)?;
        for (i, row) in norm.rows().enumerate() {
            if row.iter().all(|v| v.is_zero()) {
                continue;
            }
            for (j, v) in row.iter().enumerate() {
                let k = (j as i64 - i as i64 + reach) as usize;
                sum[k] += v.as_f64();
                count[k] += 1;
            }
        }
    }
    let values = sum
        .iter()
        .zip(&count)
        .map(|(&s, &c)| if c == 0 { BASELINE_FLOOR } else { (s / c as f64).max(BASELINE_FLOOR) })
        .collect();
    Ok(OffsetBaseline {
        min_offset: -reach,
        values,
    })
}

/// Divides each entry by `B(j - i)`, then normalizes rows.
pub fn neighbor_normalize<T: Scalar>(
    s: &InteractionMatrix<T>,
    b: &OffsetBaseline,
) -> Result<InteractionMatrix<T>> {
    if s.granularity() != Granularity::Token {
        return Err(Error::InvalidParameter("neighbor normalization needs a token-level matrix".into()));
    }
    let mut values = Vec::with_capacity(s.values().len());
    for (i, row) in s.rows().enumerate() {
        for (j, v) in row.iter().enumerate() {
            values.push(T::of(v.as_f64() / b.get(j as i64 - i as i64)));
        }
    }
    normalize_rows(&InteractionMatrix::from_raw(
        s.n_rows(),
        s.n_cols(),
        Granularity::Token,
        values,
    )?)
}
