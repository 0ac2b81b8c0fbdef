use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Granularity, InteractionMatrix, RowFlag};
use crate::error::{Error, Result};
use crate::metrics::rank::{spearman, top3_overlap};
use crate::scalar::Scalar;

/// Upper bound on a row weight, in seconds of dwell.
pub const MAX_ROW_WEIGHT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Spearman,
    Top3,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Spearman => "spearman",
            Metric::Top3 => "top3",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spearman" => Ok(Metric::Spearman),
            "top3" => Ok(Metric::Top3),
            _ => Err(Error::InvalidParameter(format!("unknown metric {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    ZeroGroundTruth,
    ZeroPrediction,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowScore {
    pub row: usize,
    pub weight: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub method: String,
    pub task: String,
    pub session: String,
    pub metric: Metric,
    pub rows: Vec<RowScore>,
    pub skipped: Vec<(usize, SkipReason)>,
    /// `Σ w·m / Σ w` over scored rows; `None` when no scored row has weight.
    pub aggregate: Option<f64>,
}

impl AgreementReport {
    pub fn skip_count(&self, reason: SkipReason) -> usize {
        self.skipped.iter().filter(|(_, r)| *r == reason).count()
    }

    /// Top-3 aggregate as a fraction of 3; the plain aggregate otherwise.
    pub fn normalized_aggregate(&self) -> Option<f64> {
        match self.metric {
            Metric::Top3 => self.aggregate.map(|v| v / 3.0),
            Metric::Spearman => self.aggregate,
        }
    }

    fn with_labels(mut self, method: &str, task: &str, session: &str) -> Self {
        self.method = method.to_string();
        self.task = task.to_string();
        self.session = session.to_string();
        self
    }
}

pub fn row_weight(dwell_seconds: f64) -> f64 {
    dwell_seconds.clamp(0.0, MAX_ROW_WEIGHT)
}

/// Scores every start-token row of `pred` against `gt` and takes the
/// dwell-weighted mean.
pub fn weighted_row_agreement<T: Scalar>(
    gt: &InteractionMatrix<T>,
    pred: &InteractionMatrix<T>,
    dwell: &[f64],
    metric: Metric,
) -> Result<AgreementReport> {
    if gt.n_rows() != pred.n_rows() || gt.n_cols() != pred.n_cols() {
        return Err(Error::Dims(format!(
            "ground truth is {}x{}, prediction is {}x{}",
            gt.n_rows(),
            gt.n_cols(),
            pred.n_rows(),
            pred.n_cols()
        )));
    }
    if gt.granularity() != Granularity::Line || pred.granularity() != Granularity::Line {
        return Err(Error::InvalidParameter("agreement is scored on line-level matrices".into()));
    }
    if dwell.len() != gt.n_rows() {
        return Err(Error::LengthMismatch {
            expected: gt.n_rows(),
            actual: dwell.len(),
        });
    }
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for i in 0..gt.n_rows() {
        let g: Vec<f64> = gt.row(i).iter().map(|v| v.as_f64()).collect();
        let p: Vec<f64> = pred.row(i).iter().map(|v| v.as_f64()).collect();
        if gt.flag(i) == RowFlag::Zero || g.iter().all(|v| *v == 0.0) {
            skipped.push((i, SkipReason::ZeroGroundTruth));
            continue;
        }
        if pred.flag(i) == RowFlag::Zero || p.iter().all(|v| *v == 0.0) {
            skipped.push((i, SkipReason::ZeroPrediction));
            continue;
        }
        let value = match metric {
            Metric::Top3 => top3_overlap(&g, &p)? as f64,
            Metric::Spearman => {
                if g.len() < 2 {
                    skipped.push((i, SkipReason::Constant));
                    continue;
                }
                match spearman(&g, &p)? {
                    Some(r) => r,
                    None => {
                        skipped.push((i, SkipReason::Constant));
                        continue;
                    }
                }
            }
        };
        rows.push(RowScore {
            row: i,
            weight: row_weight(dwell[i]),
            value,
        });
    }
    let wsum: f64 = rows.iter().map(|r| r.weight).sum();
    let aggregate = (wsum > 0.0).then(|| rows.iter().map(|r| r.weight * r.value).sum::<f64>() / wsum);
    Ok(AgreementReport {
        method: String::new(),
        task: String::new(),
        session: String::new(),
        metric,
        rows,
        skipped,
        aggregate,
    })
}

/// A ground-truth session on one snippet.
#[derive(Debug, Clone)]
pub struct GroundTruthItem<T> {
    pub session: String,
    pub snippet: String,
    pub matrix: InteractionMatrix<T>,
    pub dwell: Vec<f64>,
}

/// A model-derived matrix on one snippet.
#[derive(Debug, Clone)]
pub struct PredictionItem<T> {
    pub method: String,
    pub snippet: String,
    pub matrix: InteractionMatrix<T>,
}

/// All `(gt, pred)` index pairs sharing a snippet id, ordered by gt then pred.
pub fn snippet_pairs<A: AsRef<str>, B: AsRef<str>>(gt: &[A], pred: &[B]) -> Vec<(usize, usize)> {
    let mut by_snippet: std::collections::BTreeMap<&str, Vec<usize>> = Default::default();
    for (k, p) in pred.iter().enumerate() {
        by_snippet.entry(p.as_ref()).or_default().push(k);
    }
    let mut out = Vec::new();
    for (i, g) in gt.iter().enumerate() {
        if let Some(ps) = by_snippet.get(g.as_ref()) {
            out.extend(ps.iter().map(|&k| (i, k)));
        }
    }
    out
}

/// One report per same-snippet (session, prediction) pair, sorted by
/// session then method.
pub fn compare_sessions<T: Scalar>(
    gt: &[GroundTruthItem<T>],
    pred: &[PredictionItem<T>],
    metric: Metric,
) -> Result<Vec<AgreementReport>> {
    let gs: Vec<&str> = gt.iter().map(|g| g.snippet.as_str()).collect();
    let ps: Vec<&str> = pred.iter().map(|p| p.snippet.as_str()).collect();
    let pairs = snippet_pairs(&gs, &ps);
    if pairs.is_empty() {
        log::warn!("no ground-truth session shares a snippet id with any prediction");
    }
    let mut out = pairs
        .into_iter()
        .map(|(i, k)| {
            let (g, p) = (&gt[i], &pred[k]);
            weighted_row_agreement(&g.matrix, &p.matrix, &g.dwell, metric)
                .map(|r| r.with_labels(&p.method, &g.snippet, &g.session))
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| (&a.session, &a.method).cmp(&(&b.session, &b.method)));
    Ok(out)
}
