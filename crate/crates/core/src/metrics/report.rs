use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::agreement::{AgreementReport, Metric, SkipReason};

/// Long-format CSV: `session,method,row,weight,metric,value`, one line per scored row.
pub fn reports_to_csv(reports: &[AgreementReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(["session", "method", "row", "weight", "metric", "value"])
        .map_err(csv_err)?;
    for r in reports {
        for s in &r.rows {
            w.write_record([
                r.session.clone(),
                r.method.clone(),
                s.row.to_string(),
                s.weight.to_string(),
                r.metric.to_string(),
                s.value.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub metric: Metric,
    /// Reports with a defined aggregate.
    pub n: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    /// Mean as a fraction of the metric's maximum (top-3 only differs).
    pub mean_fraction: Option<f64>,
    pub skipped: BTreeMap<SkipReason, usize>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 0 { (v[m - 1] + v[m]) / 2.0 } else { v[m] })
}

/// Per (method, metric) summary of report aggregates, sorted by method then metric.
pub fn summarize(reports: &[AgreementReport]) -> Vec<MethodSummary> {
    let mut groups: BTreeMap<(String, Metric), Vec<&AgreementReport>> = BTreeMap::new();
    for r in reports {
        groups.entry((r.method.clone(), r.metric)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((method, metric), rs)| {
            let vals: Vec<f64> = rs.iter().filter_map(|r| r.aggregate).collect();
            let mean = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
            let mut skipped = BTreeMap::new();
            for r in &rs {
                for (_, reason) in &r.skipped {
                    *skipped.entry(*reason).or_insert(0) += 1;
                }
            }
            MethodSummary {
                method,
                metric,
                n: vals.len(),
                mean,
                median: median(&vals),
                mean_fraction: mean.map(|m| if metric == Metric::Top3 { m / 3.0 } else { m }),
                skipped,
            }
        })
        .collect()
}
