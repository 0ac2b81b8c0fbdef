use std::collections::BTreeMap;

use gazeattn_core::metrics::{reports_to_csv, summarize, AgreementReport, Metric};
use serde::{Deserialize, Serialize};

use crate::failure::{CliResult, Failure};
use crate::outputs::Outputs;
use crate::svg::{box_plot, line_chart};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationKind {
    LayerPair,
    Observers,
}

impl AblationKind {
    fn label(self) -> &'static str {
        match self {
            AblationKind::LayerPair => "layer pair (z, z+1)",
            AblationKind::Observers => "observer tokens",
        }
    }

    fn slug(self) -> &'static str {
        match self {
            AblationKind::LayerPair => "layer-pair",
            AblationKind::Observers => "observers",
        }
    }
}

/// Mean aggregate of follow-up attention under one ablation setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationPoint {
    pub kind: AblationKind,
    pub value: usize,
    pub metric: Metric,
    pub mean: f64,
    pub n: usize,
}

fn metric_range(m: Metric) -> (f64, f64) {
    match m {
        Metric::Spearman => (-1.0, 1.0),
        Metric::Top3 => (0.0, 3.0),
    }
}

/// Writes `reports.csv`, `reports.json`, `summary.json`, a box plot per metric
/// and, when ablation points are given, `ablation.json` and one line chart per
/// (kind, metric).
pub fn render_report(out: &mut Outputs, reports: &[AgreementReport], ablation: &[AblationPoint]) -> CliResult<()> {
    if reports.is_empty() {
        return Err(Failure::Data("no reports to render".into()));
    }
    out.write("reports.csv", reports_to_csv(reports)?.as_bytes())?;
    out.write_json("reports.json", reports)?;
    out.write_json("summary.json", &summarize(reports))?;
    let mut by_metric: BTreeMap<Metric, BTreeMap<&str, Vec<f64>>> = BTreeMap::new();
    for r in reports {
        let e = by_metric.entry(r.metric).or_default().entry(&r.method).or_default();
        e.extend(r.aggregate);
    }
    for (metric, groups) in by_metric {
        let groups: Vec<(String, Vec<f64>)> = groups.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let svg = box_plot(&format!("{metric} agreement per method"), &groups, metric_range(metric));
        out.write(&format!("plots/box-{metric}.svg"), svg.as_bytes())?;
    }
    if !ablation.is_empty() {
        out.write_json("ablation.json", ablation)?;
        let mut series: BTreeMap<(AblationKind, Metric), Vec<(f64, f64)>> = BTreeMap::new();
        for p in ablation {
            series.entry((p.kind, p.metric)).or_default().push((p.value as f64, p.mean));
        }
        for ((kind, metric), mut pts) in series {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let svg = line_chart(&format!("follow-up {metric} vs {}", kind.label()), kind.label(), &pts);
            out.write(&format!("plots/ablation-{}-{metric}.svg", kind.slug()), svg.as_bytes())?;
        }
    }
    Ok(())
}
