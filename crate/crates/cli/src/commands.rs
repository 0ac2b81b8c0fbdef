//! Single-stage subcommands.

use std::path::{Path, PathBuf};

use gazeattn_core::data::io::{encode_matrix, read_matrix, visual_to_csv};
use gazeattn_core::data::normalize_rows;
use gazeattn_core::gaze::{neighbor_normalize, offset_baseline, OffsetBaseline};
use gazeattn_core::interaction::{to_line_level, ExtractionMethod, FollowupOptions};
use gazeattn_core::metrics::{compare_sessions, summarize, AgreementReport, GroundTruthItem, Metric, PredictionItem};
use gazeattn_core::traversal::{fit_traversal_params, FitWeighting};
use gazeattn_core::visual::{extract_visual, Condense};
use gazeattn_core::InteractionMatrix64;
use rayon::prelude::*;

use crate::config::SyntheticSpec;
use crate::failure::{read_text, require_file, CliResult, Context, Failure};
use crate::outputs::{Manifest, Outputs};
use crate::pipeline::{
    baseline_predictions, check_rows, load_alignment, load_params, load_session, load_tensor, load_viewport,
    matrix_csv, pool, session_truth, synth_task, write_task_inputs,
};
use crate::report::{render_report, AblationPoint};

pub fn synth(out: &Path, seed: u64, spec: &SyntheticSpec) -> CliResult<Manifest> {
    let mut o = Outputs::new(out)?;
    let params = gazeattn_core::traversal::TraversalParams::default();
    for k in 0..spec.tasks {
        write_task_inputs(&mut o, &synth_task(seed, k, spec, &params))?;
    }
    o.finish()
}

pub fn extract_visual_cmd(out: &Path, tensor: &Path, alignment: &Path, condense: Condense) -> CliResult<Manifest> {
    let t = load_tensor(tensor)?.cast::<f64>();
    let a = load_alignment(alignment)?;
    let v = extract_visual(&t, &a, condense)?;
    let mut o = Outputs::new(out)?;
    o.write("visual.csv", visual_to_csv(&v, &a)?.as_bytes())?;
    o.finish()
}

pub struct ExtractArgs<'a> {
    pub tensor: &'a Path,
    pub alignment: &'a Path,
    pub methods: Vec<ExtractionMethod>,
    pub baselines: Vec<String>,
    pub followup: FollowupOptions,
    pub sigma: f64,
    pub traversal_params: Option<&'a Path>,
}

pub fn extract_interaction(out: &Path, args: ExtractArgs) -> CliResult<Manifest> {
    if let Some(b) = args.baselines.iter().find(|b| !crate::config::BASELINES.contains(&b.as_str())) {
        return Err(Failure::Config(format!("unknown baseline {b:?}")));
    }
    let params = load_params(args.traversal_params)?;
    let t = load_tensor(args.tensor)?.cast::<f64>();
    let a = load_alignment(args.alignment)?;
    let mut named = Vec::new();
    for m in &args.methods {
        named.push((m.to_string(), m.extract(&t, &args.followup)?));
    }
    named.extend(baseline_predictions(&args.baselines, &a, args.sigma, &params)?);
    let mut o = Outputs::new(out)?;
    for (name, s) in named {
        check_rows(&name, &s)?;
        o.write(&format!("{name}.atnm"), &encode_matrix(&s))?;
        o.write(&format!("{name}.csv"), matrix_csv(&s)?.as_bytes())?;
        o.write(&format!("{name}.line.atnm"), &encode_matrix(&to_line_level(&s, &a)?))?;
    }
    o.finish()
}

pub struct GroundTruthArgs<'a> {
    pub session: &'a Path,
    pub alignment: &'a Path,
    pub viewport: &'a Path,
    pub alpha: f64,
    pub v_off: Option<usize>,
    pub h_off: Option<usize>,
    pub baseline: Option<&'a Path>,
    pub name: Option<String>,
}

pub fn ground_truth(out: &Path, args: GroundTruthArgs) -> CliResult<Manifest> {
    if !(args.alpha > 0.0) {
        return Err(Failure::Config(format!("alpha must be positive, got {}", args.alpha)));
    }
    let baseline = match args.baseline {
        Some(p) => Some(OffsetBaseline::from_json(&read_text(p)?).context(p.display())?),
        None => None,
    };
    let session = load_session(args.session)?;
    let a = load_alignment(args.alignment)?;
    let mut vp = load_viewport(args.viewport)?;
    vp.v_off = args.v_off.unwrap_or(vp.v_off);
    vp.h_off = args.h_off.unwrap_or(vp.h_off);
    let truth = session_truth(&session, &a, &vp, args.alpha).context(args.session.display())?;
    let s = match &baseline {
        Some(b) => neighbor_normalize(&truth.raw, b)?,
        None => normalize_rows(&truth.raw)?,
    };
    check_rows("ground truth", &s)?;
    let name = args.name.unwrap_or_else(|| {
        args.session
            .file_stem()
            .map_or_else(|| "session".into(), |s| s.to_string_lossy().into_owned())
    });
    let mut o = Outputs::new(out)?;
    if truth.dropped_fixations > 0 {
        o.warnings.push(format!("{} fixations outside the code area", truth.dropped_fixations));
    }
    o.write(&format!("{name}.raw.atnm"), &encode_matrix(&truth.raw))?;
    o.write(&format!("{name}.atnm"), &encode_matrix(&s))?;
    o.write(&format!("{name}.line.atnm"), &encode_matrix(&to_line_level(&s, &a)?))?;
    o.write_json(&format!("{name}.dwell.json"), &truth.token_dwell)?;
    o.write(&format!("{name}.visual.csv"), visual_to_csv(&truth.char_dwell, &a)?.as_bytes())?;
    o.finish()
}

fn load_matrices(paths: &[PathBuf]) -> CliResult<Vec<InteractionMatrix64>> {
    paths
        .iter()
        .map(|p| {
            require_file(p)?;
            read_matrix(p).context(p.display())
        })
        .collect()
}

pub fn baseline(
    out: &Path,
    matrices: &[PathBuf],
    parametric: bool,
    traversal_params: Option<&Path>,
    max_tokens: Option<usize>,
) -> CliResult<Manifest> {
    let b = if parametric {
        let params = load_params(traversal_params)?;
        let n = match (max_tokens, matrices.is_empty()) {
            (Some(n), _) => n,
            (None, false) => load_matrices(matrices)?.iter().map(|m| m.n_rows()).max().unwrap_or(2),
            (None, true) => {
                return Err(Failure::Config("parametric baseline needs --max-tokens or --matrices".into()))
            }
        };
        OffsetBaseline::parametric(&params, n).map_err(|e| Failure::Config(e.to_string()))?
    } else {
        if matrices.is_empty() {
            return Err(Failure::Config("empirical baseline needs --matrices".into()));
        }
        offset_baseline(&load_matrices(matrices)?)?
    };
    let mut o = Outputs::new(out)?;
    o.write("baseline.json", b.to_json().as_bytes())?;
    o.finish()
}

pub fn fit_traversal(out: &Path, matrices: &[PathBuf], weighting: FitWeighting) -> CliResult<Manifest> {
    let fit = fit_traversal_params(&load_matrices(matrices)?, weighting)?;
    let mut o = Outputs::new(out)?;
    o.write_json("traversal-fit.json", &fit)?;
    o.finish()
}

fn parse_fields<'a>(spec: &'a str, n: usize, what: &str) -> CliResult<Vec<&'a str>> {
    let f: Vec<&str> = spec.splitn(n, ',').collect();
    if f.len() != n || f.iter().any(|s| s.is_empty()) {
        return Err(Failure::Config(format!("{what} {spec:?}: expected {n} comma-separated fields")));
    }
    Ok(f)
}

/// `gt`: `session,snippet,line-matrix,dwell-json`; `pred`: `method,snippet,line-matrix`.
pub fn compare(out: &Path, gt: &[String], pred: &[String], metrics: &[Metric], jobs: usize) -> CliResult<Manifest> {
    let mut gts = Vec::new();
    for spec in gt {
        let f = parse_fields(spec, 4, "--gt")?;
        let dwell_path = Path::new(f[3]);
        let dwell: Vec<f64> = serde_json::from_str(&read_text(dwell_path)?)
            .map_err(|e| Failure::Data(format!("{}: {e}", dwell_path.display())))?;
        gts.push(GroundTruthItem {
            session: f[0].to_string(),
            snippet: f[1].to_string(),
            matrix: load_matrices(&[PathBuf::from(f[2])])?.remove(0),
            dwell,
        });
    }
    let mut preds = Vec::new();
    for spec in pred {
        let f = parse_fields(spec, 3, "--pred")?;
        preds.push(PredictionItem {
            method: f[0].to_string(),
            snippet: f[1].to_string(),
            matrix: load_matrices(&[PathBuf::from(f[2])])?.remove(0),
        });
    }
    let per_metric: Vec<gazeattn_core::Result<Vec<AgreementReport>>> =
        pool(jobs)?.install(|| metrics.par_iter().map(|m| compare_sessions(&gts, &preds, *m)).collect());
    let mut reports = Vec::new();
    for r in per_metric {
        reports.extend(r?);
    }
    let mut o = Outputs::new(out)?;
    if reports.is_empty() {
        o.warnings.push("no ground-truth session shares a snippet id with any prediction".into());
    }
    o.write("reports.csv", gazeattn_core::metrics::reports_to_csv(&reports)?.as_bytes())?;
    o.write_json("reports.json", &reports)?;
    o.write_json("summary.json", &summarize(&reports))?;
    o.finish()
}

pub fn report(out: &Path, reports: &Path, ablation: Option<&Path>) -> CliResult<Manifest> {
    let rs: Vec<AgreementReport> = serde_json::from_str(&read_text(reports)?)
        .map_err(|e| Failure::Data(format!("{}: {e}", reports.display())))?;
    let pts: Vec<AblationPoint> = match ablation {
        Some(p) => serde_json::from_str(&read_text(p)?).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?,
        None => Vec::new(),
    };
    let mut o = Outputs::new(out)?;
    render_report(&mut o, &rs, &pts)?;
    o.finish()
}
