//! Shared building blocks and the end-to-end `run` pipeline.

use std::collections::BTreeMap;
use std::path::Path;

use gazeattn_core::data::io::{encode_attention_tensor, encode_matrix, matrix_to_csv, read_alignment, read_attention_tensor, visual_to_csv};
use gazeattn_core::data::{normalize_rows, synth_alignment, synth_attention, AttentionTensor, TokenAlignment, VisualAttention};
use gazeattn_core::gaze::{
    dwell_vector, ground_truth_raw, map_fixations, neighbor_normalize, offset_baseline, parafoveal_augment,
    synth_session, synth_viewport, token_dwell, token_events, BaselineMode, OffsetBaseline, Session, Viewport,
};
use gazeattn_core::interaction::{to_line_level, ExtractionMethod, FollowupOptions};
use gazeattn_core::metrics::{
    compare_sessions, mann_whitney_u, spearman, AgreementReport, GroundTruthItem, Metric,
    PredictionItem,
};
use gazeattn_core::traversal::{
    copycat, fit_traversal_params, gaussian_position, uniform_preceding, weibull_traversal, TraversalParams,
};
use gazeattn_core::visual::{extract_visual, Condense};
use gazeattn_core::{InteractionMatrix64, Scalar};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Pooling, RunConfig, SyntheticSpec};
use crate::failure::{read_text, require_file, CliResult, Context, Failure};
use crate::outputs::{Manifest, Outputs};
use crate::report::{render_report, AblationKind, AblationPoint};

pub const ROW_TOLERANCE: f64 = 1e-6;

/// Fails with an internal error when an emitted matrix has a row that is
/// neither stochastic nor an all-zero row flagged as such.
pub fn check_rows<T: Scalar>(name: &str, m: &gazeattn_core::data::InteractionMatrix<T>) -> CliResult<()> {
    use gazeattn_core::data::RowFlag;
    for (i, row) in m.rows().enumerate() {
        let sum: f64 = row.iter().map(|v| v.as_f64()).sum();
        let ok = match m.flag(i) {
            RowFlag::Zero => row.iter().all(|v| v.is_zero()),
            _ => (sum - 1.0).abs() <= ROW_TOLERANCE,
        };
        if !ok {
            return Err(Failure::Internal(format!("{name}: row {i} sums to {sum}")));
        }
    }
    Ok(())
}

pub struct TaskInput {
    pub snippet: String,
    pub tensor: AttentionTensor<f32>,
    pub alignment: TokenAlignment,
    pub viewport: Viewport,
    pub sessions: Vec<(String, Session)>,
}

pub fn load_viewport(path: &Path) -> CliResult<Viewport> {
    Viewport::from_json(&read_text(path)?).context(path.display())
}

pub fn load_session(path: &Path) -> CliResult<Session> {
    Session::from_jsonl(&read_text(path)?).context(path.display())
}

pub fn load_tensor(path: &Path) -> CliResult<AttentionTensor<f32>> {
    require_file(path)?;
    read_attention_tensor(path).context(path.display())
}

pub fn load_alignment(path: &Path) -> CliResult<TokenAlignment> {
    require_file(path)?;
    read_alignment(path).context(path.display())
}

fn session_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| "session".into(), |s| s.to_string_lossy().into_owned())
}

fn load_task(spec: &crate::config::TaskSpec) -> CliResult<TaskInput> {
    let tensor = load_tensor(&spec.tensor)?;
    let alignment = load_alignment(&spec.alignment)?;
    if tensor.n_prompt() != alignment.n_tokens() {
        return Err(Failure::Data(format!(
            "{}: tensor has {} prompt tokens, alignment has {}",
            spec.snippet,
            tensor.n_prompt(),
            alignment.n_tokens()
        )));
    }
    let sessions = spec
        .sessions
        .iter()
        .map(|p| Ok((session_name(p), load_session(p)?)))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(TaskInput {
        snippet: spec.snippet.clone(),
        tensor,
        alignment,
        viewport: load_viewport(&spec.viewport)?,
        sessions,
    })
}

/// Deterministic synthetic task `k` for `seed`.
pub fn synth_task(seed: u64, k: usize, spec: &SyntheticSpec, params: &TraversalParams) -> TaskInput {
    let task_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64);
    let alignment = synth_alignment(task_seed, spec.n_prompt);
    let tensor = synth_attention::<f32>(task_seed, spec.layers, spec.heads, spec.n_prompt, spec.n_generated);
    let viewport = synth_viewport();
    let sessions = (0..spec.sessions_per_task)
        .map(|s| {
            let (session, _) = synth_session(
                task_seed.wrapping_add(1000 * (s as u64 + 1)),
                &alignment,
                &viewport,
                spec.fixations,
                params,
            );
            (format!("session-{s}"), session)
        })
        .collect();
    TaskInput {
        snippet: format!("task-{k}"),
        tensor,
        alignment,
        viewport,
        sessions,
    }
}

/// Writes the inputs of a task under `inputs/<snippet>/`.
pub fn write_task_inputs(out: &mut Outputs, task: &TaskInput) -> CliResult<()> {
    let dir = format!("inputs/{}", task.snippet);
    out.write(&format!("{dir}/tensor.atnb"), &encode_attention_tensor(&task.tensor))?;
    out.write(&format!("{dir}/alignment.json"), task.alignment.to_json().as_bytes())?;
    out.write_json(&format!("{dir}/viewport.json"), &task.viewport)?;
    for (name, s) in &task.sessions {
        out.write(&format!("{dir}/{name}.jsonl"), s.to_jsonl().as_bytes())?;
    }
    Ok(())
}

pub struct SessionTruth {
    pub raw: InteractionMatrix64,
    pub token_dwell: Vec<f64>,
    pub char_dwell: VisualAttention<f64>,
    pub dropped_fixations: usize,
}

pub fn session_truth(
    session: &Session,
    a: &TokenAlignment,
    vp: &Viewport,
    alpha: f64,
) -> gazeattn_core::Result<SessionTruth> {
    let mapped = map_fixations(&session.fixations, &session.scrolls, vp)?;
    let augmented = parafoveal_augment(&mapped.events, vp, a);
    let events = token_events(&augmented, a);
    let raw = ground_truth_raw::<f64>(&events, alpha, a.n_tokens())?;
    let (char_dwell, _) = dwell_vector::<f64>(&augmented, a);
    Ok(SessionTruth {
        raw,
        token_dwell: token_dwell(&events, a.n_tokens()),
        char_dwell,
        dropped_fixations: mapped.dropped,
    })
}

/// Attention-agnostic predictions by name.
pub fn baseline_predictions(
    names: &[String],
    a: &TokenAlignment,
    sigma: f64,
    params: &TraversalParams,
) -> gazeattn_core::Result<Vec<(String, InteractionMatrix64)>> {
    let n = a.n_tokens();
    names
        .iter()
        .map(|name| {
            let m = match name.as_str() {
                "copycat" => copycat::<f64>(a).matrix,
                "uniform" => uniform_preceding(n)?,
                "gaussian" => gaussian_position(n, sigma)?,
                "weibull" => weibull_traversal(n, params)?,
                other => unreachable!("baseline {other} passed validation"),
            };
            Ok((format!("baseline-{name}"), m))
        })
        .collect()
}

pub fn load_params(path: Option<&Path>) -> CliResult<TraversalParams> {
    match path {
        None => Ok(TraversalParams::default()),
        Some(p) => {
            let text = read_text(p)?;
            let v: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            // Accept both a bare parameter object and the output of `fit-traversal`.
            let inner = v.get("params").cloned().unwrap_or(v);
            let params: TraversalParams =
                serde_json::from_value(inner).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            params.validate().map_err(|e| Failure::Config(e.to_string()))?;
            Ok(params)
        }
    }
}

pub fn pool(jobs: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::Internal(format!("thread pool: {e}")))
}

struct TaskResult {
    snippet: String,
    files: Vec<(String, Vec<u8>)>,
    predictions: Vec<(String, InteractionMatrix64)>,
    ablation: Vec<(AblationKind, usize, InteractionMatrix64)>,
    sessions: Vec<(String, SessionTruth)>,
    visual: Vec<(String, Option<f64>)>,
    warnings: Vec<String>,
}

fn observer_grid(m: usize) -> Vec<usize> {
    let mut g: Vec<usize> = (0..=4).map(|k| k * m / 4).collect();
    g.dedup();
    g
}

fn process_task(task: &TaskInput, cfg: &RunConfig, params: &TraversalParams) -> CliResult<TaskResult> {
    let t = task.tensor.cast::<f64>();
    let a = &task.alignment;
    let dir = &task.snippet;
    let opts = FollowupOptions {
        layer_pairs: cfg.layer_pairs.clone(),
        max_observers: cfg.max_observers,
    };
    let mut files = Vec::new();
    let mut predictions = Vec::new();
    for method in cfg.parsed_methods()? {
        let s = method.extract(&t, &opts).context(format!("{dir}/{method}"))?;
        check_rows(&method.to_string(), &s)?;
        files.push((format!("matrices/{dir}/{method}.atnm"), encode_matrix(&s)));
        predictions.push((method.to_string(), to_line_level(&s, a)?));
    }
    for (name, s) in baseline_predictions(&cfg.baselines, a, cfg.sigma, params)? {
        check_rows(&name, &s)?;
        files.push((format!("matrices/{dir}/{name}.atnm"), encode_matrix(&s)));
        predictions.push((name, to_line_level(&s, a)?));
    }

    let mut ablation = Vec::new();
    if cfg.ablation {
        for z in 0..t.layers().saturating_sub(1) {
            let o = FollowupOptions {
                layer_pairs: Some(vec![z]),
                max_observers: cfg.max_observers,
            };
            let s = ExtractionMethod::Followup.extract(&t, &o)?;
            ablation.push((AblationKind::LayerPair, z, to_line_level(&s, a)?));
        }
        if t.layers() > 1 {
            for g in observer_grid(t.n_generated()) {
                let o = FollowupOptions {
                    layer_pairs: cfg.layer_pairs.clone(),
                    max_observers: Some(g),
                };
                let s = ExtractionMethod::Followup.extract(&t, &o)?;
                ablation.push((AblationKind::Observers, g, to_line_level(&s, a)?));
            }
        }
    }

    let model_visual = extract_visual(&t, a, Condense::Mean)?;
    files.push((format!("visual/{dir}/model.csv"), visual_to_csv(&model_visual, a)?.into_bytes()));
    let mut vp = task.viewport;
    vp.v_off = cfg.v_off.unwrap_or(vp.v_off);
    vp.h_off = cfg.h_off.unwrap_or(vp.h_off);
    let mut sessions = Vec::new();
    let mut visual = Vec::new();
    let mut warnings = Vec::new();
    for (name, session) in &task.sessions {
        let truth = match session_truth(session, a, &vp, cfg.alpha) {
            Ok(t) => t,
            Err(e) => {
                warnings.push(format!("{dir}/{name}: skipped: {e}"));
                continue;
            }
        };
        if truth.dropped_fixations > 0 {
            warnings.push(format!("{dir}/{name}: {} fixations outside the code area", truth.dropped_fixations));
        }
        files.push((format!("visual/{dir}/{name}.csv"), visual_to_csv(&truth.char_dwell, a)?.into_bytes()));
        let r = spearman(model_visual.values(), truth.char_dwell.values())?;
        visual.push((name.clone(), r));
        sessions.push((name.clone(), truth));
    }
    Ok(TaskResult {
        snippet: task.snippet.clone(),
        files,
        predictions,
        ablation,
        sessions,
        visual,
        warnings,
    })
}

fn build_baseline(
    mode: BaselineMode,
    raws: &[&InteractionMatrix64],
    params: &TraversalParams,
) -> CliResult<Option<OffsetBaseline>> {
    Ok(match mode {
        BaselineMode::None => None,
        BaselineMode::Empirical => {
            let owned: Vec<InteractionMatrix64> = raws.iter().map(|m| (*m).clone()).collect();
            Some(offset_baseline(&owned)?)
        }
        BaselineMode::Parametric => {
            let n = raws.iter().map(|m| m.n_rows()).max().unwrap_or(2).max(2);
            Some(OffsetBaseline::parametric(params, n)?)
        }
    })
}

#[derive(Serialize)]
struct VisualRow<'a> {
    snippet: &'a str,
    session: &'a str,
    spearman: Option<f64>,
}

#[derive(Serialize)]
struct MwuRow {
    metric: Metric,
    method: String,
    baseline: String,
    u: f64,
    p: f64,
    exact: bool,
}

/// Runs every stage and writes all artifacts plus `manifest.json` under `out_dir`.
pub fn run_pipeline(cfg: &RunConfig, out_dir: &Path) -> CliResult<Manifest> {
    cfg.validate()?;
    let params = load_params(cfg.traversal_params.as_deref())?;
    let mut out = Outputs::new(out_dir)?;

    let mut tasks = Vec::new();
    if cfg.tasks.is_empty() {
        let seed = cfg.seed.expect("validated");
        for k in 0..cfg.synthetic.tasks {
            let task = synth_task(seed, k, &cfg.synthetic, &params);
            write_task_inputs(&mut out, &task)?;
            tasks.push(task);
        }
    } else {
        for spec in &cfg.tasks {
            match load_task(spec) {
                Ok(t) => tasks.push(t),
                Err(Failure::Data(m)) => out.failures.push(format!("{}: {m}", spec.snippet)),
                Err(e) => return Err(e),
            }
        }
    }

    let results: Vec<(String, CliResult<TaskResult>)> = pool(cfg.jobs)?.install(|| {
        tasks
            .par_iter()
            .map(|t| (t.snippet.clone(), process_task(t, cfg, &params)))
            .collect()
    });
    let mut done = Vec::new();
    for (snippet, r) in results {
        match r {
            Ok(r) => done.push(r),
            Err(Failure::Data(m)) => out.failures.push(format!("{snippet}: {m}")),
            Err(e) => return Err(e),
        }
    }
    for r in &mut done {
        for (path, bytes) in std::mem::take(&mut r.files) {
            out.write(&path, &bytes)?;
        }
        out.warnings.append(&mut r.warnings);
    }

    // Offset baselines, pooled over every session or per task.
    let mut baselines: BTreeMap<String, Option<OffsetBaseline>> = BTreeMap::new();
    match cfg.baseline_pooling {
        Pooling::Global => {
            let raws: Vec<&InteractionMatrix64> = done.iter().flat_map(|r| r.sessions.iter().map(|s| &s.1.raw)).collect();
            let b = if raws.is_empty() { None } else { build_baseline(cfg.baseline_mode, &raws, &params)? };
            if let Some(b) = &b {
                out.write("baseline.json", b.to_json().as_bytes())?;
            }
            for r in &done {
                baselines.insert(r.snippet.clone(), b.clone());
            }
        }
        Pooling::PerTask => {
            for r in &done {
                let raws: Vec<&InteractionMatrix64> = r.sessions.iter().map(|s| &s.1.raw).collect();
                let b = if raws.is_empty() { None } else { build_baseline(cfg.baseline_mode, &raws, &params)? };
                if let Some(b) = &b {
                    out.write(&format!("baselines/{}.json", r.snippet), b.to_json().as_bytes())?;
                }
                baselines.insert(r.snippet.clone(), b);
            }
        }
    }

    let mut gt_items = Vec::new();
    for r in &done {
        for (name, truth) in &r.sessions {
            let s = match &baselines[&r.snippet] {
                Some(b) => neighbor_normalize(&truth.raw, b)?,
                None => normalize_rows(&truth.raw)?,
            };
            check_rows("ground truth", &s)?;
            let a = &tasks.iter().find(|t| t.snippet == r.snippet).expect("task exists").alignment;
            let line = to_line_level(&s, a)?;
            out.write(&format!("ground-truth/{}/{name}.raw.atnm", r.snippet), &encode_matrix(&truth.raw))?;
            out.write(&format!("ground-truth/{}/{name}.line.atnm", r.snippet), &encode_matrix(&line))?;
            gt_items.push(GroundTruthItem {
                session: format!("{}/{name}", r.snippet),
                snippet: r.snippet.clone(),
                matrix: line,
                dwell: truth.token_dwell.clone(),
            });
        }
    }

    let raws: Vec<InteractionMatrix64> = done.iter().flat_map(|r| r.sessions.iter().map(|s| s.1.raw.clone())).collect();
    match fit_traversal_params(&raws, cfg.fit_weighting) {
        Ok(fit) => {
            out.write_json("traversal-fit.json", &fit)?;
        }
        Err(e) => out.warnings.push(format!("traversal fit skipped: {e}")),
    }

    let preds: Vec<PredictionItem<f64>> = done
        .iter()
        .flat_map(|r| {
            r.predictions.iter().map(|(method, m)| PredictionItem {
                method: method.clone(),
                snippet: r.snippet.clone(),
                matrix: m.clone(),
            })
        })
        .collect();
    let mut reports = Vec::new();
    for metric in [Metric::Spearman, Metric::Top3] {
        reports.extend(compare_sessions(&gt_items, &preds, metric)?);
    }
    if reports.is_empty() {
        out.warnings.push("no agreement reports: no session shares a snippet with a prediction".into());
    }

    let visual: Vec<VisualRow> = done
        .iter()
        .flat_map(|r| {
            r.visual.iter().map(|(s, v)| VisualRow {
                snippet: &r.snippet,
                session: s,
                spearman: *v,
            })
        })
        .collect();
    out.write_json("visual-agreement.json", &visual)?;
    out.write_json("mann-whitney.json", &mwu_table(&reports))?;

    let mut ablation = Vec::new();
    for metric in [Metric::Spearman, Metric::Top3] {
        let mut by_setting: BTreeMap<(AblationKind, usize), Vec<f64>> = BTreeMap::new();
        for r in &done {
            for (kind, value, m) in &r.ablation {
                for g in gt_items.iter().filter(|g| g.snippet == r.snippet) {
                    let rep = gazeattn_core::metrics::weighted_row_agreement(&g.matrix, m, &g.dwell, metric)?;
                    if let Some(v) = rep.aggregate {
                        by_setting.entry((*kind, *value)).or_default().push(v);
                    }
                }
            }
        }
        for ((kind, value), vals) in by_setting {
            ablation.push(AblationPoint {
                kind,
                value,
                metric,
                mean: vals.iter().sum::<f64>() / vals.len() as f64,
                n: vals.len(),
            });
        }
    }
    if !reports.is_empty() {
        render_report(&mut out, &reports, &ablation)?;
    }
    out.finish()
}

fn mwu_table(reports: &[AgreementReport]) -> Vec<MwuRow> {
    let mut groups: BTreeMap<(Metric, String), Vec<f64>> = BTreeMap::new();
    for r in reports {
        if let Some(v) = r.aggregate {
            groups.entry((r.metric, r.method.clone())).or_default().push(v);
        }
    }
    let mut rows = Vec::new();
    for ((metric, method), vals) in &groups {
        if method.starts_with("baseline-") {
            continue;
        }
        for ((m2, base), bvals) in &groups {
            if m2 != metric || !base.starts_with("baseline-") {
                continue;
            }
            if let Ok(t) = mann_whitney_u(vals, bvals) {
                rows.push(MwuRow {
                    metric: *metric,
                    method: method.clone(),
                    baseline: base.clone(),
                    u: t.u,
                    p: t.p,
                    exact: t.exact,
                });
            }
        }
    }
    rows
}

pub fn matrix_csv(m: &InteractionMatrix64) -> CliResult<String> {
    Ok(matrix_to_csv(m)?)
}
