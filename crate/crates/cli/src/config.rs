use std::path::{Path, PathBuf};

use gazeattn_core::gaze::{BaselineMode, DEFAULT_ALPHA};
use gazeattn_core::interaction::ExtractionMethod;
use gazeattn_core::traversal::{FitWeighting, DEFAULT_SIGMA};
use serde::{Deserialize, Serialize};

use crate::failure::{require_file, CliResult, Failure};

/// One snippet: a model tensor, its alignment, the editor geometry and the
/// recorded sessions on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub snippet: String,
    pub tensor: PathBuf,
    pub alignment: PathBuf,
    pub viewport: PathBuf,
    pub sessions: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub tasks: usize,
    pub sessions_per_task: usize,
    pub layers: usize,
    pub heads: usize,
    pub n_prompt: usize,
    pub n_generated: usize,
    pub fixations: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            tasks: 2,
            sessions_per_task: 3,
            layers: 4,
            heads: 4,
            n_prompt: 64,
            n_generated: 16,
            fixations: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    #[default]
    Global,
    PerTask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Recorded inputs; when empty, inputs are generated from `synthetic` and `seed`.
    pub tasks: Vec<TaskSpec>,
    pub synthetic: SyntheticSpec,
    pub methods: Vec<String>,
    pub baselines: Vec<String>,
    pub alpha: f64,
    pub sigma: f64,
    pub v_off: Option<usize>,
    pub h_off: Option<usize>,
    /// 0-based layer pairs for follow-up attention.
    pub layer_pairs: Option<Vec<usize>>,
    pub max_observers: Option<usize>,
    pub baseline_mode: BaselineMode,
    pub baseline_pooling: Pooling,
    pub fit_weighting: FitWeighting,
    /// Traversal parameters for the Weibull baseline and the parametric offset baseline.
    pub traversal_params: Option<PathBuf>,
    pub ablation: bool,
    pub out_dir: Option<PathBuf>,
    pub jobs: usize,
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tasks: Vec::new(),
            synthetic: SyntheticSpec::default(),
            methods: ExtractionMethod::all().iter().map(|m| m.to_string()).collect(),
            baselines: BASELINES.iter().map(|s| s.to_string()).collect(),
            alpha: DEFAULT_ALPHA,
            sigma: DEFAULT_SIGMA,
            v_off: None,
            h_off: None,
            layer_pairs: None,
            max_observers: None,
            baseline_mode: BaselineMode::Empirical,
            baseline_pooling: Pooling::Global,
            fit_weighting: FitWeighting::Strength,
            traversal_params: None,
            ablation: true,
            out_dir: None,
            jobs: 1,
            seed: None,
        }
    }
}

pub const BASELINES: [&str; 4] = ["copycat", "uniform", "gaussian", "weibull"];

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
    }

    pub fn parsed_methods(&self) -> CliResult<Vec<ExtractionMethod>> {
        self.methods
            .iter()
            .map(|m| m.parse().map_err(|e: gazeattn_core::Error| Failure::Config(e.to_string())))
            .collect()
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(Failure::Config(m));
        if !(self.alpha > 0.0) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.sigma > 0.0) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1".into());
        }
        self.parsed_methods()?;
        if let Some(b) = self.baselines.iter().find(|b| !BASELINES.contains(&b.as_str())) {
            return bad(format!("unknown baseline {b:?}, expected one of {BASELINES:?}"));
        }
        if let Some(p) = &self.traversal_params {
            require_file(p)?;
        }
        if self.tasks.is_empty() {
            if self.seed.is_none() {
                return bad("a seed is required to generate synthetic inputs".into());
            }
            let s = &self.synthetic;
            if s.tasks == 0 || s.sessions_per_task == 0 || s.layers == 0 || s.heads == 0 || s.n_prompt < 2 {
                return bad("synthetic inputs need tasks, sessions, layers, heads >= 1 and n_prompt >= 2".into());
            }
        }
        let mut snippets = std::collections::BTreeSet::new();
        for t in &self.tasks {
            if !snippets.insert(&t.snippet) {
                return bad(format!("duplicate snippet id {:?}", t.snippet));
            }
            for p in [&t.tensor, &t.alignment, &t.viewport].into_iter().chain(&t.sessions) {
                require_file(p)?;
            }
        }
        Ok(())
    }
}
