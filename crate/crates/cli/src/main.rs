mod commands;
mod config;
mod failure;
mod outputs;
mod pipeline;
mod report;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gazeattn_core::gaze::BaselineMode;
use gazeattn_core::interaction::{ExtractionMethod, FollowupOptions};
use gazeattn_core::metrics::Metric;
use gazeattn_core::traversal::{FitWeighting, DEFAULT_SIGMA};
use gazeattn_core::visual::Condense;

use crate::config::{Pooling, RunConfig, SyntheticSpec};
use crate::failure::{CliResult, Failure};
use crate::outputs::Manifest;

const DEFAULT_OUT: &str = "gazeattn-out";

#[derive(Parser)]
#[command(name = "gazeattn", version, about = "Model attention versus developer gaze on code")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "GAZEATTN_OUT_DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CondenseArg {
    Mean,
    Max,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineModeArg {
    Empirical,
    Parametric,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum PoolingArg {
    Global,
    PerTask,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    Strength,
    Unweighted,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Spearman,
    Top3,
    Both,
}

impl From<WeightingArg> for FitWeighting {
    fn from(w: WeightingArg) -> Self {
        match w {
            WeightingArg::Strength => FitWeighting::Strength,
            WeightingArg::Unweighted => FitWeighting::Unweighted,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic tensors, alignments, viewports and sessions.
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        tasks: usize,
        #[arg(long, default_value_t = 3)]
        sessions: usize,
        #[arg(long, default_value_t = 4)]
        layers: usize,
        #[arg(long, default_value_t = 4)]
        heads: usize,
        #[arg(long, default_value_t = 64)]
        n_prompt: usize,
        #[arg(long, default_value_t = 16)]
        n_generated: usize,
        #[arg(long, default_value_t = 200)]
        fixations: usize,
    },
    /// Per-character visual attention from a tensor.
    ExtractVisual {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long)]
        alignment: PathBuf,
        #[arg(long, value_enum, default_value = "mean")]
        condense: CondenseArg,
    },
    /// Token- and line-level interaction matrices from a tensor, plus baselines.
    ExtractInteraction {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long)]
        alignment: PathBuf,
        /// Comma-separated methods; all ten by default.
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        /// Comma-separated attention-agnostic baselines (copycat, uniform, gaussian, weibull).
        #[arg(long, value_delimiter = ',')]
        baselines: Vec<String>,
        /// 0-based follow-up layer pairs.
        #[arg(long, value_delimiter = ',')]
        layer_pairs: Option<Vec<usize>>,
        #[arg(long)]
        max_observers: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_SIGMA)]
        sigma: f64,
        #[arg(long)]
        traversal_params: Option<PathBuf>,
    },
    /// Ground-truth interaction matrix and dwell times from one session.
    GroundTruth {
        #[arg(long)]
        session: PathBuf,
        #[arg(long)]
        alignment: PathBuf,
        #[arg(long)]
        viewport: PathBuf,
        #[arg(long, default_value_t = gazeattn_core::gaze::DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long)]
        v_off: Option<usize>,
        #[arg(long)]
        h_off: Option<usize>,
        /// Offset baseline JSON used for neighbor normalization.
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Output file stem; defaults to the session file stem.
        #[arg(long)]
        name: Option<String>,
    },
    /// Offset baseline from raw ground-truth matrices or from traversal parameters.
    Baseline {
        #[arg(long, num_args = 1..)]
        matrices: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "empirical")]
        mode: BaselineModeArg,
        #[arg(long)]
        traversal_params: Option<PathBuf>,
        #[arg(long)]
        max_tokens: Option<usize>,
    },
    /// Fit the forward/backward traversal model to raw ground-truth matrices.
    FitTraversal {
        #[arg(long, num_args = 1..)]
        matrices: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "strength")]
        weighting: WeightingArg,
    },
    /// Score predictions against ground truth on the same snippet.
    Compare {
        /// `session,snippet,line-matrix.atnm,dwell.json`, repeatable.
        #[arg(long, required = true)]
        gt: Vec<String>,
        /// `method,snippet,line-matrix.atnm`, repeatable.
        #[arg(long, required = true)]
        pred: Vec<String>,
        #[arg(long, value_enum, default_value = "both")]
        metric: MetricArg,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Summary, CSV and SVG plots from saved reports.
    Report {
        #[arg(long)]
        reports: PathBuf,
        #[arg(long)]
        ablation: Option<PathBuf>,
    },
    /// Full pipeline from a JSON config; flags override config values.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        v_off: Option<usize>,
        #[arg(long)]
        h_off: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        layer_pairs: Option<Vec<usize>>,
        #[arg(long)]
        max_observers: Option<usize>,
        #[arg(long, value_enum)]
        baseline_mode: Option<BaselineModeArg>,
        #[arg(long, value_enum)]
        pooling: Option<PoolingArg>,
        #[arg(long, value_enum)]
        weighting: Option<WeightingArg>,
        #[arg(long)]
        traversal_params: Option<PathBuf>,
        #[arg(long)]
        no_ablation: bool,
    },
}

fn parse_methods(names: &[String]) -> CliResult<Vec<ExtractionMethod>> {
    if names.is_empty() {
        return Ok(ExtractionMethod::all());
    }
    names
        .iter()
        .map(|m| m.parse().map_err(|e: gazeattn_core::Error| Failure::Config(e.to_string())))
        .collect()
}

fn execute(cli: Cli) -> CliResult<Manifest> {
    let out_flag = cli.out;
    let out = || out_flag.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    match cli.command {
        Command::Synth {
            seed,
            tasks,
            sessions,
            layers,
            heads,
            n_prompt,
            n_generated,
            fixations,
        } => {
            if tasks == 0 || sessions == 0 || layers == 0 || heads == 0 || n_prompt < 2 {
                return Err(Failure::Config("tasks, sessions, layers, heads >= 1 and n-prompt >= 2 required".into()));
            }
            let spec = SyntheticSpec {
                tasks,
                sessions_per_task: sessions,
                layers,
                heads,
                n_prompt,
                n_generated,
                fixations,
            };
            commands::synth(&out(), seed, &spec)
        }
        Command::ExtractVisual {
            tensor,
            alignment,
            condense,
        } => {
            let c = match condense {
                CondenseArg::Mean => Condense::Mean,
                CondenseArg::Max => Condense::Max,
            };
            commands::extract_visual_cmd(&out(), &tensor, &alignment, c)
        }
        Command::ExtractInteraction {
            tensor,
            alignment,
            methods,
            baselines,
            layer_pairs,
            max_observers,
            sigma,
            traversal_params,
        } => {
            if !(sigma > 0.0) {
                return Err(Failure::Config(format!("sigma must be positive, got {sigma}")));
            }
            let args = commands::ExtractArgs {
                tensor: &tensor,
                alignment: &alignment,
                methods: parse_methods(&methods)?,
                baselines,
                followup: FollowupOptions {
                    layer_pairs,
                    max_observers,
                },
                sigma,
                traversal_params: traversal_params.as_deref(),
            };
            commands::extract_interaction(&out(), args)
        }
        Command::GroundTruth {
            session,
            alignment,
            viewport,
            alpha,
            v_off,
            h_off,
            baseline,
            name,
        } => commands::ground_truth(
            &out(),
            commands::GroundTruthArgs {
                session: &session,
                alignment: &alignment,
                viewport: &viewport,
                alpha,
                v_off,
                h_off,
                baseline: baseline.as_deref(),
                name,
            },
        ),
        Command::Baseline {
            matrices,
            mode,
            traversal_params,
            max_tokens,
        } => match mode {
            BaselineModeArg::None => Err(Failure::Config("baseline mode `none` produces no file".into())),
            m => commands::baseline(
                &out(),
                &matrices,
                matches!(m, BaselineModeArg::Parametric),
                traversal_params.as_deref(),
                max_tokens,
            ),
        },
        Command::FitTraversal { matrices, weighting } => commands::fit_traversal(&out(), &matrices, weighting.into()),
        Command::Compare { gt, pred, metric, jobs } => {
            if jobs == 0 {
                return Err(Failure::Config("jobs must be at least 1".into()));
            }
            let metrics = match metric {
                MetricArg::Spearman => vec![Metric::Spearman],
                MetricArg::Top3 => vec![Metric::Top3],
                MetricArg::Both => vec![Metric::Spearman, Metric::Top3],
            };
            commands::compare(&out(), &gt, &pred, &metrics, jobs)
        }
        Command::Report { reports, ablation } => commands::report(&out(), &reports, ablation.as_deref()),
        Command::Run {
            config,
            seed,
            jobs,
            methods,
            alpha,
            sigma,
            v_off,
            h_off,
            layer_pairs,
            max_observers,
            baseline_mode,
            pooling,
            weighting,
            traversal_params,
            no_ablation,
        } => {
            let mut cfg = match &config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            };
            if let Some(p) = &config {
                resolve_relative(&mut cfg, p.parent().unwrap_or(Path::new(".")));
            }
            cfg.seed = seed.or(cfg.seed);
            cfg.jobs = jobs.unwrap_or(cfg.jobs);
            cfg.methods = methods.unwrap_or(cfg.methods);
            cfg.alpha = alpha.unwrap_or(cfg.alpha);
            cfg.sigma = sigma.unwrap_or(cfg.sigma);
            cfg.v_off = v_off.or(cfg.v_off);
            cfg.h_off = h_off.or(cfg.h_off);
            cfg.layer_pairs = layer_pairs.or(cfg.layer_pairs);
            cfg.max_observers = max_observers.or(cfg.max_observers);
            if let Some(m) = baseline_mode {
                cfg.baseline_mode = match m {
                    BaselineModeArg::Empirical => BaselineMode::Empirical,
                    BaselineModeArg::Parametric => BaselineMode::Parametric,
                    BaselineModeArg::None => BaselineMode::None,
                };
            }
            if let Some(p) = pooling {
                cfg.baseline_pooling = match p {
                    PoolingArg::Global => Pooling::Global,
                    PoolingArg::PerTask => Pooling::PerTask,
                };
            }
            cfg.fit_weighting = weighting.map_or(cfg.fit_weighting, Into::into);
            cfg.traversal_params = traversal_params.or(cfg.traversal_params);
            cfg.ablation &= !no_ablation;
            let dir = out_flag
                .clone()
                .or_else(|| cfg.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
            pipeline::run_pipeline(&cfg, &dir)
        }
    }
}

/// Config paths are relative to the config file.
fn resolve_relative(cfg: &mut RunConfig, base: &Path) {
    let fix = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    for t in &mut cfg.tasks {
        fix(&mut t.tensor);
        fix(&mut t.alignment);
        fix(&mut t.viewport);
        t.sessions.iter_mut().for_each(fix);
    }
    if let Some(p) = &mut cfg.traversal_params {
        fix(p);
    }
    if let Some(p) = &mut cfg.out_dir {
        fix(p);
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(m) => {
            for w in &m.warnings {
                log::warn!("{w}");
            }
            if m.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                for f in &m.failures {
                    eprintln!("task failed: {f}");
                }
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("gazeattn: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
