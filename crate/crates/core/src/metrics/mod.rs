//! Agreement between model-derived and ground-truth attention.

pub mod agreement;
pub mod mwu;
pub mod rank;
pub mod report;

pub use agreement::{
    compare_sessions, row_weight, snippet_pairs, weighted_row_agreement, AgreementReport, GroundTruthItem, Metric,
    PredictionItem, RowScore, SkipReason, MAX_ROW_WEIGHT,
};
pub use mwu::{mann_whitney_u, MannWhitney, EXACT_MAX};
pub use rank::{average_ranks, spearman, top3, top3_overlap};
pub use report::{median, reports_to_csv, summarize, MethodSummary};
