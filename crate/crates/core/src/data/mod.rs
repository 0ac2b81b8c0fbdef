//! Shared data model: tensors, alignments, matrices, file formats and fixtures.

pub mod alignment;
pub mod io;
pub mod layerwise;
pub mod matrix;
pub mod synth;
pub mod tensor;

pub use alignment::{Line, TokenAlignment, TokenSpan};
pub use layerwise::{head_sum, LayerwiseAttention};
pub use matrix::{normalize_rows, Granularity, InteractionMatrix, RowFlag, VisualAttention};
pub use synth::{synth_alignment, synth_attention};
pub use tensor::{AttentionTensor, INGEST_ROW_TOLERANCE, INTERNAL_ROW_TOLERANCE};
