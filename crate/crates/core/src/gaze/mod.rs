//! Eye-tracking sessions to dwell vectors and ground-truth interaction matrices.

pub mod baseline;
pub mod connection;
pub mod events;
pub mod mapping;
pub mod synth;

pub use baseline::{neighbor_normalize, offset_baseline, BaselineMode, OffsetBaseline, BASELINE_FLOOR};
pub use connection::{
    event_pair_contribution, ground_truth_interaction, ground_truth_raw, pair_contribution, DEFAULT_ALPHA,
};
pub use events::{CharEvent, FixationEvent, ScrollEvent, Session, TokenEvent, Viewport};
pub use mapping::{dwell_vector, map_fixations, parafoveal_augment, token_dwell, token_events, MappedFixations};
pub use synth::{render_session, synth_session, synth_viewport, ScheduledFixation};
