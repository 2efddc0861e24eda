//! Per-plane view filtering, projection and greedy view selection.

mod project;
mod quality;
mod select;

pub use project::{filter_and_project, ProjectedRegion, SampleGrid};
pub use quality::{
    gradient_score, perspective_quality, photo_consistency, score, smoothness,
};
pub use select::{select_views, SelectionState, SelectionWeights};
