//! Line-segment detection and the three-level line-feature hierarchy built
//! per plane: merged global lines, boundary-refined lines, and structural
//! clusters.

mod boundary;
mod cluster;
mod detect;
mod merge;
mod refine;

use serde::{Deserialize, Serialize};

use crate::Seg2;

pub use boundary::{boundary_metrics, BoundaryMatchMetrics, MatchThresholds};
pub use cluster::{cluster_lol2, segment_feature, ClusterParams};
pub use detect::{detect_segments, DetectorParams};
pub use merge::{merge_collinear, merge_collinear_filtered, merge_span};
pub use refine::refine_lol1;

/// Refined line with the boundary edge it matches, when any.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lol1Line {
    pub seg: Seg2,
    pub boundary_edge: Option<usize>,
}

/// Structural line cluster: a length-weighted representative line plus the
/// lol1 indices it covers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lol2Cluster {
    pub representative: Seg2,
    pub members: Vec<usize>,
}

/// The per-plane line hierarchy.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LoLSet {
    pub lol0: Vec<Seg2>,
    pub lol1: Vec<Lol1Line>,
    pub lol2: Vec<Lol2Cluster>,
}

impl LoLSet {
    /// Boundary-matching lines, in lol1 order.
    pub fn matched(&self) -> impl Iterator<Item = (&Lol1Line, usize)> + '_ {
        self.lol1
            .iter()
            .filter_map(|l| l.boundary_edge.map(|e| (l, e)))
    }
}
