mod energy;
mod matching;
mod mesh;
mod resample;
mod rigid;
mod stitch;

pub use energy::{
    energy_gradient, energy_value, repair_topology, solve_warp, straightness_residuals,
    EnergyWeights, WarpField,
};
pub use matching::{match_segments, MatchPair, MatchSet};
pub use mesh::{build_adaptive_mesh, AdaptiveMesh, ConstraintChain};
pub use resample::{
    extend_margin, margin_width, render_warped, unpad_margin, unpad_mask, warp_image,
};
pub use rigid::{rigid_align, Rigid2D};
pub use stitch::{region_lols, stitch_plane, RegionStitchReport, StitchOutcome};
