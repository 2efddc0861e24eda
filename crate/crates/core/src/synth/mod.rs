//! Synthetic ground truth: known planar scenes rendered through known
//! cameras, so every stage of the pipeline has an exact oracle.

mod eval;
mod scene;

pub use eval::{evaluate_alignment, naive_composite, AlignmentReport};
pub use scene::{
    generate_scene, CameraRing, GridTexture, PoseNoise, Scene, SceneSpec, BACKDROP,
};
