//! Per-plane texture map generation for coarse piece-wise planar models
//! from calibrated photographs.
//!
//! The pipeline decomposes a polygonal proxy mesh into planar polygons,
//! greedily selects a small set of camera views per polygon, stitches the
//! selected views in the plane's UV space with a line-guided warp, blends
//! the overlaps, and fills whatever stayed unobserved.
//!
//! Geometric primitives are generic over the scalar type; the pipeline
//! itself runs on the [`Scalar`] alias below.

pub mod camera;
pub mod compose;
pub mod err;
pub mod geom;
pub mod inpaint;
pub mod io;
pub mod lines;
pub mod maxflow;
pub mod metrics;
pub mod pipeline;
pub mod raster;
pub mod scalar;
pub mod solver;
pub mod synth;
pub mod view;
pub mod warp;

pub use err::{Error, Result};

/// Scalar type the pipeline is instantiated at.
pub type Scalar = f64;
/// 2D point/vector in the pipeline scalar.
pub type P2 = geom::Vec2<Scalar>;
/// 3D point/vector in the pipeline scalar.
pub type P3 = geom::Vec3<Scalar>;
/// 2D line segment in the pipeline scalar.
pub type Seg2 = geom::Segment2<Scalar>;
