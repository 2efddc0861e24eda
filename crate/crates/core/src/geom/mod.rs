//! Geometric core: vectors, segments, plane frames, polygon loops, and the
//! planar segmentation of a proxy mesh.

mod frame;
mod mesh;
mod planes;
mod polygon;
mod region;
mod segment;
mod vec;

pub use frame::PlaneFrame;
pub use mesh::{MeshWarning, ProxyMesh};
pub use planes::{extract_boundary, segment_planes, ProxyPolygon, SegmentationParams};
pub use polygon::{Loop, PolygonBoundary};
pub use region::RegionSet;
pub use segment::{point_line_distance, Segment2};
pub use vec::{Vec2, Vec3};
