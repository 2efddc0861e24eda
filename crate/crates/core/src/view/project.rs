use std::sync::Arc;

use rayon::prelude::*;

use crate::camera::CameraView;
use crate::geom::{ProxyMesh, ProxyPolygon, RegionSet};
use crate::raster::Gray;
use crate::view::SelectionWeights;
use crate::{P2, P3, Scalar};

/// Regular sample lattice over a polygon's frame-space bounding box, shared
/// by every projected region of that polygon so overlaps compare node for
/// node.
#[derive(Clone, Debug)]
pub struct SampleGrid {
    pub origin: P2,
    pub step: Scalar,
    pub nx: usize,
    pub ny: usize,
    /// Node centers inside the polygon boundary.
    pub inside: Vec<bool>,
}

impl SampleGrid {
    /// Spacing maps the longest boundary edge to at least 256 samples,
    /// capped at 2048 nodes per axis.
    pub fn for_polygon(polygon: &ProxyPolygon<Scalar>) -> SampleGrid {
        let (lo, hi) = polygon.boundary.bbox();
        let w = (hi.x - lo.x).max(1e-12);
        let h = (hi.y - lo.y).max(1e-12);
        let longest = polygon
            .boundary
            .all_edge_segments()
            .iter()
            .map(|s| s.length())
            .fold(0.0, Scalar::max)
            .max(1e-12);
        let step = (longest / 256.0).max(w / 2047.0).max(h / 2047.0);
        let nx = ((w / step - 1e-9).ceil() as usize + 1).min(2048);
        let ny = ((h / step - 1e-9).ceil() as usize + 1).min(2048);
        let mut inside = vec![false; nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                let p = P2::new(lo.x + ix as Scalar * step, lo.y + iy as Scalar * step);
                inside[iy * nx + ix] = polygon.boundary.contains(p);
            }
        }
        SampleGrid {
            origin: lo,
            step,
            nx,
            ny,
            inside,
        }
    }

    #[inline]
    pub fn node(&self, ix: usize, iy: usize) -> P2 {
        P2::new(
            self.origin.x + ix as Scalar * self.step,
            self.origin.y + iy as Scalar * self.step,
        )
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One candidate view projected onto a polygon: per-node colors, validity,
/// and the footprint polygon that drives coverage arithmetic.
#[derive(Clone, Debug)]
pub struct ProjectedRegion {
    pub view_id: usize,
    /// Unit viewing direction of the source camera in world space.
    pub view_dir: P3,
    pub grid: Arc<SampleGrid>,
    /// Valid exactly at nodes inside the boundary that project to an
    /// unoccluded, in-frame source pixel.
    pub valid: Vec<bool>,
    pub colors: Vec<[f64; 3]>,
    /// Source-image gradient magnitude sampled at each node's source pixel.
    pub grad: Vec<f64>,
    /// Node's pixel position in the source image.
    pub source_uv: Vec<P2>,
    pub footprint: RegionSet,
    pub gradient_score: f64,
    pub mean_color: [f64; 3],
}

/// Keeps views facing the polygon front within the angle/distance limits and
/// projects each onto the shared sample grid. A node is valid when the ray
/// from the camera center to its 3D point is unobstructed by faces outside
/// the polygon and lands inside the source frame. Views whose footprint is
/// empty are dropped.
pub fn filter_and_project(
    views: &[CameraView],
    polygon: &ProxyPolygon<Scalar>,
    mesh: &ProxyMesh<Scalar>,
    weights: &SelectionWeights,
) -> Vec<ProjectedRegion> {
    let grid = Arc::new(SampleGrid::for_polygon(polygon));
    let boundary_region = RegionSet::from_boundary(&polygon.boundary);
    let max_angle = weights.max_view_angle_deg.to_radians();
    let occluders: Vec<usize> = (0..mesh.faces.len())
        .filter(|f| !mesh.is_degenerate(*f) && !polygon.faces.contains(f))
        .collect();
    views
        .iter()
        .filter_map(|cam| {
            let center = cam.center();
            if center.dot(polygon.normal) - polygon.offset <= 0.0 {
                return None;
            }
            let v = cam.view_direction();
            let cos = (-polygon.normal).dot(v).clamp(-1.0, 1.0);
            if cos.acos() > max_angle {
                return None;
            }
            if let Some(max_d) = weights.max_distance {
                if center.dist(polygon.frame.origin) > max_d {
                    return None;
                }
            }
            project_view(cam, polygon, mesh, &occluders, &grid, &boundary_region)
        })
        .collect()
}

fn project_view(
    cam: &CameraView,
    polygon: &ProxyPolygon<Scalar>,
    mesh: &ProxyMesh<Scalar>,
    occluders: &[usize],
    grid: &Arc<SampleGrid>,
    boundary_region: &RegionSet,
) -> Option<ProjectedRegion> {
    let sobel = cam.image.luma().sobel_magnitude();
    let center = cam.center();
    let n = grid.len();
    let rows: Vec<(Vec<bool>, Vec<[f64; 3]>, Vec<f64>, Vec<P2>)> = (0..grid.ny)
        .into_par_iter()
        .map(|iy| project_row(cam, polygon, mesh, occluders, grid, &sobel, center, iy))
        .collect();
    let mut valid = Vec::with_capacity(n);
    let mut colors = Vec::with_capacity(n);
    let mut grad = Vec::with_capacity(n);
    let mut source_uv = Vec::with_capacity(n);
    for (v, c, g, s) in rows {
        valid.extend(v);
        colors.extend(c);
        grad.extend(g);
        source_uv.extend(s);
    }
    let valid_count = valid.iter().filter(|&&b| b).count();
    if valid_count == 0 {
        return None;
    }
    // Footprint: the boundary region minus one grid cell around each inside
    // node that failed projection, so full visibility keeps the exact
    // polygon.
    let half = grid.step * 0.5;
    let invalid_mask: Vec<bool> = (0..n).map(|i| grid.inside[i] && !valid[i]).collect();
    let holes = RegionSet::from_mask(
        &invalid_mask,
        grid.nx,
        grid.ny,
        P2::new(grid.origin.x - half, grid.origin.y - half),
        grid.step,
    );
    let footprint = boundary_region.difference(&holes);
    if footprint.is_empty() {
        return None;
    }
    let mut mean = [0.0; 3];
    let mut gsum = 0.0;
    for i in 0..n {
        if valid[i] {
            for c in 0..3 {
                mean[c] += colors[i][c];
            }
            gsum += grad[i];
        }
    }
    for c in &mut mean {
        *c /= valid_count as f64;
    }
    Some(ProjectedRegion {
        view_id: cam.id,
        view_dir: cam.view_direction(),
        grid: grid.clone(),
        valid,
        colors,
        grad,
        source_uv,
        footprint,
        gradient_score: gsum / valid_count as f64,
        mean_color: mean,
    })
}

#[allow(clippy::too_many_arguments)]
fn project_row(
    cam: &CameraView,
    polygon: &ProxyPolygon<Scalar>,
    mesh: &ProxyMesh<Scalar>,
    occluders: &[usize],
    grid: &SampleGrid,
    sobel: &Gray,
    center: P3,
    iy: usize,
) -> (Vec<bool>, Vec<[f64; 3]>, Vec<f64>, Vec<P2>) {
    let nx = grid.nx;
    let mut valid = vec![false; nx];
    let mut colors = vec![[0.0; 3]; nx];
    let mut grad = vec![0.0; nx];
    let mut source_uv = vec![P2::zero(); nx];
    for ix in 0..nx {
        if !grid.inside[iy * nx + ix] {
            continue;
        }
        let world = polygon.frame.lift(grid.node(ix, iy));
        let Some(uv) = cam.project(world) else {
            continue;
        };
        if !cam.in_frame(uv) {
            continue;
        }
        if segment_occluded(mesh, occluders, center, world) {
            continue;
        }
        let Some(color) = cam.sample(uv) else {
            continue;
        };
        valid[ix] = true;
        colors[ix] = color;
        source_uv[ix] = uv;
        grad[ix] = sample_gray(sobel, uv);
    }
    (valid, colors, grad, source_uv)
}

fn sample_gray(g: &Gray, uv: P2) -> f64 {
    let x = uv.x.clamp(0.0, (g.w - 1) as f64);
    let y = uv.y.clamp(0.0, (g.h - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(g.w - 1);
    let y1 = (y0 + 1).min(g.h - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let top = g.get(x0, y0) * (1.0 - fx) + g.get(x1, y0) * fx;
    let bot = g.get(x0, y1) * (1.0 - fx) + g.get(x1, y1) * fx;
    top * (1.0 - fy) + bot * fy
}

/// True when the open segment from `a` to `b` crosses any of the given
/// faces. Endpoint grazing is ignored so a sample on its own plane does not
/// occlude itself.
pub fn segment_occluded(
    mesh: &ProxyMesh<Scalar>,
    faces: &[usize],
    a: P3,
    b: P3,
) -> bool {
    let dir = b - a;
    for &f in faces {
        for tri in mesh.face_triangles(f) {
            let v0 = mesh.vertices[tri[0]];
            let v1 = mesh.vertices[tri[1]];
            let v2 = mesh.vertices[tri[2]];
            if let Some(t) = ray_triangle(a, dir, v0, v1, v2) {
                if t > 1e-9 && t < 1.0 - 1e-6 {
                    return true;
                }
            }
        }
    }
    false
}

/// Parameter t along `dir` where the ray hits the triangle, if any.
fn ray_triangle(origin: P3, dir: P3, v0: P3, v1: P3, v2: P3) -> Option<Scalar> {
    let e1 = v1 - v0;
    let e2 = v2 - v0;
    let p = dir.cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - v0;
    let u = s.dot(p) * inv;
    if !(-1e-9..=1.0 + 1e-9).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = dir.dot(q) * inv;
    if v < -1e-9 || u + v > 1.0 + 1e-9 {
        return None;
    }
    Some(e2.dot(q) * inv)
}
