use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::err::{Error, Result};
use crate::geom::{Loop, PlaneFrame, PolygonBoundary, ProxyMesh, Vec3};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(deserialize = "S: serde::Deserialize<'de> + Real"))]
pub struct SegmentationParams<S> {
    /// Max angle between a face normal and the fitted plane normal, degrees.
    #[serde(default = "default_angle_tol")]
    pub angle_tol_deg: S,
    /// Max vertex distance from the fitted plane, world units.
    /// None selects 1e-4 of the mesh bbox diagonal.
    #[serde(default)]
    pub dist_tol: Option<S>,
}

fn default_angle_tol<S: Real>() -> S {
    S::lit(2.0)
}

impl<S: Real> Default for SegmentationParams<S> {
    fn default() -> Self {
        SegmentationParams {
            angle_tol_deg: S::lit(2.0),
            dist_tol: None,
        }
    }
}

/// Planar region of the proxy mesh: member faces, fitted plane, local frame
/// and boundary in frame coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProxyPolygon<S> {
    pub id: usize,
    pub faces: Vec<usize>,
    /// Unit plane normal; points x on the plane satisfy normal·x = offset.
    pub normal: Vec3<S>,
    pub offset: S,
    pub frame: PlaneFrame<S>,
    pub boundary: PolygonBoundary<S>,
}

struct Plane<S> {
    normal: Vec3<S>,
    offset: S,
    centroid: Vec3<S>,
}

/// Groups mesh faces into planar polygons by region growing over face
/// adjacency. Seeds are the lowest-index unassigned faces and growth is
/// breadth-first, so the result is deterministic for a given face order.
pub fn segment_planes<S: Real>(
    mesh: &ProxyMesh<S>,
    params: &SegmentationParams<S>,
) -> Result<Vec<ProxyPolygon<S>>> {
    if params.angle_tol_deg <= S::zero() {
        return Err(Error::Config("angle_tol must be positive".into()));
    }
    let angle_tol = params.angle_tol_deg.to_radians();
    let dist_tol = params
        .dist_tol
        .unwrap_or_else(|| S::lit(1e-4) * mesh.bbox_diag());
    let nf = mesh.faces.len();
    let mut assigned = vec![false; nf];
    let mut polygons = Vec::new();
    for seed in 0..nf {
        if assigned[seed] || mesh.is_degenerate(seed) {
            continue;
        }
        assigned[seed] = true;
        let mut members = vec![seed];
        let mut plane = fit_plane(mesh, &members);
        let mut queue: VecDeque<usize> = mesh.face_neighbors(seed).into();
        while let Some(f) = queue.pop_front() {
            if assigned[f] || mesh.is_degenerate(f) {
                continue;
            }
            if !face_fits(mesh, f, &plane, angle_tol, dist_tol) {
                continue;
            }
            members.push(f);
            let refit = fit_plane(mesh, &members);
            let all_fit = members
                .iter()
                .all(|&m| face_fits(mesh, m, &refit, angle_tol, dist_tol));
            if all_fit {
                assigned[f] = true;
                plane = refit;
                queue.extend(mesh.face_neighbors(f));
            } else {
                members.pop();
            }
        }
        members.sort_unstable();
        let frame = PlaneFrame::new(plane.centroid, plane.normal)?;
        let boundary = boundary_of_faces(mesh, &members, &frame)?;
        polygons.push(ProxyPolygon {
            id: polygons.len(),
            faces: members,
            normal: plane.normal,
            offset: plane.offset,
            frame,
            boundary,
        });
    }
    Ok(polygons)
}

fn face_fits<S: Real>(
    mesh: &ProxyMesh<S>,
    face: usize,
    plane: &Plane<S>,
    angle_tol: S,
    dist_tol: S,
) -> bool {
    let n = mesh.face_normal(face);
    let cos = n.dot(plane.normal).min(S::one()).max(-S::one());
    if cos.acos() > angle_tol {
        return false;
    }
    mesh.faces[face].iter().all(|&vi| {
        (mesh.vertices[vi].dot(plane.normal) - plane.offset).abs() <= dist_tol
    })
}

/// Area-weighted least-squares plane over the member faces' vertices. The
/// normal is the smallest-eigenvalue direction of the weighted covariance,
/// oriented along the area-weighted mean face normal.
fn fit_plane<S: Real>(mesh: &ProxyMesh<S>, members: &[usize]) -> Plane<S> {
    let mut wsum = S::zero();
    let mut c = Vec3::zero();
    for &f in members {
        let w = mesh.face_area(f);
        for &vi in &mesh.faces[f] {
            c = c + mesh.vertices[vi] * w;
            wsum += w;
        }
    }
    c = c / wsum;
    let mut cov = [[0.0f64; 3]; 3];
    for &f in members {
        let w = mesh.face_area(f);
        for &vi in &mesh.faces[f] {
            let d = mesh.vertices[vi] - c;
            let d = [d.x.to_f64_lossy(), d.y.to_f64_lossy(), d.z.to_f64_lossy()];
            let wf = w.to_f64_lossy();
            for r in 0..3 {
                for col in 0..3 {
                    cov[r][col] += wf * d[r] * d[col];
                }
            }
        }
    }
    let m = nalgebra::Matrix3::from_fn(|r, col| cov[r][col]);
    let eig = m.symmetric_eigen();
    let mut k = 0;
    for i in 1..3 {
        if eig.eigenvalues[i] < eig.eigenvalues[k] {
            k = i;
        }
    }
    let ev = eig.eigenvectors.column(k);
    let mut normal = Vec3::new(S::lit(ev[0]), S::lit(ev[1]), S::lit(ev[2])).normalized();
    let mut mean_n = Vec3::zero();
    for &f in members {
        mean_n = mean_n + mesh.face_normal(f) * mesh.face_area(f);
    }
    if normal.dot(mean_n) < S::zero() {
        normal = -normal;
    }
    Plane {
        normal,
        offset: normal.dot(c),
        centroid: c,
    }
}

/// Boundary of a proxy polygon: member-set edges bordering exactly one
/// member face, chained into closed loops and projected into the frame.
pub fn extract_boundary<S: Real>(
    mesh: &ProxyMesh<S>,
    polygon: &ProxyPolygon<S>,
) -> Result<PolygonBoundary<S>> {
    boundary_of_faces(mesh, &polygon.faces, &polygon.frame)
}

fn boundary_of_faces<S: Real>(
    mesh: &ProxyMesh<S>,
    members: &[usize],
    frame: &PlaneFrame<S>,
) -> Result<PolygonBoundary<S>> {
    // Edge multiplicity is counted over member faces only: an edge borders
    // the region exactly when one member face uses it, and non-manifold
    // interior edges (count > 2) never enter the boundary.
    let mut edge_count: std::collections::BTreeMap<(usize, usize), usize> =
        std::collections::BTreeMap::new();
    for &f in members {
        let ring = &mesh.faces[f];
        let n = ring.len();
        for k in 0..n {
            let a = ring[k];
            let b = ring[(k + 1) % n];
            if a == b {
                continue;
            }
            *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut adjacency: std::collections::BTreeMap<usize, Vec<usize>> =
        std::collections::BTreeMap::new();
    let mut boundary_edges: std::collections::BTreeSet<(usize, usize)> =
        std::collections::BTreeSet::new();
    for (&(a, b), &cnt) in &edge_count {
        if cnt == 1 {
            boundary_edges.insert((a, b));
            adjacency.entry(a).or_default().push(b);
            adjacency.entry(b).or_default().push(a);
        }
    }
    for nbrs in adjacency.values_mut() {
        nbrs.sort_unstable();
    }
    let mut used: std::collections::BTreeSet<(usize, usize)> = std::collections::BTreeSet::new();
    let mut loops: Vec<Vec<usize>> = Vec::new();
    for &(start, first) in &boundary_edges {
        if used.contains(&(start, first)) {
            continue;
        }
        let mut ring = vec![start, first];
        used.insert((start, first));
        loop {
            let cur = *ring.last().unwrap();
            if cur == start {
                ring.pop();
                break;
            }
            let next = adjacency
                .get(&cur)
                .and_then(|nbrs| {
                    nbrs.iter()
                        .copied()
                        .find(|&n| !used.contains(&(cur.min(n), cur.max(n))))
                })
                .ok_or_else(|| {
                    Error::Geometry(format!("open boundary chain at vertex {cur}"))
                })?;
            used.insert((cur.min(next), cur.max(next)));
            ring.push(next);
        }
        loops.push(ring);
    }
    if loops.is_empty() {
        return Err(Error::Geometry("member faces have no boundary".into()));
    }
    let projected: Vec<Loop<S>> = loops
        .into_iter()
        .map(|ring| {
            Loop::new(
                ring.into_iter()
                    .map(|vi| frame.project(mesh.vertices[vi]))
                    .collect(),
            )
        })
        .collect::<Result<_>>()?;
    let mut outer_idx = 0;
    let mut best = S::zero();
    for (i, lp) in projected.iter().enumerate() {
        let a = lp.area();
        if a > best {
            best = a;
            outer_idx = i;
        }
    }
    let mut holes = Vec::new();
    let mut outer = None;
    for (i, lp) in projected.into_iter().enumerate() {
        if i == outer_idx {
            outer = Some(lp);
        } else {
            holes.push(lp);
        }
    }
    PolygonBoundary::new(outer.unwrap(), holes)
}
