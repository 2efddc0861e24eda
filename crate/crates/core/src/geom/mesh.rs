use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::err::{Error, Result};
use crate::geom::Vec3;
use crate::scalar::Real;

/// Non-fatal mesh defects recorded during construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeshWarning {
    /// Face with fewer than 3 distinct vertices or zero area; skipped by
    /// segmentation.
    DegenerateFace { face: usize },
    /// Edge shared by more than two faces.
    NonManifoldEdge { a: usize, b: usize, faces: Vec<usize> },
}

/// Coarse piece-wise-planar mesh: vertex positions plus polygonal face rings.
#[derive(Clone, Debug)]
pub struct ProxyMesh<S> {
    pub vertices: Vec<Vec3<S>>,
    pub faces: Vec<Vec<usize>>,
    pub warnings: Vec<MeshWarning>,
    degenerate: Vec<bool>,
    edge_faces: BTreeMap<(usize, usize), Vec<usize>>,
}

impl<S: Real> ProxyMesh<S> {
    pub fn new(vertices: Vec<Vec3<S>>, faces: Vec<Vec<usize>>) -> Result<Self> {
        for (fi, ring) in faces.iter().enumerate() {
            for &vi in ring {
                if vi >= vertices.len() {
                    return Err(Error::Geometry(format!(
                        "face {fi} references vertex {vi}, mesh has {}",
                        vertices.len()
                    )));
                }
            }
        }
        let mut warnings = Vec::new();
        let mut degenerate = vec![false; faces.len()];
        for (fi, ring) in faces.iter().enumerate() {
            let mut distinct = ring.clone();
            distinct.sort_unstable();
            distinct.dedup();
            let zero_area = face_newell(&vertices, ring).norm() <= S::lit(1e-24);
            if distinct.len() < 3 || zero_area {
                degenerate[fi] = true;
                warnings.push(MeshWarning::DegenerateFace { face: fi });
            }
        }
        let mut edge_faces: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (fi, ring) in faces.iter().enumerate() {
            if degenerate[fi] {
                continue;
            }
            let n = ring.len();
            for k in 0..n {
                let a = ring[k];
                let b = ring[(k + 1) % n];
                if a == b {
                    continue;
                }
                let key = (a.min(b), a.max(b));
                edge_faces.entry(key).or_default().push(fi);
            }
        }
        for (&(a, b), fs) in &edge_faces {
            if fs.len() > 2 {
                warnings.push(MeshWarning::NonManifoldEdge {
                    a,
                    b,
                    faces: fs.clone(),
                });
            }
        }
        Ok(ProxyMesh {
            vertices,
            faces,
            warnings,
            degenerate,
            edge_faces,
        })
    }

    pub fn is_degenerate(&self, face: usize) -> bool {
        self.degenerate[face]
    }

    /// Unit face normal by Newell's method (robust for non-convex rings).
    pub fn face_normal(&self, face: usize) -> Vec3<S> {
        face_newell(&self.vertices, &self.faces[face]).normalized()
    }

    pub fn face_area(&self, face: usize) -> S {
        face_newell(&self.vertices, &self.faces[face]).norm() * S::lit(0.5)
    }

    pub fn face_centroid(&self, face: usize) -> Vec3<S> {
        let ring = &self.faces[face];
        let mut c = Vec3::zero();
        for &vi in ring {
            c = c + self.vertices[vi];
        }
        c / S::from_usize(ring.len()).unwrap()
    }

    /// Indices of non-degenerate faces sharing at least one edge with `face`.
    pub fn face_neighbors(&self, face: usize) -> Vec<usize> {
        let ring = &self.faces[face];
        let n = ring.len();
        let mut out = Vec::new();
        for k in 0..n {
            let a = ring[k];
            let b = ring[(k + 1) % n];
            if a == b {
                continue;
            }
            let key = (a.min(b), a.max(b));
            if let Some(fs) = self.edge_faces.get(&key) {
                for &f in fs {
                    if f != face && !out.contains(&f) {
                        out.push(f);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Faces bordering the undirected edge (a, b).
    pub fn edge_adjacency(&self, a: usize, b: usize) -> &[usize] {
        self.edge_faces
            .get(&(a.min(b), a.max(b)))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    pub fn bbox(&self) -> (Vec3<S>, Vec3<S>) {
        let mut lo = Vec3::new(S::infinity(), S::infinity(), S::infinity());
        let mut hi = Vec3::new(-S::infinity(), -S::infinity(), -S::infinity());
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            lo.z = lo.z.min(v.z);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
            hi.z = hi.z.max(v.z);
        }
        (lo, hi)
    }

    pub fn bbox_diag(&self) -> S {
        let (lo, hi) = self.bbox();
        lo.dist(hi)
    }

    /// Fan triangulation of a face ring, for ray tests and rasterization.
    pub fn face_triangles(&self, face: usize) -> Vec<[usize; 3]> {
        let ring = &self.faces[face];
        (1..ring.len().saturating_sub(1))
            .map(|k| [ring[0], ring[k], ring[k + 1]])
            .collect()
    }
}

fn face_newell<S: Real>(vertices: &[Vec3<S>], ring: &[usize]) -> Vec3<S> {
    let mut n = Vec3::zero();
    let len = ring.len();
    for k in 0..len {
        let a = vertices[ring[k]];
        let b = vertices[ring[(k + 1) % len]];
        n.x += (a.y - b.y) * (a.z + b.z);
        n.y += (a.z - b.z) * (a.x + b.x);
        n.z += (a.x - b.x) * (a.y + b.y);
    }
    n
}

/// Axis-aligned unit cube with 6 quad faces, used across tests.
#[cfg(test)]
pub fn unit_cube() -> ProxyMesh<f64> {
    let vertices = vec![
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(1.0, 1.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
        Vec3::new(1.0, 0.0, 1.0),
        Vec3::new(1.0, 1.0, 1.0),
        Vec3::new(0.0, 1.0, 1.0),
    ];
    let faces = vec![
        vec![0, 3, 2, 1], // z = 0, normal -z
        vec![4, 5, 6, 7], // z = 1, normal +z
        vec![0, 1, 5, 4], // y = 0, normal -y
        vec![2, 3, 7, 6], // y = 1, normal +y
        vec![0, 4, 7, 3], // x = 0, normal -x
        vec![1, 2, 6, 5], // x = 1, normal +x
    ];
    ProxyMesh::new(vertices, faces).unwrap()
}
