use std::collections::{BTreeMap, BTreeSet};

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use crate::err::{Error, Result};
use crate::lines::Lol1Line;
use crate::{P2, Scalar, Seg2};

const VERTEX_TOL: Scalar = 1e-6;

/// One input line carried through the triangulation: the vertex ids of its
/// ends, the chain of constrained sub-edges covering it (in order, oriented
/// along the line), and the original unit normal.
#[derive(Clone, Debug)]
pub struct ConstraintChain {
    pub endpoints: (usize, usize),
    pub sub_edges: Vec<(usize, usize)>,
    pub direction: P2,
    pub normal: P2,
}

/// Constrained Delaunay triangulation over the domain rectangle and the
/// line endpoints, with every input line present as constraint edges.
#[derive(Clone, Debug)]
pub struct AdaptiveMesh {
    pub vertices: Vec<P2>,
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<(usize, usize, bool)>,
    pub chains: Vec<ConstraintChain>,
}

impl AdaptiveMesh {
    pub fn signed_area(positions: &[P2], tri: [usize; 3]) -> Scalar {
        let [a, b, c] = tri;
        (positions[b] - positions[a]).cross(positions[c] - positions[a]) * 0.5
    }

    /// Same topology with moved vertices; chain directions and normals are
    /// recomputed from the displaced endpoints.
    pub fn with_positions(&self, positions: Vec<P2>) -> Result<AdaptiveMesh> {
        if positions.len() != self.vertices.len() {
            return Err(Error::Geometry("position count mismatch".into()));
        }
        let mut chains = self.chains.clone();
        for chain in &mut chains {
            let d = positions[chain.endpoints.1] - positions[chain.endpoints.0];
            if d.norm() > 1e-12 {
                chain.direction = d.normalized();
                chain.normal = chain.direction.perp();
            }
        }
        Ok(AdaptiveMesh {
            vertices: positions,
            triangles: self.triangles.clone(),
            edges: self.edges.clone(),
            chains,
        })
    }
}

/// Sub-segment of one input line, tracked by input index while splitting.
#[derive(Clone, Copy, Debug)]
struct Piece {
    seg: Seg2,
    source: usize,
}

fn interior_param(t: Scalar, len: Scalar) -> bool {
    // Strictly inside, at least a vertex tolerance away from either end.
    let margin = (VERTEX_TOL / len).max(1e-12);
    t > margin && t < 1.0 - margin
}

fn split_piece(pieces: &mut Vec<Piece>, idx: usize, p: P2) {
    let piece = pieces[idx];
    if piece.seg.p1.dist(p) <= VERTEX_TOL || piece.seg.p2.dist(p) <= VERTEX_TOL {
        return;
    }
    pieces[idx] = Piece {
        seg: Seg2 {
            p1: piece.seg.p1,
            p2: p,
        },
        source: piece.source,
    };
    pieces.push(Piece {
        seg: Seg2 {
            p1: p,
            p2: piece.seg.p2,
        },
        source: piece.source,
    });
}

/// Splits pieces until no pair properly crosses and no collinear pair
/// overlaps except along shared sub-pieces.
fn presplit(pieces: &mut Vec<Piece>) -> Result<()> {
    for _round in 0..10_000 {
        let mut did_split = false;
        'scan: for i in 0..pieces.len() {
            for j in (i + 1)..pieces.len() {
                let (a, b) = (pieces[i].seg, pieces[j].seg);
                if let Some((t, u)) = a.segment_intersection(&b) {
                    let p = a.point_at(t);
                    let ti = interior_param(t, a.length());
                    let uj = interior_param(u, b.length());
                    if ti || uj {
                        if ti {
                            split_piece(pieces, i, p);
                        }
                        if uj {
                            split_piece(pieces, j, p);
                        }
                        did_split = true;
                        break 'scan;
                    }
                } else if a.acute_angle_to(&b) < 1e-9 {
                    // Parallel: split each at the other's strictly interior
                    // endpoints so overlaps become shared pieces.
                    for p in [b.p1, b.p2] {
                        let t = a.project_param(p);
                        if interior_param(t, a.length()) && a.point_at(t).dist(p) <= 1e-9 {
                            split_piece(pieces, i, p);
                            did_split = true;
                            break 'scan;
                        }
                    }
                    for p in [a.p1, a.p2] {
                        let t = b.project_param(p);
                        if interior_param(t, b.length()) && b.point_at(t).dist(p) <= 1e-9 {
                            split_piece(pieces, j, p);
                            did_split = true;
                            break 'scan;
                        }
                    }
                }
            }
        }
        if !did_split {
            return Ok(());
        }
    }
    Err(Error::Geometry(
        "constraint splitting did not converge".into(),
    ))
}

/// Builds the CDT over the domain corners and all line endpoints; crossing
/// lines are pre-split so every piece survives as a constraint edge.
pub fn build_adaptive_mesh(
    lol1: &[Lol1Line],
    domain_min: P2,
    domain_max: P2,
) -> Result<AdaptiveMesh> {
    if !(domain_max.x > domain_min.x && domain_max.y > domain_min.y) {
        return Err(Error::Geometry(format!(
            "degenerate mesh domain {domain_min:?}..{domain_max:?}"
        )));
    }
    let corners = [
        domain_min,
        P2::new(domain_max.x, domain_min.y),
        domain_max,
        P2::new(domain_min.x, domain_max.y),
    ];
    let mut pieces: Vec<Piece> = lol1
        .iter()
        .enumerate()
        .map(|(i, l)| Piece {
            seg: l.seg,
            source: i,
        })
        .collect();
    presplit(&mut pieces)?;
    // A corner sitting exactly on a piece would make spade split the
    // constraint implicitly; split it ourselves to keep the registry exact.
    for c in corners {
        let mut idx = 0;
        while idx < pieces.len() {
            let s = pieces[idx].seg;
            let t = s.project_param(c);
            if interior_param(t, s.length()) && s.point_at(t).dist(c) <= 1e-9 {
                split_piece(&mut pieces, idx, c);
            }
            idx += 1;
        }
    }

    let mut vertices: Vec<P2> = Vec::new();
    let vertex_of = |vertices: &mut Vec<P2>, p: P2| -> usize {
        for (i, v) in vertices.iter().enumerate() {
            if v.dist(p) <= VERTEX_TOL {
                return i;
            }
        }
        vertices.push(p);
        vertices.len() - 1
    };
    for c in corners {
        vertex_of(&mut vertices, c);
    }
    let mut piece_verts: Vec<(usize, usize, usize)> = Vec::new();
    for piece in &pieces {
        let a = vertex_of(&mut vertices, piece.seg.p1);
        let b = vertex_of(&mut vertices, piece.seg.p2);
        piece_verts.push((a, b, piece.source));
    }

    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> =
        ConstrainedDelaunayTriangulation::new();
    let mut handle_to_idx: BTreeMap<usize, usize> = BTreeMap::new();
    let mut handles = Vec::with_capacity(vertices.len());
    for (i, v) in vertices.iter().enumerate() {
        let h = cdt
            .insert(Point2::new(v.x, v.y))
            .map_err(|e| Error::Geometry(format!("cdt vertex insert: {e:?}")))?;
        handle_to_idx.insert(h.index(), i);
        handles.push(h);
    }
    let mut added: BTreeSet<(usize, usize)> = BTreeSet::new();
    for &(a, b, _) in &piece_verts {
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if added.insert(key) {
            cdt.add_constraint(handles[a], handles[b]);
        }
    }

    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        let vs = face.vertices();
        let mut tri = [0usize; 3];
        for (k, v) in vs.iter().enumerate() {
            tri[k] = handle_to_idx[&v.fix().index()];
        }
        if AdaptiveMesh::signed_area(&vertices, tri) < 0.0 {
            tri.swap(1, 2);
        }
        if AdaptiveMesh::signed_area(&vertices, tri) <= 0.0 {
            return Err(Error::Geometry(format!(
                "degenerate triangle {tri:?} in adaptive mesh"
            )));
        }
        triangles.push(tri);
    }
    triangles.sort();

    let mut edges = Vec::new();
    for e in cdt.undirected_edges() {
        let [va, vb] = e.vertices();
        let a = handle_to_idx[&va.fix().index()];
        let b = handle_to_idx[&vb.fix().index()];
        edges.push((a.min(b), a.max(b), cdt.is_constraint_edge(e.fix())));
    }
    edges.sort();

    let mut chains = Vec::with_capacity(lol1.len());
    for (i, l) in lol1.iter().enumerate() {
        let direction = l.seg.direction();
        let mut subs: Vec<(Scalar, usize, usize)> = piece_verts
            .iter()
            .filter(|&&(_, _, src)| src == i)
            .map(|&(a, b, _)| {
                let (a, b) = if (vertices[b] - vertices[a]).dot(direction) >= 0.0 {
                    (a, b)
                } else {
                    (b, a)
                };
                let mid = (vertices[a] + vertices[b]) * 0.5;
                (l.seg.project_param(mid), a, b)
            })
            .filter(|&(_, a, b)| a != b)
            .collect();
        subs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let sub_edges: Vec<(usize, usize)> = subs.iter().map(|&(_, a, b)| (a, b)).collect();
        let endpoints = match (sub_edges.first(), sub_edges.last()) {
            (Some(&(first, _)), Some(&(_, last))) => (first, last),
            _ => {
                return Err(Error::Geometry(format!(
                    "input line {i} collapsed during meshing"
                )))
            }
        };
        chains.push(ConstraintChain {
            endpoints,
            sub_edges,
            direction,
            normal: direction.perp(),
        });
    }

    let mesh = AdaptiveMesh {
        vertices,
        triangles,
        edges,
        chains,
    };
    for chain in &mesh.chains {
        for &(a, b) in &chain.sub_edges {
            let key = (a.min(b), a.max(b), true);
            if !mesh.edges.contains(&key) {
                return Err(Error::Geometry(format!(
                    "constraint edge {a}-{b} missing from triangulation"
                )));
            }
        }
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lol(x1: f64, y1: f64, x2: f64, y2: f64) -> Lol1Line {
        Lol1Line {
            seg: Seg2::new(P2::new(x1, y1), P2::new(x2, y2)).unwrap(),
            boundary_edge: None,
        }
    }

    fn square() -> (P2, P2) {
        (P2::new(0.0, 0.0), P2::new(100.0, 100.0))
    }

    #[test]
    fn empty_square_gives_two_triangles() {
        let (lo, hi) = square();
        let m = build_adaptive_mesh(&[], lo, hi).unwrap();
        assert_eq!(m.vertices.len(), 4);
        assert_eq!(m.triangles.len(), 2);
        for &tri in &m.triangles {
            assert!(AdaptiveMesh::signed_area(&m.vertices, tri) > 0.0);
        }
    }

    #[test]
    fn corner_diagonal_is_constrained() {
        let (lo, hi) = square();
        let m = build_adaptive_mesh(&[lol(0.0, 0.0, 100.0, 100.0)], lo, hi).unwrap();
        assert_eq!(m.vertices.len(), 4);
        assert_eq!(m.triangles.len(), 2);
        assert_eq!(m.chains.len(), 1);
        let (a, b) = m.chains[0].endpoints;
        assert_eq!(m.chains[0].sub_edges, vec![(a, b)]);
        assert!(m.edges.contains(&(a.min(b), a.max(b), true)));
    }

    #[test]
    fn crossing_segments_split_at_intersection() {
        let (lo, hi) = square();
        let s1 = lol(10.0, 50.0, 90.0, 50.0);
        let s2 = lol(50.0, 10.0, 50.0, 90.0);
        let expect = s1.seg.line_intersection(&s2.seg).unwrap();
        let m = build_adaptive_mesh(&[s1, s2], lo, hi).unwrap();
        let cross = m
            .vertices
            .iter()
            .position(|v| v.dist(expect) < 1e-9)
            .expect("intersection vertex present");
        assert_eq!(m.chains.len(), 2);
        for chain in &m.chains {
            assert_eq!(chain.sub_edges.len(), 2, "{chain:?}");
            assert_eq!(chain.sub_edges[0].1, cross);
            assert_eq!(chain.sub_edges[1].0, cross);
            for &(a, b) in &chain.sub_edges {
                assert!(m.edges.contains(&(a.min(b), a.max(b), true)));
            }
        }
    }

    #[test]
    fn chain_order_follows_direction() {
        let (lo, hi) = square();
        // Three crossers split the horizontal line into four ordered pieces.
        let lines = vec![
            lol(5.0, 40.0, 95.0, 40.0),
            lol(25.0, 10.0, 25.0, 90.0),
            lol(50.0, 10.0, 50.0, 90.0),
            lol(75.0, 10.0, 75.0, 90.0),
        ];
        let m = build_adaptive_mesh(&lines, lo, hi).unwrap();
        let chain = &m.chains[0];
        assert_eq!(chain.sub_edges.len(), 4);
        let mut prev_x = m.vertices[chain.sub_edges[0].0].x;
        for &(a, b) in &chain.sub_edges {
            assert_eq!(m.vertices[a].y, 40.0);
            assert!(m.vertices[a].x >= prev_x);
            assert!(m.vertices[b].x > m.vertices[a].x);
            prev_x = m.vertices[a].x;
        }
        assert_eq!(m.vertices[chain.endpoints.0].x, 5.0);
        assert_eq!(m.vertices[chain.endpoints.1].x, 95.0);
    }

    #[test]
    fn no_duplicate_vertices() {
        let (lo, hi) = square();
        let lines = vec![
            lol(10.0, 10.0, 90.0, 10.0),
            lol(90.0, 10.0, 90.0, 90.0),
            lol(10.0, 10.0 + 2e-7, 50.0, 60.0),
        ];
        let m = build_adaptive_mesh(&lines, lo, hi).unwrap();
        for i in 0..m.vertices.len() {
            for j in (i + 1)..m.vertices.len() {
                assert!(m.vertices[i].dist(m.vertices[j]) > VERTEX_TOL);
            }
        }
    }

    #[test]
    fn collinear_overlap_becomes_shared_pieces() {
        let (lo, hi) = square();
        let lines = vec![lol(10.0, 30.0, 60.0, 30.0), lol(40.0, 30.0, 80.0, 30.0)];
        let m = build_adaptive_mesh(&lines, lo, hi).unwrap();
        for chain in &m.chains {
            for &(a, b) in &chain.sub_edges {
                assert!(m.edges.contains(&(a.min(b), a.max(b), true)));
            }
        }
        // The shared middle stretch appears in both chains.
        let shared: Vec<_> = m.chains[0]
            .sub_edges
            .iter()
            .filter(|e| m.chains[1].sub_edges.contains(e))
            .collect();
        assert_eq!(shared.len(), 1);
    }

    #[test]
    fn with_positions_updates_normals() {
        let (lo, hi) = square();
        let m = build_adaptive_mesh(&[lol(10.0, 50.0, 90.0, 50.0)], lo, hi).unwrap();
        let mut moved = m.vertices.clone();
        let (e1, e2) = m.chains[0].endpoints;
        moved[e2] = P2::new(90.0, 90.0);
        let m2 = m.with_positions(moved).unwrap();
        let d = (m2.vertices[e2] - m2.vertices[e1]).normalized();
        assert!(m2.chains[0].direction.dist(d) < 1e-12);
        assert!((m2.chains[0].normal.dot(d)).abs() < 1e-12);
    }
}
