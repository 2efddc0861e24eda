use serde::{Deserialize, Serialize};

use crate::err::{Error, Result};
use crate::geom::{Segment2, Vec2};
use crate::scalar::Real;

/// Closed 2D vertex loop. The edge from the last vertex back to the first is
/// implicit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Loop<S> {
    pub vertices: Vec<Vec2<S>>,
}

impl<S: Real> Loop<S> {
    pub fn new(vertices: Vec<Vec2<S>>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Geometry(format!(
                "loop needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        Ok(Loop { vertices })
    }

    /// Signed area, positive for counter-clockwise loops in a y-up frame.
    pub fn signed_area(&self) -> S {
        let n = self.vertices.len();
        let mut acc = S::zero();
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            acc += a.cross(b);
        }
        acc * S::lit(0.5)
    }

    pub fn area(&self) -> S {
        self.signed_area().abs()
    }

    pub fn is_ccw(&self) -> bool {
        self.signed_area() > S::zero()
    }

    pub fn reversed(&self) -> Loop<S> {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Loop { vertices }
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2<S>, Vec2<S>)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn edge_segments(&self) -> Vec<Segment2<S>> {
        self.edges()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| Segment2 { p1: a, p2: b })
            .collect()
    }

    pub fn perimeter(&self) -> S {
        self.edges().map(|(a, b)| a.dist(b)).sum()
    }

    /// Even-odd containment test; points on an edge count as inside.
    pub fn contains(&self, p: Vec2<S>) -> bool {
        let n = self.vertices.len();
        let eps = S::lit(1e-12);
        let mut inside = false;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let d = b - a;
            let len = d.norm();
            if len > S::zero() {
                let t = (p - a).dot(d) / d.norm_sq();
                let t = t.max(S::zero()).min(S::one());
                let closest = a + d * t;
                if p.dist(closest) <= eps.max(len * eps) {
                    return true;
                }
            }
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn bbox(&self) -> (Vec2<S>, Vec2<S>) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    pub fn centroid(&self) -> Vec2<S> {
        // Area-weighted polygon centroid; falls back to vertex mean for
        // degenerate (zero-area) loops.
        let n = self.vertices.len();
        let mut acc = Vec2::zero();
        let mut area2 = S::zero();
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let w = a.cross(b);
            acc += (a + b) * w;
            area2 += w;
        }
        if area2.abs() > S::lit(1e-30) {
            acc / (area2 * S::lit(3.0))
        } else {
            let mut m = Vec2::zero();
            for v in &self.vertices {
                m += *v;
            }
            m / S::from_usize(n).unwrap()
        }
    }
}

/// Planar region bounded by one outer loop and zero or more hole loops.
/// The outer loop is counter-clockwise, holes are clockwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonBoundary<S> {
    pub outer: Loop<S>,
    pub holes: Vec<Loop<S>>,
}

impl<S: Real> PolygonBoundary<S> {
    pub fn new(outer: Loop<S>, holes: Vec<Loop<S>>) -> Result<Self> {
        let outer = if outer.is_ccw() { outer } else { outer.reversed() };
        let holes = holes
            .into_iter()
            .map(|h| if h.is_ccw() { h.reversed() } else { h })
            .collect();
        Ok(PolygonBoundary { outer, holes })
    }

    pub fn area(&self) -> S {
        let mut a = self.outer.area();
        for h in &self.holes {
            a -= h.area();
        }
        a
    }

    pub fn contains(&self, p: Vec2<S>) -> bool {
        if !self.outer.contains(p) {
            return false;
        }
        for h in &self.holes {
            // Hole border itself still belongs to the region.
            if h.contains(p) && !on_loop_edge(h, p) {
                return false;
            }
        }
        true
    }

    pub fn bbox(&self) -> (Vec2<S>, Vec2<S>) {
        self.outer.bbox()
    }

    pub fn bbox_diag(&self) -> S {
        let (lo, hi) = self.bbox();
        lo.dist(hi)
    }

    /// All edges, outer loop first, then holes.
    pub fn all_edge_segments(&self) -> Vec<Segment2<S>> {
        let mut segs = self.outer.edge_segments();
        for h in &self.holes {
            segs.extend(h.edge_segments());
        }
        segs
    }
}

fn on_loop_edge<S: Real>(lp: &Loop<S>, p: Vec2<S>) -> bool {
    let eps = S::lit(1e-12);
    for (a, b) in lp.edges() {
        let d = b - a;
        let len_sq = d.norm_sq();
        if len_sq == S::zero() {
            continue;
        }
        let t = (p - a).dot(d) / len_sq;
        let t = t.max(S::zero()).min(S::one());
        if p.dist(a + d * t) <= eps.max(len_sq.sqrt() * eps) {
            return true;
        }
    }
    false
}
