use serde::{Deserialize, Serialize};

use crate::err::{Error, Result};
use crate::geom::Vec2;
use crate::scalar::Real;

/// Directed 2D line segment with distinct endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment2<S> {
    pub p1: Vec2<S>,
    pub p2: Vec2<S>,
}

impl<S: Real> Segment2<S> {
    pub fn new(p1: Vec2<S>, p2: Vec2<S>) -> Result<Self> {
        if !(p1.is_finite() && p2.is_finite()) {
            return Err(Error::Geometry("segment endpoint not finite".into()));
        }
        if p1 == p2 {
            return Err(Error::Geometry(format!(
                "zero-length segment at ({:?}, {:?})",
                p1.x, p1.y
            )));
        }
        Ok(Segment2 { p1, p2 })
    }

    pub fn length(&self) -> S {
        self.p1.dist(self.p2)
    }

    /// Unit direction from p1 to p2.
    pub fn direction(&self) -> Vec2<S> {
        (self.p2 - self.p1).normalized()
    }

    /// Unit normal (counter-clockwise perpendicular of the direction).
    pub fn normal(&self) -> Vec2<S> {
        self.direction().perp()
    }

    pub fn midpoint(&self) -> Vec2<S> {
        (self.p1 + self.p2) * S::lit(0.5)
    }

    /// Parameter of `p` projected onto the supporting line, with p1 -> 0 and
    /// p2 -> 1.
    pub fn project_param(&self, p: Vec2<S>) -> S {
        let d = self.p2 - self.p1;
        (p - self.p1).dot(d) / d.norm_sq()
    }

    pub fn point_at(&self, t: S) -> Vec2<S> {
        self.p1 + (self.p2 - self.p1) * t
    }

    /// Acute angle between the supporting lines of the two segments, radians
    /// in [0, pi/2].
    pub fn acute_angle_to(&self, other: &Segment2<S>) -> S {
        let d = self.direction().dot(other.direction()).abs();
        d.min(S::one()).acos()
    }

    /// Intersection point of the two supporting lines, if not parallel.
    pub fn line_intersection(&self, other: &Segment2<S>) -> Option<Vec2<S>> {
        let d1 = self.p2 - self.p1;
        let d2 = other.p2 - other.p1;
        let denom = d1.cross(d2);
        if denom.abs() <= S::lit(1e-12) * d1.norm() * d2.norm() {
            return None;
        }
        let t = (other.p1 - self.p1).cross(d2) / denom;
        Some(self.p1 + d1 * t)
    }

    /// Intersection of the two closed segments as parameters (t on self,
    /// u on other), when the segments properly cross or touch.
    pub fn segment_intersection(&self, other: &Segment2<S>) -> Option<(S, S)> {
        let d1 = self.p2 - self.p1;
        let d2 = other.p2 - other.p1;
        let denom = d1.cross(d2);
        if denom.abs() <= S::lit(1e-12) * d1.norm() * d2.norm() {
            return None;
        }
        let t = (other.p1 - self.p1).cross(d2) / denom;
        let u = (other.p1 - self.p1).cross(d1) / denom;
        let eps = S::lit(1e-9);
        if t >= -eps && t <= S::one() + eps && u >= -eps && u <= S::one() + eps {
            Some((t, u))
        } else {
            None
        }
    }
}

/// Perpendicular distance from `p` to the infinite supporting line of `seg`.
pub fn point_line_distance<S: Real>(p: Vec2<S>, seg: &Segment2<S>) -> Result<S> {
    let d = seg.p2 - seg.p1;
    let len = d.norm();
    if len == S::zero() {
        return Err(Error::Geometry("zero-length segment".into()));
    }
    Ok((d.cross(p - seg.p1) / len).abs())
}
