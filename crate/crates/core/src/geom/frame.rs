use serde::{Deserialize, Serialize};

use crate::err::{Error, Result};
use crate::geom::{Vec2, Vec3};
use crate::scalar::Real;

/// Orthonormal 2D coordinate frame embedded in a 3D plane.
///
/// The u axis is the normalized in-plane projection of the world axis least
/// parallel to the normal, so frames are stable under small normal
/// perturbations. v completes a right-handed basis (u, v, n).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneFrame<S> {
    pub origin: Vec3<S>,
    pub normal: Vec3<S>,
    pub u: Vec3<S>,
    pub v: Vec3<S>,
}

impl<S: Real> PlaneFrame<S> {
    pub fn new(origin: Vec3<S>, normal: Vec3<S>) -> Result<Self> {
        let n_len = normal.norm();
        if n_len <= S::lit(1e-12) {
            return Err(Error::Geometry("plane normal has zero length".into()));
        }
        let n = normal / n_len;
        let axes = [
            Vec3::new(S::one(), S::zero(), S::zero()),
            Vec3::new(S::zero(), S::one(), S::zero()),
            Vec3::new(S::zero(), S::zero(), S::one()),
        ];
        let mut best = axes[0];
        let mut best_dot = S::infinity();
        for axis in axes {
            let d = axis.dot(n).abs();
            if d < best_dot {
                best_dot = d;
                best = axis;
            }
        }
        let u = (best - n * best.dot(n)).normalized();
        let v = n.cross(u);
        Ok(PlaneFrame {
            origin,
            normal: n,
            u,
            v,
        })
    }

    /// In-plane coordinates of a 3D point (drops the out-of-plane component).
    pub fn project(&self, p: Vec3<S>) -> Vec2<S> {
        let d = p - self.origin;
        Vec2::new(d.dot(self.u), d.dot(self.v))
    }

    pub fn lift(&self, p: Vec2<S>) -> Vec3<S> {
        self.origin + self.u * p.x + self.v * p.y
    }

    /// Signed distance of a 3D point from the plane along the normal.
    pub fn height(&self, p: Vec3<S>) -> S {
        (p - self.origin).dot(self.normal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_is_orthonormal_right_handed() {
        let f: PlaneFrame<f64> =
            PlaneFrame::new(Vec3::new(1.0, 2.0, 3.0), Vec3::new(0.3, -0.5, 0.81)).unwrap();
        assert!((f.u.norm() - 1.0).abs() < 1e-12);
        assert!((f.v.norm() - 1.0).abs() < 1e-12);
        assert!(f.u.dot(f.v).abs() < 1e-12);
        assert!(f.u.dot(f.normal).abs() < 1e-12);
        let w = f.u.cross(f.v);
        assert!((w - f.normal).norm() < 1e-12);
    }

    #[test]
    fn round_trip_on_plane() {
        let f: PlaneFrame<f64> =
            PlaneFrame::new(Vec3::new(-2.0, 0.5, 4.0), Vec3::new(1.0, 1.0, 1.0)).unwrap();
        for &(a, b) in &[(0.0, 0.0), (3.5, -1.25), (-7.0, 2.0), (1e3, 1e3)] {
            let p2 = Vec2::new(a, b);
            let p3 = f.lift(p2);
            let back = f.project(p3);
            assert!((back - p2).norm() <= 1e-9);
            assert!((f.lift(back) - p3).norm() <= 1e-9);
        }
    }

    #[test]
    fn u_prefers_axis_least_parallel_to_normal() {
        // Normal near +z: u must come from the x axis (least parallel wins
        // the tie against y by order).
        let f: PlaneFrame<f64> =
            PlaneFrame::new(Vec3::zero(), Vec3::new(0.0, 0.0, 1.0)).unwrap();
        assert!((f.u - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((f.v - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_normal_errors() {
        assert!(PlaneFrame::<f64>::new(Vec3::zero(), Vec3::zero()).is_err());
    }

    #[test]
    fn height_is_signed_normal_offset() {
        let f: PlaneFrame<f64> =
            PlaneFrame::new(Vec3::zero(), Vec3::new(0.0, 0.0, 2.0)).unwrap();
        assert!((f.height(Vec3::new(5.0, -3.0, 4.0)) - 4.0).abs() < 1e-12);
    }
}
