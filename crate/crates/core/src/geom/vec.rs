use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// 2D vector / point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2<S> {
    pub x: S,
    pub y: S,
}

/// 3D vector / point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3<S> {
    pub x: S,
    pub y: S,
    pub z: S,
}

impl<S: Real> Vec2<S> {
    pub fn new(x: S, y: S) -> Self {
        Vec2 { x, y }
    }

    pub fn zero() -> Self {
        Vec2 {
            x: S::zero(),
            y: S::zero(),
        }
    }

    pub fn dot(self, o: Self) -> S {
        self.x * o.x + self.y * o.y
    }

    /// z component of the 3D cross product of the two vectors lifted to z=0.
    pub fn cross(self, o: Self) -> S {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> S {
        self.dot(self)
    }

    pub fn norm(self) -> S {
        self.norm_sq().sqrt()
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        Vec2 {
            x: self.x / n,
            y: self.y / n,
        }
    }

    /// Counter-clockwise perpendicular (rotate by +90 degrees).
    pub fn perp(self) -> Self {
        Vec2 {
            x: -self.y,
            y: self.x,
        }
    }

    pub fn dist(self, o: Self) -> S {
        (self - o).norm()
    }

    pub fn rotated(self, angle: S) -> Self {
        let (s, c) = angle.sin_cos();
        Vec2 {
            x: c * self.x - s * self.y,
            y: s * self.x + c * self.y,
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl<S: Real> Vec3<S> {
    pub fn new(x: S, y: S, z: S) -> Self {
        Vec3 { x, y, z }
    }

    pub fn zero() -> Self {
        Vec3 {
            x: S::zero(),
            y: S::zero(),
            z: S::zero(),
        }
    }

    pub fn dot(self, o: Self) -> S {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Vec3 {
            x: self.y * o.z - self.z * o.y,
            y: self.z * o.x - self.x * o.z,
            z: self.x * o.y - self.y * o.x,
        }
    }

    pub fn norm_sq(self) -> S {
        self.dot(self)
    }

    pub fn norm(self) -> S {
        self.norm_sq().sqrt()
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        Vec3 {
            x: self.x / n,
            y: self.y / n,
            z: self.z / n,
        }
    }

    pub fn dist(self, o: Self) -> S {
        (self - o).norm()
    }
}

macro_rules! impl_vec_ops {
    ($t:ident { $($f:ident),+ }) => {
        impl<S: Real> Add for $t<S> {
            type Output = Self;
            fn add(self, o: Self) -> Self {
                $t { $($f: self.$f + o.$f),+ }
            }
        }
        impl<S: Real> Sub for $t<S> {
            type Output = Self;
            fn sub(self, o: Self) -> Self {
                $t { $($f: self.$f - o.$f),+ }
            }
        }
        impl<S: Real> Neg for $t<S> {
            type Output = Self;
            fn neg(self) -> Self {
                $t { $($f: -self.$f),+ }
            }
        }
        impl<S: Real> Mul<S> for $t<S> {
            type Output = Self;
            fn mul(self, k: S) -> Self {
                $t { $($f: self.$f * k),+ }
            }
        }
        impl<S: Real> Div<S> for $t<S> {
            type Output = Self;
            fn div(self, k: S) -> Self {
                $t { $($f: self.$f / k),+ }
            }
        }
        impl<S: Real> AddAssign for $t<S> {
            fn add_assign(&mut self, o: Self) {
                $(self.$f += o.$f;)+
            }
        }
        impl<S: Real> SubAssign for $t<S> {
            fn sub_assign(&mut self, o: Self) {
                $(self.$f -= o.$f;)+
            }
        }
        impl<S: Real> MulAssign<S> for $t<S> {
            fn mul_assign(&mut self, k: S) {
                $(self.$f *= k;)+
            }
        }
        impl<S: Real> DivAssign<S> for $t<S> {
            fn div_assign(&mut self, k: S) {
                $(self.$f /= k;)+
            }
        }
    };
}

impl_vec_ops!(Vec2 { x, y });
impl_vec_ops!(Vec3 { x, y, z });

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_and_perp() {
        let a = Vec2::new(1.0f64, 0.0);
        let b = Vec2::new(0.0, 2.0);
        assert_eq!(a.cross(b), 2.0);
        assert_eq!(a.perp(), Vec2::new(0.0, 1.0));
    }

    #[test]
    fn vec3_cross_right_handed() {
        let x = Vec3::new(1.0f64, 0.0, 0.0);
        let y = Vec3::new(0.0, 1.0, 0.0);
        assert_eq!(x.cross(y), Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn rotation_is_ccw() {
        let v = Vec2::new(1.0f64, 0.0).rotated(std::f64::consts::FRAC_PI_2);
        assert!((v.x).abs() < 1e-12 && (v.y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generic_over_f32() {
        let a = Vec2::new(3.0f32, 4.0);
        assert!((a.norm() - 5.0).abs() < 1e-6);
    }
}
