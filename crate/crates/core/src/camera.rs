//! Calibrated pinhole camera: world-to-camera pose, +z look direction,
//! pixel origin at the center of pixel (0, 0), x right, y down.

use std::sync::Arc;

use crate::err::{Error, Result};
use crate::raster::Raster;
use crate::{P2, P3, Scalar};

#[derive(Clone, Debug)]
pub struct CameraView {
    pub id: usize,
    pub fx: Scalar,
    pub fy: Scalar,
    pub cx: Scalar,
    pub cy: Scalar,
    /// World-to-camera rotation, row-major.
    pub rotation: [[Scalar; 3]; 3],
    pub translation: P3,
    pub width: usize,
    pub height: usize,
    pub image: Arc<Raster>,
}

impl CameraView {
    /// Validates intrinsics and re-orthonormalizes the rotation. Fails if
    /// the orthonormal correction exceeds 1e-3 (Frobenius norm).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: usize,
        fx: Scalar,
        fy: Scalar,
        cx: Scalar,
        cy: Scalar,
        rotation: [[Scalar; 3]; 3],
        translation: P3,
        image: Arc<Raster>,
    ) -> Result<Self> {
        let (width, height) = (image.w, image.h);
        if !(fx > 0.0 && fy > 0.0) {
            return Err(Error::Config(format!("camera {id}: fx, fy must be positive")));
        }
        if !(0.0 <= cx && cx < width as Scalar && 0.0 <= cy && cy < height as Scalar) {
            return Err(Error::Config(format!(
                "camera {id}: principal point ({cx}, {cy}) outside {width}x{height} image"
            )));
        }
        let rotation = orthonormalize(id, rotation)?;
        Ok(CameraView {
            id,
            fx,
            fy,
            cx,
            cy,
            rotation,
            translation,
            width,
            height,
            image,
        })
    }

    /// World point to camera coordinates.
    pub fn to_camera(&self, p: P3) -> P3 {
        let r = &self.rotation;
        P3::new(
            r[0][0] * p.x + r[0][1] * p.y + r[0][2] * p.z + self.translation.x,
            r[1][0] * p.x + r[1][1] * p.y + r[1][2] * p.z + self.translation.y,
            r[2][0] * p.x + r[2][1] * p.y + r[2][2] * p.z + self.translation.z,
        )
    }

    /// Camera-frame direction or point offset to world direction (R^T d).
    pub fn to_world_dir(&self, d: P3) -> P3 {
        let r = &self.rotation;
        P3::new(
            r[0][0] * d.x + r[1][0] * d.y + r[2][0] * d.z,
            r[0][1] * d.x + r[1][1] * d.y + r[2][1] * d.z,
            r[0][2] * d.x + r[1][2] * d.y + r[2][2] * d.z,
        )
    }

    /// Pixel coordinates of a world point, or None when it lies at or behind
    /// the camera plane. The result may fall outside the image.
    pub fn project(&self, p: P3) -> Option<P2> {
        let c = self.to_camera(p);
        if c.z <= 1e-12 {
            return None;
        }
        Some(P2::new(
            self.fx * c.x / c.z + self.cx,
            self.fy * c.y / c.z + self.cy,
        ))
    }

    /// True when (u, v) has full bilinear support in the image.
    pub fn in_frame(&self, uv: P2) -> bool {
        uv.x >= 0.0
            && uv.y >= 0.0
            && uv.x <= (self.width - 1) as Scalar
            && uv.y <= (self.height - 1) as Scalar
    }

    /// Unit world-space direction the camera looks along (+z of the camera
    /// frame).
    pub fn view_direction(&self) -> P3 {
        self.to_world_dir(P3::new(0.0, 0.0, 1.0)).normalized()
    }

    /// Camera center in world coordinates (-R^T t).
    pub fn center(&self) -> P3 {
        -self.to_world_dir(self.translation)
    }

    /// World-space ray from the camera center through pixel (u, v).
    pub fn pixel_ray(&self, uv: P2) -> (P3, P3) {
        let d = P3::new((uv.x - self.cx) / self.fx, (uv.y - self.cy) / self.fy, 1.0);
        (self.center(), self.to_world_dir(d).normalized())
    }

    pub fn sample(&self, uv: P2) -> Option<[f64; 3]> {
        self.image.bilinear(uv.x, uv.y)
    }
}

/// World-to-camera rotation for a camera at `center` looking at `target`.
/// Rows are the camera axes in world coordinates; +z is the look direction
/// and `up` fixes the roll.
pub fn look_at_rotation(center: P3, target: P3, up: P3) -> Result<[[Scalar; 3]; 3]> {
    let f = target - center;
    if f.norm() < 1e-12 {
        return Err(Error::Config("camera target coincides with center".into()));
    }
    let f = f.normalized();
    let x = f.cross(up);
    if x.norm() < 1e-9 {
        return Err(Error::Config("camera up vector parallel to view".into()));
    }
    let x = x.normalized();
    let y = f.cross(x);
    Ok([[x.x, x.y, x.z], [y.x, y.y, y.z], [f.x, f.y, f.z]])
}

/// Translation completing a world-to-camera pose: t = -R c.
pub fn pose_translation(rotation: &[[Scalar; 3]; 3], center: P3) -> P3 {
    let r = rotation;
    P3::new(
        -(r[0][0] * center.x + r[0][1] * center.y + r[0][2] * center.z),
        -(r[1][0] * center.x + r[1][1] * center.y + r[1][2] * center.z),
        -(r[2][0] * center.x + r[2][1] * center.y + r[2][2] * center.z),
    )
}

fn orthonormalize(id: usize, r: [[Scalar; 3]; 3]) -> Result<[[Scalar; 3]; 3]> {
    let m = nalgebra::Matrix3::from_fn(|i, j| r[i][j]);
    let svd = m.svd(true, true);
    let u = svd.u.ok_or_else(|| Error::Numeric("svd failed".into()))?;
    let vt = svd.v_t.ok_or_else(|| Error::Numeric("svd failed".into()))?;
    let mut q = u * vt;
    if q.determinant() < 0.0 {
        let mut u = u;
        for i in 0..3 {
            u[(i, 2)] = -u[(i, 2)];
        }
        q = u * vt;
    }
    let correction = (m - q).norm();
    if correction > 1e-3 {
        return Err(Error::Config(format!(
            "camera {id}: rotation deviates from orthonormal by {correction:.2e}"
        )));
    }
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = q[(i, j)];
        }
    }
    Ok(out)
}

#[cfg(test)]
pub fn test_camera(id: usize, image: Raster) -> CameraView {
    CameraView::new(
        id,
        100.0,
        100.0,
        50.0,
        50.0,
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        P3::zero(),
        Arc::new(image),
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_cam() -> CameraView {
        test_camera(0, Raster::new(101, 101))
    }

    #[test]
    fn projection_convention_vectors() {
        let cam = identity_cam();
        let p = cam.project(P3::new(0.0, 0.0, 5.0)).unwrap();
        assert_eq!((p.x, p.y), (50.0, 50.0));
        let p = cam.project(P3::new(1.0, 0.0, 5.0)).unwrap();
        assert_eq!((p.x, p.y), (70.0, 50.0));
    }

    #[test]
    fn behind_camera_rejected() {
        let cam = identity_cam();
        assert!(cam.project(P3::new(0.0, 0.0, -5.0)).is_none());
        assert!(cam.project(P3::new(0.0, 0.0, 0.0)).is_none());
    }

    #[test]
    fn view_direction_is_plus_z_world_for_identity() {
        let cam = identity_cam();
        assert!((cam.view_direction() - P3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
        assert!(cam.center().norm() < 1e-12);
    }

    #[test]
    fn slightly_noisy_rotation_is_fixed() {
        let mut r = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        r[0][1] = 1e-5;
        let cam = CameraView::new(
            1,
            100.0,
            100.0,
            50.0,
            50.0,
            r,
            P3::zero(),
            Arc::new(Raster::new(101, 101)),
        )
        .unwrap();
        let q = cam.rotation;
        for i in 0..3 {
            let row = P3::new(q[i][0], q[i][1], q[i][2]);
            assert!((row.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn badly_skewed_rotation_errors() {
        let r = [[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let out = CameraView::new(
            1,
            100.0,
            100.0,
            50.0,
            50.0,
            r,
            P3::zero(),
            Arc::new(Raster::new(101, 101)),
        );
        assert!(out.is_err());
    }

    #[test]
    fn look_at_is_proper_rotation_facing_target() {
        let c = P3::new(2.0, -1.0, 3.0);
        let target = P3::new(0.0, 0.0, 0.0);
        let r = look_at_rotation(c, target, P3::new(0.0, 0.0, 1.0)).unwrap();
        let m = nalgebra::Matrix3::from_fn(|i, j| r[i][j]);
        assert!((m.determinant() - 1.0).abs() < 1e-9);
        let cam = CameraView::new(
            3,
            100.0,
            100.0,
            50.0,
            50.0,
            r,
            pose_translation(&r, c),
            Arc::new(Raster::new(101, 101)),
        )
        .unwrap();
        assert!((cam.center() - c).norm() < 1e-9);
        let f = (target - c).normalized();
        assert!((cam.view_direction() - f).norm() < 1e-9);
        let uv = cam.project(target).unwrap();
        assert!((uv - P2::new(50.0, 50.0)).norm() < 1e-9);
    }

    #[test]
    fn pixel_ray_hits_projected_point() {
        let cam = identity_cam();
        let p = P3::new(0.7, -0.4, 3.0);
        let uv = cam.project(p).unwrap();
        let (origin, dir) = cam.pixel_ray(uv);
        let t = (p - origin).dot(dir);
        assert!((origin + dir * t - p).norm() < 1e-9);
    }
}
