use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{look_at_rotation, pose_translation, CameraView};
use crate::err::{Error, Result};
use crate::geom::ProxyMesh;
use crate::raster::Raster;
use crate::view::SampleGrid;
use crate::{P2, P3, Scalar};

/// Color rendered where a view ray misses the plane.
pub const BACKDROP: [f64; 3] = [0.03, 0.03, 0.05];

/// Image fraction the plane's largest dimension occupies; the focal length
/// is derived per camera from this and its distance.
const FILL: f64 = 0.8;

/// Facade texture: a line grid with optional soft blob occluders.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridTexture {
    pub resolution: usize,
    pub spacing: f64,
    pub width: f64,
    pub background: [f64; 3],
    pub line_color: [f64; 3],
    #[serde(default)]
    pub blob_count: usize,
    #[serde(default = "default_blob_color")]
    pub blob_color: [f64; 3],
}

fn default_blob_color() -> [f64; 3] {
    [0.35, 0.2, 0.15]
}

/// Cameras spread on a circle in front of the plane, all aimed near its
/// center.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraRing {
    pub count: usize,
    pub radius: f64,
    /// Distance from the plane along its normal.
    pub elevation: f64,
    /// Std of the look-at target offset, world units.
    pub jitter: f64,
    pub image_size: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseNoise {
    pub rotation_deg_std: f64,
    pub translation_std: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub texture: GridTexture,
    pub plane_width: f64,
    pub plane_height: f64,
    pub ring: CameraRing,
    pub noise: PoseNoise,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            texture: GridTexture {
                resolution: 512,
                spacing: 64.0,
                width: 6.0,
                background: [0.82, 0.8, 0.76],
                line_color: [0.12, 0.1, 0.1],
                blob_count: 3,
                blob_color: default_blob_color(),
            },
            plane_width: 2.0,
            plane_height: 2.0,
            ring: CameraRing {
                count: 4,
                radius: 0.6,
                elevation: 4.0,
                jitter: 0.05,
                image_size: 512,
            },
            noise: PoseNoise {
                rotation_deg_std: 1.0,
                translation_std: 0.02,
            },
            seed: 7,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let t = &self.texture;
        if !(t.spacing > t.width && t.width > 0.0) {
            return Err(Error::Config(
                "texture grid needs spacing > width > 0".into(),
            ));
        }
        if t.resolution < 32 {
            return Err(Error::Config("texture resolution below 32".into()));
        }
        for c in [t.background, t.line_color, t.blob_color] {
            if c.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Config("texture colors must lie in [0,1]".into()));
            }
        }
        if !(self.plane_width > 0.0 && self.plane_height > 0.0) {
            return Err(Error::Config("plane dimensions must be positive".into()));
        }
        if self.ring.count == 0 {
            return Err(Error::Config("camera ring needs at least one view".into()));
        }
        if self.ring.image_size < 32 {
            return Err(Error::Config("camera image size below 32".into()));
        }
        if !(self.ring.radius >= 0.0 && self.ring.jitter >= 0.0) {
            return Err(Error::Config("ring radius and jitter must be >= 0".into()));
        }
        if !(self.noise.rotation_deg_std >= 0.0 && self.noise.translation_std >= 0.0) {
            return Err(Error::Config("pose noise stds must be >= 0".into()));
        }
        Ok(())
    }
}

/// A generated scene: one planar quad, its exact texture, the cameras that
/// rendered the images, and the same cameras with pose noise applied.
/// Images always correspond to the true poses.
#[derive(Clone, Debug)]
pub struct Scene {
    pub spec: SceneSpec,
    pub mesh: ProxyMesh<Scalar>,
    pub texture: Raster,
    pub true_cameras: Vec<CameraView>,
    pub noisy_cameras: Vec<CameraView>,
}

impl Scene {
    /// Ground-truth color at plane frame coordinates; None off the plane.
    pub fn texture_at(&self, p: P2) -> Option<[f64; 3]> {
        let (tx, ty) = self.frame_to_texture(p);
        self.texture.bilinear(tx, ty)
    }

    fn frame_to_texture(&self, p: P2) -> (f64, f64) {
        let r = (self.spec.texture.resolution - 1) as f64;
        (
            (p.x + self.spec.plane_width * 0.5) / self.spec.plane_width * r,
            (p.y + self.spec.plane_height * 0.5) / self.spec.plane_height * r,
        )
    }

    /// Ground truth resampled at the nodes of a sample grid over the plane,
    /// directly comparable with a stitched texture on that grid.
    pub fn truth_on_grid(&self, grid: &SampleGrid) -> Raster {
        Raster::from_fn(grid.nx, grid.ny, |ix, iy| {
            self.texture_at(grid.node(ix, iy))
                .unwrap_or(self.spec.texture.background)
        })
    }
}

fn band_coverage(t: f64, spacing: f64, width: f64) -> f64 {
    let d = (t / spacing - (t / spacing).round()).abs() * spacing;
    (width * 0.5 + 0.5 - d).clamp(0.0, 1.0)
}

fn lerp3(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [
        a[0] + (b[0] - a[0]) * t,
        a[1] + (b[1] - a[1]) * t,
        a[2] + (b[2] - a[2]) * t,
    ]
}

fn render_texture(spec: &GridTexture, rng: &mut ChaCha8Rng) -> Raster {
    let r = spec.resolution;
    let mut img = Raster::from_fn(r, r, |x, y| {
        let cov = band_coverage(x as f64, spec.spacing, spec.width)
            .max(band_coverage(y as f64, spec.spacing, spec.width));
        lerp3(spec.background, spec.line_color, cov)
    });
    let max_r = (r as f64 / 10.0).max(4.0);
    let min_r = (r as f64 / 32.0).max(2.0);
    for _ in 0..spec.blob_count {
        let cx = rng.random_range(0.0..r as f64);
        let cy = rng.random_range(0.0..r as f64);
        let rad = rng.random_range(min_r..max_r);
        let x0 = ((cx - rad - 1.0).floor().max(0.0)) as usize;
        let y0 = ((cy - rad - 1.0).floor().max(0.0)) as usize;
        let x1 = ((cx + rad + 1.0).ceil() as usize).min(r - 1);
        let y1 = ((cy + rad + 1.0).ceil() as usize).min(r - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                let cov = (rad + 0.5 - d).clamp(0.0, 1.0);
                if cov > 0.0 {
                    img.set(x, y, lerp3(img.get(x, y), spec.blob_color, cov));
                }
            }
        }
    }
    img
}

fn rodrigues(axis: P3, angle: f64) -> [[f64; 3]; 3] {
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    let (x, y, z) = (axis.x, axis.y, axis.z);
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

fn mat_mul(a: [[f64; 3]; 3], b: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

fn random_unit(rng: &mut ChaCha8Rng) -> P3 {
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    loop {
        let v = P3::new(n.sample(rng), n.sample(rng), n.sample(rng));
        let len = v.norm();
        if len > 1e-6 {
            return v / len;
        }
    }
}

/// Renders what the camera sees: rays through every pixel intersected with
/// the z = 0 plane, texture sampled bilinearly, backdrop elsewhere.
fn render_view(cam: &CameraView, scene_texture: &Raster, pw: f64, ph: f64) -> Raster {
    let (w, h) = (cam.width, cam.height);
    let r = (scene_texture.w - 1) as f64;
    let rows: Vec<Vec<[f64; 3]>> = (0..h)
        .into_par_iter()
        .map(|v| {
            (0..w)
                .map(|u| {
                    let (o, d) = cam.pixel_ray(P2::new(u as f64, v as f64));
                    if d.z.abs() < 1e-12 {
                        return BACKDROP;
                    }
                    let t = -o.z / d.z;
                    if t <= 1e-9 {
                        return BACKDROP;
                    }
                    let p = o + d * t;
                    let tx = (p.x + pw * 0.5) / pw * r;
                    let ty = (p.y + ph * 0.5) / ph * r;
                    scene_texture.bilinear(tx, ty).unwrap_or(BACKDROP)
                })
                .collect()
        })
        .collect();
    let mut out = Raster::new(w, h);
    for (v, row) in rows.into_iter().enumerate() {
        for (u, px) in row.into_iter().enumerate() {
            out.set(u, v, px);
        }
    }
    out
}

fn perturb_camera(
    cam: &CameraView,
    noise: &PoseNoise,
    rng: &mut ChaCha8Rng,
) -> Result<CameraView> {
    if noise.rotation_deg_std == 0.0 && noise.translation_std == 0.0 {
        return Ok(cam.clone());
    }
    let rot = Normal::new(0.0, noise.rotation_deg_std.to_radians())
        .map_err(|e| Error::Config(format!("rotation noise: {e}")))?;
    let trans = Normal::new(0.0, noise.translation_std)
        .map_err(|e| Error::Config(format!("translation noise: {e}")))?;
    let axis = random_unit(rng);
    let delta = rodrigues(axis, rot.sample(rng));
    let rotation = mat_mul(delta, cam.rotation);
    let center = cam.center()
        + P3::new(trans.sample(rng), trans.sample(rng), trans.sample(rng));
    CameraView::new(
        cam.id,
        cam.fx,
        cam.fy,
        cam.cx,
        cam.cy,
        rotation,
        pose_translation(&rotation, center),
        cam.image.clone(),
    )
}

/// Builds the quad mesh, texture, ring cameras and their rendered views,
/// then derives the noisy camera set. Fully determined by the seed.
pub fn generate_scene(spec: &SceneSpec, seed: u64) -> Result<Scene> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let texture = render_texture(&spec.texture, &mut rng);
    let (hw, hh) = (spec.plane_width * 0.5, spec.plane_height * 0.5);
    let mesh = ProxyMesh::new(
        vec![
            P3::new(-hw, -hh, 0.0),
            P3::new(hw, -hh, 0.0),
            P3::new(hw, hh, 0.0),
            P3::new(-hw, hh, 0.0),
        ],
        vec![vec![0, 1, 2, 3]],
    )?;

    let size = spec.ring.image_size;
    let c_px = (size - 1) as f64 * 0.5;
    let max_dim = spec.plane_width.max(spec.plane_height);
    let jitter = Normal::new(0.0, spec.ring.jitter)
        .map_err(|e| Error::Config(format!("look-at jitter: {e}")))?;
    let mut true_cameras = Vec::with_capacity(spec.ring.count);
    for i in 0..spec.ring.count {
        let theta = std::f64::consts::TAU * i as f64 / spec.ring.count as f64;
        let center = P3::new(
            spec.ring.radius * theta.cos(),
            spec.ring.radius * theta.sin(),
            spec.ring.elevation,
        );
        if center.z <= 0.0 {
            return Err(Error::Config(format!(
                "camera {i} sits behind the plane (elevation {})",
                spec.ring.elevation
            )));
        }
        let target = P3::new(jitter.sample(&mut rng), jitter.sample(&mut rng), 0.0);
        let rotation = look_at_rotation(center, target, P3::new(0.0, 1.0, 0.0))?;
        let focal = FILL * size as f64 * center.norm() / max_dim;
        let blank = CameraView::new(
            i,
            focal,
            focal,
            c_px,
            c_px,
            rotation,
            pose_translation(&rotation, center),
            Arc::new(Raster::new(size, size)),
        )?;
        let image = render_view(&blank, &texture, spec.plane_width, spec.plane_height);
        true_cameras.push(CameraView::new(
            i,
            focal,
            focal,
            c_px,
            c_px,
            rotation,
            pose_translation(&rotation, center),
            Arc::new(image),
        )?);
    }

    let noisy_cameras = true_cameras
        .iter()
        .map(|cam| perturb_camera(cam, &spec.noise, &mut rng))
        .collect::<Result<Vec<_>>>()?;

    Ok(Scene {
        spec: spec.clone(),
        mesh,
        texture,
        true_cameras,
        noisy_cameras,
    })
}
