use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::compose::TextureMap;
use crate::err::{Error, Result};
use crate::geom::{ProxyMesh, ProxyPolygon};
use crate::Scalar;

pub const MANIFEST_NAME: &str = "manifest.json";
pub const MODEL_OBJ: &str = "model.obj";
pub const MODEL_MTL: &str = "model.mtl";

/// One fully processed plane, ready to be written.
#[derive(Clone, Debug)]
pub struct PlaneOutput {
    pub polygon: ProxyPolygon<Scalar>,
    pub texture: TextureMap,
    pub selected_views: Vec<usize>,
    /// Fraction of in-boundary texels no selected view covered, measured
    /// before inpainting.
    pub uncovered_fraction: f64,
    /// Unweighted (alignment, straightness, regularization) totals over
    /// every warp the plane ran.
    pub energy: [Scalar; 3],
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub alignment: f64,
    pub straightness: f64,
    pub regularization: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlaneRecord {
    pub plane_id: usize,
    pub texture: String,
    pub resolution: [usize; 2],
    pub selected_views: Vec<usize>,
    pub uncovered_fraction: f64,
    pub energy: EnergyBreakdown,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputManifest {
    pub mesh: String,
    pub material: String,
    pub planes: Vec<PlaneRecord>,
}

pub fn texture_name(plane_id: usize) -> String {
    format!("plane_{plane_id:03}.png")
}

fn material_name(plane_id: usize) -> String {
    format!("plane_{plane_id:03}")
}

/// Writes every plane texture, a textured OBJ/MTL pair, and a JSON
/// manifest into dir. All paths inside the artifacts are relative to dir,
/// so two runs into different directories stay byte-comparable.
pub fn write_outputs(
    mesh: &ProxyMesh<Scalar>,
    outputs: &[PlaneOutput],
    dir: &Path,
) -> Result<OutputManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut planes = Vec::new();
    for out in outputs {
        let name = texture_name(out.polygon.id);
        out.texture.raster.write_png(&dir.join(&name))?;
        planes.push(PlaneRecord {
            plane_id: out.polygon.id,
            texture: name,
            resolution: [out.texture.raster.w, out.texture.raster.h],
            selected_views: out.selected_views.clone(),
            uncovered_fraction: out.uncovered_fraction,
            energy: EnergyBreakdown {
                alignment: out.energy[0],
                straightness: out.energy[1],
                regularization: out.energy[2],
            },
            seconds: out.seconds,
        });
    }
    write_model(mesh, outputs, dir)?;
    let manifest = OutputManifest {
        mesh: MODEL_OBJ.into(),
        material: MODEL_MTL.into(),
        planes,
    };
    for name in manifest
        .planes
        .iter()
        .map(|p| p.texture.as_str())
        .chain([manifest.mesh.as_str(), manifest.material.as_str()])
    {
        let p = dir.join(name);
        fs::metadata(&p).map_err(|e| Error::io(&p, e))?;
    }
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?;
    fs::write(dir.join(MANIFEST_NAME), json + "\n")
        .map_err(|e| Error::io(dir.join(MANIFEST_NAME), e))?;
    Ok(manifest)
}

/// OBJ with per-plane materials. UVs map each polygon's boundary bounding
/// box onto [0,1]^2; the vt v axis points up while texture rows grow down,
/// hence the flip.
fn write_model(mesh: &ProxyMesh<Scalar>, outputs: &[PlaneOutput], dir: &Path) -> Result<()> {
    let mut obj = format!("mtllib {MODEL_MTL}\n");
    for v in &mesh.vertices {
        obj.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    let mut vts = String::new();
    let mut faces = String::new();
    let mut mtl = String::new();
    let mut assigned = vec![false; mesh.faces.len()];
    let mut vt_count = 0usize;
    let mut textured = String::new();
    for out in outputs {
        let mat = material_name(out.polygon.id);
        mtl.push_str(&format!(
            "newmtl {mat}\nKd 1 1 1\nmap_Kd {}\n\n",
            texture_name(out.polygon.id)
        ));
        textured.push_str(&format!("usemtl {mat}\n"));
        let (lo, hi) = out.polygon.boundary.bbox();
        let span_x = (hi.x - lo.x).max(1e-12);
        let span_y = (hi.y - lo.y).max(1e-12);
        for &fi in &out.polygon.faces {
            assigned[fi] = true;
            textured.push('f');
            for &vi in &mesh.faces[fi] {
                let p = out.polygon.frame.project(mesh.vertices[vi]);
                let u = ((p.x - lo.x) / span_x).clamp(0.0, 1.0);
                let v = 1.0 - ((p.y - lo.y) / span_y).clamp(0.0, 1.0);
                vts.push_str(&format!("vt {u} {v}\n"));
                vt_count += 1;
                textured.push_str(&format!(" {}/{}", vi + 1, vt_count));
            }
            textured.push('\n');
        }
    }
    for (fi, ring) in mesh.faces.iter().enumerate() {
        if assigned[fi] {
            continue;
        }
        faces.push('f');
        for &vi in ring {
            faces.push_str(&format!(" {}", vi + 1));
        }
        faces.push('\n');
    }
    obj.push_str(&vts);
    obj.push_str(&faces);
    obj.push_str(&textured);
    fs::write(dir.join(MODEL_OBJ), obj).map_err(|e| Error::io(dir.join(MODEL_OBJ), e))?;
    fs::write(dir.join(MODEL_MTL), mtl).map_err(|e| Error::io(dir.join(MODEL_MTL), e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{segment_planes, SegmentationParams};
    use crate::raster::{Mask, Raster};
    use crate::P3;

    fn quad_outputs() -> (ProxyMesh<Scalar>, Vec<PlaneOutput>) {
        let mesh = ProxyMesh::new(
            vec![
                P3::new(-1.0, -1.0, 0.0),
                P3::new(1.0, -1.0, 0.0),
                P3::new(1.0, 1.0, 0.0),
                P3::new(-1.0, 1.0, 0.0),
            ],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap();
        let polys = segment_planes(&mesh, &SegmentationParams::default()).unwrap();
        assert_eq!(polys.len(), 1);
        let polygon = polys[0].clone();
        let boundary = polygon.boundary.clone();
        let raster = Raster::from_fn(16, 16, |x, y| [x as f64 / 15.0, y as f64 / 15.0, 0.5]);
        let observed = Mask::new(16, 16, true);
        let prov = vec![Some(7); 16 * 16];
        let texture = TextureMap::new(raster, observed, prov, boundary).unwrap();
        let outputs = vec![PlaneOutput {
            polygon,
            texture,
            selected_views: vec![7, 2],
            uncovered_fraction: 0.125,
            energy: [1.0, 2.0, 3.0],
            seconds: 0.5,
        }];
        (mesh, outputs)
    }

    #[test]
    fn writes_texture_model_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let (mesh, outputs) = quad_outputs();
        let manifest = write_outputs(&mesh, &outputs, dir.path()).unwrap();

        assert!(dir.path().join("plane_000.png").exists());
        let obj = fs::read_to_string(dir.path().join(MODEL_OBJ)).unwrap();
        assert!(obj.contains("mtllib model.mtl"));
        assert!(obj.contains("usemtl plane_000"));
        let mtl = fs::read_to_string(dir.path().join(MODEL_MTL)).unwrap();
        assert!(mtl.contains("map_Kd plane_000.png"));

        for line in obj.lines().filter(|l| l.starts_with("vt ")) {
            let c: Vec<f64> = line[3..]
                .split_whitespace()
                .map(|t| t.parse().unwrap())
                .collect();
            assert!(c.iter().all(|v| (0.0..=1.0).contains(v)), "{line}");
        }
        // The (-1,-1,0) corner is the bbox minimum: u = 0, and v flips to 1.
        assert!(obj.contains("vt 0 1\n"), "{obj}");

        assert_eq!(manifest.planes[0].selected_views, vec![7, 2]);
        assert_eq!(manifest.planes[0].resolution, [16, 16]);
        let parsed: OutputManifest = serde_json::from_str(
            &fs::read_to_string(dir.path().join(MANIFEST_NAME)).unwrap(),
        )
        .unwrap();
        assert_eq!(parsed.planes[0].plane_id, manifest.planes[0].plane_id);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let (mesh, outputs) = quad_outputs();
        write_outputs(&mesh, &outputs, a.path()).unwrap();
        write_outputs(&mesh, &outputs, b.path()).unwrap();
        for name in ["plane_000.png", MODEL_OBJ, MODEL_MTL, MANIFEST_NAME] {
            let fa = fs::read(a.path().join(name)).unwrap();
            let fb = fs::read(b.path().join(name)).unwrap();
            assert_eq!(fa, fb, "{name} differs between runs");
        }
    }
}
