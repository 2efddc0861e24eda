use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::camera::CameraView;
use crate::err::{Error, Result};
use crate::geom::ProxyMesh;
use crate::raster::Raster;
use crate::{P2, P3, Scalar, Seg2};

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("")
}

fn parse_num<T: std::str::FromStr>(tok: &str, path: &Path, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(path, line, format!("bad {what} `{tok}`")))
}

fn parse_float(tok: &str, path: &Path, line: usize, what: &str) -> Result<Scalar> {
    let v: Scalar = parse_num(tok, path, line, what)?;
    if !v.is_finite() {
        return Err(Error::parse(path, line, format!("non-finite {what} `{tok}`")));
    }
    Ok(v)
}

/// Wavefront OBJ subset: `v x y z` and polygonal `f i j k...` with 1-based
/// indices; texture and normal sub-indices are ignored, every other
/// directive is skipped.
pub fn load_mesh(path: &Path) -> Result<ProxyMesh<Scalar>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut vertices: Vec<P3> = Vec::new();
    let mut faces: Vec<Vec<usize>> = Vec::new();
    let mut face_lines: Vec<usize> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let ln = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let mut tok = line.split_whitespace();
        match tok.next().unwrap() {
            "v" => {
                let rest: Vec<&str> = tok.collect();
                if rest.len() != 3 {
                    return Err(Error::parse(
                        path,
                        ln,
                        format!("`v` takes 3 coordinates, got {}", rest.len()),
                    ));
                }
                let x = parse_float(rest[0], path, ln, "coordinate")?;
                let y = parse_float(rest[1], path, ln, "coordinate")?;
                let z = parse_float(rest[2], path, ln, "coordinate")?;
                vertices.push(P3::new(x, y, z));
            }
            "f" => {
                let mut ring = Vec::new();
                for t in tok {
                    let first = t.split('/').next().unwrap_or("");
                    let i: usize = parse_num(first, path, ln, "face index")?;
                    if i == 0 {
                        return Err(Error::parse(path, ln, "face index 0; indices start at 1"));
                    }
                    ring.push(i - 1);
                }
                if ring.len() < 3 {
                    return Err(Error::parse(
                        path,
                        ln,
                        format!("face needs at least 3 vertices, got {}", ring.len()),
                    ));
                }
                faces.push(ring);
                face_lines.push(ln);
            }
            _ => {}
        }
    }
    for (ring, &ln) in faces.iter().zip(&face_lines) {
        if let Some(&vi) = ring.iter().find(|&&vi| vi >= vertices.len()) {
            return Err(Error::parse(
                path,
                ln,
                format!("face references vertex {}, file has {}", vi + 1, vertices.len()),
            ));
        }
    }
    ProxyMesh::new(vertices, faces)
}

pub fn write_mesh(mesh: &ProxyMesh<Scalar>, path: &Path) -> Result<()> {
    let mut s = String::new();
    for v in &mesh.vertices {
        s.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for ring in &mesh.faces {
        s.push('f');
        for &vi in ring {
            s.push_str(&format!(" {}", vi + 1));
        }
        s.push('\n');
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

const CAMERA_TOKENS: usize = 20;

/// Cameras from a text file, one per line:
/// `id fx fy cx cy r11 r12 r13 r21 r22 r23 r31 r32 r33 t1 t2 t3 w h image`.
/// Rotation maps world to camera, the camera looks down its +z axis, and
/// pixel (0,0) is the center of the top-left pixel. Relative image paths
/// resolve against the camera file's directory.
pub fn load_cameras(path: &Path) -> Result<Vec<CameraView>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut cams = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let ln = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != CAMERA_TOKENS {
            return Err(Error::parse(
                path,
                ln,
                format!("camera line takes {CAMERA_TOKENS} tokens, got {}", toks.len()),
            ));
        }
        let id: usize = parse_num(toks[0], path, ln, "camera id")?;
        let mut f = [0.0; 16];
        for (slot, tok) in f.iter_mut().zip(&toks[1..17]) {
            *slot = parse_float(tok, path, ln, "camera parameter")?;
        }
        let w: usize = parse_num(toks[17], path, ln, "image width")?;
        let h: usize = parse_num(toks[18], path, ln, "image height")?;
        let img_path = if Path::new(toks[19]).is_absolute() {
            PathBuf::from(toks[19])
        } else {
            base.join(toks[19])
        };
        fs::metadata(&img_path).map_err(|e| Error::io(&img_path, e))?;
        let image = Raster::read_png(&img_path)?;
        if image.w != w || image.h != h {
            return Err(Error::parse(
                path,
                ln,
                format!(
                    "image {} is {}x{}, line says {w}x{h}",
                    img_path.display(),
                    image.w,
                    image.h
                ),
            ));
        }
        let rotation = [
            [f[4], f[5], f[6]],
            [f[7], f[8], f[9]],
            [f[10], f[11], f[12]],
        ];
        let translation = P3::new(f[13], f[14], f[15]);
        cams.push(CameraView::new(
            id,
            f[0],
            f[1],
            f[2],
            f[3],
            rotation,
            translation,
            Arc::new(image),
        )?);
    }
    Ok(cams)
}

/// Writes cameras in the load_cameras format; image_paths are stored
/// verbatim, so pass them relative to the file's destination directory.
pub fn write_cameras(cams: &[CameraView], image_paths: &[String], path: &Path) -> Result<()> {
    if cams.len() != image_paths.len() {
        return Err(Error::Config(format!(
            "{} cameras but {} image paths",
            cams.len(),
            image_paths.len()
        )));
    }
    let mut s =
        String::from("# id fx fy cx cy r11 r12 r13 r21 r22 r23 r31 r32 r33 t1 t2 t3 w h image\n");
    for (cam, img) in cams.iter().zip(image_paths) {
        let r = &cam.rotation;
        let t = &cam.translation;
        s.push_str(&format!(
            "{} {} {} {} {} {} {} {} {} {} {} {} {} {} {} {} {} {} {} {}\n",
            cam.id,
            cam.fx,
            cam.fy,
            cam.cx,
            cam.cy,
            r[0][0],
            r[0][1],
            r[0][2],
            r[1][0],
            r[1][1],
            r[1][2],
            r[2][0],
            r[2][1],
            r[2][2],
            t.x,
            t.y,
            t.z,
            cam.width,
            cam.height,
            img
        ));
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Detected 2D segments from a text file, one `x1 y1 x2 y2` per line.
pub fn load_segments(path: &Path) -> Result<Vec<Seg2>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut segs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let ln = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(Error::parse(
                path,
                ln,
                format!("segment line takes 4 numbers, got {}", toks.len()),
            ));
        }
        let mut c = [0.0; 4];
        for (slot, tok) in c.iter_mut().zip(&toks) {
            *slot = parse_float(tok, path, ln, "segment coordinate")?;
        }
        let seg = Seg2::new(P2::new(c[0], c[1]), P2::new(c[2], c[3]))
            .map_err(|e| Error::parse(path, ln, e.to_string()))?;
        segs.push(seg);
    }
    Ok(segs)
}
