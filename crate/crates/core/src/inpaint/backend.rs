use std::collections::VecDeque;
use std::time::Duration;

use crate::compose::{poisson_blend, TextureMap};
use crate::err::{Error, Result};
use crate::inpaint::protocol::{decode_image_png, encode_request, InpaintRequest};
use crate::inpaint::INPAINT_PROV;
use crate::raster::{Mask, Raster};
use crate::P2;

/// Which engine synthesizes the missing pixels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InpaintBackend {
    Builtin,
    External { url: String },
}

pub const EXTERNAL_TIMEOUT: Duration = Duration::from_secs(120);

/// Ships the request to an inpainting service and decodes the result,
/// enforcing that it comes back at the request's dimensions.
pub fn call_external(url: &str, request: &InpaintRequest) -> Result<Raster> {
    let body = encode_request(request)?;
    let agent = ureq::Agent::config_builder()
        .timeout_global(Some(EXTERNAL_TIMEOUT))
        .build()
        .new_agent();
    let mut response = agent
        .post(url)
        .content_type("application/octet-stream")
        .send(&body[..])
        .map_err(|e| match e {
            ureq::Error::StatusCode(code) => Error::Backend(format!(
                "inpaint service {url} returned status {code}; check the service or switch to the builtin backend"
            )),
            other => Error::Backend(format!(
                "inpaint service {url} unreachable: {other}; check the URL or switch to the builtin backend"
            )),
        })?;
    let bytes = response
        .body_mut()
        .read_to_vec()
        .map_err(|e| Error::Backend(format!("reading inpaint response: {e}")))?;
    let result = decode_image_png(&bytes)?;
    if result.w != request.image.w || result.h != request.image.h {
        return Err(Error::Backend(format!(
            "inpaint service returned {}x{}, expected {}x{}",
            result.w, result.h, request.image.w, request.image.h
        )));
    }
    Ok(result)
}

/// Walks from a pixel in unit steps along dir until an observed pixel or
/// the image edge; returns the step count and color of the hit.
fn ray_hit(
    raster: &Raster,
    observed: &Mask,
    from: (usize, usize),
    dir: P2,
) -> Option<(usize, [f64; 3])> {
    let (x0, y0) = (from.0 as f64, from.1 as f64);
    for k in 1..=(raster.w + raster.h) {
        let x = (x0 + dir.x * k as f64).round();
        let y = (y0 + dir.y * k as f64).round();
        if x < 0.0 || y < 0.0 || x >= raster.w as f64 || y >= raster.h as f64 {
            return None;
        }
        let (xi, yi) = (x as usize, y as usize);
        if observed.get(xi, yi) {
            return Some((k, raster.get(xi, yi)));
        }
    }
    None
}

/// Multi-source BFS from every observed pixel; each unobserved pixel takes
/// the color of its nearest observed one in 4-connected steps.
fn nearest_observed_colors(raster: &Raster, observed: &Mask) -> Raster {
    let (w, h) = (raster.w, raster.h);
    let mut out = raster.clone();
    let mut seen = observed.clone();
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            if observed.get(x, y) {
                queue.push_back((x, y));
            }
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        let color = out.get(x, y);
        for (dx, dy) in [(1isize, 0isize), (-1, 0), (0, 1), (0, -1)] {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            if !seen.get(nx, ny) {
                seen.set(nx, ny, true);
                out.set(nx, ny, color);
                queue.push_back((nx, ny));
            }
        }
    }
    out
}

/// Structure-guided fill: continue observed content along the dominant line
/// direction first, its perpendicular second. A strict nearest hit along d1
/// wins; a d1 distance tie defers to d2 and is only used (forward color) if
/// d2 sees nothing; pixels no ray reaches fall back to the BFS fill.
pub fn directional_fill(texture: &TextureMap, fill: &Mask, d1: P2, d2: P2) -> Raster {
    let raster = &texture.raster;
    let observed = &texture.observed;
    let mut bfs: Option<Raster> = None;
    let mut out = raster.clone();
    for y in 0..raster.h {
        for x in 0..raster.w {
            if !fill.get(x, y) {
                continue;
            }
            let f1 = ray_hit(raster, observed, (x, y), d1);
            let b1 = ray_hit(raster, observed, (x, y), -d1);
            let (primary, tie) = match (f1, b1) {
                (Some((kf, cf)), Some((kb, cb))) => {
                    if kf < kb {
                        (Some(cf), None)
                    } else if kb < kf {
                        (Some(cb), None)
                    } else {
                        (None, Some(cf))
                    }
                }
                (Some((_, c)), None) | (None, Some((_, c))) => (Some(c), None),
                (None, None) => (None, None),
            };
            let color = primary.or_else(|| {
                let f2 = ray_hit(raster, observed, (x, y), d2);
                let b2 = ray_hit(raster, observed, (x, y), -d2);
                match (f2, b2) {
                    (Some((kf, cf)), Some((kb, cb))) => Some(if kb < kf { cb } else { cf }),
                    (Some((_, c)), None) | (None, Some((_, c))) => Some(c),
                    (None, None) => tie,
                }
            });
            let color = color.unwrap_or_else(|| {
                bfs.get_or_insert_with(|| nearest_observed_colors(raster, observed))
                    .get(x, y)
            });
            out.set(x, y, color);
        }
    }
    out
}

/// Directional fill followed by gradient-domain harmonization so the
/// synthesized region meets the observed content without steps.
pub fn builtin_fill(texture: &TextureMap, fill: &Mask, d1: P2, d2: P2) -> Result<TextureMap> {
    let patch = directional_fill(texture, fill, d1, d2);
    let prov = vec![Some(INPAINT_PROV); patch.w * patch.h];
    poisson_blend(texture, &patch, &prov, fill)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Loop, PolygonBoundary};
    use crate::inpaint::protocol::decode_request;
    use crate::raster::Gray;
    use crate::Scalar;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    fn boundary(w: f64, h: f64) -> PolygonBoundary<Scalar> {
        let outer = Loop::new(vec![
            P2::new(0.0, 0.0),
            P2::new(w, 0.0),
            P2::new(w, h),
            P2::new(0.0, h),
        ])
        .unwrap();
        PolygonBoundary::new(outer, vec![]).unwrap()
    }

    fn row_color(y: usize) -> [f64; 3] {
        let v = 0.15 + 0.1 * (y % 8) as f64;
        [v, 1.0 - v, 0.5]
    }

    /// Horizontal stripes with a rectangular hole in the middle.
    fn striped_texture() -> (TextureMap, Mask) {
        let w = 48;
        let h = 40;
        let hole = Mask::from_fn(w, h, |x, y| (16..32).contains(&x) && (12..28).contains(&y));
        let raster = Raster::from_fn(w, h, |x, y| {
            if hole.get(x, y) {
                [0.0; 3]
            } else {
                row_color(y)
            }
        });
        let observed = Mask::from_fn(w, h, |x, y| !hole.get(x, y));
        let prov: Vec<Option<u32>> = observed
            .values()
            .iter()
            .map(|&o| if o { Some(1) } else { None })
            .collect();
        let tex = TextureMap::new(raster, observed, prov, boundary(w as f64, h as f64)).unwrap();
        (tex, hole)
    }

    #[test]
    fn directional_fill_continues_stripes() {
        let (tex, hole) = striped_texture();
        let filled = directional_fill(&tex, &hole, P2::new(1.0, 0.0), P2::new(0.0, 1.0));
        for y in 12..28 {
            for x in 16..32 {
                let got = filled.get(x, y);
                let want = row_color(y);
                for c in 0..3 {
                    assert!(
                        (got[c] - want[c]).abs() <= 1.0 / 255.0,
                        "({x},{y}) ch{c}: {} vs {}",
                        got[c],
                        want[c]
                    );
                }
            }
        }
    }

    #[test]
    fn builtin_fill_marks_and_harmonizes() {
        let (tex, hole) = striped_texture();
        let out = builtin_fill(&tex, &hole, P2::new(1.0, 0.0), P2::new(0.0, 1.0)).unwrap();
        for y in 0..40 {
            for x in 0..48 {
                if hole.get(x, y) {
                    assert!(out.observed.get(x, y));
                    assert_eq!(out.prov_at(x, y), Some(INPAINT_PROV));
                    let got = out.raster.get(x, y);
                    let want = row_color(y);
                    for c in 0..3 {
                        assert!(
                            (got[c] - want[c]).abs() <= 2.0 / 255.0,
                            "({x},{y}) ch{c}: {} vs {}",
                            got[c],
                            want[c]
                        );
                    }
                } else {
                    assert_eq!(out.raster.get(x, y), tex.raster.get(x, y));
                    assert_eq!(out.prov_at(x, y), tex.prov_at(x, y));
                }
            }
        }
    }

    #[test]
    fn isolated_fill_takes_nearest_observed() {
        // Observed pixels only in the top-left corner; rays from the
        // far corner miss everything, so BFS supplies the color.
        let w = 20;
        let h = 20;
        let observed = Mask::from_fn(w, h, |x, y| x < 2 && y < 2);
        let raster = Raster::from_fn(w, h, |x, y| {
            if observed.get(x, y) {
                [0.8, 0.2, 0.4]
            } else {
                [0.0; 3]
            }
        });
        let prov: Vec<Option<u32>> = observed
            .values()
            .iter()
            .map(|&o| if o { Some(3) } else { None })
            .collect();
        let tex = TextureMap::new(raster, observed.clone(), prov, boundary(20.0, 20.0)).unwrap();
        let fill = Mask::from_fn(w, h, |x, y| x == 19 && y == 19);
        let d = std::f64::consts::FRAC_1_SQRT_2;
        // Both diagonals walk off the image before meeting the corner
        // pixels, which sit off the exact diagonal.
        let filled = directional_fill(&tex, &fill, P2::new(d, -d), P2::new(d, d));
        assert_eq!(filled.get(19, 19), [0.8, 0.2, 0.4]);
    }

    fn spawn_server(
        handler: impl Fn(&[u8]) -> (u16, Vec<u8>) + Send + 'static,
    ) -> (String, std::thread::JoinHandle<()>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            let (mut stream, _) = listener.accept().unwrap();
            let mut buf = Vec::new();
            let mut chunk = [0u8; 4096];
            let header_end = loop {
                let n = stream.read(&mut chunk).unwrap();
                buf.extend_from_slice(&chunk[..n]);
                if let Some(p) = buf.windows(4).position(|w| w == b"\r\n\r\n") {
                    break p + 4;
                }
                if n == 0 {
                    return;
                }
            };
            let headers = String::from_utf8_lossy(&buf[..header_end]).to_lowercase();
            let length: usize = headers
                .lines()
                .find_map(|l| l.strip_prefix("content-length:"))
                .unwrap()
                .trim()
                .parse()
                .unwrap();
            while buf.len() < header_end + length {
                let n = stream.read(&mut chunk).unwrap();
                buf.extend_from_slice(&chunk[..n]);
            }
            let (status, body) = handler(&buf[header_end..header_end + length]);
            let reason = if status == 200 { "OK" } else { "Error" };
            let head = format!(
                "HTTP/1.1 {status} {reason}\r\ncontent-length: {}\r\nconnection: close\r\n\r\n",
                body.len()
            );
            stream.write_all(head.as_bytes()).unwrap();
            stream.write_all(&body).unwrap();
        });
        (format!("http://{addr}/inpaint"), handle)
    }

    fn small_request() -> InpaintRequest {
        let image = Raster::from_fn(24, 18, |x, y| {
            [x as f64 / 23.0, y as f64 / 17.0, 0.25]
        });
        let mask = Mask::from_fn(24, 18, |x, y| (8..16).contains(&x) && (6..12).contains(&y));
        InpaintRequest {
            image,
            mask,
            noise: Gray::new(24, 18),
            lines: vec![],
            seed: 11,
        }
    }

    #[test]
    fn external_round_trip_applies_service_result() {
        let (url, handle) = spawn_server(|body| {
            let req = decode_request(body).unwrap();
            let mut img = req.image.clone();
            for y in 0..img.h {
                for x in 0..img.w {
                    if req.mask.get(x, y) {
                        img.set(x, y, [0.0; 3]);
                    }
                }
            }
            (
                200,
                crate::inpaint::protocol::encode_image_png(&img).unwrap(),
            )
        });
        let req = small_request();
        let out = call_external(&url, &req).unwrap();
        handle.join().unwrap();
        assert_eq!((out.w, out.h), (24, 18));
        for y in 0..18 {
            for x in 0..24 {
                let got = out.get(x, y);
                if req.mask.get(x, y) {
                    assert_eq!(got, [0.0; 3], "({x},{y})");
                } else {
                    let want = req.image.get(x, y);
                    for c in 0..3 {
                        assert!((got[c] - want[c]).abs() <= 1.0 / 255.0);
                    }
                }
            }
        }
    }

    #[test]
    fn external_inpaint_completes_texture() {
        let (tex, hole) = striped_texture();
        let (url, handle) = spawn_server(|body| {
            let req = decode_request(body).unwrap();
            let mut img = req.image.clone();
            for y in 0..img.h {
                for x in 0..img.w {
                    if req.mask.get(x, y) {
                        img.set(x, y, [0.0; 3]);
                    }
                }
            }
            (
                200,
                crate::inpaint::protocol::encode_image_png(&img).unwrap(),
            )
        });
        let out = crate::inpaint::inpaint(
            &tex,
            &[],
            &InpaintBackend::External { url },
            17,
        )
        .unwrap();
        handle.join().unwrap();
        for y in 0..40 {
            for x in 0..48 {
                if hole.get(x, y) {
                    assert_eq!(out.raster.get(x, y), [0.0; 3], "({x},{y})");
                    assert!(out.observed.get(x, y));
                    assert_eq!(out.prov_at(x, y), Some(INPAINT_PROV));
                } else {
                    assert_eq!(out.raster.get(x, y), tex.raster.get(x, y));
                    assert_eq!(out.prov_at(x, y), tex.prov_at(x, y));
                }
            }
        }
    }

    #[test]
    fn external_error_status_names_the_fallback() {
        let (url, handle) = spawn_server(|_| (500, b"boom".to_vec()));
        let err = call_external(&url, &small_request()).unwrap_err();
        handle.join().unwrap();
        let msg = err.to_string();
        assert!(msg.contains("500"), "{msg}");
        assert!(msg.contains("builtin"), "{msg}");
    }

    #[test]
    fn external_unreachable_is_reported() {
        // Bind then drop to get a port nothing listens on.
        let port = {
            let l = TcpListener::bind("127.0.0.1:0").unwrap();
            l.local_addr().unwrap().port()
        };
        let err = call_external(
            &format!("http://127.0.0.1:{port}/inpaint"),
            &small_request(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("unreachable"), "{}", err);
    }
}
