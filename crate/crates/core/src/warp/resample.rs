use crate::geom::PolygonBoundary;
use crate::raster::{Mask, Raster};
use crate::warp::energy::WarpField;
use crate::warp::mesh::AdaptiveMesh;
use crate::{P2, Scalar};

/// Rasterizes the deformed triangles over an out_w x out_h grid; each covered
/// pixel maps by barycentric coordinates back to the undeformed mesh and is
/// filled from the sampler there. Pixels outside all deformed triangles, or
/// where the sampler declines, are invalid.
pub fn render_warped(
    mesh: &AdaptiveMesh,
    deformed: &[P2],
    out_w: usize,
    out_h: usize,
    sampler: impl Fn(P2) -> Option<[f64; 3]>,
) -> (Raster, Mask) {
    let mut out = Raster::new(out_w, out_h);
    let mut valid = Mask::new(out_w, out_h, false);
    for &tri in &mesh.triangles {
        let [a, b, c] = tri;
        let (pa, pb, pc) = (deformed[a], deformed[b], deformed[c]);
        let denom = (pb - pa).cross(pc - pa);
        if denom.abs() < 1e-12 {
            continue;
        }
        let min_x = pa.x.min(pb.x).min(pc.x).floor().max(0.0) as usize;
        let max_x = (pa.x.max(pb.x).max(pc.x).ceil() as isize).min(out_w as isize - 1);
        let min_y = pa.y.min(pb.y).min(pc.y).floor().max(0.0) as usize;
        let max_y = (pa.y.max(pb.y).max(pc.y).ceil() as isize).min(out_h as isize - 1);
        if max_x < min_x as isize || max_y < min_y as isize {
            continue;
        }
        for y in min_y..=max_y as usize {
            for x in min_x..=max_x as usize {
                let p = P2::new(x as Scalar, y as Scalar);
                let l0 = (pb - p).cross(pc - p) / denom;
                let l1 = (pc - p).cross(pa - p) / denom;
                let l2 = 1.0 - l0 - l1;
                let eps = 1e-9;
                if l0 < -eps || l1 < -eps || l2 < -eps {
                    continue;
                }
                // Clamp tiny negative weights and renormalize so the mapped
                // point stays inside the original triangle's hull.
                let (c0, c1, c2) = (l0.max(0.0), l1.max(0.0), l2.max(0.0));
                let sum = c0 + c1 + c2;
                let (l0, l1, l2) = (c0 / sum, c1 / sum, c2 / sum);
                let orig = mesh.vertices[a] * l0 + mesh.vertices[b] * l1 + mesh.vertices[c] * l2;
                match sampler(orig) {
                    Some(color) => {
                        out.set(x, y, color);
                        valid.set(x, y, true);
                    }
                    None => {
                        valid.set(x, y, false);
                    }
                }
            }
        }
    }
    (out, valid)
}

fn snap_to_range(v: Scalar, hi: Scalar) -> Scalar {
    // Absorb sub-nanopixel overshoot at the sampling border.
    if v < 0.0 && v > -1e-6 {
        0.0
    } else if v > hi && v < hi + 1e-6 {
        hi
    } else {
        v
    }
}

/// Applies the warp to an image by inverse-mapped per-triangle affine
/// resampling with bilinear interpolation.
pub fn warp_image(image: &Raster, mesh: &AdaptiveMesh, warp: &WarpField) -> (Raster, Mask) {
    let deformed = warp.deformed(mesh);
    render_warped(mesh, &deformed, image.w, image.h, |p| {
        image.bilinear(
            snap_to_range(p.x, image.w as Scalar - 1.0),
            snap_to_range(p.y, image.h as Scalar - 1.0),
        )
    })
}

/// Margin width used when padding: 5% of the boundary bbox diagonal.
pub fn margin_width(boundary: &PolygonBoundary<Scalar>) -> usize {
    (0.05 * boundary.bbox_diag()).round() as usize
}

/// Pads the image by the margin on all sides with edge replication.
/// Geometry moves by +margin in both axes in the padded frame.
pub fn extend_margin(image: &Raster, boundary: &PolygonBoundary<Scalar>) -> (Raster, usize) {
    let n = margin_width(boundary);
    let padded = Raster::from_fn(image.w + 2 * n, image.h + 2 * n, |x, y| {
        let sx = (x as isize - n as isize).clamp(0, image.w as isize - 1) as usize;
        let sy = (y as isize - n as isize).clamp(0, image.h as isize - 1) as usize;
        image.get(sx, sy)
    });
    (padded, n)
}

/// Crops the margin back off; exact inverse of extend_margin for any image
/// whose original size was w x h.
pub fn unpad_margin(padded: &Raster, n: usize, w: usize, h: usize) -> Raster {
    Raster::from_fn(w, h, |x, y| padded.get(x + n, y + n))
}

pub fn unpad_mask(padded: &Mask, n: usize, w: usize, h: usize) -> Mask {
    Mask::from_fn(w, h, |x, y| padded.get(x + n, y + n))
}
