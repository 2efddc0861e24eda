//! Filling the unobserved parts of a stitched texture: a partition plus
//! noise front-end shared by every backend, a line-guided builtin baseline,
//! and a wire client for an external diffusion service.

mod backend;
mod mmni;
mod protocol;
mod resize;

pub use backend::{
    builtin_fill, call_external, directional_fill, InpaintBackend, EXTERNAL_TIMEOUT,
};
pub use mmni::{
    default_part_count, init_multinoise, partition_mask, principal_directions, MaskPartition,
    NoiseSpec, MU_RANGE, SIGMA_RANGE,
};
pub use protocol::{
    decode_image_png, decode_request, encode_image_png, encode_request, InpaintRequest, MAGIC,
};
pub use resize::{resize_for_inpaint, resize_mask_nearest, restore_from_inpaint, RestoreRecipe, INPAINT_SIZE};

use crate::compose::TextureMap;
use crate::err::{Error, Result};
use crate::lines::Lol2Cluster;
use crate::raster::{Mask, Raster};
use crate::{Seg2, P2};

/// Provenance tag for synthesized pixels, outside any view id range.
pub const INPAINT_PROV: u32 = u32::MAX;

/// Pixels to synthesize: inside the polygon but never observed.
pub fn fill_mask(texture: &TextureMap) -> Mask {
    Mask::from_fn(texture.raster.w, texture.raster.h, |x, y| {
        !texture.observed.get(x, y) && texture.boundary.contains(P2::new(x as f64, y as f64))
    })
}

fn principal_or_axes(lol2: &[Lol2Cluster]) -> (P2, P2) {
    principal_directions(lol2).unwrap_or((P2::new(1.0, 0.0), P2::new(0.0, 1.0)))
}

/// Writes a backend's synthesized pixels into the texture under the fill
/// mask; everything else stays bit-identical.
fn apply_fill(texture: &TextureMap, filled: &Raster, fill: &Mask) -> Result<TextureMap> {
    let (w, h) = (texture.raster.w, texture.raster.h);
    if filled.w != w || filled.h != h || fill.w != w || fill.h != h {
        return Err(Error::Geometry(
            "inpaint result does not match the texture dimensions".into(),
        ));
    }
    let mut out = texture.clone();
    for y in 0..h {
        for x in 0..w {
            if fill.get(x, y) {
                let p = filled.get(x, y);
                out.raster
                    .set(x, y, [p[0].clamp(0.0, 1.0), p[1].clamp(0.0, 1.0), p[2].clamp(0.0, 1.0)]);
                out.observed.set(x, y, true);
                out.set_prov(x, y, Some(INPAINT_PROV));
            }
        }
    }
    Ok(out)
}

/// Completes a partially observed texture. The front-end (principal
/// directions, mask partition, seeded multi-noise) runs the same way for
/// every backend; the builtin baseline then fills along the structural
/// directions while the external path ships the request over the wire and
/// applies the returned raster.
pub fn inpaint(
    texture: &TextureMap,
    lol2: &[Lol2Cluster],
    backend: &InpaintBackend,
    seed: u64,
) -> Result<TextureMap> {
    if texture.observed.count() == 0 {
        return Err(Error::Geometry(
            "cannot inpaint a texture with no observed pixels".into(),
        ));
    }
    let fill = fill_mask(texture);
    if fill.count() == 0 {
        return Ok(texture.clone());
    }
    match backend {
        InpaintBackend::Builtin => {
            let (d1, d2) = principal_or_axes(lol2);
            let parts = default_part_count(&fill, d2, lol2);
            let partition = partition_mask(&fill, d2, parts)?;
            // The baseline synthesizer is deterministic and has no use for
            // the noise; drawing it anyway keeps the front-end identical
            // across backends.
            let _ = init_multinoise(&partition, seed)?;
            builtin_fill(texture, &fill, d1, d2)
        }
        InpaintBackend::External { url } => {
            let (image, mask, recipe) = resize_for_inpaint(&texture.raster, &fill);
            if mask.count() == 0 {
                // The fill region vanished at the working size; nothing to
                // send, so the baseline covers it at full resolution.
                let (d1, d2) = principal_or_axes(lol2);
                return builtin_fill(texture, &fill, d1, d2);
            }
            let sx = recipe.content_w as f64 / recipe.orig_w as f64;
            let sy = recipe.content_h as f64 / recipe.orig_h as f64;
            let scaled: Vec<Lol2Cluster> = lol2
                .iter()
                .map(|c| Lol2Cluster {
                    representative: Seg2 {
                        p1: P2::new(c.representative.p1.x * sx, c.representative.p1.y * sy),
                        p2: P2::new(c.representative.p2.x * sx, c.representative.p2.y * sy),
                    },
                    members: c.members.clone(),
                })
                .collect();
            let (_, d2) = principal_or_axes(&scaled);
            let parts = default_part_count(&mask, d2, &scaled);
            let partition = partition_mask(&mask, d2, parts)?;
            let (noise, _spec) = init_multinoise(&partition, seed)?;
            let request = InpaintRequest {
                image,
                mask: mask.clone(),
                noise,
                lines: scaled.iter().map(|c| c.representative).collect(),
                seed,
            };
            let result = call_external(url, &request)?;
            let restored = restore_from_inpaint(&result, &recipe)?;
            apply_fill(texture, &restored, &fill)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Loop, PolygonBoundary};
    use crate::Scalar;

    fn boundary(w: f64, h: f64) -> PolygonBoundary<Scalar> {
        let outer = Loop::new(vec![
            P2::new(-0.5, -0.5),
            P2::new(w - 0.5, -0.5),
            P2::new(w - 0.5, h - 0.5),
            P2::new(-0.5, h - 0.5),
        ])
        .unwrap();
        PolygonBoundary::new(outer, vec![]).unwrap()
    }

    fn striped(w: usize, h: usize, hole: &Mask) -> TextureMap {
        let raster = Raster::from_fn(w, h, |x, y| {
            if hole.get(x, y) {
                [0.0; 3]
            } else {
                let v = 0.2 + 0.1 * (y % 6) as f64;
                [v, v, 1.0 - v]
            }
        });
        let observed = Mask::from_fn(w, h, |x, y| !hole.get(x, y));
        let prov = observed
            .values()
            .iter()
            .map(|&o| if o { Some(0) } else { None })
            .collect();
        TextureMap::new(raster, observed, prov, boundary(w as f64, h as f64)).unwrap()
    }

    #[test]
    fn fully_observed_texture_is_returned_unchanged() {
        let none = Mask::new(30, 20, false);
        let tex = striped(30, 20, &none);
        let out = inpaint(&tex, &[], &InpaintBackend::Builtin, 5).unwrap();
        assert_eq!(out.raster.pixels(), tex.raster.pixels());
        assert_eq!(out.provenance, tex.provenance);
    }

    #[test]
    fn builtin_fills_hole_and_marks_provenance() {
        let hole = Mask::from_fn(30, 20, |x, y| (10..18).contains(&x) && (6..14).contains(&y));
        let tex = striped(30, 20, &hole);
        // No lol2 lines: the axis fallback still continues the stripes.
        let out = inpaint(&tex, &[], &InpaintBackend::Builtin, 5).unwrap();
        for y in 0..20 {
            for x in 0..30 {
                assert!(out.observed.get(x, y), "({x},{y}) still unobserved");
                if hole.get(x, y) {
                    assert_eq!(out.prov_at(x, y), Some(INPAINT_PROV));
                } else {
                    assert_eq!(out.raster.get(x, y), tex.raster.get(x, y));
                    assert_eq!(out.prov_at(x, y), Some(0));
                }
            }
        }
    }

    #[test]
    fn builtin_is_seed_independent_but_defined_for_all_seeds() {
        let hole = Mask::from_fn(24, 24, |x, y| x > 8 && x < 14 && y > 8 && y < 14);
        let tex = striped(24, 24, &hole);
        let a = inpaint(&tex, &[], &InpaintBackend::Builtin, 1).unwrap();
        let b = inpaint(&tex, &[], &InpaintBackend::Builtin, 99).unwrap();
        assert_eq!(a.raster.pixels(), b.raster.pixels());
    }

    #[test]
    fn unobserved_texture_is_rejected() {
        let all = Mask::new(10, 10, true);
        let tex = striped(10, 10, &all);
        let err = inpaint(&tex, &[], &InpaintBackend::Builtin, 0).unwrap_err();
        assert!(err.to_string().contains("no observed"), "{err}");
    }

    #[test]
    fn fill_mask_respects_polygon() {
        // Observed nowhere, but only pixels inside the boundary count; the
        // boundary here excludes the right half of the raster.
        let raster = Raster::constant(20, 10, [0.5; 3]);
        let mut observed = Mask::new(20, 10, false);
        observed.set(2, 2, true);
        let mut prov = vec![None; 200];
        prov[2 * 20 + 2] = Some(4);
        let outer = Loop::new(vec![
            P2::new(-0.5, -0.5),
            P2::new(9.5, -0.5),
            P2::new(9.5, 9.5),
            P2::new(-0.5, 9.5),
        ])
        .unwrap();
        let tex = TextureMap::new(
            raster,
            observed,
            prov,
            PolygonBoundary::new(outer, vec![]).unwrap(),
        )
        .unwrap();
        let fill = fill_mask(&tex);
        for y in 0..10 {
            for x in 0..20 {
                let expect = x < 10 && !(x == 2 && y == 2);
                assert_eq!(fill.get(x, y), expect, "({x},{y})");
            }
        }
    }
}
