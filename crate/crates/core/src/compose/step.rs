use crate::compose::illum::illumination_adjust;
use crate::compose::poisson::poisson_blend;
use crate::compose::seam::graphcut_seam;
use crate::compose::texture::TextureMap;
use crate::err::{Error, Result};
use crate::raster::Mask;

/// What one compositing step did, for logs and reports.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompositeReport {
    pub overlap_pixels: usize,
    pub blended_pixels: usize,
    pub seam_cost: f64,
    pub fallback_components: usize,
}

/// Merges a newly warped target onto the accumulated texture: brightness
/// of the target is matched to the reference first, a min-cost seam decides
/// ownership of the overlap, and the target's share enters through Poisson
/// blending. The observed mask becomes the union.
pub fn composite_step(
    accumulated: &TextureMap,
    target: &TextureMap,
) -> Result<(TextureMap, CompositeReport)> {
    let (w, h) = (accumulated.raster.w, accumulated.raster.h);
    if target.raster.w != w || target.raster.h != h {
        return Err(Error::Geometry(format!(
            "composite inputs differ in size: {}x{} vs {}x{}",
            w, h, target.raster.w, target.raster.h
        )));
    }
    let mut report = CompositeReport::default();
    let overlap = Mask::from_fn(w, h, |x, y| {
        accumulated.observed.get(x, y) && target.observed.get(x, y)
    });
    report.overlap_pixels = overlap.count();

    if report.overlap_pixels == 0 {
        // Disjoint footprints: plain union, nothing to adjust or blend.
        let mut out = accumulated.clone();
        for y in 0..h {
            for x in 0..w {
                if target.observed.get(x, y) {
                    out.raster.set(x, y, target.raster.get(x, y));
                    out.observed.set(x, y, true);
                    out.set_prov(x, y, target.prov_at(x, y));
                }
            }
        }
        return Ok((out, report));
    }

    let adjusted = illumination_adjust(accumulated, target);
    let seam = graphcut_seam(
        &accumulated.raster,
        &adjusted.raster,
        &accumulated.observed,
        &adjusted.observed,
    )?;
    report.seam_cost = seam.cost;
    report.fallback_components = seam.fallback_components;

    // The target contributes where the seam assigned it the overlap and
    // wherever only it observed.
    let blend = Mask::from_fn(w, h, |x, y| {
        let tar = adjusted.observed.get(x, y);
        let acc = accumulated.observed.get(x, y);
        (tar && !acc) || (tar && acc && seam.use_b.get(x, y))
    });
    report.blended_pixels = blend.count();
    if report.blended_pixels == 0 {
        return Ok((accumulated.clone(), report));
    }
    let out = poisson_blend(accumulated, &adjusted.raster, &adjusted.provenance, &blend)?;
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Loop, PolygonBoundary};
    use crate::raster::{luma_of, Raster};
    use crate::{P2, Scalar};

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

    fn map_of(raster: Raster, observed: Mask, view: u32) -> TextureMap {
        let (w, h) = (raster.w, raster.h);
        let prov = (0..w * h)
            .map(|i| observed.get(i % w, i / w).then_some(view))
            .collect();
        TextureMap::new(raster, observed, prov, boundary(w as f64, h as f64)).unwrap()
    }

    #[test]
    fn disjoint_masks_union_without_blending() {
        let (w, h) = (16, 8);
        let img_a = Raster::constant(w, h, [0.8, 0.1, 0.1]);
        let img_b = Raster::constant(w, h, [0.1, 0.1, 0.8]);
        let acc = map_of(img_a, Mask::from_fn(w, h, |x, _| x < 7), 0);
        let tar = map_of(img_b, Mask::from_fn(w, h, |x, _| x >= 9), 1);
        let (out, rep) = composite_step(&acc, &tar).unwrap();
        assert_eq!(rep.overlap_pixels, 0);
        assert_eq!(rep.blended_pixels, 0);
        for y in 0..h {
            for x in 0..w {
                match x {
                    0..=6 => {
                        assert!(out.observed.get(x, y));
                        assert_eq!(out.prov_at(x, y), Some(0));
                        assert_eq!(out.raster.get(x, y), [0.8, 0.1, 0.1]);
                    }
                    7 | 8 => {
                        assert!(!out.observed.get(x, y));
                        assert_eq!(out.prov_at(x, y), None);
                    }
                    _ => {
                        assert!(out.observed.get(x, y));
                        assert_eq!(out.prov_at(x, y), Some(1));
                        assert_eq!(out.raster.get(x, y), [0.1, 0.1, 0.8]);
                    }
                }
            }
        }
    }

    #[test]
    fn identical_full_overlap_returns_input() {
        let (w, h) = (12, 10);
        let img = Raster::from_fn(w, h, |x, y| {
            [x as f64 / 12.0, y as f64 / 10.0, 0.5]
        });
        let acc = map_of(img.clone(), Mask::new(w, h, true), 0);
        let tar = map_of(img.clone(), Mask::new(w, h, true), 1);
        let (out, rep) = composite_step(&acc, &tar).unwrap();
        // No exclusive side anchors the seam, so the whole overlap stays
        // with the accumulated reference.
        assert_eq!(rep.fallback_components, 1);
        assert_eq!(rep.blended_pixels, 0);
        for y in 0..h {
            for x in 0..w {
                assert_eq!(out.raster.get(x, y), img.get(x, y));
                assert_eq!(out.prov_at(x, y), Some(0));
            }
        }
    }

    #[test]
    fn observed_union_and_provenance_sources() {
        let (w, h) = (24, 10);
        let img_a = Raster::from_fn(w, h, |x, _| {
            let v = 0.3 + 0.4 * ((x % 12) as f64) / 12.0;
            [v, v, v]
        });
        let img_b = img_a.clone();
        let acc = map_of(img_a, Mask::from_fn(w, h, |x, _| x < 16), 3);
        let tar = map_of(img_b, Mask::from_fn(w, h, |x, _| x >= 8), 7);
        let (out, _rep) = composite_step(&acc, &tar).unwrap();
        for y in 0..h {
            for x in 0..w {
                assert!(out.observed.get(x, y));
                let p = out.prov_at(x, y);
                assert!(p == Some(3) || p == Some(7), "({x},{y}) prov {p:?}");
                if x < 8 {
                    assert_eq!(p, Some(3));
                }
                if x >= 16 {
                    assert_eq!(p, Some(7));
                }
            }
        }
    }

    #[test]
    fn seam_jump_beats_naive_overwrite() {
        let (w, h) = (96, 24);
        // Slowly varying periodic content; the target is globally darker.
        let content = |x: usize| 0.45 + 0.25 * ((x % 64) as f64 * std::f64::consts::TAU / 64.0).sin();
        let img_a = Raster::from_fn(w, h, |x, _| {
            let v = content(x) + 0.08;
            [v, v, v]
        });
        let img_b = Raster::from_fn(w, h, |x, _| {
            let v = content(x);
            [v, v, v]
        });
        let acc_mask = Mask::from_fn(w, h, |x, _| x < 2 * w / 3);
        let tar_mask = Mask::from_fn(w, h, |x, _| x >= w / 3);
        let acc = map_of(img_a.clone(), acc_mask, 0);
        let tar = map_of(img_b.clone(), tar_mask.clone(), 1);

        let (out, _rep) = composite_step(&acc, &tar).unwrap();
        let max_jump = |img: &Raster, prov: &dyn Fn(usize, usize) -> u32| {
            let mut m = 0.0f64;
            for y in 0..h {
                for x in 1..w {
                    if prov(x - 1, y) != prov(x, y) {
                        m = m.max((luma_of(img.get(x, y)) - luma_of(img.get(x - 1, y))).abs());
                    }
                }
            }
            m
        };
        // Naive overwrite: target wins wherever observed.
        let naive = Raster::from_fn(w, h, |x, y| {
            if tar_mask.get(x, y) {
                img_b.get(x, y)
            } else {
                img_a.get(x, y)
            }
        });
        let naive_prov = |x: usize, _y: usize| u32::from(tar_mask.get(x, 0));
        let out_prov = |x: usize, y: usize| out.prov_at(x, y).unwrap();
        let naive_jump = max_jump(&naive, &naive_prov);
        let composed_jump = max_jump(&out.raster, &out_prov);
        assert!(
            composed_jump < naive_jump,
            "composed {composed_jump} vs naive {naive_jump}"
        );
    }
}
