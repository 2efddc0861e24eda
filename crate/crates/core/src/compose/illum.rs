use crate::compose::texture::TextureMap;
use crate::raster::{hsv_to_rgb, rgb_to_hsv, Mask};

const BINS: usize = 256;

fn bin_of(v: f64) -> usize {
    ((v * 255.0).round() as isize).clamp(0, 255) as usize
}

/// Histogram-specification lookup: for each source bin, the smallest target
/// bin whose CDF reaches the source CDF. Non-decreasing by construction.
fn cdf_match_lut(src: &[u64; BINS], dst: &[u64; BINS]) -> [u8; BINS] {
    let total_src: u64 = src.iter().sum();
    let total_dst: u64 = dst.iter().sum();
    let mut lut = [0u8; BINS];
    if total_src == 0 || total_dst == 0 {
        for (i, l) in lut.iter_mut().enumerate() {
            *l = i as u8;
        }
        return lut;
    }
    let mut src_acc = 0u64;
    let mut dst_acc = 0u64;
    let mut j = 0usize;
    for (i, l) in lut.iter_mut().enumerate() {
        src_acc += src[i];
        // Compare CDFs as cross products to stay in integers.
        while j < BINS - 1 && (dst_acc + dst[j]) * total_src < src_acc * total_dst {
            dst_acc += dst[j];
            j += 1;
        }
        *l = j as u8;
    }
    lut
}

/// Transfers the brightness statistics of the reference's overlap region
/// onto the target's non-overlap region by V-channel histogram
/// specification. Hue and saturation are untouched; with no overlap the
/// target is returned as-is.
pub fn illumination_adjust(reference: &TextureMap, target: &TextureMap) -> TextureMap {
    let (w, h) = (target.raster.w, target.raster.h);
    let mut out = target.clone();
    if reference.raster.w != w || reference.raster.h != h {
        return out;
    }
    let overlap = Mask::from_fn(w, h, |x, y| {
        reference.observed.get(x, y) && target.observed.get(x, y)
    });
    let non_overlap = Mask::from_fn(w, h, |x, y| {
        target.observed.get(x, y) && !reference.observed.get(x, y)
    });
    if overlap.count() == 0 || non_overlap.count() == 0 {
        return out;
    }

    let mut src = [0u64; BINS];
    let mut dst = [0u64; BINS];
    for y in 0..h {
        for x in 0..w {
            if non_overlap.get(x, y) {
                let (_, _, v) = rgb_to_hsv(target.raster.get(x, y));
                src[bin_of(v)] += 1;
            }
            if overlap.get(x, y) {
                let (_, _, v) = rgb_to_hsv(reference.raster.get(x, y));
                dst[bin_of(v)] += 1;
            }
        }
    }
    let lut = cdf_match_lut(&src, &dst);
    for y in 0..h {
        for x in 0..w {
            if non_overlap.get(x, y) {
                let (hh, s, v) = rgb_to_hsv(target.raster.get(x, y));
                let nv = lut[bin_of(v)] as f64 / 255.0;
                out.raster.set(x, y, hsv_to_rgb(hh, s, nv));
            }
        }
    }
    out
}
