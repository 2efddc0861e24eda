use crate::err::{Error, Result};
use crate::raster::{Mask, Raster};
use crate::Scalar;

pub const INPAINT_SIZE: usize = 512;

/// What it takes to map a backend result back onto the original texture:
/// the content occupies the top-left content_w x content_h of the working
/// square, the rest is padding.
#[derive(Clone, Copy, Debug)]
pub struct RestoreRecipe {
    pub orig_w: usize,
    pub orig_h: usize,
    pub content_w: usize,
    pub content_h: usize,
}

pub fn resize_mask_nearest(src: &Mask, w: usize, h: usize) -> Mask {
    let sx = src.w as Scalar / w as Scalar;
    let sy = src.h as Scalar / h as Scalar;
    Mask::from_fn(w, h, |x, y| {
        let u = (((x as Scalar + 0.5) * sx - 0.5).round() as i64).clamp(0, src.w as i64 - 1);
        let v = (((y as Scalar + 0.5) * sy - 0.5).round() as i64).clamp(0, src.h as i64 - 1);
        src.get(u as usize, v as usize)
    })
}

/// Brings a texture to the backend working size. Small inputs pass through;
/// large missing areas keep aspect ratio (scaled so the larger dimension
/// hits the working size, padded out to a square); everything else is
/// stretched square.
pub fn resize_for_inpaint(image: &Raster, mask: &Mask) -> (Raster, Mask, RestoreRecipe) {
    let (w, h) = (image.w, image.h);
    if w <= INPAINT_SIZE && h <= INPAINT_SIZE {
        return (
            image.clone(),
            mask.clone(),
            RestoreRecipe {
                orig_w: w,
                orig_h: h,
                content_w: w,
                content_h: h,
            },
        );
    }
    let large_mask = mask.count() * 4 >= w * h;
    if large_mask {
        let s = INPAINT_SIZE as Scalar / w.max(h) as Scalar;
        let cw = ((w as Scalar * s).round() as usize).clamp(1, INPAINT_SIZE);
        let ch = ((h as Scalar * s).round() as usize).clamp(1, INPAINT_SIZE);
        let content = image.resize(cw, ch);
        let content_mask = resize_mask_nearest(mask, cw, ch);
        let mut squared = Raster::constant(INPAINT_SIZE, INPAINT_SIZE, [0.0; 3]);
        let mut squared_mask = Mask::new(INPAINT_SIZE, INPAINT_SIZE, false);
        for y in 0..ch {
            for x in 0..cw {
                squared.set(x, y, content.get(x, y));
                squared_mask.set(x, y, content_mask.get(x, y));
            }
        }
        (
            squared,
            squared_mask,
            RestoreRecipe {
                orig_w: w,
                orig_h: h,
                content_w: cw,
                content_h: ch,
            },
        )
    } else {
        (
            image.resize(INPAINT_SIZE, INPAINT_SIZE),
            resize_mask_nearest(mask, INPAINT_SIZE, INPAINT_SIZE),
            RestoreRecipe {
                orig_w: w,
                orig_h: h,
                content_w: INPAINT_SIZE,
                content_h: INPAINT_SIZE,
            },
        )
    }
}

/// Crops the content region out of a backend result and upsamples it back
/// to the original texture dimensions.
pub fn restore_from_inpaint(result: &Raster, recipe: &RestoreRecipe) -> Result<Raster> {
    if result.w < recipe.content_w || result.h < recipe.content_h {
        return Err(Error::Backend(format!(
            "inpaint result {}x{} smaller than expected content {}x{}",
            result.w, result.h, recipe.content_w, recipe.content_h
        )));
    }
    let content = if result.w == recipe.content_w && result.h == recipe.content_h {
        result.clone()
    } else {
        Raster::from_fn(recipe.content_w, recipe.content_h, |x, y| result.get(x, y))
    };
    if recipe.content_w == recipe.orig_w && recipe.content_h == recipe.orig_h {
        return Ok(content);
    }
    Ok(content.resize(recipe.orig_w, recipe.orig_h))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> Raster {
        Raster::from_fn(w, h, |x, y| {
            let u = x as Scalar / (w - 1) as Scalar;
            let v = y as Scalar / (h - 1) as Scalar;
            [u, v, 0.5 * (u + v)]
        })
    }

    #[test]
    fn small_input_passes_through() {
        let img = ramp(512, 300);
        let mask = Mask::from_fn(512, 300, |x, _| x < 40);
        let (ri, rm, recipe) = resize_for_inpaint(&img, &mask);
        assert_eq!((ri.w, ri.h), (512, 300));
        assert_eq!(rm.values(), mask.values());
        assert_eq!((recipe.content_w, recipe.content_h), (512, 300));
        let back = restore_from_inpaint(&ri, &recipe).unwrap();
        assert_eq!(back.pixels(), img.pixels());
    }

    #[test]
    fn large_square_round_trips_smoothly() {
        let img = ramp(1024, 1024);
        let mask = Mask::from_fn(1024, 1024, |x, y| x > 500 && y > 500 && x < 520 && y < 520);
        let (ri, _, recipe) = resize_for_inpaint(&img, &mask);
        assert_eq!((ri.w, ri.h), (512, 512));
        let back = restore_from_inpaint(&ri, &recipe).unwrap();
        assert_eq!((back.w, back.h), (1024, 1024));
        for y in (0..1024).step_by(97) {
            for x in (0..1024).step_by(89) {
                let a = img.get(x, y);
                let b = back.get(x, y);
                for c in 0..3 {
                    assert!(
                        (a[c] - b[c]).abs() <= 1.0 / 255.0,
                        "({x},{y}) ch{c}: {} vs {}",
                        a[c],
                        b[c]
                    );
                }
            }
        }
    }

    #[test]
    fn large_mask_keeps_aspect_and_pads() {
        let img = ramp(800, 400);
        // Over a quarter of the pixels missing flips to the aspect path.
        let mask = Mask::from_fn(800, 400, |x, _| x < 300);
        assert!(mask.count() * 4 >= 800 * 400);
        let (ri, rm, recipe) = resize_for_inpaint(&img, &mask);
        assert_eq!((ri.w, ri.h), (512, 512));
        assert_eq!((recipe.content_w, recipe.content_h), (512, 256));
        // Padding rows carry no mask.
        for y in 256..512 {
            for x in 0..512 {
                assert!(!rm.get(x, y));
            }
        }
        assert!(rm.count() > 0);
        let back = restore_from_inpaint(&ri, &recipe).unwrap();
        assert_eq!((back.w, back.h), (800, 400));
        let a = img.get(400, 200);
        let b = back.get(400, 200);
        for c in 0..3 {
            assert!((a[c] - b[c]).abs() <= 2.0 / 255.0);
        }
    }

    #[test]
    fn undersized_result_is_rejected() {
        let recipe = RestoreRecipe {
            orig_w: 800,
            orig_h: 400,
            content_w: 512,
            content_h: 256,
        };
        let small = Raster::constant(256, 256, [0.0; 3]);
        assert!(restore_from_inpaint(&small, &recipe).is_err());
    }
}
