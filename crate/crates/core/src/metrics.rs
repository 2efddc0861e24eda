//! Structural similarity between rendered textures and references.

use crate::err::{Error, Result};
use crate::raster::{luma_of, Mask, Raster};

const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

fn gaussian_1d() -> [f64; WINDOW] {
    let mut k = [0.0; WINDOW];
    let half = (WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-d * d / (2.0 * SIGMA * SIGMA)).exp();
        sum += *v;
    }
    for v in &mut k {
        *v /= sum;
    }
    k
}

fn check_dims(a: &Raster, b: &Raster) -> Result<()> {
    if a.w != b.w || a.h != b.h {
        return Err(Error::Image(format!(
            "ssim inputs differ: {}x{} vs {}x{}",
            a.w, a.h, b.w, b.h
        )));
    }
    if a.w < WINDOW || a.h < WINDOW {
        return Err(Error::Image(format!(
            "ssim needs at least {WINDOW}x{WINDOW} pixels, got {}x{}",
            a.w, a.h
        )));
    }
    Ok(())
}

/// Local SSIM over every fully interior window position, with an optional
/// gate on the window's center pixel.
fn ssim_windows(a: &Raster, b: &Raster, keep: impl Fn(usize, usize) -> bool) -> Result<f64> {
    check_dims(a, b)?;
    let (w, h) = (a.w, a.h);
    let la: Vec<f64> = a.pixels().iter().map(|p| luma_of(*p)).collect();
    let lb: Vec<f64> = b.pixels().iter().map(|p| luma_of(*p)).collect();
    let k = gaussian_1d();
    let half = WINDOW / 2;
    let mut total = 0.0;
    let mut count = 0usize;
    for cy in half..h - half {
        for cx in half..w - half {
            if !keep(cx, cy) {
                continue;
            }
            let mut ma = 0.0;
            let mut mb = 0.0;
            let mut maa = 0.0;
            let mut mbb = 0.0;
            let mut mab = 0.0;
            for dy in 0..WINDOW {
                let row = (cy + dy - half) * w + cx - half;
                for dx in 0..WINDOW {
                    let wgt = k[dy] * k[dx];
                    let va = la[row + dx];
                    let vb = lb[row + dx];
                    ma += wgt * va;
                    mb += wgt * vb;
                    maa += wgt * va * va;
                    mbb += wgt * vb * vb;
                    mab += wgt * va * vb;
                }
            }
            let var_a = maa - ma * ma;
            let var_b = mbb - mb * mb;
            let cov = mab - ma * mb;
            let l = (2.0 * ma * mb + C1) / (ma * ma + mb * mb + C1);
            let c = (2.0 * cov + C2) / (var_a + var_b + C2);
            total += l * c;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Image(
            "no ssim window positions survive the mask".into(),
        ));
    }
    Ok(total / count as f64)
}

/// Mean local structural similarity; 1 for identical images, negative when
/// structure inverts.
pub fn ssim(a: &Raster, b: &Raster) -> Result<f64> {
    ssim_windows(a, b, |_, _| true)
}

/// SSIM restricted to windows centered on masked pixels.
pub fn ssim_masked(a: &Raster, b: &Raster, mask: &Mask) -> Result<f64> {
    if mask.w != a.w || mask.h != a.h {
        return Err(Error::Image(format!(
            "ssim mask {}x{} does not match image {}x{}",
            mask.w, mask.h, a.w, a.h
        )));
    }
    ssim_windows(a, b, |x, y| mask.get(x, y))
}
