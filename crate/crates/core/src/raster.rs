//! Dense image buffers with float channels, plus the sampling, gradient and
//! color-space helpers shared by the pipeline stages.

use std::path::Path;

use crate::err::{Error, Result};

/// RGB image, channels in [0, 1], row-major. Pixel (0, 0) is the top-left
/// sample and integer coordinates address pixel centers.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    pub w: usize,
    pub h: usize,
    data: Vec<[f64; 3]>,
}

impl Raster {
    pub fn new(w: usize, h: usize) -> Self {
        Raster {
            w,
            h,
            data: vec![[0.0; 3]; w * h],
        }
    }

    pub fn from_fn(w: usize, h: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Self {
        let mut r = Raster::new(w, h);
        for y in 0..h {
            for x in 0..w {
                r.data[y * w + x] = f(x, y);
            }
        }
        r
    }

    pub fn constant(w: usize, h: usize, value: [f64; 3]) -> Self {
        Raster {
            w,
            h,
            data: vec![value; w * h],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.data[y * self.w + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: [f64; 3]) {
        self.data[y * self.w + x] = v;
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [[f64; 3]] {
        &mut self.data
    }

    /// Bilinear sample at sub-pixel coordinates; None outside the bilinear
    /// support [0, w-1] x [0, h-1].
    pub fn bilinear(&self, x: f64, y: f64) -> Option<[f64; 3]> {
        if !(x.is_finite() && y.is_finite()) {
            return None;
        }
        if x < 0.0 || y < 0.0 || x > (self.w - 1) as f64 || y > (self.h - 1) as f64 {
            return None;
        }
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.w - 1);
        let y1 = (y0 + 1).min(self.h - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let p00 = self.get(x0, y0);
        let p10 = self.get(x1, y0);
        let p01 = self.get(x0, y1);
        let p11 = self.get(x1, y1);
        let mut out = [0.0; 3];
        for c in 0..3 {
            let top = p00[c] * (1.0 - fx) + p10[c] * fx;
            let bot = p01[c] * (1.0 - fx) + p11[c] * fx;
            out[c] = top * (1.0 - fy) + bot * fy;
        }
        Some(out)
    }

    pub fn luma(&self) -> Gray {
        Gray {
            w: self.w,
            h: self.h,
            data: self.data.iter().map(|p| luma_of(*p)).collect(),
        }
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        let mut img = image::RgbImage::new(self.w as u32, self.h as u32);
        for y in 0..self.h {
            for x in 0..self.w {
                let p = self.get(x, y);
                img.put_pixel(
                    x as u32,
                    y as u32,
                    image::Rgb([to_u8(p[0]), to_u8(p[1]), to_u8(p[2])]),
                );
            }
        }
        img.save(path)
            .map_err(|e| Error::Image(format!("writing {}: {e}", path.display())))
    }

    pub fn read_png(path: &Path) -> Result<Raster> {
        let img = image::open(path)
            .map_err(|e| Error::Image(format!("reading {}: {e}", path.display())))?
            .to_rgb8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        let mut r = Raster::new(w, h);
        for y in 0..h {
            for x in 0..w {
                let p = img.get_pixel(x as u32, y as u32);
                r.set(
                    x,
                    y,
                    [
                        p[0] as f64 / 255.0,
                        p[1] as f64 / 255.0,
                        p[2] as f64 / 255.0,
                    ],
                );
            }
        }
        Ok(r)
    }

    /// Bilinear resample to a new size, pixel centers aligned by the
    /// half-pixel convention.
    pub fn resize(&self, nw: usize, nh: usize) -> Raster {
        let sx = self.w as f64 / nw as f64;
        let sy = self.h as f64 / nh as f64;
        Raster::from_fn(nw, nh, |x, y| {
            let u = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (self.w - 1) as f64);
            let v = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (self.h - 1) as f64);
            self.bilinear(u, v).unwrap()
        })
    }
}

/// Single-channel float image.
#[derive(Clone, Debug, PartialEq)]
pub struct Gray {
    pub w: usize,
    pub h: usize,
    data: Vec<f64>,
}

impl Gray {
    pub fn new(w: usize, h: usize) -> Self {
        Gray {
            w,
            h,
            data: vec![0.0; w * h],
        }
    }

    pub fn from_fn(w: usize, h: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut g = Gray::new(w, h);
        for y in 0..h {
            for x in 0..w {
                g.data[y * w + x] = f(x, y);
            }
        }
        g
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.w + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.w + x] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    /// Clamped fetch, replicating edge pixels.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.w as isize - 1) as usize;
        let cy = y.clamp(0, self.h as isize - 1) as usize;
        self.get(cx, cy)
    }

    /// Sobel gradient magnitude normalized by 1/8, so a linear ramp of slope
    /// s per pixel reads back s.
    pub fn sobel_magnitude(&self) -> Gray {
        let mut out = Gray::new(self.w, self.h);
        for y in 0..self.h as isize {
            for x in 0..self.w as isize {
                let p = |dx: isize, dy: isize| self.get_clamped(x + dx, y + dy);
                let gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1))
                    - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
                let gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1))
                    - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
                out.set(x as usize, y as usize, (gx * gx + gy * gy).sqrt() / 8.0);
            }
        }
        out
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

/// Boolean pixel grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    pub w: usize,
    pub h: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(w: usize, h: usize, value: bool) -> Self {
        Mask {
            w,
            h,
            data: vec![value; w * h],
        }
    }

    pub fn from_fn(w: usize, h: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Mask::new(w, h, false);
        for y in 0..h {
            for x in 0..w {
                m.data[y * w + x] = f(x, y);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.w + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.w + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn values(&self) -> &[bool] {
        &self.data
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        let mut img = image::GrayImage::new(self.w as u32, self.h as u32);
        for y in 0..self.h {
            for x in 0..self.w {
                img.put_pixel(
                    x as u32,
                    y as u32,
                    image::Luma([if self.get(x, y) { 255 } else { 0 }]),
                );
            }
        }
        img.save(path)
            .map_err(|e| Error::Image(format!("writing {}: {e}", path.display())))
    }

    pub fn read_png(path: &Path) -> Result<Mask> {
        let img = image::open(path)
            .map_err(|e| Error::Image(format!("reading {}: {e}", path.display())))?
            .to_luma8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        Ok(Mask::from_fn(w, h, |x, y| {
            img.get_pixel(x as u32, y as u32)[0] > 127
        }))
    }
}

#[inline]
pub fn luma_of(p: [f64; 3]) -> f64 {
    0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]
}

#[inline]
fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// RGB in [0,1] to (hue degrees in [0,360), saturation, value).
pub fn rgb_to_hsv(p: [f64; 3]) -> (f64, f64, f64) {
    let [r, g, b] = p;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * (((g - b) / delta).rem_euclid(6.0))
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { delta / max };
    (h, s, max)
}

pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let c = v * s;
    let hp = (h.rem_euclid(360.0)) / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as usize {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r + m, g + m, b + m]
}
