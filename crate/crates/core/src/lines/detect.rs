use serde::{Deserialize, Serialize};

use crate::lines::merge_collinear;
use crate::raster::{Gray, Raster};
use crate::{P2, Scalar, Seg2};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorParams {
    pub grad_threshold: Scalar,
    pub fit_tol: Scalar,
    pub min_support: usize,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            grad_threshold: 0.03,
            fit_tol: 1.5,
            min_support: 8,
        }
    }
}

const DIRS: [(isize, isize); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

/// Edge-drawing segment detector: Sobel gradients, non-maximum-suppressed
/// anchors walked along the edge ridge, chains fit by total least squares and
/// split where the deviation exceeds fit_tol. A step edge responds one pixel
/// to each side of the ideal line, so twin detections are merged back onto
/// the centerline before returning.
pub fn detect_segments(image: &Raster, params: &DetectorParams) -> Vec<Seg2> {
    let gray = image.luma();
    let (w, h) = (gray.w, gray.h);
    if w < 3 || h < 3 {
        return Vec::new();
    }
    let (gx, gy, mag) = sobel_xy(&gray);
    let mut visited = vec![false; w * h];
    let mut raw = Vec::new();
    let mut points: Vec<P2> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if visited[i] || !is_anchor(&gx, &gy, &mag, x, y, w, h, params.grad_threshold) {
                continue;
            }
            // Walk along the edge, perpendicular to the gradient.
            let vertical_grad = gy[i].abs() >= gx[i].abs();
            let (d1, d2) = if vertical_grad {
                ((1isize, 0isize), (-1isize, 0isize))
            } else {
                ((0, 1), (0, -1))
            };
            let side1 = walk(x, y, d1, &mag, &mut visited, w, h, params.grad_threshold);
            visited[i] = false;
            let side2 = walk(x, y, d2, &mag, &mut visited, w, h, params.grad_threshold);
            points.clear();
            for &(px, py) in side2.iter().skip(1).rev() {
                points.push(P2::new(px as Scalar, py as Scalar));
            }
            for &(px, py) in &side1 {
                points.push(P2::new(px as Scalar, py as Scalar));
            }
            split_fit(&points, params, &mut raw);
        }
    }
    merge_collinear(&raw, 3.0, 2.5, 3.0)
}

fn sobel_xy(gray: &Gray) -> (Vec<Scalar>, Vec<Scalar>, Vec<Scalar>) {
    let (w, h) = (gray.w, gray.h);
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    let mut mag = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let p = |dx: isize, dy: isize| gray.get_clamped(x + dx, y + dy);
            let dx = ((p(1, -1) + 2.0 * p(1, 0) + p(1, 1))
                - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1)))
                / 8.0;
            let dy = ((p(-1, 1) + 2.0 * p(0, 1) + p(1, 1))
                - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1)))
                / 8.0;
            let i = y as usize * w + x as usize;
            gx[i] = dx;
            gy[i] = dy;
            mag[i] = (dx * dx + dy * dy).sqrt();
        }
    }
    (gx, gy, mag)
}

/// Non-maximum suppression across the gradient direction. Plateaus keep only
/// their first pixel (strict test against the prior neighbor).
#[allow(clippy::too_many_arguments)]
fn is_anchor(
    gx: &[Scalar],
    gy: &[Scalar],
    mag: &[Scalar],
    x: usize,
    y: usize,
    w: usize,
    h: usize,
    threshold: Scalar,
) -> bool {
    let i = y * w + x;
    if mag[i] < threshold {
        return false;
    }
    let at = |xx: isize, yy: isize| {
        let cx = xx.clamp(0, w as isize - 1) as usize;
        let cy = yy.clamp(0, h as isize - 1) as usize;
        mag[cy * w + cx]
    };
    let (xi, yi) = (x as isize, y as isize);
    if gx[i].abs() >= gy[i].abs() {
        mag[i] > at(xi - 1, yi) && mag[i] >= at(xi + 1, yi)
    } else {
        mag[i] > at(xi, yi - 1) && mag[i] >= at(xi, yi + 1)
    }
}

/// Greedy ridge walk: step to the strongest unvisited pixel among the three
/// neighbors ahead of the current direction.
#[allow(clippy::too_many_arguments)]
fn walk(
    x0: usize,
    y0: usize,
    dir0: (isize, isize),
    mag: &[Scalar],
    visited: &mut [bool],
    w: usize,
    h: usize,
    threshold: Scalar,
) -> Vec<(usize, usize)> {
    let mut chain = Vec::new();
    let (mut x, mut y) = (x0 as isize, y0 as isize);
    let mut dir = dir0;
    loop {
        let i = y as usize * w + x as usize;
        if visited[i] || mag[i] < threshold {
            break;
        }
        visited[i] = true;
        chain.push((x as usize, y as usize));
        let base = DIRS.iter().position(|&d| d == dir).unwrap();
        let mut best: Option<((isize, isize), Scalar)> = None;
        for off in [7usize, 0, 1] {
            let d = DIRS[(base + off) % 8];
            let (nx, ny) = (x + d.0, y + d.1);
            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                continue;
            }
            let ni = ny as usize * w + nx as usize;
            if visited[ni] || mag[ni] < threshold {
                continue;
            }
            if best.map_or(true, |(_, bm)| mag[ni] > bm) {
                best = Some((d, mag[ni]));
            }
        }
        match best {
            Some((d, _)) => {
                dir = d;
                x += d.0;
                y += d.1;
            }
            None => break,
        }
    }
    chain
}

/// Total-least-squares line through a point run.
fn tls_line(pts: &[P2]) -> (P2, P2) {
    let n = pts.len() as Scalar;
    let mut c = P2::new(0.0, 0.0);
    for p in pts {
        c = c + *p;
    }
    c = c / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in pts {
        let d = *p - c;
        sxx += d.x * d.x;
        syy += d.y * d.y;
        sxy += d.x * d.y;
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    (c, P2::new(angle.cos(), angle.sin()))
}

/// Recursively split a chain at its worst-fitting point until every emitted
/// run satisfies the deviation bound.
fn split_fit(points: &[P2], params: &DetectorParams, out: &mut Vec<Seg2>) {
    let mut work = vec![(0usize, points.len())];
    while let Some((lo, hi)) = work.pop() {
        let run = &points[lo..hi];
        if run.len() < params.min_support.max(2) {
            continue;
        }
        let (c, dir) = tls_line(run);
        let mut worst = (0usize, 0.0);
        for (k, p) in run.iter().enumerate() {
            let dev = dir.cross(*p - c).abs();
            if dev > worst.1 {
                worst = (k, dev);
            }
        }
        if worst.1 > params.fit_tol {
            work.push((lo, lo + worst.0));
            work.push((lo + worst.0 + 1, hi));
            continue;
        }
        let mut tmin = Scalar::INFINITY;
        let mut tmax = Scalar::NEG_INFINITY;
        for p in run {
            let t = (*p - c).dot(dir);
            tmin = tmin.min(t);
            tmax = tmax.max(t);
        }
        if tmax - tmin > 1e-9 {
            out.push(Seg2 {
                p1: c + dir * tmin,
                p2: c + dir * tmax,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pixel_line_yields_one_segment() {
        let img = Raster::from_fn(120, 60, |x, y| {
            if y == 30 && (10..110).contains(&x) {
                [1.0, 1.0, 1.0]
            } else {
                [0.0; 3]
            }
        });
        let segs = detect_segments(&img, &DetectorParams::default());
        assert_eq!(segs.len(), 1, "{segs:?}");
        let s = &segs[0];
        let angle = (s.p2.y - s.p1.y).atan2(s.p2.x - s.p1.x).to_degrees().abs();
        assert!(angle.min(180.0 - angle) <= 0.5, "angle {angle}");
        assert!((s.length() - 100.0).abs() <= 5.0, "length {}", s.length());
        assert!((s.p1.y - 30.0).abs() < 1.5 && (s.p2.y - 30.0).abs() < 1.5);
    }

    #[test]
    fn constant_image_yields_none() {
        let img = Raster::constant(64, 64, [0.4, 0.4, 0.4]);
        assert!(detect_segments(&img, &DetectorParams::default()).is_empty());
    }

    #[test]
    fn rectangle_outline_yields_four_sides() {
        let (x0, x1, y0, y1) = (15usize, 65usize, 12usize, 48usize);
        let img = Raster::from_fn(80, 60, |x, y| {
            let on = ((y == y0 || y == y1) && (x0..=x1).contains(&x))
                || ((x == x0 || x == x1) && (y0..=y1).contains(&y));
            if on {
                [1.0; 3]
            } else {
                [0.0; 3]
            }
        });
        let segs = detect_segments(&img, &DetectorParams::default());
        assert_eq!(segs.len(), 4, "{segs:?}");
        let sides = [
            Seg2::new(P2::new(x0 as f64, y0 as f64), P2::new(x1 as f64, y0 as f64)).unwrap(),
            Seg2::new(P2::new(x0 as f64, y1 as f64), P2::new(x1 as f64, y1 as f64)).unwrap(),
            Seg2::new(P2::new(x0 as f64, y0 as f64), P2::new(x0 as f64, y1 as f64)).unwrap(),
            Seg2::new(P2::new(x1 as f64, y0 as f64), P2::new(x1 as f64, y1 as f64)).unwrap(),
        ];
        for side in &sides {
            let hit = segs.iter().any(|s| {
                s.acute_angle_to(side).to_degrees() <= 3.0
                    && (s.length() - side.length()).abs() <= 8.0
                    && s.midpoint().dist(side.midpoint()) <= 3.0
            });
            assert!(hit, "missing side {side:?} in {segs:?}");
        }
    }

    #[test]
    fn deterministic() {
        let img = Raster::from_fn(90, 90, |x, y| {
            if (x + 2 * y) % 31 == 0 {
                [0.9; 3]
            } else {
                [0.1; 3]
            }
        });
        let a = detect_segments(&img, &DetectorParams::default());
        let b = detect_segments(&img, &DetectorParams::default());
        assert_eq!(a, b);
    }
}
