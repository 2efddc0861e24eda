use crate::err::{Error, Result};
use crate::maxflow::FlowNetwork;
use crate::raster::{Mask, Raster};

pub const SEAM_EPS: f64 = 1e-4;
const TERMINAL: f64 = 1e6;

/// Min-cut labeling of the overlap between two observed regions.
#[derive(Clone, Debug)]
pub struct SeamResult {
    /// True where the overlap pixel should take image B.
    pub use_b: Mask,
    /// Total cut cost over all overlap components.
    pub cost: f64,
    /// Components touching neither exclusive region, labeled all-A.
    pub fallback_components: usize,
}

fn color_dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    let mut s = 0.0;
    for k in 0..3 {
        s += (a[k] - b[k]) * (a[k] - b[k]);
    }
    s.sqrt()
}

const N4: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// Splits the overlap of A and B along a minimum-cost seam. Each 4-connected
/// overlap component becomes an s-t min-cut instance: pixels bordering the
/// A-only region attach to the source, pixels bordering B-only to the sink,
/// and neighbor edges cost the summed local color difference plus a small
/// epsilon that penalizes seam length.
pub fn graphcut_seam(
    a: &Raster,
    b: &Raster,
    a_mask: &Mask,
    b_mask: &Mask,
) -> Result<SeamResult> {
    let (w, h) = (a.w, a.h);
    if b.w != w || b.h != h || a_mask.w != w || a_mask.h != h || b_mask.w != w || b_mask.h != h
    {
        return Err(Error::Geometry(
            "seam inputs must share dimensions".into(),
        ));
    }
    let overlap = Mask::from_fn(w, h, |x, y| a_mask.get(x, y) && b_mask.get(x, y));
    let mut use_b = Mask::new(w, h, false);
    let mut cost = 0.0;
    let mut fallback_components = 0usize;

    let in_bounds = |x: isize, y: isize| x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h;
    let mut component = vec![usize::MAX; w * h];
    let mut comp_count = 0usize;
    for sy in 0..h {
        for sx in 0..w {
            if !overlap.get(sx, sy) || component[sy * w + sx] != usize::MAX {
                continue;
            }
            let comp_id = comp_count;
            comp_count += 1;
            let mut stack = vec![(sx, sy)];
            let mut pixels = Vec::new();
            component[sy * w + sx] = comp_id;
            while let Some((x, y)) = stack.pop() {
                pixels.push((x, y));
                for (dx, dy) in N4 {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if in_bounds(nx, ny) {
                        let (nx, ny) = (nx as usize, ny as usize);
                        if overlap.get(nx, ny) && component[ny * w + nx] == usize::MAX {
                            component[ny * w + nx] = comp_id;
                            stack.push((nx, ny));
                        }
                    }
                }
            }

            let mut local = vec![usize::MAX; w * h];
            for (i, &(x, y)) in pixels.iter().enumerate() {
                local[y * w + x] = i;
            }
            let n = pixels.len();
            let s = n;
            let t = n + 1;
            let mut net = FlowNetwork::new(n + 2);
            let mut any_a = false;
            let mut any_b = false;
            for (i, &(x, y)) in pixels.iter().enumerate() {
                let mut touches_a = false;
                let mut touches_b = false;
                for (dx, dy) in N4 {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if !in_bounds(nx, ny) {
                        continue;
                    }
                    let (nx, ny) = (nx as usize, ny as usize);
                    let in_a = a_mask.get(nx, ny);
                    let in_b = b_mask.get(nx, ny);
                    touches_a |= in_a && !in_b;
                    touches_b |= in_b && !in_a;
                    if overlap.get(nx, ny) && local[ny * w + nx] > i && local[ny * w + nx] < n {
                        let wcut = color_dist(a.get(x, y), b.get(x, y))
                            + color_dist(a.get(nx, ny), b.get(nx, ny))
                            + SEAM_EPS;
                        net.add_edge(i, local[ny * w + nx], wcut, wcut);
                    }
                }
                if touches_a {
                    net.add_edge(s, i, TERMINAL, 0.0);
                    any_a = true;
                }
                if touches_b {
                    net.add_edge(i, t, TERMINAL, 0.0);
                    any_b = true;
                }
            }
            if !any_a && !any_b {
                // Floating overlap island: nothing anchors either label.
                fallback_components += 1;
                continue;
            }
            cost += net.max_flow(s, t);
            let a_side = net.min_cut_side(s);
            for (i, &(x, y)) in pixels.iter().enumerate() {
                use_b.set(x, y, !a_side[i]);
            }
        }
    }
    Ok(SeamResult {
        use_b,
        cost,
        fallback_components,
    })
}
