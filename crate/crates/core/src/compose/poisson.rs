use crate::compose::texture::TextureMap;
use crate::err::{Error, Result};
use crate::raster::{Mask, Raster};
use crate::solver::conjugate_gradient;
use crate::solver::Triplets;

const N4: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const MAX_RESIDUAL: f64 = 1e-6;

/// Seamlessly inserts the patch into the base over the mask region by
/// solving the discrete Poisson equation: patch gradients as guidance,
/// base pixels around the mask as Dirichlet boundary. Pixels outside the
/// mask are returned bit-identical to the base.
pub fn poisson_blend(
    base: &TextureMap,
    patch: &Raster,
    patch_prov: &[Option<u32>],
    mask: &Mask,
) -> Result<TextureMap> {
    let (w, h) = (base.raster.w, base.raster.h);
    if patch.w != w || patch.h != h || mask.w != w || mask.h != h {
        return Err(Error::Geometry(
            "poisson inputs must share dimensions".into(),
        ));
    }
    if patch_prov.len() != w * h {
        return Err(Error::Geometry(format!(
            "patch provenance length {} does not match {} pixels",
            patch_prov.len(),
            w * h
        )));
    }
    let mut out = base.clone();
    let count = mask.count();
    if count == 0 {
        return Ok(out);
    }
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) && patch_prov[y * w + x].is_none() {
                return Err(Error::Geometry(format!(
                    "patch provenance missing inside blend mask at ({x},{y})"
                )));
            }
        }
    }

    let mut index = vec![usize::MAX; w * h];
    let mut cells = Vec::with_capacity(count);
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                index[y * w + x] = cells.len();
                cells.push((x, y));
            }
        }
    }

    let in_bounds = |x: isize, y: isize| x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h;
    let mut trip = Triplets::new(count, count);
    let mut rhs = [
        vec![0.0f64; count],
        vec![0.0f64; count],
        vec![0.0f64; count],
    ];
    let mut ring = 0usize;
    for (i, &(x, y)) in cells.iter().enumerate() {
        let mut degree = 0.0;
        let gp = patch.get(x, y);
        for (dx, dy) in N4 {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if !in_bounds(nx, ny) {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            degree += 1.0;
            let gq = patch.get(nx, ny);
            let j = index[ny * w + nx];
            if j != usize::MAX {
                trip.push(i, j, -1.0);
                for c in 0..3 {
                    rhs[c][i] += gp[c] - gq[c];
                }
            } else {
                // Dirichlet ring pixel; take the base where it is observed,
                // otherwise continue the patch itself.
                let anchor = if base.observed.get(nx, ny) {
                    ring += 1;
                    base.raster.get(nx, ny)
                } else {
                    patch.get(nx, ny)
                };
                for c in 0..3 {
                    rhs[c][i] += gp[c] - gq[c] + anchor[c];
                }
            }
        }
        trip.push(i, i, degree);
    }
    if ring == 0 {
        return Err(Error::Geometry(
            "poisson blend mask has no observed boundary ring".into(),
        ));
    }

    let a = trip.to_csr();
    for (c, b) in rhs.iter().enumerate() {
        let mut x0: Option<Vec<f64>> = None;
        let mut solved = None;
        for _restart in 0..4 {
            let (sol, _rep) = conjugate_gradient(&a, b, x0.as_deref(), 1e-12, 10 * count.max(100))?;
            let ax = a.mul_vec(&sol);
            let max_res = ax
                .iter()
                .zip(b)
                .map(|(l, r)| (l - r).abs())
                .fold(0.0f64, f64::max);
            if max_res <= MAX_RESIDUAL {
                solved = Some(sol);
                break;
            }
            x0 = Some(sol);
        }
        let sol = solved.ok_or_else(|| {
            Error::Numeric(format!(
                "poisson solve channel {c} did not reach residual {MAX_RESIDUAL}"
            ))
        })?;
        for (i, &(x, y)) in cells.iter().enumerate() {
            let mut px = out.raster.get(x, y);
            px[c] = sol[i].clamp(0.0, 1.0);
            out.raster.set(x, y, px);
        }
    }
    for &(x, y) in &cells {
        out.observed.set(x, y, true);
        out.set_prov(x, y, patch_prov[y * w + x]);
    }
    Ok(out)
}
