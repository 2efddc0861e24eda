use crate::compose::TextureMap;
use crate::err::{Error, Result};
use crate::geom::{point_line_distance, PolygonBoundary};
use crate::lines::{detect_segments, merge_collinear_filtered, DetectorParams};
use crate::metrics::ssim_masked;
use crate::raster::{Mask, Raster};
use crate::view::ProjectedRegion;
use crate::{Scalar, Seg2};

const ANGLE_TOL_DEG: f64 = 10.0;
const DIST_CAP: f64 = 10.0;
/// Pixels this close to unobserved content are untrusted: detections there
/// describe the hole border, not the texture.
const HOLE_MARGIN: i64 = 2;
const MIN_TRIMMED_LEN: f64 = 8.0;

/// How closely a texture reproduces the reference structure: line
/// centerline displacement statistics, endpoint RMS against the matched
/// reference lines, and SSIM over the observed region.
#[derive(Clone, Copy, Debug)]
pub struct AlignmentReport {
    pub mean_displacement: f64,
    pub p95_displacement: f64,
    pub endpoint_rms: f64,
    pub ssim: f64,
    pub matched_lines: usize,
}

fn observed_with_margin(mask: &Mask, x: i64, y: i64) -> bool {
    for dy in -HOLE_MARGIN..=HOLE_MARGIN {
        for dx in -HOLE_MARGIN..=HOLE_MARGIN {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= mask.w as i64 || ny >= mask.h as i64 {
                continue;
            }
            if !mask.get(nx as usize, ny as usize) {
                return false;
            }
        }
    }
    true
}

/// Detected, merged lines; with a mask, each line is trimmed to its longest
/// stretch clear of unobserved pixels so hole borders contribute nothing.
fn robust_lines(raster: &Raster, observed: Option<&Mask>) -> Vec<Seg2> {
    let raw = detect_segments(raster, &DetectorParams::default());
    let diag = ((raster.w * raster.w + raster.h * raster.h) as f64).sqrt();
    let merged = merge_collinear_filtered(&raw, 3.0, 2.5, 5.0, 0.02 * diag);
    let Some(mask) = observed else {
        return merged;
    };
    merged
        .into_iter()
        .filter_map(|seg| {
            let len = seg.length();
            let n = len.ceil() as usize + 1;
            let dir = seg.direction();
            let mut best: Option<(usize, usize)> = None;
            let mut run_start = None;
            for k in 0..=n {
                let t = len * k as f64 / n as f64;
                let p = seg.p1 + dir * t;
                let ok = observed_with_margin(mask, p.x.round() as i64, p.y.round() as i64);
                match (ok, run_start) {
                    (true, None) => run_start = Some(k),
                    (false, Some(s)) => {
                        if best.is_none_or(|(a, b)| k - 1 - s > b - a) {
                            best = Some((s, k - 1));
                        }
                        run_start = None;
                    }
                    _ => {}
                }
            }
            if let Some(s) = run_start {
                if best.is_none_or(|(a, b)| n - s > b - a) {
                    best = Some((s, n));
                }
            }
            let (a, b) = best?;
            let ta = len * a as f64 / n as f64;
            let tb = len * b as f64 / n as f64;
            if tb - ta < MIN_TRIMMED_LEN {
                return None;
            }
            Some(Seg2 {
                p1: seg.p1 + dir * ta,
                p2: seg.p1 + dir * tb,
            })
        })
        .collect()
}

fn overlaps(seg: &Seg2, other: &Seg2) -> bool {
    let t1 = other.project_param(seg.p1);
    let t2 = other.project_param(seg.p2);
    t1.max(t2) > 0.0 && t1.min(t2) < other.length()
}

fn best_reference<'a>(seg: &Seg2, refs: &'a [Seg2]) -> Option<&'a Seg2> {
    let mut best: Option<(f64, &Seg2)> = None;
    for r in refs {
        if seg.acute_angle_to(r).to_degrees() > ANGLE_TOL_DEG || !overlaps(seg, r) {
            continue;
        }
        let d = point_line_distance(seg.midpoint(), r).ok()?;
        if d <= DIST_CAP && best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, r));
        }
    }
    best.map(|(_, r)| r)
}

/// Compares a produced texture against the reference raster: lines are
/// detected on both sides, each texture line is matched to its nearest
/// reference line, and displacement is sampled along the texture line
/// against the reference centerline.
pub fn evaluate_alignment(texture: &TextureMap, truth: &Raster) -> Result<AlignmentReport> {
    if texture.raster.w != truth.w || texture.raster.h != truth.h {
        return Err(Error::Image(format!(
            "texture {}x{} does not match reference {}x{}",
            texture.raster.w, texture.raster.h, truth.w, truth.h
        )));
    }
    let tex_lines = robust_lines(&texture.raster, Some(&texture.observed));
    let truth_lines = robust_lines(truth, None);
    if tex_lines.is_empty() || truth_lines.is_empty() {
        return Err(Error::Geometry(
            "no detectable lines to evaluate alignment on".into(),
        ));
    }
    let mut samples = Vec::new();
    let mut endpoint_sq = 0.0;
    let mut matched = 0usize;
    for seg in &tex_lines {
        let Some(reference) = best_reference(seg, &truth_lines) else {
            continue;
        };
        matched += 1;
        let len = seg.length();
        let n = len.ceil() as usize + 1;
        let dir = seg.direction();
        for k in 0..=n {
            let p = seg.p1 + dir * (len * k as f64 / n as f64);
            samples.push(point_line_distance(p, reference)?);
        }
        endpoint_sq += point_line_distance(seg.p1, reference)?.powi(2)
            + point_line_distance(seg.p2, reference)?.powi(2);
    }
    if matched == 0 {
        return Err(Error::Geometry(
            "no texture line matches any reference line".into(),
        ));
    }
    samples.sort_by(Scalar::total_cmp);
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let p95 = samples[((samples.len() as f64 * 0.95).ceil() as usize).clamp(1, samples.len()) - 1];
    Ok(AlignmentReport {
        mean_displacement: mean,
        p95_displacement: p95,
        endpoint_rms: (endpoint_sq / (2 * matched) as f64).sqrt(),
        ssim: ssim_masked(&texture.raster, truth, &texture.observed)?,
        matched_lines: matched,
    })
}

/// Baseline compositor: no alignment, no seams, every node takes the first
/// region in the given order that observed it.
pub fn naive_composite(
    regions: &[ProjectedRegion],
    boundary: &PolygonBoundary<Scalar>,
) -> Result<TextureMap> {
    let first = regions
        .first()
        .ok_or_else(|| Error::Geometry("naive composite needs at least one region".into()))?;
    let grid = &first.grid;
    for r in regions {
        if r.grid.nx != grid.nx
            || r.grid.ny != grid.ny
            || r.grid.origin != grid.origin
            || r.grid.step != grid.step
        {
            return Err(Error::Geometry(
                "regions share one polygon grid; got mismatched grids".into(),
            ));
        }
    }
    let (w, h) = (grid.nx, grid.ny);
    let mut raster = Raster::new(w, h);
    let mut observed = Mask::new(w, h, false);
    let mut prov = vec![None; w * h];
    for iy in 0..h {
        for ix in 0..w {
            let i = iy * w + ix;
            if !grid.inside[i] {
                continue;
            }
            for r in regions {
                if r.valid[i] {
                    raster.set(ix, iy, r.colors[i]);
                    observed.set(ix, iy, true);
                    prov[i] = Some(r.view_id as u32);
                    break;
                }
            }
        }
    }
    TextureMap::new(raster, observed, prov, boundary.clone())
}
