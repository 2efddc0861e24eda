use crate::compose::{composite_step, CompositeReport, TextureMap};
use crate::err::{Error, Result};
use crate::geom::{point_line_distance, Loop, PolygonBoundary};
use crate::lines::{
    boundary_metrics, cluster_lol2, detect_segments, merge_collinear_filtered, refine_lol1,
    ClusterParams, DetectorParams, LoLSet, Lol1Line, MatchThresholds,
};
use crate::raster::{Mask, Raster};
use crate::view::ProjectedRegion;
use crate::warp::energy::{repair_topology, solve_warp, EnergyWeights};
use crate::warp::matching::{match_segments, MatchSet};
use crate::warp::mesh::{build_adaptive_mesh, AdaptiveMesh};
use crate::warp::resample::{extend_margin, margin_width, render_warped, unpad_margin, unpad_mask};
use crate::warp::rigid::{rigid_align, Rigid2D};
use crate::{Scalar, Seg2, P2};

/// Diagnostics for one region's alignment, warp, and composite.
#[derive(Clone, Debug)]
pub struct RegionStitchReport {
    pub view_id: usize,
    pub rigid: Rigid2D,
    pub lol0_lines: usize,
    pub lol1_lines: usize,
    pub global_matches: usize,
    pub local_matches: usize,
    pub damped_vertices: usize,
    /// (alignment, straightness, regularization) of the boundary pass.
    pub energy_global: [Scalar; 3],
    /// Same breakdown for the reference pass when one ran.
    pub energy_local: Option<[Scalar; 3]>,
    /// Matched endpoint to reference-line RMS before alignment and warping.
    pub rms_before: Option<Scalar>,
    /// The same RMS at the final warped positions.
    pub rms_after: Option<Scalar>,
    pub composite: CompositeReport,
}

/// Stitched plane texture plus the line features that guided it.
#[derive(Clone, Debug)]
pub struct StitchOutcome {
    pub texture: TextureMap,
    /// Accumulated reference lines in texture pixel coordinates.
    pub ref_lines: Vec<Lol1Line>,
    pub reports: Vec<RegionStitchReport>,
    /// Working-frame margin that surrounded the texture during warping.
    pub margin: usize,
}

fn scale_loop(l: &Loop<Scalar>, origin: P2, step: Scalar) -> Result<Loop<Scalar>> {
    Loop::new(l.vertices.iter().map(|v| (*v - origin) / step).collect())
}

fn boundary_to_px(
    boundary: &PolygonBoundary<Scalar>,
    origin: P2,
    step: Scalar,
) -> Result<PolygonBoundary<Scalar>> {
    let outer = scale_loop(&boundary.outer, origin, step)?;
    let holes = boundary
        .holes
        .iter()
        .map(|h| scale_loop(h, origin, step))
        .collect::<Result<Vec<_>>>()?;
    PolygonBoundary::new(outer, holes)
}

fn shift_boundary(b: &PolygonBoundary<Scalar>, d: P2) -> Result<PolygonBoundary<Scalar>> {
    let shift = |l: &Loop<Scalar>| Loop::new(l.vertices.iter().map(|v| *v + d).collect());
    let outer = shift(&b.outer)?;
    let holes = b.holes.iter().map(shift).collect::<Result<Vec<_>>>()?;
    PolygonBoundary::new(outer, holes)
}

/// Region colors on the sample grid; invalid nodes start black.
fn region_raster(region: &ProjectedRegion) -> (Raster, Mask) {
    let (nx, ny) = (region.grid.nx, region.grid.ny);
    let img = Raster::from_fn(nx, ny, |x, y| {
        let i = y * nx + x;
        if region.valid[i] {
            region.colors[i]
        } else {
            [0.0; 3]
        }
    });
    let mask = Mask::from_fn(nx, ny, |x, y| region.valid[y * nx + x]);
    (img, mask)
}

/// Grows colors into invalid pixels so interpolation near the validity
/// border never blends the black placeholder.
fn fill_invalid(img: &mut Raster, valid: &Mask, rounds: usize) {
    let (w, h) = (img.w, img.h);
    let mut filled = valid.clone();
    for _ in 0..rounds {
        let mut updates: Vec<(usize, usize, [f64; 3])> = Vec::new();
        for y in 0..h {
            for x in 0..w {
                if filled.get(x, y) {
                    continue;
                }
                let nb = [
                    (x.wrapping_sub(1), y, x > 0),
                    (x + 1, y, x + 1 < w),
                    (x, y.wrapping_sub(1), y > 0),
                    (x, y + 1, y + 1 < h),
                ];
                let mut acc = [0.0f64; 3];
                let mut cnt = 0.0f64;
                for &(xx, yy, ok) in &nb {
                    if ok && filled.get(xx, yy) {
                        let c = img.get(xx, yy);
                        acc[0] += c[0];
                        acc[1] += c[1];
                        acc[2] += c[2];
                        cnt += 1.0;
                    }
                }
                if cnt > 0.0 {
                    updates.push((x, y, [acc[0] / cnt, acc[1] / cnt, acc[2] / cnt]));
                }
            }
        }
        if updates.is_empty() {
            break;
        }
        for (x, y, c) in updates {
            img.set(x, y, c);
            filled.set(x, y, true);
        }
    }
}

/// Detects and organizes the line features of one projected region, in the
/// padded working frame shared with stitch_plane.
pub fn region_lols(
    region: &ProjectedRegion,
    boundary: &PolygonBoundary<Scalar>,
    thresholds: &MatchThresholds,
    detector: &DetectorParams,
    cluster: &ClusterParams,
) -> Result<LoLSet> {
    let grid = &region.grid;
    let boundary_px = boundary_to_px(boundary, grid.origin, grid.step)?;
    let (mut img, valid) = region_raster(region);
    fill_invalid(&mut img, &valid, 3);
    let (padded, n) = extend_margin(&img, &boundary_px);
    let diag = boundary_px.bbox_diag();
    let raw = detect_segments(&padded, detector);
    let lol0 = merge_collinear_filtered(&raw, 3.0, 2.5, 5.0, 0.02 * diag);
    let shift = P2::new(n as Scalar, n as Scalar);
    let boundary_pad = shift_boundary(&boundary_px, shift)?;
    let lol1 = refine_lol1(&lol0, &boundary_pad, thresholds);
    let (lo, hi) = boundary_pad.bbox();
    let lol2 = cluster_lol2(&lol1, (lo + hi) * 0.5, diag, cluster);
    Ok(LoLSet { lol0, lol1, lol2 })
}

/// Endpoints of segments that plausibly depict a boundary edge; only these
/// anchor the rigid registration, interior texture lines would bias it.
fn icp_endpoints(lol0: &[Seg2], boundary: &PolygonBoundary<Scalar>) -> Vec<P2> {
    let edges = boundary.all_edge_segments();
    let d_max = 0.05 * boundary.bbox_diag();
    let mut pts = Vec::new();
    for seg in lol0 {
        let near = edges.iter().any(|e| {
            boundary_metrics(seg, e)
                .map(|m| m.theta_deg <= 10.0 && m.d_line <= d_max)
                .unwrap_or(false)
        });
        if near {
            pts.push(seg.p1);
            pts.push(seg.p2);
        }
    }
    pts
}

fn densify_boundary(boundary: &PolygonBoundary<Scalar>, spacing: Scalar) -> Vec<P2> {
    let mut pts = Vec::new();
    for e in boundary.all_edge_segments() {
        let steps = (e.length() / spacing).ceil().max(1.0) as usize;
        for k in 0..steps {
            pts.push(e.point_at(k as Scalar / steps as Scalar));
        }
    }
    pts
}

/// Liang-Barsky clip; drops results shorter than half a pixel.
fn clip_to_rect(seg: &Seg2, lo: P2, hi: P2) -> Option<Seg2> {
    let d = seg.p2 - seg.p1;
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, q) in [
        (-d.x, seg.p1.x - lo.x),
        (d.x, hi.x - seg.p1.x),
        (-d.y, seg.p1.y - lo.y),
        (d.y, hi.y - seg.p1.y),
    ] {
        if p.abs() < 1e-12 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                if r > t1 {
                    return None;
                }
                t0 = t0.max(r);
            } else {
                if r < t0 {
                    return None;
                }
                t1 = t1.min(r);
            }
        }
    }
    if t1 <= t0 {
        return None;
    }
    let a = seg.p1 + d * t0;
    let b = seg.p1 + d * t1;
    if a.dist(b) < 0.5 {
        return None;
    }
    Some(Seg2 { p1: a, p2: b })
}

fn with_region<T>(r: Result<T>, view_id: usize) -> Result<T> {
    r.map_err(|e| e.context(format!("region {view_id}")))
}

/// Matched chain endpoints with the reference line they were matched to.
fn match_entries(mesh: &AdaptiveMesh, matches: &MatchSet) -> Vec<(usize, Seg2)> {
    let mut out = Vec::with_capacity(matches.pairs.len() * 2);
    for pair in &matches.pairs {
        let chain = &mesh.chains[pair.target];
        out.push((chain.endpoints.0, pair.ref_seg));
        out.push((chain.endpoints.1, pair.ref_seg));
    }
    out
}

fn endpoint_rms(entries: &[(usize, Seg2)], positions: &[P2]) -> Option<Scalar> {
    if entries.is_empty() {
        return None;
    }
    let mut acc = 0.0;
    for (v, seg) in entries {
        let d = point_line_distance(positions[*v], seg).unwrap_or(0.0);
        acc += d * d;
    }
    Some((acc / entries.len() as Scalar).sqrt())
}

/// The constraint chains as line segments at the mesh's current positions.
fn chain_lines(mesh: &AdaptiveMesh, lol1: &[Lol1Line]) -> Result<Vec<Lol1Line>> {
    mesh.chains
        .iter()
        .zip(lol1)
        .map(|(chain, line)| {
            let seg = Seg2::new(
                mesh.vertices[chain.endpoints.0],
                mesh.vertices[chain.endpoints.1],
            )?;
            Ok(Lol1Line {
                seg,
                boundary_edge: line.boundary_edge,
            })
        })
        .collect()
}

/// Sequentially aligns each selected region to the polygon boundary and to
/// the already-stitched content, then composites everything into one texture.
/// The first region seeds the reference. Every region is rigid-aligned via
/// its boundary-adjacent line endpoints, warped so its lines meet the
/// boundary, and, once reference lines exist, warped again toward them
/// before the compose stage merges it in. Line sets are expected in the
/// padded working frame that region_lols produces.
pub fn stitch_plane(
    regions: &[ProjectedRegion],
    boundary: &PolygonBoundary<Scalar>,
    lolsets: &[LoLSet],
    weights: &EnergyWeights,
    thresholds: &MatchThresholds,
) -> Result<StitchOutcome> {
    if regions.is_empty() {
        return Err(Error::Config("stitching needs at least one region".into()));
    }
    if lolsets.len() != regions.len() {
        return Err(Error::Config(format!(
            "{} regions but {} line sets",
            regions.len(),
            lolsets.len()
        )));
    }
    let grid = &regions[0].grid;
    for r in regions {
        if r.grid.nx != grid.nx
            || r.grid.ny != grid.ny
            || r.grid.origin != grid.origin
            || r.grid.step != grid.step
        {
            return Err(Error::Config("regions use mismatched sample grids".into()));
        }
    }
    let (nx, ny) = (grid.nx, grid.ny);
    let boundary_px = boundary_to_px(boundary, grid.origin, grid.step)?;
    let n = margin_width(&boundary_px);
    let shift = P2::new(n as Scalar, n as Scalar);
    let boundary_pad = shift_boundary(&boundary_px, shift)?;
    let min_len = 0.02 * boundary_px.bbox_diag();
    let (wp, hp) = (nx + 2 * n, ny + 2 * n);
    let domain_lo = P2::new(0.0, 0.0);
    let domain_hi = P2::new((wp - 1) as Scalar, (hp - 1) as Scalar);
    let target_pts = densify_boundary(&boundary_pad, 2.0);

    let mut acc: Option<TextureMap> = None;
    let mut refs: Vec<Lol1Line> = Vec::new();
    let mut reports = Vec::new();

    for (region, lolset) in regions.iter().zip(lolsets) {
        let view_id = region.view_id;

        let src = icp_endpoints(&lolset.lol0, &boundary_pad);
        // Degenerate sources leave the region unaligned rather than failing.
        let rigid = if src.len() < 2 {
            Rigid2D::identity()
        } else {
            rigid_align(&src, &target_pts, 50, 1e-9).unwrap_or_else(|_| Rigid2D::identity())
        };
        let aligned: Vec<Seg2> = lolset.lol0.iter().map(|s| rigid.apply_seg(s)).collect();
        let lol1: Vec<Lol1Line> = refine_lol1(&aligned, &boundary_pad, thresholds)
            .into_iter()
            .filter_map(|l| {
                clip_to_rect(&l.seg, domain_lo, domain_hi).map(|seg| Lol1Line {
                    seg,
                    boundary_edge: l.boundary_edge,
                })
            })
            .collect();

        let mesh = with_region(build_adaptive_mesh(&lol1, domain_lo, domain_hi), view_id)?;
        let g_matches = match_segments(&lol1, &[], &boundary_pad, thresholds);
        let warp_g = with_region(solve_warp(&mesh, &g_matches, &lol1, weights), view_id)?;
        let (warp_g, damped_g) = with_region(
            repair_topology(&mesh, &warp_g, &g_matches, &lol1, weights),
            view_id,
        )?;
        let positions_g = warp_g.deformed(&mesh);

        let mut entries = match_entries(&mesh, &g_matches);
        let mut local_matches = 0usize;
        let mut damped = damped_g;
        let mut energy_local = None;
        let positions_final = if refs.is_empty() {
            positions_g
        } else {
            let mesh_l = with_region(mesh.with_positions(positions_g), view_id)?;
            let lol1_v = with_region(chain_lines(&mesh_l, &lol1), view_id)?;
            let l_matches = match_segments(&lol1_v, &refs, &boundary_pad, thresholds);
            let warp_l = with_region(solve_warp(&mesh_l, &l_matches, &lol1_v, weights), view_id)?;
            let (warp_l, damped_l) = with_region(
                repair_topology(&mesh_l, &warp_l, &l_matches, &lol1_v, weights),
                view_id,
            )?;
            local_matches = l_matches.pairs.len();
            damped += damped_l;
            energy_local = Some([warp_l.ea, warp_l.el, warp_l.er]);
            entries.extend(match_entries(&mesh_l, &l_matches));
            warp_l.deformed(&mesh_l)
        };

        let inv = rigid.inverse();
        let unaligned: Vec<P2> = mesh.vertices.iter().map(|v| inv.apply(*v)).collect();
        let rms_before = endpoint_rms(&entries, &unaligned);
        let rms_after = endpoint_rms(&entries, &positions_final);

        let (mut img, valid_mask) = region_raster(region);
        fill_invalid(&mut img, &valid_mask, 3);
        let sampler = |orig: P2| -> Option<[f64; 3]> {
            let q = inv.apply(orig);
            let gx = q.x - shift.x;
            let gy = q.y - shift.y;
            let ix = gx.round();
            let iy = gy.round();
            if ix < 0.0 || iy < 0.0 || ix > (nx - 1) as Scalar || iy > (ny - 1) as Scalar {
                return None;
            }
            if !region.valid[iy as usize * nx + ix as usize] {
                return None;
            }
            img.bilinear(
                gx.clamp(0.0, (nx - 1) as Scalar),
                gy.clamp(0.0, (ny - 1) as Scalar),
            )
        };
        let (pad_img, pad_valid) = render_warped(&mesh, &positions_final, wp, hp, sampler);
        let out_img = unpad_margin(&pad_img, n, nx, ny);
        let out_valid = unpad_mask(&pad_valid, n, nx, ny);
        let observed = Mask::from_fn(nx, ny, |x, y| {
            out_valid.get(x, y) && grid.inside[y * nx + x]
        });
        let raster = Raster::from_fn(nx, ny, |x, y| {
            if observed.get(x, y) {
                out_img.get(x, y)
            } else {
                [0.0; 3]
            }
        });
        let provenance: Vec<Option<u32>> = (0..nx * ny)
            .map(|i| {
                if observed.get(i % nx, i / nx) {
                    Some(view_id as u32)
                } else {
                    None
                }
            })
            .collect();
        let tex = with_region(
            TextureMap::new(raster, observed, provenance, boundary_px.clone()),
            view_id,
        )?;

        let (next_acc, comp) = match &acc {
            None => (tex, CompositeReport::default()),
            Some(a) => with_region(composite_step(a, &tex), view_id)?,
        };
        acc = Some(next_acc);

        let mut segs: Vec<Seg2> = refs.iter().map(|l| l.seg).collect();
        for chain in &mesh.chains {
            let a = positions_final[chain.endpoints.0];
            let b = positions_final[chain.endpoints.1];
            if a.dist(b) < 0.5 {
                continue;
            }
            segs.push(Seg2 { p1: a, p2: b });
        }
        refs = merge_collinear_filtered(&segs, 1.0, 1.5, 2.0, min_len)
            .into_iter()
            .map(|seg| Lol1Line {
                seg,
                boundary_edge: None,
            })
            .collect();

        reports.push(RegionStitchReport {
            view_id,
            rigid,
            lol0_lines: lolset.lol0.len(),
            lol1_lines: lol1.len(),
            global_matches: g_matches.pairs.len(),
            local_matches,
            damped_vertices: damped,
            energy_global: [warp_g.ea, warp_g.el, warp_g.er],
            energy_local,
            rms_before,
            rms_after,
            composite: comp,
        });
    }

    let texture = acc.expect("at least one region was composited");
    let ref_lines = refs
        .into_iter()
        .map(|l| Lol1Line {
            seg: Seg2 {
                p1: l.seg.p1 - shift,
                p2: l.seg.p2 - shift,
            },
            boundary_edge: l.boundary_edge,
        })
        .collect();
    Ok(StitchOutcome {
        texture,
        ref_lines,
        reports,
        margin: n,
    })
}
