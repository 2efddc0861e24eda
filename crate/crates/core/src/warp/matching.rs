use crate::geom::PolygonBoundary;
use crate::lines::{boundary_metrics, Lol1Line, MatchThresholds};
use crate::{Scalar, Seg2};

/// One accepted target-to-reference line correspondence.
#[derive(Clone, Copy, Debug)]
pub struct MatchPair {
    pub target: usize,
    pub reference: usize,
    pub ref_is_boundary: bool,
    pub ref_seg: Seg2,
}

/// All correspondences for one warp solve; a target index appears at most
/// once.
#[derive(Clone, Debug, Default)]
pub struct MatchSet {
    pub pairs: Vec<MatchPair>,
}

/// Pairs each target line with the best qualifying reference: angle and
/// line-distance gates always apply, the non-overlap gate only against
/// boundary edges. Reference pool is the given lines followed by the
/// boundary edges.
pub fn match_segments(
    targets: &[Lol1Line],
    refs: &[Lol1Line],
    boundary: &PolygonBoundary<Scalar>,
    thresholds: &MatchThresholds,
) -> MatchSet {
    let mut pool: Vec<(Seg2, bool)> = refs.iter().map(|l| (l.seg, false)).collect();
    for b in boundary.all_edge_segments() {
        pool.push((b, true));
    }
    let mut pairs = Vec::new();
    for (ti, t) in targets.iter().enumerate() {
        let mut best: Option<(usize, Scalar, Scalar)> = None;
        for (ri, (rseg, is_boundary)) in pool.iter().enumerate() {
            let Ok(m) = boundary_metrics(&t.seg, rseg) else {
                continue;
            };
            if m.theta_deg > thresholds.theta_deg || m.d_line > thresholds.d_line {
                continue;
            }
            if *is_boundary && m.non_overlap > thresholds.non_overlap {
                continue;
            }
            let better = match best {
                None => true,
                Some((_, bd, bt)) => {
                    m.d_line < bd || (m.d_line == bd && m.theta_deg < bt)
                }
            };
            if better {
                best = Some((ri, m.d_line, m.theta_deg));
            }
        }
        if let Some((ri, _, _)) = best {
            pairs.push(MatchPair {
                target: ti,
                reference: ri,
                ref_is_boundary: pool[ri].1,
                ref_seg: pool[ri].0,
            });
        }
    }
    MatchSet { pairs }
}
