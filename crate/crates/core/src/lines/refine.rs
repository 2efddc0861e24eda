use std::collections::BTreeMap;

use crate::geom::PolygonBoundary;
use crate::lines::{boundary_metrics, merge_span, Lol1Line, MatchThresholds};
use crate::{P2, Scalar, Seg2};

/// Refines registered global lines against the proxy boundary, marking and
/// cleaning the boundary-matching lines. Segments below 2% of the boundary
/// bbox diagonal count as noise once matched.
pub fn refine_lol1(
    lol0: &[Seg2],
    boundary: &PolygonBoundary<Scalar>,
    thresholds: &MatchThresholds,
) -> Vec<Lol1Line> {
    let edges = boundary.all_edge_segments();
    // Cyclic adjacency holds within each loop, never across loops.
    let mut loop_ranges = Vec::new();
    let mut start = boundary.outer.edge_segments().len();
    loop_ranges.push((0usize, start));
    for hole in &boundary.holes {
        let n = hole.edge_segments().len();
        loop_ranges.push((start, n));
        start += n;
    }
    let min_len = 0.02 * boundary.bbox_diag();

    let mut unmatched: Vec<Seg2> = Vec::new();
    let mut per_edge: BTreeMap<usize, Vec<Seg2>> = BTreeMap::new();
    for s in lol0 {
        let mut best: Option<(usize, Scalar)> = None;
        for (e, b) in edges.iter().enumerate() {
            let Ok(m) = boundary_metrics(s, b) else {
                continue;
            };
            if m.passes(thresholds) && best.map_or(true, |(_, bd)| m.d_line < bd) {
                best = Some((e, m.d_line));
            }
        }
        match best {
            Some((e, _)) if s.length() >= min_len => per_edge.entry(e).or_default().push(*s),
            Some(_) => {}
            None => unmatched.push(*s),
        }
    }

    // One span per matched edge.
    let mut matched: BTreeMap<usize, Seg2> = per_edge
        .into_iter()
        .map(|(e, group)| {
            let merged = group.into_iter().reduce(|a, b| merge_span(&a, &b)).unwrap();
            (e, merged)
        })
        .collect();

    // Matches on adjacent edges meet at their supporting-line intersection.
    for &(lo, n) in &loop_ranges {
        for k in 0..n {
            let p = lo + k;
            let q = lo + (k + 1) % n;
            if p == q {
                continue;
            }
            let (Some(&lp), Some(&lq)) = (matched.get(&p), matched.get(&q)) else {
                continue;
            };
            if let Some(x) = lp.line_intersection(&lq) {
                matched.insert(p, extend_to(&lp, x));
                matched.insert(q, extend_to(&lq, x));
            }
        }
    }

    // Bridge a gap edge whose two neighbors both carry a match, keeping the
    // bridge only if it matches that edge itself.
    let mut inserted: Vec<(usize, Seg2)> = Vec::new();
    for &(lo, n) in &loop_ranges {
        for k in 0..n {
            let o = lo + k;
            if matched.contains_key(&o) {
                continue;
            }
            let p = lo + (k + n - 1) % n;
            let q = lo + (k + 1) % n;
            if p == o || q == o || p == q {
                continue;
            }
            let (Some(lp), Some(lq)) = (matched.get(&p), matched.get(&q)) else {
                continue;
            };
            let mut best: Option<(P2, P2, Scalar)> = None;
            for a in [lp.p1, lp.p2] {
                for b in [lq.p1, lq.p2] {
                    let d = a.dist(b);
                    if best.map_or(true, |(_, _, bd)| d < bd) {
                        best = Some((a, b, d));
                    }
                }
            }
            let (a, b, d) = best.unwrap();
            if d <= 1e-9 {
                continue;
            }
            let cand = Seg2 { p1: a, p2: b };
            if let Ok(m) = boundary_metrics(&cand, &edges[o]) {
                if m.passes(thresholds) {
                    inserted.push((o, cand));
                }
            }
        }
    }

    let mut out: Vec<Lol1Line> = unmatched
        .into_iter()
        .map(|seg| Lol1Line {
            seg,
            boundary_edge: None,
        })
        .collect();
    for (e, seg) in matched {
        out.push(Lol1Line {
            seg,
            boundary_edge: Some(e),
        });
    }
    for (e, seg) in inserted {
        out.push(Lol1Line {
            seg,
            boundary_edge: Some(e),
        });
    }
    out
}

fn extend_to(s: &Seg2, x: P2) -> Seg2 {
    if s.p1.dist(x) <= s.p2.dist(x) {
        if s.p2.dist(x) <= 1e-12 {
            return *s;
        }
        Seg2 { p1: x, p2: s.p2 }
    } else {
        if s.p1.dist(x) <= 1e-12 {
            return *s;
        }
        Seg2 { p1: s.p1, p2: x }
    }
}
