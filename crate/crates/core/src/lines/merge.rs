use crate::{P2, Scalar, Seg2};

/// Iteratively merges near-collinear, near-touching segments into their
/// extremal span until a fixpoint: the LoL0 construction. Idempotent.
pub fn merge_collinear(
    segments: &[Seg2],
    angle_tol_deg: Scalar,
    dist_tol: Scalar,
    gap_tol: Scalar,
) -> Vec<Seg2> {
    merge_collinear_filtered(segments, angle_tol_deg, dist_tol, gap_tol, 0.0)
}

/// merge_collinear plus removal of merged segments shorter than min_len.
pub fn merge_collinear_filtered(
    segments: &[Seg2],
    angle_tol_deg: Scalar,
    dist_tol: Scalar,
    gap_tol: Scalar,
    min_len: Scalar,
) -> Vec<Seg2> {
    let angle_tol = angle_tol_deg.to_radians();
    let mut segs: Vec<Seg2> = segments.to_vec();
    let mut merged_any = true;
    while merged_any {
        merged_any = false;
        'outer: for i in 0..segs.len() {
            for j in (i + 1)..segs.len() {
                if mergeable(&segs[i], &segs[j], angle_tol, dist_tol, gap_tol) {
                    let m = merge_span(&segs[i], &segs[j]);
                    segs[i] = m;
                    segs.remove(j);
                    merged_any = true;
                    break 'outer;
                }
            }
        }
    }
    segs.retain(|s| s.length() >= min_len);
    segs
}

fn mergeable(a: &Seg2, b: &Seg2, angle_tol: Scalar, dist_tol: Scalar, gap_tol: Scalar) -> bool {
    if a.acute_angle_to(b) > angle_tol {
        return false;
    }
    let line_dist = |p: P2, s: &Seg2| {
        let d = s.p2 - s.p1;
        (d.cross(p - s.p1) / d.norm()).abs()
    };
    let mutual = line_dist(b.p1, a)
        .max(line_dist(b.p2, a))
        .max(line_dist(a.p1, b))
        .max(line_dist(a.p2, b));
    if mutual > dist_tol {
        return false;
    }
    segment_distance(a, b) <= gap_tol
}

/// Minimum distance between two closed segments.
fn segment_distance(a: &Seg2, b: &Seg2) -> Scalar {
    if a.segment_intersection(b).is_some() {
        return 0.0;
    }
    let point_seg = |p: P2, s: &Seg2| {
        let d = s.p2 - s.p1;
        let t = ((p - s.p1).dot(d) / d.norm_sq()).clamp(0.0, 1.0);
        p.dist(s.p1 + d * t)
    };
    point_seg(a.p1, b)
        .min(point_seg(a.p2, b))
        .min(point_seg(b.p1, a))
        .min(point_seg(b.p2, a))
}

/// Extremal-endpoint span of two near-collinear segments: a length-weighted
/// mean line through the weighted centroid, spanning all four projected
/// endpoints. Twin detections straddling a stroke collapse onto its
/// centerline.
pub fn merge_span(a: &Seg2, b: &Seg2) -> Seg2 {
    let (la, lb) = (a.length(), b.length());
    let mut da = a.direction();
    let mut db = b.direction();
    // Align directions before averaging; longer segment sets the sign.
    if la < lb {
        std::mem::swap(&mut da, &mut db);
    }
    if da.dot(db) < 0.0 {
        db = -db;
    }
    let dir = (da * la.max(lb) + db * la.min(lb)).normalized();
    let centroid = (a.midpoint() * la + b.midpoint() * lb) / (la + lb);
    let mut tmin = Scalar::INFINITY;
    let mut tmax = Scalar::NEG_INFINITY;
    for p in [a.p1, a.p2, b.p1, b.p2] {
        let t = (p - centroid).dot(dir);
        tmin = tmin.min(t);
        tmax = tmax.max(t);
    }
    Seg2 {
        p1: centroid + dir * tmin,
        p2: centroid + dir * tmax,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(x1: f64, y1: f64, x2: f64, y2: f64) -> Seg2 {
        Seg2::new(P2::new(x1, y1), P2::new(x2, y2)).unwrap()
    }

    #[test]
    fn gap_within_tolerance_merges() {
        let out = merge_collinear(&[seg(0.0, 0.0, 4.0, 0.0), seg(5.0, 0.0, 10.0, 0.0)], 2.0, 1.0, 2.0);
        assert_eq!(out, vec![seg(0.0, 0.0, 10.0, 0.0)]);
    }

    #[test]
    fn perpendicular_unchanged() {
        let input = vec![seg(0.0, 0.0, 10.0, 0.0), seg(5.0, -5.0, 5.0, 5.0)];
        let out = merge_collinear(&input, 2.0, 1.0, 2.0);
        assert_eq!(out, input);
    }

    #[test]
    fn chain_of_three_merges_transitively() {
        // Union-find oracle on the fixture: all three share one component
        // under the pairwise-mergeable relation, so exactly one segment
        // spanning the extremes must remain.
        let chain = vec![
            seg(0.0, 0.0, 3.0, 0.0),
            seg(4.0, 0.0, 7.0, 0.0),
            seg(8.0, 0.0, 11.0, 0.0),
        ];
        let mut parent = [0usize, 1, 2];
        fn find(parent: &mut [usize; 3], i: usize) -> usize {
            if parent[i] != i {
                parent[i] = find(parent, parent[i]);
            }
            parent[i]
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                if super::mergeable(&chain[i], &chain[j], 2.0f64.to_radians(), 1.0, 2.0) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
        let root = find(&mut parent, 0);
        assert!((0..3).all(|i| find(&mut parent, i) == root));
        let out = merge_collinear(&chain, 2.0, 1.0, 2.0);
        assert_eq!(out, vec![seg(0.0, 0.0, 11.0, 0.0)]);
    }

    #[test]
    fn twins_collapse_to_centerline() {
        let out = merge_collinear(
            &[seg(0.0, 1.0, 100.0, 1.0), seg(0.0, -1.0, 100.0, -1.0)],
            2.0,
            2.5,
            3.0,
        );
        assert_eq!(out.len(), 1);
        assert!(out[0].p1.y.abs() < 1e-9 && out[0].p2.y.abs() < 1e-9);
        assert!((out[0].length() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn idempotent() {
        let input = vec![
            seg(0.0, 0.0, 4.0, 0.1),
            seg(5.0, 0.0, 10.0, -0.1),
            seg(3.0, 8.0, 9.0, 8.0),
            seg(0.0, -10.0, 0.0, 10.0),
        ];
        let once = merge_collinear(&input, 3.0, 1.0, 2.0);
        let twice = merge_collinear(&once, 3.0, 1.0, 2.0);
        assert_eq!(once, twice);
    }

    #[test]
    fn never_increases_count_nor_merges_over_angle() {
        let input = vec![
            seg(0.0, 0.0, 10.0, 0.0),
            seg(10.5, 1.0, 20.0, 4.0),
            seg(0.0, 5.0, 10.0, 5.0),
        ];
        let out = merge_collinear(&input, 2.0, 1.0, 2.0);
        assert!(out.len() <= input.len());
        // (0,0)-(10,0) and the 17-degree segment exceed angle_tol.
        assert_eq!(out, input);
    }

    #[test]
    fn min_len_filter() {
        let out = merge_collinear_filtered(
            &[seg(0.0, 0.0, 3.0, 0.0), seg(0.0, 5.0, 30.0, 5.0)],
            2.0,
            1.0,
            1.0,
            5.0,
        );
        assert_eq!(out, vec![seg(0.0, 5.0, 30.0, 5.0)]);
    }
}
