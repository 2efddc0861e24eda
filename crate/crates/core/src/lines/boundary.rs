use serde::{Deserialize, Serialize};

use crate::err::{Error, Result};
use crate::geom::point_line_distance;
use crate::{Scalar, Seg2};

/// Agreement of a detected line with one boundary edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMatchMetrics {
    /// Acute angle between the lines, degrees in [0, 90].
    pub theta_deg: Scalar,
    /// Max distance of the line's endpoints to the edge's supporting line.
    pub d_line: Scalar,
    /// Overlap defect along the edge: 0 when contained, finite when partly
    /// overhanging, infinite when disjoint.
    pub non_overlap: Scalar,
}

impl BoundaryMatchMetrics {
    pub fn passes(&self, t: &MatchThresholds) -> bool {
        self.theta_deg <= t.theta_deg
            && self.d_line <= t.d_line
            && self.non_overlap <= t.non_overlap
    }
}

/// Acceptance thresholds for boundary matching.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatchThresholds {
    pub theta_deg: Scalar,
    pub d_line: Scalar,
    pub non_overlap: Scalar,
}

impl Default for MatchThresholds {
    fn default() -> Self {
        MatchThresholds {
            theta_deg: 5.0,
            d_line: 10.0,
            non_overlap: 100.0,
        }
    }
}

/// Computes the three matching metrics of a line L against a boundary edge
/// b. Non-overlap projects L onto b's supporting line and compares the
/// parameter interval with [0, 1]: disjoint intervals give infinity, full
/// containment gives 0, and each overhanging end contributes its distance
/// to the nearest edge endpoint, minimized over the overhanging ends.
pub fn boundary_metrics(l: &Seg2, b: &Seg2) -> Result<BoundaryMatchMetrics> {
    if l.p1 == l.p2 || b.p1 == b.p2 {
        return Err(Error::Geometry("degenerate segment in boundary metrics".into()));
    }
    let theta_deg = l.acute_angle_to(b).to_degrees();
    let d_line = point_line_distance(l.p1, b)?.max(point_line_distance(l.p2, b)?);
    let w1 = b.project_param(l.p1);
    let w2 = b.project_param(l.p2);
    let (lo, hi) = (w1.min(w2), w1.max(w2));
    let non_overlap = if hi < 0.0 || lo > 1.0 {
        Scalar::INFINITY
    } else {
        let mut best = Scalar::INFINITY;
        for w in [lo, hi] {
            if w < 0.0 || w > 1.0 {
                let p = b.point_at(w);
                best = best.min(p.dist(b.p1).min(p.dist(b.p2)));
            }
        }
        if best.is_finite() {
            best
        } else {
            0.0
        }
    };
    Ok(BoundaryMatchMetrics {
        theta_deg,
        d_line,
        non_overlap,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::P2;

    fn seg(x1: f64, y1: f64, x2: f64, y2: f64) -> Seg2 {
        Seg2::new(P2::new(x1, y1), P2::new(x2, y2)).unwrap()
    }

    #[test]
    fn identical_segments() {
        let m = boundary_metrics(&seg(0.0, 0.0, 10.0, 0.0), &seg(0.0, 0.0, 10.0, 0.0)).unwrap();
        assert_eq!((m.theta_deg, m.d_line, m.non_overlap), (0.0, 0.0, 0.0));
    }

    #[test]
    fn parallel_contained() {
        let m = boundary_metrics(&seg(0.0, 2.0, 10.0, 2.0), &seg(0.0, 0.0, 10.0, 0.0)).unwrap();
        assert_eq!((m.theta_deg, m.d_line, m.non_overlap), (0.0, 2.0, 0.0));
    }

    #[test]
    fn partial_overlap_distance() {
        let m = boundary_metrics(&seg(8.0, 0.0, 15.0, 0.0), &seg(0.0, 0.0, 10.0, 0.0)).unwrap();
        assert_eq!(m.non_overlap, 5.0);
    }

    #[test]
    fn disjoint_is_infinite() {
        let m = boundary_metrics(&seg(12.0, 0.0, 20.0, 0.0), &seg(0.0, 0.0, 10.0, 0.0)).unwrap();
        assert!(m.non_overlap.is_infinite());
    }

    #[test]
    fn spanning_overlap_takes_minimum_end() {
        // L covers b entirely and overhangs by 2 on the left, 7 on the
        // right; both ends overhang so the minimum wins.
        let m = boundary_metrics(&seg(-2.0, 0.0, 17.0, 0.0), &seg(0.0, 0.0, 10.0, 0.0)).unwrap();
        assert_eq!(m.non_overlap, 2.0);
    }

    #[test]
    fn angle_is_acute() {
        let m = boundary_metrics(&seg(0.0, 0.0, 0.0, 5.0), &seg(0.0, 0.0, 10.0, 0.0)).unwrap();
        assert!((m.theta_deg - 90.0).abs() < 1e-9);
        let m = boundary_metrics(&seg(0.0, 0.0, -5.0, -5.0), &seg(0.0, 0.0, 10.0, 0.0)).unwrap();
        assert!((m.theta_deg - 45.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_errors() {
        let z = Seg2 {
            p1: P2::new(1.0, 1.0),
            p2: P2::new(1.0, 1.0),
        };
        assert!(boundary_metrics(&z, &seg(0.0, 0.0, 1.0, 0.0)).is_err());
        assert!(boundary_metrics(&seg(0.0, 0.0, 1.0, 0.0), &z).is_err());
    }

    proptest! {
        #[test]
        fn rigid_invariance(
            lx1 in -40.0f64..40.0, ly1 in -40.0f64..40.0,
            dx in 1.0f64..30.0, dy in -10.0f64..10.0,
            bx1 in -40.0f64..40.0, by1 in -40.0f64..40.0,
            ex in 1.0f64..30.0, ey in -10.0f64..10.0,
            angle in -3.0f64..3.0, tx in -50.0f64..50.0, ty in -50.0f64..50.0,
        ) {
            let l = seg(lx1, ly1, lx1 + dx, ly1 + dy);
            let b = seg(bx1, by1, bx1 + ex, by1 + ey);
            let m0 = boundary_metrics(&l, &b).unwrap();
            let map = |p: P2| p.rotated(angle) + P2::new(tx, ty);
            let l2 = Seg2 { p1: map(l.p1), p2: map(l.p2) };
            let b2 = Seg2 { p1: map(b.p1), p2: map(b.p2) };
            let m1 = boundary_metrics(&l2, &b2).unwrap();
            prop_assert!((m0.theta_deg - m1.theta_deg).abs() < 1e-9);
            prop_assert!((m0.d_line - m1.d_line).abs() < 1e-9);
            if m0.non_overlap.is_infinite() {
                prop_assert!(m1.non_overlap.is_infinite());
            } else {
                prop_assert!((m0.non_overlap - m1.non_overlap).abs() < 1e-9);
            }
        }
    }
}
