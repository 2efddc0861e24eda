use geo::{Area, BooleanOps, Contains, Coord, LineString, MultiPolygon, Polygon};

use crate::geom::{Loop, PolygonBoundary, Vec2};

/// Planar region as a set of polygons with holes. Wraps exact boolean set
/// operations used for coverage-area bookkeeping during view selection.
#[derive(Clone, Debug)]
pub struct RegionSet {
    mp: MultiPolygon<f64>,
}

impl RegionSet {
    pub fn empty() -> Self {
        RegionSet {
            mp: MultiPolygon::new(Vec::new()),
        }
    }

    pub fn from_boundary(b: &PolygonBoundary<f64>) -> Self {
        let exterior = loop_to_linestring(&b.outer);
        let interiors = b.holes.iter().map(loop_to_linestring).collect();
        RegionSet {
            mp: MultiPolygon::new(vec![Polygon::new(exterior, interiors)]),
        }
    }

    /// Union of the true cells of a grid mask. Cell (x, y) spans
    /// [origin + (x, y)·step, origin + (x+1, y+1)·step].
    pub fn from_mask(mask: &[bool], w: usize, h: usize, origin: Vec2<f64>, step: f64) -> Self {
        assert_eq!(mask.len(), w * h);
        // Row runs merged vertically into maximal rectangles before the
        // union pass keeps the polygon count small.
        let mut rects: Vec<(usize, usize, usize, usize)> = Vec::new();
        let mut open: Vec<(usize, usize, usize)> = Vec::new();
        for y in 0..h {
            let mut runs: Vec<(usize, usize)> = Vec::new();
            let mut x = 0;
            while x < w {
                if mask[y * w + x] {
                    let x0 = x;
                    while x < w && mask[y * w + x] {
                        x += 1;
                    }
                    runs.push((x0, x));
                } else {
                    x += 1;
                }
            }
            let mut next_open = Vec::new();
            for &(x0, x1) in &runs {
                if let Some(pos) = open.iter().position(|&(ox0, ox1, _)| ox0 == x0 && ox1 == x1)
                {
                    let (ox0, ox1, oy) = open.remove(pos);
                    next_open.push((ox0, ox1, oy));
                } else {
                    next_open.push((x0, x1, y));
                }
            }
            for (ox0, ox1, oy) in open.drain(..) {
                rects.push((ox0, ox1, oy, y));
            }
            open = next_open;
        }
        for (ox0, ox1, oy) in open {
            rects.push((ox0, ox1, oy, h));
        }
        let polys: Vec<Polygon<f64>> = rects
            .into_iter()
            .map(|(x0, x1, y0, y1)| {
                let xa = origin.x + x0 as f64 * step;
                let xb = origin.x + x1 as f64 * step;
                let ya = origin.y + y0 as f64 * step;
                let yb = origin.y + y1 as f64 * step;
                Polygon::new(
                    LineString::from(vec![(xa, ya), (xb, ya), (xb, yb), (xa, yb)]),
                    vec![],
                )
            })
            .collect();
        let mut acc = MultiPolygon::new(Vec::new());
        for p in polys {
            acc = acc.union(&MultiPolygon::new(vec![p]));
        }
        RegionSet { mp: acc }
    }

    pub fn area(&self) -> f64 {
        self.mp.unsigned_area()
    }

    pub fn is_empty(&self) -> bool {
        self.mp.0.is_empty() || self.area() == 0.0
    }

    pub fn intersection(&self, other: &RegionSet) -> RegionSet {
        RegionSet {
            mp: self.mp.intersection(&other.mp),
        }
    }

    pub fn union(&self, other: &RegionSet) -> RegionSet {
        RegionSet {
            mp: self.mp.union(&other.mp),
        }
    }

    pub fn difference(&self, other: &RegionSet) -> RegionSet {
        RegionSet {
            mp: self.mp.difference(&other.mp),
        }
    }

    pub fn contains_point(&self, p: Vec2<f64>) -> bool {
        self.mp.contains(&geo::Point::new(p.x, p.y))
    }

    /// Outer/hole loops of each component polygon.
    pub fn boundaries(&self) -> Vec<PolygonBoundary<f64>> {
        self.mp
            .0
            .iter()
            .filter_map(|p| {
                let outer = linestring_to_loop(p.exterior())?;
                let holes = p
                    .interiors()
                    .iter()
                    .filter_map(linestring_to_loop)
                    .collect();
                PolygonBoundary::new(outer, holes).ok()
            })
            .collect()
    }
}

fn loop_to_linestring(lp: &Loop<f64>) -> LineString<f64> {
    LineString::from(
        lp.vertices
            .iter()
            .map(|v| Coord { x: v.x, y: v.y })
            .collect::<Vec<_>>(),
    )
}

fn linestring_to_loop(ls: &LineString<f64>) -> Option<Loop<f64>> {
    let mut pts: Vec<Vec2<f64>> = ls.coords().map(|c| Vec2::new(c.x, c.y)).collect();
    if pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    Loop::new(pts).ok()
}
