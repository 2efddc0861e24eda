use crate::err::{Error, Result};
use crate::{P2, Scalar, Seg2};

/// Rotation-then-translation map of the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rigid2D {
    pub angle: Scalar,
    pub translation: P2,
}

impl Rigid2D {
    pub fn identity() -> Self {
        Rigid2D {
            angle: 0.0,
            translation: P2::new(0.0, 0.0),
        }
    }

    pub fn apply(&self, p: P2) -> P2 {
        p.rotated(self.angle) + self.translation
    }

    pub fn apply_seg(&self, s: &Seg2) -> Seg2 {
        Seg2 {
            p1: self.apply(s.p1),
            p2: self.apply(s.p2),
        }
    }

    pub fn inverse(&self) -> Rigid2D {
        Rigid2D {
            angle: -self.angle,
            translation: -self.translation.rotated(-self.angle),
        }
    }
}

fn trimmed_pairs(
    source: &[P2],
    target: &[P2],
    transform: Rigid2D,
    keep: usize,
) -> Vec<(usize, usize, Scalar)> {
    let mut pairs: Vec<(usize, usize, Scalar)> = source
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let moved = transform.apply(*p);
            let mut best = (0usize, Scalar::INFINITY);
            for (j, t) in target.iter().enumerate() {
                let d = moved.dist(*t);
                if d < best.1 {
                    best = (j, d);
                }
            }
            (i, best.0, best.1)
        })
        .collect();
    pairs.sort_by(|a, b| a.2.partial_cmp(&b.2).unwrap().then(a.0.cmp(&b.0)));
    pairs.truncate(keep);
    pairs
}

fn icp_from(
    source: &[P2],
    target: &[P2],
    init: Rigid2D,
    keep: usize,
    max_iters: usize,
    conv_tol: Scalar,
) -> (Rigid2D, Scalar) {
    let mut transform = init;
    let mut prev_residual = Scalar::INFINITY;
    for _ in 0..max_iters {
        let pairs = trimmed_pairs(source, target, transform, keep);
        let mut sc = P2::new(0.0, 0.0);
        let mut tc = P2::new(0.0, 0.0);
        for &(i, j, _) in &pairs {
            sc += source[i];
            tc += target[j];
        }
        sc /= pairs.len() as Scalar;
        tc /= pairs.len() as Scalar;
        let mut dot_sum = 0.0;
        let mut cross_sum = 0.0;
        for &(i, j, _) in &pairs {
            let a = source[i] - sc;
            let b = target[j] - tc;
            dot_sum += a.dot(b);
            cross_sum += a.cross(b);
        }
        let angle = if dot_sum == 0.0 && cross_sum == 0.0 {
            transform.angle
        } else {
            cross_sum.atan2(dot_sum)
        };
        transform = Rigid2D {
            angle,
            translation: tc - sc.rotated(angle),
        };

        let mean_residual =
            pairs.iter().map(|&(_, _, d)| d).sum::<Scalar>() / pairs.len() as Scalar;
        if (prev_residual - mean_residual).abs() < conv_tol {
            break;
        }
        prev_residual = mean_residual;
    }
    let final_pairs = trimmed_pairs(source, target, transform, keep);
    let residual =
        final_pairs.iter().map(|&(_, _, d)| d).sum::<Scalar>() / final_pairs.len() as Scalar;
    (transform, residual)
}

fn component_median(pts: &[P2]) -> P2 {
    let med = |mut vals: Vec<Scalar>| {
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals[vals.len() / 2]
    };
    P2::new(
        med(pts.iter().map(|p| p.x).collect()),
        med(pts.iter().map(|p| p.y).collect()),
    )
}

/// Iterative closest point with trimmed correspondences: each round keeps
/// the best 80% of nearest-neighbor pairs by residual and refits the
/// closed-form rigid transform. Several translation starts are tried and
/// the converged result with the smallest trimmed residual wins, so heavy
/// outliers cannot poison the initial guess. Returns the map taking source
/// onto target.
pub fn rigid_align(
    source: &[P2],
    target: &[P2],
    max_iters: usize,
    conv_tol: Scalar,
) -> Result<Rigid2D> {
    if source.len() < 2 || target.len() < 2 {
        return Err(Error::Geometry(format!(
            "icp needs at least 2 points per cloud, got {} and {}",
            source.len(),
            target.len()
        )));
    }
    let spread = source
        .iter()
        .map(|p| p.dist(source[0]))
        .fold(0.0, Scalar::max);
    if spread <= 1e-12 {
        return Err(Error::Geometry(
            "icp source points coincident; rotation unobservable".into(),
        ));
    }

    let centroid = |pts: &[P2]| {
        let mut c = P2::new(0.0, 0.0);
        for p in pts {
            c += *p;
        }
        c / pts.len() as Scalar
    };
    let keep = ((source.len() as Scalar * 0.8).ceil() as usize).max(2);
    let starts = [
        P2::new(0.0, 0.0),
        centroid(target) - centroid(source),
        component_median(target) - component_median(source),
    ];
    let mut best: Option<(Rigid2D, Scalar)> = None;
    for translation in starts {
        let init = Rigid2D {
            angle: 0.0,
            translation,
        };
        let (t, res) = icp_from(source, target, init, keep, max_iters, conv_tol);
        if best.as_ref().is_none_or(|(_, r)| res < *r) {
            best = Some((t, res));
        }
    }
    Ok(best.unwrap().0)
}
