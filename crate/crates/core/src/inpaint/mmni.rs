use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::err::{Error, Result};
use crate::lines::Lol2Cluster;
use crate::raster::{Gray, Mask};
use crate::{Scalar, P2};

pub const MU_RANGE: (f64, f64) = (0.0, 10.0);
pub const SIGMA_RANGE: (f64, f64) = (1.0, 50.0);

/// Unobserved pixels split into strips along the second principal
/// direction, ordered by their projection onto it.
#[derive(Clone, Debug)]
pub struct MaskPartition {
    pub parts: Vec<Vec<(usize, usize)>>,
    pub direction: P2,
    /// Requested strips that held no pixels and were dropped.
    pub dropped: usize,
    pub w: usize,
    pub h: usize,
}

/// Per-part Gaussian parameters drawn for the noise initialization.
#[derive(Clone, Debug, Serialize)]
pub struct NoiseSpec {
    pub params: Vec<(f64, f64)>,
    pub seed: u64,
}

/// Dominant line direction and its perpendicular. Doubled angles make
/// opposite segment orientations agree; the top eigenvector of the
/// length-weighted scatter decodes back to the line orientation, with the
/// weighted resultant fixing the eigenvector's sign ambiguity.
pub fn principal_directions(lol2: &[Lol2Cluster]) -> Result<(P2, P2)> {
    let mut a = 0.0;
    let mut b = 0.0;
    let mut c = 0.0;
    let mut mean = P2::new(0.0, 0.0);
    let mut total = 0.0;
    for cl in lol2 {
        let d = cl.representative.p2 - cl.representative.p1;
        let len = d.norm();
        if len < 1e-12 {
            continue;
        }
        let phi = 2.0 * d.y.atan2(d.x);
        let u = P2::new(phi.cos(), phi.sin());
        a += len * u.x * u.x;
        b += len * u.x * u.y;
        c += len * u.y * u.y;
        mean += u * len;
        total += len;
    }
    if total < 1e-12 {
        return Err(Error::Geometry(
            "no structural lines to take principal directions from".into(),
        ));
    }
    let lmax = 0.5 * (a + c) + (0.25 * (a - c) * (a - c) + b * b).sqrt();
    // Two expressions for the same eigenvector; take the better conditioned.
    let v1 = P2::new(b, lmax - a);
    let v2 = P2::new(lmax - c, b);
    let mut v = if v1.norm() >= v2.norm() { v1 } else { v2 };
    if v.norm() < 1e-12 {
        // Isotropic scatter carries no orientation preference.
        v = P2::new(1.0, 0.0);
    }
    if v.dot(mean) < 0.0 {
        v = -v;
    }
    let phi = 0.5 * v.y.atan2(v.x);
    let mut d1 = P2::new(phi.cos(), phi.sin());
    if d1.x < 0.0 || (d1.x == 0.0 && d1.y < 0.0) {
        d1 = -d1;
    }
    Ok((d1, P2::new(-d1.y, d1.x)))
}

fn project(x: usize, y: usize, d: P2) -> Scalar {
    d.x * x as Scalar + d.y * y as Scalar
}

fn mask_extent(mask: &Mask, d: P2) -> (Scalar, Scalar) {
    let mut lo = Scalar::INFINITY;
    let mut hi = Scalar::NEG_INFINITY;
    for y in 0..mask.h {
        for x in 0..mask.w {
            if mask.get(x, y) {
                let t = project(x, y, d);
                lo = lo.min(t);
                hi = hi.max(t);
            }
        }
    }
    (lo, hi)
}

/// Splits the projected range into equal intervals and buckets every masked
/// pixel; strips that stay empty are dropped and counted.
pub fn partition_mask(mask: &Mask, d2: P2, part_count: usize) -> Result<MaskPartition> {
    if mask.count() == 0 {
        return Err(Error::Geometry("cannot partition an empty mask".into()));
    }
    let count = part_count.max(1);
    let (lo, hi) = mask_extent(mask, d2);
    let span = hi - lo;
    let mut parts = vec![Vec::new(); count];
    for y in 0..mask.h {
        for x in 0..mask.w {
            if !mask.get(x, y) {
                continue;
            }
            let k = if span < 1e-12 {
                0
            } else {
                let raw = (project(x, y, d2) - lo) / span * count as Scalar;
                (raw.floor() as usize).min(count - 1)
            };
            parts[k].push((x, y));
        }
    }
    let requested = parts.len();
    let parts: Vec<_> = parts.into_iter().filter(|p| !p.is_empty()).collect();
    Ok(MaskPartition {
        dropped: requested - parts.len(),
        parts,
        direction: d2,
        w: mask.w,
        h: mask.h,
    })
}

/// Strip count heuristic: mask extent along d2 over the median spacing of
/// the structural lines along d2, clamped to [2, 8].
pub fn default_part_count(mask: &Mask, d2: P2, lol2: &[Lol2Cluster]) -> usize {
    let (lo, hi) = mask_extent(mask, d2);
    if !(hi > lo) {
        return 2;
    }
    let mut proj: Vec<Scalar> = lol2
        .iter()
        .map(|c| {
            let m = c.representative.midpoint();
            d2.x * m.x + d2.y * m.y
        })
        .collect();
    proj.sort_by(Scalar::total_cmp);
    let mut gaps: Vec<Scalar> = proj
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|g| *g > 1e-9)
        .collect();
    if gaps.is_empty() {
        return 2;
    }
    gaps.sort_by(Scalar::total_cmp);
    let median = gaps[gaps.len() / 2];
    (((hi - lo) / median).round() as i64).clamp(2, 8) as usize
}

/// Gaussian parameters are drawn once per part, then every pixel of the
/// part is filled i.i.d.; everything derives from the one seed.
pub fn init_multinoise(partition: &MaskPartition, seed: u64) -> Result<(Gray, NoiseSpec)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = Gray::new(partition.w, partition.h);
    let mut params = Vec::with_capacity(partition.parts.len());
    for part in &partition.parts {
        let mu = rng.random_range(MU_RANGE.0..=MU_RANGE.1);
        let sigma = rng.random_range(SIGMA_RANGE.0..=SIGMA_RANGE.1);
        let normal =
            Normal::new(mu, sigma).map_err(|e| Error::Numeric(format!("noise density: {e}")))?;
        for &(x, y) in part {
            noise.set(x, y, normal.sample(&mut rng));
        }
        params.push((mu, sigma));
    }
    Ok((noise, NoiseSpec { params, seed }))
}
