use crate::err::{Error, Result};
use crate::geom::ProxyPolygon;
use crate::view::{ProjectedRegion, SelectionState, SelectionWeights};
use crate::{P3, Scalar};

/// Mean source-image gradient magnitude over the region's valid samples.
pub fn gradient_score(region: &ProjectedRegion) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, &v) in region.valid.iter().enumerate() {
        if v {
            sum += region.grad[i];
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Numeric("region has no valid samples".into()));
    }
    Ok(sum / count as f64)
}

/// Gaussian photo-consistency of a region's mean color against the pool of
/// candidate regions, normalized so the best-fitting candidate scores 1.
pub fn photo_consistency(region: &ProjectedRegion, all_regions: &[ProjectedRegion]) -> f64 {
    let means: Vec<[f64; 3]> = all_regions.iter().map(|r| r.mean_color).collect();
    photo_consistency_of_mean(region.mean_color, &means)
}

pub(crate) fn photo_consistency_of_mean(mean: [f64; 3], pool: &[[f64; 3]]) -> f64 {
    if pool.is_empty() {
        return 1.0;
    }
    let n = pool.len() as f64;
    let mut mu = [0.0; 3];
    for m in pool {
        for c in 0..3 {
            mu[c] += m[c];
        }
    }
    for c in &mut mu {
        *c /= n;
    }
    let mut cov = nalgebra::Matrix3::<f64>::zeros();
    for m in pool {
        let d = nalgebra::Vector3::new(m[0] - mu[0], m[1] - mu[1], m[2] - mu[2]);
        cov += d * d.transpose();
    }
    cov /= n;
    cov += nalgebra::Matrix3::identity() * 1e-4;
    let inv = cov.try_inverse().expect("regularized covariance invertible");
    let kernel = |x: [f64; 3]| {
        let d = nalgebra::Vector3::new(x[0] - mu[0], x[1] - mu[1], x[2] - mu[2]);
        (-0.5 * (d.transpose() * inv * d)[0]).exp()
    };
    let max = pool.iter().map(|m| kernel(*m)).fold(0.0f64, f64::max);
    if max <= 0.0 {
        return 1.0;
    }
    kernel(mean) / max
}

/// 1 - D_c, where D_c is the mean absolute per-channel color difference
/// between the region and the already-selected texture over their shared
/// valid nodes. 1 when nothing is selected or nothing overlaps.
pub fn smoothness(region: &ProjectedRegion, selected: &[ProjectedRegion]) -> f64 {
    let composite = first_wins_composite(region.grid.len(), selected);
    smoothness_against_composite(region, &composite)
}

pub(crate) fn first_wins_composite(
    len: usize,
    selected: &[ProjectedRegion],
) -> Vec<Option<[f64; 3]>> {
    let mut composite = vec![None; len];
    for r in selected {
        for i in 0..len.min(r.valid.len()) {
            if r.valid[i] && composite[i].is_none() {
                composite[i] = Some(r.colors[i]);
            }
        }
    }
    composite
}

pub(crate) fn smoothness_against_composite(
    region: &ProjectedRegion,
    composite: &[Option<[f64; 3]>],
) -> f64 {
    let mut diff = 0.0;
    let mut count = 0usize;
    for (i, &v) in region.valid.iter().enumerate() {
        if !v {
            continue;
        }
        if let Some(base) = composite.get(i).copied().flatten() {
            let a = region.colors[i];
            diff += ((a[0] - base[0]).abs() + (a[1] - base[1]).abs() + (a[2] - base[2]).abs())
                / 3.0;
            count += 1;
        }
    }
    if count == 0 {
        return 1.0;
    }
    1.0 - diff / count as f64
}

/// Q_persp = 1 - (1/(N+1)) [ D_n(v_j, -n_i) + sum_n D_theta(v_j, v_n) ]
/// with D_n = (2/pi) acos(v·n) and D_theta = (1/pi) acos(u1·u2).
pub fn perspective_quality(
    region: &ProjectedRegion,
    selected: &[ProjectedRegion],
    polygon: &ProxyPolygon<Scalar>,
) -> Result<f64> {
    let dirs: Vec<P3> = selected.iter().map(|r| r.view_dir).collect();
    perspective_quality_dirs(region.view_dir, &dirs, polygon.normal)
}

pub fn perspective_quality_dirs(v_j: P3, selected: &[P3], normal: P3) -> Result<f64> {
    check_unit(v_j, "view direction")?;
    check_unit(normal, "plane normal")?;
    for v in selected {
        check_unit(*v, "selected view direction")?;
    }
    let pi = std::f64::consts::PI;
    let d_n = 2.0 / pi * v_j.dot(-normal).clamp(-1.0, 1.0).acos();
    let mut sum = d_n;
    for v in selected {
        sum += v_j.dot(*v).clamp(-1.0, 1.0).acos() / pi;
    }
    Ok(1.0 - sum / (selected.len() + 1) as f64)
}

fn check_unit(v: P3, what: &str) -> Result<()> {
    if (v.norm() - 1.0).abs() > 1e-6 {
        return Err(Error::Numeric(format!("{what} is not unit length")));
    }
    Ok(())
}

/// Greedy objective for one candidate at the current selection state:
/// Q_j = [lambda_g G + lambda_c C] (A_j / A_k) + lambda_s Q_smooth
///       + lambda_p Q_persp.
pub fn score(
    region: &ProjectedRegion,
    state: &SelectionState,
    all_regions: &[ProjectedRegion],
    polygon: &ProxyPolygon<Scalar>,
    weights: &SelectionWeights,
) -> Result<f64> {
    let means: Vec<[f64; 3]> = all_regions.iter().map(|r| r.mean_color).collect();
    score_with_pool(region, state, &means, polygon, weights)
}

pub(crate) fn score_with_pool(
    region: &ProjectedRegion,
    state: &SelectionState,
    pool_means: &[[f64; 3]],
    polygon: &ProxyPolygon<Scalar>,
    weights: &SelectionWeights,
) -> Result<f64> {
    let a_k = state.unobserved.area();
    let coverage = if a_k > 0.0 {
        region.footprint.intersection(&state.unobserved).area() / a_k
    } else {
        0.0
    };
    let g = region.gradient_score;
    let c = photo_consistency_of_mean(region.mean_color, pool_means);
    let q_smooth = smoothness_against_composite(region, &state.composite);
    let dirs: Vec<P3> = state.selected.iter().map(|r| r.view_dir).collect();
    let q_persp = perspective_quality_dirs(region.view_dir, &dirs, polygon.normal)?;
    Ok((weights.lambda_g * g + weights.lambda_c * c) * coverage
        + weights.lambda_s * q_smooth
        + weights.lambda_p * q_persp)
}
