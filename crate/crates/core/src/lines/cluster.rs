use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::lines::{Lol1Line, Lol2Cluster};
use crate::{P2, Scalar, Seg2};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterParams {
    pub split_tol: Scalar,
    pub seed: u64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            split_tol: 0.15,
            seed: 0,
        }
    }
}

/// Flip a direction into the upper half plane so features do not depend on
/// endpoint order.
fn canonical_dir(seg: &Seg2) -> P2 {
    let d = seg.direction();
    if d.y < 0.0 || (d.y == 0.0 && d.x < 0.0) {
        -d
    } else {
        d
    }
}

/// Clustering feature: doubled-angle embedding of the slope plus the signed
/// distance of the supporting line from the image center, normalized by the
/// image diagonal.
pub fn segment_feature(seg: &Seg2, center: P2, diag: Scalar) -> [Scalar; 3] {
    let u = canonical_dir(seg);
    let s = u.cross(seg.p1 - center) / diag.max(1e-12);
    [u.x * u.x - u.y * u.y, 2.0 * u.x * u.y, s]
}

fn dist2(a: &[Scalar; 3], b: &[Scalar; 3]) -> Scalar {
    let mut acc = 0.0;
    for c in 0..3 {
        let d = a[c] - b[c];
        acc += d * d;
    }
    acc
}

/// Structural-line clustering: K grows from 1 until every cluster is tighter
/// than split_tol in feature space (or every segment is its own cluster).
pub fn cluster_lol2(
    lol1: &[Lol1Line],
    center: P2,
    diag: Scalar,
    params: &ClusterParams,
) -> Vec<Lol2Cluster> {
    if lol1.is_empty() {
        return Vec::new();
    }
    let features: Vec<[Scalar; 3]> = lol1
        .iter()
        .map(|l| segment_feature(&l.seg, center, diag))
        .collect();
    let n = features.len();
    let mut k = 1;
    let (labels, centroids) = loop {
        let (labels, centroids) = kmeans(&features, k, params.seed);
        let mut radius = vec![0.0 as Scalar; k];
        for (i, &l) in labels.iter().enumerate() {
            radius[l] = radius[l].max(dist2(&features[i], &centroids[l]).sqrt());
        }
        if radius.iter().all(|&r| r <= params.split_tol) || k == n {
            break (labels, centroids);
        }
        k += 1;
    };
    let _ = centroids;

    let mut clusters = Vec::new();
    for kk in 0..k {
        let members: Vec<usize> = (0..n).filter(|&i| labels[i] == kk).collect();
        if members.is_empty() {
            continue;
        }
        let representative = representative_line(lol1, &members, center);
        clusters.push(Lol2Cluster {
            representative,
            members,
        });
    }
    clusters
}

/// Length-weighted mean line of the members, spanning the extremal endpoint
/// projections.
fn representative_line(lol1: &[Lol1Line], members: &[usize], center: P2) -> Seg2 {
    let mut w_sum = 0.0;
    let mut dbl = P2::new(0.0, 0.0);
    let mut s_sum = 0.0;
    for &i in members {
        let seg = &lol1[i].seg;
        let w = seg.length();
        let u = canonical_dir(seg);
        dbl += P2::new(u.x * u.x - u.y * u.y, 2.0 * u.x * u.y) * w;
        s_sum += u.cross(seg.p1 - center) * w;
        w_sum += w;
    }
    let alpha = 0.5 * dbl.y.atan2(dbl.x);
    let mut u = P2::new(alpha.cos(), alpha.sin());
    if u.y < 0.0 || (u.y == 0.0 && u.x < 0.0) {
        u = -u;
    }
    let q = center + u.perp() * (s_sum / w_sum);
    let mut tmin = Scalar::INFINITY;
    let mut tmax = Scalar::NEG_INFINITY;
    for &i in members {
        for p in [lol1[i].seg.p1, lol1[i].seg.p2] {
            let t = (p - q).dot(u);
            tmin = tmin.min(t);
            tmax = tmax.max(t);
        }
    }
    if tmax - tmin > 1e-9 {
        Seg2 {
            p1: q + u * tmin,
            p2: q + u * tmax,
        }
    } else {
        let longest = members
            .iter()
            .copied()
            .max_by(|&a, &b| {
                lol1[a]
                    .seg
                    .length()
                    .partial_cmp(&lol1[b].seg.length())
                    .unwrap()
            })
            .unwrap();
        lol1[longest].seg
    }
}

/// Lloyd iterations over k-means++ seeds; ties and empty clusters resolve to
/// the lowest index so the result is reproducible.
fn kmeans(features: &[[Scalar; 3]], k: usize, seed: u64) -> (Vec<usize>, Vec<[Scalar; 3]>) {
    let n = features.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<[Scalar; 3]> = Vec::with_capacity(k);
    centroids.push(features[rng.random_range(0..n)]);
    let mut d2: Vec<Scalar> = features.iter().map(|f| dist2(f, &centroids[0])).collect();
    while centroids.len() < k {
        let total: Scalar = d2.iter().sum();
        let pick = if total <= 0.0 {
            0
        } else {
            let mut r = rng.random_range(0.0..total);
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if r < w {
                    pick = i;
                    break;
                }
                r -= w;
            }
            pick
        };
        centroids.push(features[pick]);
        let last = *centroids.last().unwrap();
        for i in 0..n {
            d2[i] = d2[i].min(dist2(&features[i], &last));
        }
    }

    let mut labels = vec![0usize; n];
    for _ in 0..100 {
        let mut changed = false;
        for i in 0..n {
            let mut best = (0usize, Scalar::INFINITY);
            for (kk, c) in centroids.iter().enumerate() {
                let d = dist2(&features[i], c);
                if d < best.1 {
                    best = (kk, d);
                }
            }
            if labels[i] != best.0 {
                labels[i] = best.0;
                changed = true;
            }
        }
        let mut sums = vec![[0.0; 3]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            for c in 0..3 {
                sums[labels[i]][c] += features[i][c];
            }
            counts[labels[i]] += 1;
        }
        for kk in 0..k {
            if counts[kk] > 0 {
                for c in 0..3 {
                    centroids[kk][c] = sums[kk][c] / counts[kk] as Scalar;
                }
            }
        }
        if !changed {
            break;
        }
    }
    (labels, centroids)
}
