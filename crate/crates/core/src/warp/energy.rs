use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::err::{Error, Result};
use crate::lines::Lol1Line;
use crate::solver::{conjugate_gradient, SparseMatrix, Triplets};
use crate::warp::matching::MatchSet;
use crate::warp::mesh::AdaptiveMesh;
use crate::{P2, Scalar};

/// Term weights for the warp energy. The paper's formula leaves two points
/// ambiguous which the defaults here resolve: alignment and straightness use
/// squared distances (making the energy an exactly solvable quadratic), and
/// the regularizer sums over all mesh vertices so unmatched ones stay put.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyWeights {
    pub lambda_a: Scalar,
    pub lambda_l: Scalar,
    pub lambda_r: Scalar,
}

impl Default for EnergyWeights {
    fn default() -> Self {
        EnergyWeights {
            lambda_a: 0.5,
            lambda_l: 0.5,
            lambda_r: 0.025,
        }
    }
}

impl EnergyWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda_a, self.lambda_l, self.lambda_r];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config(format!(
                "energy weights must be finite and non-negative, got {self:?}"
            )));
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err(Error::Config("all energy weights are zero".into()));
        }
        Ok(())
    }
}

/// Per-vertex offsets minimizing the warp energy, with the unweighted value
/// of each term at those offsets.
#[derive(Clone, Debug)]
pub struct WarpField {
    pub offsets: Vec<P2>,
    pub ea: Scalar,
    pub el: Scalar,
    pub er: Scalar,
}

impl WarpField {
    pub fn zero(n: usize) -> Self {
        WarpField {
            offsets: vec![P2::new(0.0, 0.0); n],
            ea: 0.0,
            el: 0.0,
            er: 0.0,
        }
    }

    pub fn total(&self, weights: &EnergyWeights) -> Scalar {
        weights.lambda_a * self.ea + weights.lambda_l * self.el + weights.lambda_r * self.er
    }

    pub fn deformed(&self, mesh: &AdaptiveMesh) -> Vec<P2> {
        mesh.vertices
            .iter()
            .zip(&self.offsets)
            .map(|(v, d)| *v + *d)
            .collect()
    }
}

fn check_inputs(mesh: &AdaptiveMesh, matches: &MatchSet, lol1_tar: &[Lol1Line]) -> Result<()> {
    if mesh.chains.len() != lol1_tar.len() {
        return Err(Error::Geometry(format!(
            "mesh has {} chains but {} target lines",
            mesh.chains.len(),
            lol1_tar.len()
        )));
    }
    for pair in &matches.pairs {
        if pair.target >= mesh.chains.len() {
            return Err(Error::Geometry(format!(
                "match references target line {} of {}",
                pair.target,
                mesh.chains.len()
            )));
        }
    }
    Ok(())
}

/// E = x'Ax + 2g'x + c over the stacked offset vector x in R^{2n}.
struct Quadratic {
    a: SparseMatrix<Scalar>,
    g: Vec<Scalar>,
    /// Constant term; the minimizer ignores it but cross-checks need it.
    #[cfg_attr(not(test), allow(dead_code))]
    c: Scalar,
}

fn assemble(
    mesh: &AdaptiveMesh,
    matches: &MatchSet,
    lol1_tar: &[Lol1Line],
    weights: &EnergyWeights,
) -> Result<Quadratic> {
    check_inputs(mesh, matches, lol1_tar)?;
    let n = mesh.vertices.len();
    let mut trip = Triplets::new(2 * n, 2 * n);
    let mut g = vec![0.0 as Scalar; 2 * n];
    let mut c = 0.0;

    for pair in &matches.pairs {
        let chain = &mesh.chains[pair.target];
        let nr = pair.ref_seg.normal();
        let q = pair.ref_seg.p1;
        for e in [chain.endpoints.0, chain.endpoints.1] {
            let r = nr.dot(mesh.vertices[e] - q);
            let nv = [nr.x, nr.y];
            for i in 0..2 {
                for j in 0..2 {
                    trip.push(2 * e + i, 2 * e + j, weights.lambda_a * nv[i] * nv[j]);
                }
                g[2 * e + i] += weights.lambda_a * r * nv[i];
            }
            c += weights.lambda_a * r * r;
        }
    }

    for (j, chain) in mesh.chains.iter().enumerate() {
        let nj = lol1_tar[j].seg.normal();
        for &(a, b) in &chain.sub_edges {
            let cab = nj.dot(mesh.vertices[a] - mesh.vertices[b]);
            // Residual m'x + cab with m supported on the 4 coords of a and b.
            let idx = [2 * a, 2 * a + 1, 2 * b, 2 * b + 1];
            let m = [nj.x, nj.y, -nj.x, -nj.y];
            for i in 0..4 {
                for k in 0..4 {
                    trip.push(idx[i], idx[k], weights.lambda_l * m[i] * m[k]);
                }
                g[idx[i]] += weights.lambda_l * cab * m[i];
            }
            c += weights.lambda_l * cab * cab;
        }
    }

    for d in 0..2 * n {
        trip.push(d, d, weights.lambda_r);
    }

    Ok(Quadratic {
        a: trip.to_csr(),
        g,
        c,
    })
}

/// Unweighted (Ea, El, Er) of the energy at the given offsets, each term
/// computed directly from its definition.
pub fn energy_value(
    mesh: &AdaptiveMesh,
    matches: &MatchSet,
    lol1_tar: &[Lol1Line],
    offsets: &[P2],
) -> Result<(Scalar, Scalar, Scalar)> {
    check_inputs(mesh, matches, lol1_tar)?;
    if offsets.len() != mesh.vertices.len() {
        return Err(Error::Geometry(format!(
            "offset count {} does not match vertex count {}",
            offsets.len(),
            mesh.vertices.len()
        )));
    }
    let mut ea = 0.0;
    for pair in &matches.pairs {
        let chain = &mesh.chains[pair.target];
        let nr = pair.ref_seg.normal();
        let q = pair.ref_seg.p1;
        for e in [chain.endpoints.0, chain.endpoints.1] {
            let d = nr.dot(mesh.vertices[e] + offsets[e] - q);
            ea += d * d;
        }
    }
    if !ea.is_finite() {
        return Err(Error::Numeric("alignment energy is not finite".into()));
    }
    let mut el = 0.0;
    for (j, chain) in mesh.chains.iter().enumerate() {
        let nj = lol1_tar[j].seg.normal();
        for &(a, b) in &chain.sub_edges {
            let d = nj.dot(mesh.vertices[a] + offsets[a] - mesh.vertices[b] - offsets[b]);
            el += d * d;
        }
    }
    if !el.is_finite() {
        return Err(Error::Numeric("straightness energy is not finite".into()));
    }
    let er: Scalar = offsets.iter().map(|d| d.norm_sq()).sum();
    if !er.is_finite() {
        return Err(Error::Numeric("regularization energy is not finite".into()));
    }
    Ok((ea, el, er))
}

/// Gradient of the weighted energy with respect to the stacked offsets.
pub fn energy_gradient(
    mesh: &AdaptiveMesh,
    matches: &MatchSet,
    lol1_tar: &[Lol1Line],
    weights: &EnergyWeights,
    offsets: &[P2],
) -> Result<Vec<Scalar>> {
    let quad = assemble(mesh, matches, lol1_tar, weights)?;
    let x: Vec<Scalar> = offsets.iter().flat_map(|d| [d.x, d.y]).collect();
    let ax = quad.a.mul_vec(&x);
    Ok(ax
        .iter()
        .zip(&quad.g)
        .map(|(axi, gi)| 2.0 * (axi + gi))
        .collect())
}

/// Per-chain sum of squared straightness residuals at the given offsets.
pub fn straightness_residuals(
    mesh: &AdaptiveMesh,
    lol1_tar: &[Lol1Line],
    offsets: &[P2],
) -> Vec<Scalar> {
    mesh.chains
        .iter()
        .enumerate()
        .map(|(j, chain)| {
            let nj = lol1_tar[j].seg.normal();
            chain
                .sub_edges
                .iter()
                .map(|&(a, b)| {
                    let d =
                        nj.dot(mesh.vertices[a] + offsets[a] - mesh.vertices[b] - offsets[b]);
                    d * d
                })
                .sum()
        })
        .collect()
}

/// Minimizes the warp energy by conjugate gradient on its normal equations.
pub fn solve_warp(
    mesh: &AdaptiveMesh,
    matches: &MatchSet,
    lol1_tar: &[Lol1Line],
    weights: &EnergyWeights,
) -> Result<WarpField> {
    weights.validate()?;
    check_inputs(mesh, matches, lol1_tar)?;
    let n = mesh.vertices.len();
    if matches.pairs.is_empty() {
        return Ok(WarpField::zero(n));
    }
    let quad = assemble(mesh, matches, lol1_tar, weights)?;
    let rhs: Vec<Scalar> = quad.g.iter().map(|v| -v).collect();
    let (x, _report) = conjugate_gradient(&quad.a, &rhs, None, 1e-8, 10 * 2 * n)?;
    let offsets: Vec<P2> = x.chunks_exact(2).map(|c| P2::new(c[0], c[1])).collect();
    let (ea, el, er) = energy_value(mesh, matches, lol1_tar, &offsets)?;
    Ok(WarpField {
        offsets,
        ea,
        el,
        er,
    })
}

/// Halves offsets of vertices in flipped triangles until every triangle
/// keeps positive signed area, then re-evaluates the energy breakdown.
/// Returns the repaired field and how many vertices were damped.
pub fn repair_topology(
    mesh: &AdaptiveMesh,
    warp: &WarpField,
    matches: &MatchSet,
    lol1_tar: &[Lol1Line],
    weights: &EnergyWeights,
) -> Result<(WarpField, usize)> {
    weights.validate()?;
    if warp.offsets.len() != mesh.vertices.len() {
        return Err(Error::Geometry(format!(
            "offset count {} does not match vertex count {}",
            warp.offsets.len(),
            mesh.vertices.len()
        )));
    }
    let mut offsets = warp.offsets.clone();
    let mut damped: BTreeSet<usize> = BTreeSet::new();
    for round in 0..=20 {
        let positions: Vec<P2> = mesh
            .vertices
            .iter()
            .zip(&offsets)
            .map(|(v, d)| *v + *d)
            .collect();
        let mut bad: BTreeSet<usize> = BTreeSet::new();
        let mut flipped = 0usize;
        let mut min_area = Scalar::INFINITY;
        for &tri in &mesh.triangles {
            let area = AdaptiveMesh::signed_area(&positions, tri);
            min_area = min_area.min(area);
            if area <= 0.0 {
                flipped += 1;
                bad.extend(tri);
            }
        }
        if flipped == 0 {
            let (ea, el, er) = energy_value(mesh, matches, lol1_tar, &offsets)?;
            return Ok((
                WarpField {
                    offsets,
                    ea,
                    el,
                    er,
                },
                damped.len(),
            ));
        }
        let movable: Vec<usize> = bad
            .iter()
            .copied()
            .filter(|&v| offsets[v].norm_sq() > 0.0)
            .collect();
        if movable.is_empty() || round == 20 {
            return Err(Error::Geometry(format!(
                "topology repair failed: {flipped} flipped triangles remain \
                 (min signed area {min_area:.3e}) after {round} damping rounds"
            )));
        }
        for v in movable {
            offsets[v] *= 0.5;
            damped.insert(v);
        }
    }
    unreachable!("loop always returns or errors at round 20");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lines::Lol1Line;
    use crate::warp::matching::MatchPair;
    use crate::warp::mesh::build_adaptive_mesh;
    use crate::Seg2;

    fn lol(x1: f64, y1: f64, x2: f64, y2: f64) -> Lol1Line {
        Lol1Line {
            seg: Seg2::new(P2::new(x1, y1), P2::new(x2, y2)).unwrap(),
            boundary_edge: None,
        }
    }

    fn domain() -> (P2, P2) {
        (P2::new(0.0, 0.0), P2::new(100.0, 100.0))
    }

    struct Instance {
        mesh: AdaptiveMesh,
        lines: Vec<Lol1Line>,
        matches: MatchSet,
    }

    fn random_instance(seed: u64) -> Instance {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15) | 1;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        // Two disjoint interior segments plus one crossing pair gives a mesh
        // of roughly a dozen vertices.
        let lines = vec![
            lol(
                10.0 + next() * 10.0,
                15.0 + next() * 10.0,
                40.0 + next() * 10.0,
                20.0 + next() * 10.0,
            ),
            lol(
                15.0 + next() * 10.0,
                60.0 + next() * 10.0,
                45.0 + next() * 10.0,
                75.0 + next() * 10.0,
            ),
            lol(60.0, 20.0 + next() * 10.0, 90.0, 60.0 + next() * 10.0),
            lol(60.0, 60.0 + next() * 10.0, 90.0, 20.0 + next() * 10.0),
        ];
        let (lo, hi) = domain();
        let mesh = build_adaptive_mesh(&lines, lo, hi).unwrap();
        let mut pairs = Vec::new();
        for (t, l) in lines.iter().enumerate().take(2) {
            let shift = l.seg.normal() * (2.0 + next() * 4.0);
            pairs.push(MatchPair {
                target: t,
                reference: t,
                ref_is_boundary: false,
                ref_seg: Seg2::new(l.seg.p1 + shift, l.seg.p2 + shift).unwrap(),
            });
        }
        Instance {
            mesh,
            lines,
            matches: MatchSet { pairs },
        }
    }

    fn random_offsets(n: usize, seed: u64, scale: f64) -> Vec<P2> {
        let mut state = seed.wrapping_mul(0x2545f4914f6cdd1d) | 1;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        (0..n)
            .map(|_| P2::new((next() - 0.5) * scale, (next() - 0.5) * scale))
            .collect()
    }

    #[test]
    fn default_weights() {
        let w = EnergyWeights::default();
        assert_eq!((w.lambda_a, w.lambda_l, w.lambda_r), (0.5, 0.5, 0.025));
        w.validate().unwrap();
        assert!(EnergyWeights {
            lambda_a: 0.0,
            lambda_l: 0.0,
            lambda_r: 0.0
        }
        .validate()
        .is_err());
        assert!(EnergyWeights {
            lambda_a: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn no_matches_zero_warp() {
        let lines = vec![lol(20.0, 30.0, 80.0, 30.0)];
        let (lo, hi) = domain();
        let mesh = build_adaptive_mesh(&lines, lo, hi).unwrap();
        let w = solve_warp(&mesh, &MatchSet::default(), &lines, &EnergyWeights::default())
            .unwrap();
        assert!(w.offsets.iter().all(|d| d.norm() == 0.0));
        assert_eq!((w.ea, w.el, w.er), (0.0, 0.0, 0.0));
    }

    #[test]
    fn single_match_closed_form() {
        // Symmetric perpendicular pull of size d relaxes to d/1.05 at the
        // default weights.
        let d = 3.0;
        let lines = vec![lol(30.0, 50.0, 70.0, 50.0)];
        let (lo, hi) = domain();
        let mesh = build_adaptive_mesh(&lines, lo, hi).unwrap();
        let ref_seg = Seg2::new(P2::new(30.0, 50.0 + d), P2::new(70.0, 50.0 + d)).unwrap();
        let matches = MatchSet {
            pairs: vec![MatchPair {
                target: 0,
                reference: 0,
                ref_is_boundary: false,
                ref_seg,
            }],
        };
        let w = solve_warp(&mesh, &matches, &lines, &EnergyWeights::default()).unwrap();
        let expected = d / 1.05;
        let (e1, e2) = mesh.chains[0].endpoints;
        for e in [e1, e2] {
            assert!(
                (w.offsets[e].norm() - expected).abs() < 1e-6,
                "offset {:?} expected magnitude {expected}",
                w.offsets[e]
            );
        }
        for (i, off) in w.offsets.iter().enumerate() {
            if i != e1 && i != e2 {
                assert!(off.norm() < 1e-9);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 1..=4u64 {
            let inst = random_instance(seed);
            let weights = EnergyWeights::default();
            let n = inst.mesh.vertices.len();
            let x0 = random_offsets(n, seed + 100, 4.0);
            let grad =
                energy_gradient(&inst.mesh, &inst.matches, &inst.lines, &weights, &x0).unwrap();
            let total = |offs: &[P2]| {
                let (ea, el, er) =
                    energy_value(&inst.mesh, &inst.matches, &inst.lines, offs).unwrap();
                weights.lambda_a * ea + weights.lambda_l * el + weights.lambda_r * er
            };
            let h = 1e-6;
            for k in 0..2 * n {
                let mut plus = x0.clone();
                let mut minus = x0.clone();
                if k % 2 == 0 {
                    plus[k / 2].x += h;
                    minus[k / 2].x -= h;
                } else {
                    plus[k / 2].y += h;
                    minus[k / 2].y -= h;
                }
                let fd = (total(&plus) - total(&minus)) / (2.0 * h);
                let denom = grad[k].abs().max(1.0);
                assert!(
                    (fd - grad[k]).abs() / denom < 1e-5,
                    "seed {seed} coord {k}: fd {fd} vs analytic {}",
                    grad[k]
                );
            }
        }
    }

    #[test]
    fn quadratic_form_consistency() {
        for seed in 5..=8u64 {
            let inst = random_instance(seed);
            let weights = EnergyWeights::default();
            let quad = assemble(&inst.mesh, &inst.matches, &inst.lines, &weights).unwrap();
            let offs = random_offsets(inst.mesh.vertices.len(), seed + 40, 6.0);
            let x: Vec<f64> = offs.iter().flat_map(|d| [d.x, d.y]).collect();
            let ax = quad.a.mul_vec(&x);
            let via_form: f64 = x.iter().zip(&ax).map(|(xi, axi)| xi * axi).sum::<f64>()
                + 2.0 * x.iter().zip(&quad.g).map(|(xi, gi)| xi * gi).sum::<f64>()
                + quad.c;
            let (ea, el, er) =
                energy_value(&inst.mesh, &inst.matches, &inst.lines, &offs).unwrap();
            let direct = weights.lambda_a * ea + weights.lambda_l * el + weights.lambda_r * er;
            assert!(
                (via_form - direct).abs() <= 1e-9 * direct.abs().max(1.0),
                "form {via_form} direct {direct}"
            );
        }
    }

    #[test]
    fn solution_not_worse_than_zero() {
        for seed in 9..=13u64 {
            let inst = random_instance(seed);
            let weights = EnergyWeights::default();
            let w = solve_warp(&inst.mesh, &inst.matches, &inst.lines, &weights).unwrap();
            let zero = vec![P2::new(0.0, 0.0); inst.mesh.vertices.len()];
            let (ea0, el0, er0) =
                energy_value(&inst.mesh, &inst.matches, &inst.lines, &zero).unwrap();
            let e0 = weights.lambda_a * ea0 + weights.lambda_l * el0 + weights.lambda_r * er0;
            assert!(w.total(&weights) <= e0 + 1e-12);
            assert!(w.total(&weights) < e0, "matches with nonzero residual");
        }
    }

    #[test]
    fn repair_leaves_clean_warp_unchanged() {
        let inst = random_instance(2);
        let weights = EnergyWeights::default();
        let w = solve_warp(&inst.mesh, &inst.matches, &inst.lines, &weights).unwrap();
        let (repaired, damped) =
            repair_topology(&inst.mesh, &w, &inst.matches, &inst.lines, &weights).unwrap();
        assert_eq!(damped, 0);
        for (a, b) in repaired.offsets.iter().zip(&w.offsets) {
            assert_eq!(a, b);
        }
        let zero = WarpField::zero(inst.mesh.vertices.len());
        let (rz, dz) =
            repair_topology(&inst.mesh, &zero, &inst.matches, &inst.lines, &weights).unwrap();
        assert_eq!(dz, 0);
        assert!(rz.offsets.iter().all(|d| d.norm() == 0.0));
    }

    #[test]
    fn repair_damps_flipping_vertex() {
        let lines = vec![lol(20.0, 40.0, 80.0, 40.0)];
        let (lo, hi) = domain();
        let mesh = build_adaptive_mesh(&lines, lo, hi).unwrap();
        let (e1, _) = mesh.chains[0].endpoints;
        let mut warp = WarpField::zero(mesh.vertices.len());
        // Push one segment endpoint far below the domain so incident
        // triangles flip.
        warp.offsets[e1] = P2::new(0.0, 300.0);
        let positions: Vec<P2> = mesh
            .vertices
            .iter()
            .zip(&warp.offsets)
            .map(|(v, d)| *v + *d)
            .collect();
        assert!(mesh
            .triangles
            .iter()
            .any(|&t| AdaptiveMesh::signed_area(&positions, t) <= 0.0));
        let (repaired, damped) = repair_topology(
            &mesh,
            &warp,
            &MatchSet::default(),
            &lines,
            &EnergyWeights::default(),
        )
        .unwrap();
        assert_eq!(damped, 1);
        let fixed: Vec<P2> = mesh
            .vertices
            .iter()
            .zip(&repaired.offsets)
            .map(|(v, d)| *v + *d)
            .collect();
        for &t in &mesh.triangles {
            assert!(AdaptiveMesh::signed_area(&fixed, t) > 0.0);
        }
        assert!(repaired.offsets[e1].y < 300.0);
        assert!(repaired.offsets[e1].x == 0.0);
    }

    #[test]
    fn straightness_after_solve() {
        for seed in 14..=18u64 {
            let inst = random_instance(seed);
            let weights = EnergyWeights::default();
            let w = solve_warp(&inst.mesh, &inst.matches, &inst.lines, &weights).unwrap();
            let residuals = straightness_residuals(&inst.mesh, &inst.lines, &w.offsets);
            for (j, r) in residuals.iter().enumerate() {
                let len = inst.lines[j].seg.length();
                assert!(
                    *r <= 1e-6 * len * len,
                    "seed {seed} line {j} residual {r} len {len}"
                );
            }
        }
    }

    #[test]
    fn non_finite_offsets_error() {
        let lines = vec![lol(20.0, 30.0, 80.0, 30.0)];
        let (lo, hi) = domain();
        let mesh = build_adaptive_mesh(&lines, lo, hi).unwrap();
        let mut offs = vec![P2::new(0.0, 0.0); mesh.vertices.len()];
        offs[0] = P2::new(f64::NAN, 0.0);
        let err = energy_value(&mesh, &MatchSet::default(), &lines, &offs).unwrap_err();
        assert!(err.to_string().contains("regularization"));
    }
}
