//! Sparse symmetric positive semi-definite systems and the conjugate
//! gradient solver shared by the warp and blending stages.

use crate::err::{Error, Result};
use crate::scalar::Real;

/// Coordinate-format accumulator; duplicate entries sum on conversion.
#[derive(Clone, Debug)]
pub struct Triplets<S> {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, S)>,
}

impl<S: Real> Triplets<S> {
    pub fn new(rows: usize, cols: usize) -> Self {
        Triplets {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, r: usize, c: usize, v: S) {
        debug_assert!(r < self.rows && c < self.cols);
        if v != S::zero() {
            self.entries.push((r, c, v));
        }
    }

    pub fn to_csr(mut self) -> SparseMatrix<S> {
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_counts = vec![0usize; self.rows + 1];
        let mut col_idx: Vec<usize> = Vec::new();
        let mut values: Vec<S> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_counts[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.rows {
            row_counts[r + 1] += row_counts[r];
        }
        SparseMatrix {
            rows: self.rows,
            cols: self.cols,
            row_ptr: row_counts,
            col_idx,
            values,
        }
    }
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug)]
pub struct SparseMatrix<S> {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<S>,
}

impl<S: Real> SparseMatrix<S> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.cols);
        let mut out = vec![S::zero(); self.rows];
        for r in 0..self.rows {
            let mut acc = S::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            out[r] = acc;
        }
        out
    }

    pub fn get(&self, r: usize, c: usize) -> S {
        for k in self.row_ptr[r]..self.row_ptr[r + 1] {
            if self.col_idx[k] == c {
                return self.values[k];
            }
        }
        S::zero()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CgReport<S> {
    pub iterations: usize,
    pub relative_residual: S,
    pub converged: bool,
}

fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    let mut acc = S::zero();
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

/// Conjugate gradient for symmetric positive (semi-)definite systems.
/// Stops when the residual norm falls below tol_rel times the right-hand
/// side norm. Fixed summation order keeps runs bit-reproducible.
pub fn conjugate_gradient<S: Real>(
    a: &SparseMatrix<S>,
    b: &[S],
    x0: Option<&[S]>,
    tol_rel: S,
    max_iter: usize,
) -> Result<(Vec<S>, CgReport<S>)> {
    if a.rows() != a.cols() || a.rows() != b.len() {
        return Err(Error::Numeric(format!(
            "cg needs a square system, got {}x{} with rhs {}",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    let n = b.len();
    let mut x = match x0 {
        Some(v) => {
            assert_eq!(v.len(), n);
            v.to_vec()
        }
        None => vec![S::zero(); n],
    };
    let b_norm = dot(b, b).sqrt();
    if b_norm == S::zero() {
        return Ok((
            vec![S::zero(); n],
            CgReport {
                iterations: 0,
                relative_residual: S::zero(),
                converged: true,
            },
        ));
    }
    let ax = a.mul_vec(&x);
    let mut r: Vec<S> = (0..n).map(|i| b[i] - ax[i]).collect();
    let mut p = r.clone();
    let mut rs = dot(&r, &r);
    let mut iterations = 0;
    while iterations < max_iter {
        let rel = rs.sqrt() / b_norm;
        if rel <= tol_rel {
            break;
        }
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if !pap.is_finite() || pap <= S::zero() {
            return Err(Error::Numeric(format!(
                "cg curvature p'Ap = {pap} not positive; matrix not SPD"
            )));
        }
        let alpha = rs / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new = dot(&r, &r);
        let beta = rs_new / rs;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs = rs_new;
        iterations += 1;
    }
    let rel = rs.sqrt() / b_norm;
    if !rel.is_finite() {
        return Err(Error::Numeric("cg residual diverged".into()));
    }
    Ok((
        x,
        CgReport {
            iterations,
            relative_residual: rel,
            converged: rel <= tol_rel,
        },
    ))
}
