//! Small dense helpers on top of nalgebra and plain slices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.nrows()];
    for j in 0..m.ncols() {
        let vj = v[j];
        if vj == 0.0 {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += m[(i, j)] * vj;
        }
    }
    out
}

pub fn mat_t_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)] * v[i]).sum())
        .collect()
}

pub fn sym_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Smallest and largest eigenvalue of the symmetric part.
pub fn sym_eig_range(m: &DMatrix<f64>) -> (f64, f64) {
    let e = SymmetricEigen::new(sym_part(m)).eigenvalues;
    let lo = e.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

pub fn max_singular(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    m.clone().singular_values().iter().filter(|s| **s > tol).count()
}

/// Minimum-norm least squares solution of `m x = rhs`.
pub fn lstsq(m: &DMatrix<f64>, rhs: &[f64]) -> Vec<f64> {
    if m.ncols() == 0 {
        return Vec::new();
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = 1e-12 * smax.max(1e-300) * (m.nrows().max(m.ncols()) as f64);
    svd.solve(&DVector::from_column_slice(rhs), eps)
        .map(|v| v.as_slice().to_vec())
        .unwrap_or_else(|_| vec![0.0; m.ncols()])
}

/// Extreme eigenvalues of the symmetric matrix `w I + P` of size `dim`, where
/// `P` is symmetric with range inside span(`basis`). `apply_p` applies `P`.
/// Works by restricting to an orthonormalised basis; the orthogonal complement
/// contributes the eigenvalue `w` when it is nontrivial.
pub fn low_rank_sym_range(
    w: f64,
    dim: usize,
    basis: &[Vec<f64>],
    apply_p: &dyn Fn(&[f64]) -> Vec<f64>,
) -> (f64, f64) {
    let mut q: Vec<Vec<f64>> = Vec::new();
    for b in basis {
        let mut v = b.clone();
        for _ in 0..2 {
            for u in &q {
                let d = dot(u, &v);
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
            }
        }
        let nv = norm2(&v);
        if nv > 1e-12 * (1.0 + norm2(b)) {
            v.iter_mut().for_each(|a| *a /= nv);
            q.push(v);
        }
    }
    let k = q.len();
    let mut small = DMatrix::<f64>::zeros(k, k);
    for j in 0..k {
        let pj = apply_p(&q[j]);
        for i in 0..k {
            small[(i, j)] = dot(&q[i], &pj);
        }
    }
    let (mut lo, mut hi) = if k > 0 {
        let (a, b) = sym_eig_range(&small);
        (a + w, b + w)
    } else {
        (f64::INFINITY, f64::NEG_INFINITY)
    };
    if k < dim {
        lo = lo.min(w);
        hi = hi.max(w);
    }
    (lo, hi)
}
