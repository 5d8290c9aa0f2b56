//! Composite indices, the pair-swap matrix and small dense helpers.

use crate::error::{dim_err, Result};
use crate::{CMat, CVec, C64};

#[inline]
pub fn idx(n: usize, i: usize, j: usize) -> usize {
    i * n + j
}

/// Permutation `τ` on `C^d ⊗ C^d` exchanging `|m,n⟩ ↔ |n,m⟩`.
pub fn swap_matrix(d: usize) -> CMat {
    let mut t = CMat::zeros(d * d, d * d);
    for m in 0..d {
        for n in 0..d {
            t[(m * d + n, n * d + m)] = C64::new(1.0, 0.0);
        }
    }
    t
}

fn pair_dim(len: usize) -> Option<usize> {
    let d = (len as f64).sqrt().round() as usize;
    (d * d == len).then_some(d)
}

/// `τ·O`: swaps the ket pair of every column.
pub fn tau_left(o: &CMat) -> Result<CMat> {
    let d = pair_dim(o.nrows()).ok_or_else(|| dim_err("tau_left", "square row count", o.nrows()))?;
    Ok(CMat::from_fn(o.nrows(), o.ncols(), |r, c| {
        let (i, j) = (r / d, r % d);
        o[(j * d + i, c)]
    }))
}

/// `O·τ`: swaps the bra pair of every row.
pub fn tau_right(o: &CMat) -> Result<CMat> {
    let d = pair_dim(o.ncols()).ok_or_else(|| dim_err("tau_right", "square column count", o.ncols()))?;
    Ok(CMat::from_fn(o.nrows(), o.ncols(), |r, c| {
        let (i, j) = (c / d, c % d);
        o[(r, j * d + i)]
    }))
}

pub(crate) fn tau_l(o: &CMat) -> CMat {
    tau_left(o).expect("pair-indexed rows")
}

pub(crate) fn tau_r(o: &CMat) -> CMat {
    tau_right(o).expect("pair-indexed columns")
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn col(v: &CVec) -> CMat {
    CMat::from_column_slice(v.len(), 1, v.as_slice())
}

pub fn outer(a: &CVec, b: &CVec) -> CMat {
    a * b.adjoint()
}

/// `y += a x` on the raw column-major storage.
pub(crate) fn add_scaled(y: &mut [C64], a: f64, x: &[C64]) {
    debug_assert_eq!(y.len(), x.len());
    for (u, v) in y.iter_mut().zip(x) {
        *u += v * a;
    }
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn hermiticity_defect(m: &CMat) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Spectral norm of a Hermitian matrix.
pub fn hermitian_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    hermitian_eigenvalues(m).iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn check_square(context: &'static str, m: &CMat, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(dim_err(context, format!("{n}x{n}"), format!("{}x{}", m.nrows(), m.ncols())));
    }
    Ok(())
}

pub fn is_unitary(u: &CMat, tol: f64) -> bool {
    u.is_square() && max_abs_diff(&(u * u.adjoint()), &identity(u.nrows())) <= tol
}
