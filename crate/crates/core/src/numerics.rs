//! Dense linear-algebra kernels shared by the sets, solvers and problem builders.
//!
//! Matrices are `nalgebra` dense matrices (column-major storage). Every routine is a
//! pure function of its input; factorizations are post-processed so their output is
//! unique (sorted spectra, fixed column signs), which keeps every downstream
//! projection and step size reproducible.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Error, Result};

pub type DenseMatrix = DMatrix<f64>;

/// Relative cutoff below which singular values are treated as zero by [`pseudoinverse`].
pub const PINV_RANK_CUTOFF: f64 = 1e-12;
/// Cholesky pivots at or below this fraction of the largest diagonal entry signal failure.
pub const CHOLESKY_PIVOT_TOL: f64 = 1e-12;
/// Eigenvalues above `-PSD_CLAMP * lambda_max` are clamped to zero by [`matrix_sqrt_psd`].
pub const PSD_CLAMP: f64 = 1e-10;
/// Eigenvalues below `-PSD_REJECT * lambda_max` make [`matrix_sqrt_psd`] fail.
pub const PSD_REJECT: f64 = 1e-8;
/// Largest `min(rows, cols)` for which [`spectral_norm_sq`] uses a dense eigendecomposition.
pub const DENSE_SPECTRAL_LIMIT: usize = 64;

const LANCZOS_MAX_STEPS: usize = 400;
const LANCZOS_TOL: f64 = 1e-10;

/// Thin singular value decomposition `M = U diag(sigma) V^T`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: DenseMatrix,
    pub singular_values: DVector<f64>,
    pub v: DenseMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }
}

/// Eigendecomposition `S = vectors diag(values) vectors^T` of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEig {
    pub vectors: DenseMatrix,
    pub values: DVector<f64>,
}

pub fn frobenius(m: &DenseMatrix) -> f64 {
    m.norm()
}

pub fn all_finite(m: &DenseMatrix) -> bool {
    m.iter().all(|v| v.is_finite())
}

fn check_input(m: &DenseMatrix, what: &str) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(invalid(format!("{what}: empty matrix")));
    }
    if !all_finite(m) {
        return Err(invalid(format!("{what}: non-finite entry")));
    }
    Ok(())
}

/// Flip column signs so that the largest-magnitude entry of each column of `primary`
/// is nonnegative (ties go to the earlier row). The same flips are applied to `paired`.
fn fix_column_signs(primary: &mut DenseMatrix, mut paired: Option<&mut DenseMatrix>) {
    for j in 0..primary.ncols() {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for (i, v) in primary.column(j).iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        if primary[(best, j)] < 0.0 {
            primary.column_mut(j).neg_mut();
            if let Some(p) = paired.as_deref_mut() {
                p.column_mut(j).neg_mut();
            }
        }
    }
}

pub fn svd(m: &DenseMatrix) -> Result<SvdResult> {
    check_input(m, "svd")?;
    let dec = m.clone().svd(true, true);
    let mut u = dec.u.expect("left singular vectors requested");
    let mut v = dec.v_t.expect("right singular vectors requested").transpose();
    fix_column_signs(&mut u, Some(&mut v));
    Ok(SvdResult {
        u,
        singular_values: dec.singular_values,
        v,
    })
}

/// Below this value of `||X^T X - I||_F` the polar iteration switches from scaled
/// Newton steps to Newton-Schulz steps.
pub const POLAR_NEWTON_RADIUS: f64 = 0.5;
const POLAR_STOP: f64 = 1e-16;
const POLAR_MAX_STEPS: usize = 40;

/// Orthogonal polar factor `U V^T` of a square matrix.
///
/// Iterates with Frobenius-scaled Newton steps `X <- (z X + X^{-T} / z) / 2` while `X` is
/// far from orthogonal and with the inverse-free Newton-Schulz step
/// `X <- X (3I - X^T X) / 2` once it is close. Singular or stagnating input falls back
/// to the SVD. Both routes give the same factor up to rounding.
pub fn polar_factor(m: &DenseMatrix) -> Result<DenseMatrix> {
    check_input(m, "polar_factor")?;
    if !m.is_square() {
        return Err(invalid("polar_factor: matrix must be square"));
    }
    let n = m.nrows();
    let eye = DenseMatrix::identity(n, n);
    let mut x = m.clone();
    let mut gram = DenseMatrix::zeros(n, n);
    let mut next = DenseMatrix::zeros(n, n);
    let mut xt = DenseMatrix::zeros(n, n);
    for _ in 0..POLAR_MAX_STEPS {
        x.transpose_to(&mut xt);
        gram.gemm(1.0, &xt, &x, 0.0);
        let err = (&gram - &eye).norm();
        if !err.is_finite() {
            break;
        }
        if err < POLAR_NEWTON_RADIUS {
            // Each step maps the eigenvalues e of X^T X - I to e^2 (3 - e) / 4.
            let done = err * err * (3.0 + err) / 4.0 < POLAR_STOP;
            // X + X (I - X^T X) / 2, so that rounding scales with the correction
            gram.neg_mut();
            for i in 0..n {
                gram[(i, i)] += 1.0;
            }
            next.copy_from(&x);
            next.gemm(0.5, &x, &gram, 1.0);
            std::mem::swap(&mut x, &mut next);
            if done {
                return Ok(x);
            }
        } else {
            let Some(inv_t) = inverse_transpose(&x) else {
                break;
            };
            let zeta = (inv_t.norm() / x.norm()).sqrt();
            if !zeta.is_finite() || zeta == 0.0 {
                break;
            }
            x.zip_apply(&inv_t, |xi, yi| *xi = 0.5 * (zeta * *xi + yi / zeta));
        }
    }
    let dec = svd(m)?;
    Ok(dec.u * dec.v.transpose())
}

/// `X^{-T}` by LU with partial pivoting, or `None` for a (numerically) singular `X`.
pub fn inverse_transpose(x: &DenseMatrix) -> Option<DenseMatrix> {
    // Factor X^T = P^T L U so that solving X^T Z = I yields Z = X^{-T}.
    let n = x.nrows();
    let mut a: Vec<f64> = x.transpose().as_slice().to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for k in 0..n {
        let col = &a[k * n..(k + 1) * n];
        let (p, pivot) = (k..n).fold((k, 0.0f64), |(bi, bv), i| {
            if col[i].abs() > bv {
                (i, col[i].abs())
            } else {
                (bi, bv)
            }
        });
        if !(pivot > f64::EPSILON * scale) {
            return None;
        }
        if p != k {
            perm.swap(p, k);
            for j in 0..n {
                a.swap(j * n + k, j * n + p);
            }
        }
        let d = a[k * n + k];
        for v in &mut a[k * n + k + 1..(k + 1) * n] {
            *v /= d;
        }
        let (left, right) = a.split_at_mut((k + 1) * n);
        let lk = &left[k * n + k + 1..(k + 1) * n];
        for j in 0..n - k - 1 {
            let colj = &mut right[j * n..(j + 1) * n];
            let f = colj[k];
            if f != 0.0 {
                for (c, l) in colj[k + 1..].iter_mut().zip(lk) {
                    *c -= f * l;
                }
            }
        }
    }
    // Solve L U Z = P I column by column.
    let mut z = vec![0.0; n * n];
    for (c, zc) in z.chunks_exact_mut(n).enumerate() {
        for (i, v) in zc.iter_mut().enumerate() {
            *v = if perm[i] == c { 1.0 } else { 0.0 };
        }
        for k in 0..n {
            let f = zc[k];
            if f != 0.0 {
                for (v, l) in zc[k + 1..].iter_mut().zip(&a[k * n + k + 1..(k + 1) * n]) {
                    *v -= f * l;
                }
            }
        }
        for k in (0..n).rev() {
            zc[k] /= a[k * n + k];
            let f = zc[k];
            if f != 0.0 {
                for (v, u) in zc[..k].iter_mut().zip(&a[k * n..k * n + k]) {
                    *v -= f * u;
                }
            }
        }
    }
    Some(DenseMatrix::from_vec(n, n, z))
}

/// Eigendecomposition of the symmetric part `(S + S^T)/2`, eigenvalues nonincreasing.
pub fn symmetric_eig(s: &DenseMatrix) -> Result<SymmetricEig> {
    check_input(s, "symmetric_eig")?;
    if !s.is_square() {
        return Err(invalid(format!(
            "symmetric_eig: matrix is {}x{}, expected square",
            s.nrows(),
            s.ncols()
        )));
    }
    let sym = (s + s.transpose()) * 0.5;
    let dec = SymmetricEigen::new(sym);
    let n = dec.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        dec.eigenvalues[b]
            .total_cmp(&dec.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| dec.eigenvalues[i]));
    let mut vectors = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &dec.eigenvectors.column(src));
    }
    fix_column_signs(&mut vectors, None);
    Ok(SymmetricEig { vectors, values })
}

/// Lower-triangular Cholesky factor, or `None` when a pivot is not safely positive
/// (including non-square or non-finite input).
pub fn cholesky(s: &DenseMatrix) -> Option<DenseMatrix> {
    if !s.is_square() || s.nrows() == 0 || !all_finite(s) {
        return None;
    }
    let n = s.nrows();
    let max_diag = (0..n).map(|i| s[(i, i)]).fold(f64::NEG_INFINITY, f64::max);
    if max_diag <= 0.0 {
        return None;
    }
    let pivot_tol = CHOLESKY_PIVOT_TOL * max_diag;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = s[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= pivot_tol {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / d;
        }
    }
    Some(l)
}

pub fn pseudoinverse(m: &DenseMatrix) -> Result<DenseMatrix> {
    let dec = svd(m)?;
    let sigma_max = dec.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = PINV_RANK_CUTOFF * sigma_max;
    let mut v_scaled = dec.v.clone();
    for (j, &s) in dec.singular_values.iter().enumerate() {
        let inv = if s > cutoff && s > 0.0 { 1.0 / s } else { 0.0 };
        v_scaled.column_mut(j).scale_mut(inv);
    }
    Ok(v_scaled * dec.u.transpose())
}

/// `lambda_max(M^T M)`, i.e. the squared spectral norm of `M`.
///
/// Small operators use a dense eigendecomposition of the smaller Gram matrix. Larger
/// ones run Lanczos with full reorthogonalization on the implicit Gram operator, started
/// from the normalized all-ones vector, and fall back to the dense route if the Ritz
/// residual has not converged.
pub fn spectral_norm_sq(m: &DenseMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.nrows().min(m.ncols()) <= DENSE_SPECTRAL_LIMIT {
        return dense_spectral_norm_sq(m);
    }
    lanczos_spectral_norm_sq(m).unwrap_or_else(|| dense_spectral_norm_sq(m))
}

/// Dense-eigendecomposition route for `lambda_max(M^T M)`.
pub fn dense_spectral_norm_sq(m: &DenseMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let gram = if m.ncols() <= m.nrows() {
        m.transpose() * m
    } else {
        m * m.transpose()
    };
    let sym = (&gram + gram.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Lanczos route for `lambda_max(M^T M)`; `None` if it fails to converge.
pub fn lanczos_spectral_norm_sq(m: &DenseMatrix) -> Option<f64> {
    let use_mtm = m.ncols() <= m.nrows();
    let dim = if use_mtm { m.ncols() } else { m.nrows() };
    let rows = m.nrows();
    let apply = |v: &DVector<f64>| -> DVector<f64> {
        if use_mtm {
            m.tr_mul(&(m * v))
        } else {
            // M M^T v in one sweep over the columns of M.
            let mut w = DVector::zeros(rows);
            let ws = w.as_mut_slice();
            for col in m.as_slice().chunks_exact(rows) {
                let c = dot(col, v.as_slice());
                for (wi, mi) in ws.iter_mut().zip(col) {
                    *wi += c * mi;
                }
            }
            w
        }
    };

    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut v = DVector::from_element(dim, 1.0 / (dim as f64).sqrt());
    let steps = dim.min(LANCZOS_MAX_STEPS);

    for k in 0..steps {
        let mut w = apply(&v);
        let alpha = w.dot(&v);
        w.axpy(-alpha, &v, 1.0);
        if let (Some(prev), Some(&beta)) = (basis.last(), betas.last()) {
            w.axpy(-beta, prev, 1.0);
        }
        basis.push(v);
        alphas.push(alpha);
        for _ in 0..2 {
            for q in &basis {
                let proj = w.dot(q);
                w.axpy(-proj, q, 1.0);
            }
        }
        let beta = w.norm();

        let (theta, last) = tridiagonal_top(&alphas, &betas);
        if !theta.is_finite() {
            return None;
        }
        let scale = theta.abs().max(f64::MIN_POSITIVE);
        if beta <= 1e-14 * scale || beta * last.abs() <= LANCZOS_TOL * scale || k + 1 == dim {
            return Some(theta.max(0.0));
        }
        betas.push(beta);
        v = w / beta;
    }
    None
}

/// Dot product with eight independent accumulators.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let chunks_a = a.chunks_exact(8);
    let chunks_b = b.chunks_exact(8);
    let tail: f64 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for k in 0..8 {
            acc[k] += ca[k] * cb[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// Largest eigenvalue of the Lanczos tridiagonal matrix and the last component of its eigenvector.
fn tridiagonal_top(alphas: &[f64], betas: &[f64]) -> (f64, f64) {
    let k = alphas.len();
    let mut t = DenseMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let dec = SymmetricEigen::new(t);
    let (idx, theta) = dec
        .eigenvalues
        .iter()
        .cloned()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    (theta, dec.eigenvectors[(k - 1, idx)])
}

/// Symmetric square root of a positive semidefinite matrix.
pub fn matrix_sqrt_psd(s: &DenseMatrix) -> Result<DenseMatrix> {
    let eig = symmetric_eig(s)?;
    let lambda_max = eig.values.iter().cloned().fold(0.0, f64::max);
    let lambda_min = eig.values.iter().cloned().fold(f64::INFINITY, f64::min);
    if lambda_min < -PSD_REJECT * lambda_max || (lambda_max <= 0.0 && lambda_min < 0.0) {
        return Err(Error::NotPsd {
            min_eigenvalue: lambda_min,
            max_eigenvalue: lambda_max,
        });
    }
    let mut scaled = eig.vectors.clone();
    for (j, &l) in eig.values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(l.max(0.0).sqrt());
    }
    let r = &scaled * eig.vectors.transpose();
    Ok((&r + r.transpose()) * 0.5)
}
