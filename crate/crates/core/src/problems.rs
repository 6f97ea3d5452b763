//! Instance generators and problem builders for completely positive factorization,
//! sparse factorization and outlier detection.
//!
//! Randomness comes from [`ChaCha8Rng`] seeded through [`derive_seed`]. Gaussian draws use
//! `rand_distr::StandardNormal` and matrices are filled in column-major order, so every
//! generator is a pure function of its sizes and seed.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::numerics::{cholesky, matrix_sqrt_psd, DenseMatrix};
use crate::operator::LinearOperator;
use crate::sets::{project_column_sparse, project_orthogonal, ProjectableSet};
use crate::solvers::{LsConfig, SplitProblem, TerminationRule};

/// Success threshold on `min(B Q)` for the linesearch method on factorization problems.
pub const CP_DCLS_THRESHOLD: f64 = -1e-16;
/// Success threshold on `min(B Q)` for alternating projections.
pub const ALTPROJ_THRESHOLD: f64 = -1e-15;
pub const CP_MAX_ITER: usize = 5000;
pub const SPARSE_MF_TOL: f64 = 1e-9;
pub const SPARSE_MF_MAX_ITER: usize = 10000;
pub const OUTLIER_TOL: f64 = 1e-8;
/// Cap for the linesearch method on outlier detection.
pub const OUTLIER_DCLS_MAX_ITER: usize = 5000;
/// The fixed-step method on outlier detection stops once 3000 updates were made.
pub const OUTLIER_DC_MAX_ITER: usize = 2999;
/// Fixed-step runs use `L = lambda_max + DC_L_MARGIN`.
pub const DC_L_MARGIN: f64 = 1e-4;
/// Magnitude of the planted outliers.
pub const OUTLIER_MAGNITUDE: f64 = 10.0;

/// Linesearch settings for completely positive factorization.
pub fn cp_ls_config() -> LsConfig {
    LsConfig {
        bb_threshold: 1e-16,
        bb_decay: 1.1,
        max_iter: CP_MAX_ITER,
        termination: TerminationRule::MinEntry(CP_DCLS_THRESHOLD),
        ..LsConfig::default()
    }
}

/// Linesearch settings for sparse factorization.
pub fn sparse_mf_ls_config() -> LsConfig {
    LsConfig {
        bb_threshold: 1e-12,
        bb_decay: 2.5,
        max_iter: SPARSE_MF_MAX_ITER,
        termination: TerminationRule::DistBelow(SPARSE_MF_TOL),
        ..LsConfig::default()
    }
}

/// Linesearch settings for outlier detection.
pub fn outlier_ls_config() -> LsConfig {
    LsConfig {
        bb_threshold: 1e-12,
        bb_decay: 2.0,
        max_iter: OUTLIER_DCLS_MAX_ITER,
        termination: TerminationRule::RelativeStep(OUTLIER_TOL),
        ..LsConfig::default()
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one random stream of an experiment, from the experiment seed, a stream tag,
/// the trial index and a sub-index (e.g. the random restart number).
pub fn derive_seed(base: u64, tag: u64, trial: u64, sub: u64) -> u64 {
    let mut h = mix64(base);
    for v in [tag, trial, sub] {
        h = mix64(h ^ v);
    }
    h
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `rows x cols` standard Gaussian matrix, filled column by column.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DenseMatrix {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    DenseMatrix::from_vec(rows, cols, data)
}

/// Factor `B` (n x r) with `B B^T = G`.
///
/// Starts from the Cholesky factor of `G`, or the symmetric square root when Cholesky
/// breaks down. The column with the fewest strictly negative entries (lowest index on
/// ties) is divided by `sqrt(m)`, `m = r - n + 1`, and `m - 1` further copies of it are
/// appended.
pub fn cp_initial_factor(g: &DenseMatrix, r: usize) -> Result<DenseMatrix> {
    let n = g.nrows();
    if g.ncols() != n || n == 0 {
        return Err(invalid("G must be a nonempty square matrix"));
    }
    if r < n {
        return Err(invalid(format!("r = {r} must be at least n = {n}")));
    }
    let base = match cholesky(g) {
        Some(l) => l,
        None => matrix_sqrt_psd(g)?,
    };
    let negatives = |j: usize| base.column(j).iter().filter(|&&v| v < 0.0).count();
    let pick = (0..n).min_by_key(|&j| (negatives(j), j)).unwrap_or(0);
    let m = r - n + 1;
    let scaled = base.column(pick) / (m as f64).sqrt();

    let mut b = DenseMatrix::zeros(n, r);
    b.columns_mut(0, n).copy_from(&base);
    b.set_column(pick, &scaled);
    for k in n..r {
        b.set_column(k, &scaled);
    }
    Ok(b)
}

/// `G = |N| |N|^T` with `N` an `n x 2n` Gaussian matrix.
pub fn gen_random_cp(n: usize, seed: u64) -> DenseMatrix {
    let mut rng = seeded_rng(seed);
    let g0 = gaussian_matrix(&mut rng, n, 2 * n).abs();
    &g0 * g0.transpose()
}

const G_LAMBDA_G: [[f64; 5]; 5] = [
    [8.0, 5.0, 1.0, 1.0, 5.0],
    [5.0, 8.0, 5.0, 1.0, 1.0],
    [1.0, 5.0, 8.0, 5.0, 1.0],
    [1.0, 1.0, 5.0, 8.0, 5.0],
    [5.0, 1.0, 1.0, 5.0, 8.0],
];

/// `lambda G + (1 - lambda) P` for the fixed 5x5 circulant `G` and `P = I + 11^T`.
/// Hard instances appear as `lambda` approaches 1.
pub fn g_lambda(lambda: f64) -> Result<DenseMatrix> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(invalid(format!("lambda = {lambda} outside [0, 1]")));
    }
    Ok(DenseMatrix::from_fn(5, 5, |i, j| {
        let p = if i == j { 2.0 } else { 1.0 };
        lambda * G_LAMBDA_G[i][j] + (1.0 - lambda) * p
    }))
}

/// Find orthogonal `Q` with `B Q >= 0`.
pub fn cp_problem(b: DenseMatrix) -> Result<SplitProblem> {
    let (n, r) = b.shape();
    SplitProblem::new(
        b,
        ProjectableSet::orthogonal(r),
        ProjectableSet::nonnegative(n, r),
    )
}

/// Random column-sparse factorization instance: returns `(G, B)` with
/// `G = P P^T` for a column-sparse Gaussian `P` and `B = G^{1/2}`.
pub fn gen_sparse_mf(n: usize, s: usize, seed: u64) -> Result<(DenseMatrix, DenseMatrix)> {
    if s == 0 || s > n {
        return Err(invalid(format!("sparsity {s} outside [1, {n}]")));
    }
    let mut rng = seeded_rng(seed);
    let p0 = gaussian_matrix(&mut rng, n, n);
    let p = project_column_sparse(&p0, s);
    let g = &p * p.transpose();
    let b = matrix_sqrt_psd(&g)?;
    Ok((g, b))
}

/// Find orthogonal `Q` with every column of `B Q` having at most `s` nonzeros.
pub fn sparse_mf_problem(b: DenseMatrix, s: usize) -> Result<SplitProblem> {
    let (n, r) = b.shape();
    SplitProblem::new(
        b,
        ProjectableSet::orthogonal(r),
        ProjectableSet::column_sparse(n, r, s)?,
    )
}

#[derive(Debug, Clone)]
pub struct OutlierInstance {
    /// `m x n` with unit-norm columns.
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub w_true: Vec<f64>,
    /// Zero-based rows carrying an outlier (the last `r` rows).
    pub outlier_indices: Vec<usize>,
}

/// Planted outlier-detection instance: `b = A w` for an `s`-sparse Gaussian `w` on a
/// uniformly random support, then `+-10` added to the last `r` entries.
pub fn gen_outlier_instance(
    n: usize,
    m: usize,
    s: usize,
    r: usize,
    seed: u64,
) -> Result<OutlierInstance> {
    if s > n || r > m {
        return Err(invalid(format!("need s <= n and r <= m, got s={s} n={n} r={r} m={m}")));
    }
    let mut rng = seeded_rng(seed);
    let mut a = gaussian_matrix(&mut rng, m, n);
    for mut col in a.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    let mut w_true = vec![0.0; n];
    for i in index::sample(&mut rng, n, s) {
        w_true[i] = rng.sample(StandardNormal);
    }
    // Same product routine as the solvers, so A w_true reproduces b bit for bit.
    let w = DenseMatrix::from_column_slice(n, 1, &w_true);
    let op = LinearOperator::with_lambda_max(a, 0.0);
    let mut b: Vec<f64> = op.apply(&w).as_slice().to_vec();
    let outlier_indices: Vec<usize> = (m - r..m).collect();
    for &i in &outlier_indices {
        let g: f64 = rng.sample(StandardNormal);
        b[i] += OUTLIER_MAGNITUDE * if g < 0.0 { -1.0 } else { 1.0 };
    }
    let a = op.matrix().clone();
    Ok(OutlierInstance {
        a,
        b,
        w_true,
        outlier_indices,
    })
}

/// Find `x` with at most `s` nonzeros bounded by `1e8` such that `A x - b` has at most
/// `r` nonzeros.
pub fn outlier_problem(inst: OutlierInstance, s: usize, r: usize) -> Result<SplitProblem> {
    let n = inst.a.ncols();
    SplitProblem::new(
        inst.a,
        ProjectableSet::box_sparse(n, s, crate::sets::DEFAULT_BOX_BOUND)?,
        ProjectableSet::shifted_sparse(r, inst.b)?,
    )
}

/// Orthogonal polar factor of an `r x r` Gaussian matrix.
pub fn random_orthogonal_init(r: usize, seed: u64) -> DenseMatrix {
    let mut rng = seeded_rng(seed);
    let q = gaussian_matrix(&mut rng, r, r);
    project_orthogonal(&q, r)
}

/// Parses the plain-text matrix format: a `rows cols` header followed by the entries
/// in row-major order, separated by arbitrary whitespace.
pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    let mut tokens = text.split_whitespace();
    let mut dim = |what: &str| -> Result<usize> {
        let tok = tokens
            .next()
            .ok_or_else(|| Error::Parse(format!("missing {what} in header")))?;
        tok.parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad {what} '{tok}'")))
    };
    let rows = dim("row count")?;
    let cols = dim("column count")?;
    let values = tokens
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad entry '{t}'")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != rows * cols {
        return Err(Error::Parse(format!(
            "expected {} entries for a {rows}x{cols} matrix, found {}",
            rows * cols,
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parse("non-finite entry".into()));
    }
    Ok(DenseMatrix::from_row_slice(rows, cols, &values))
}

pub fn format_matrix(m: &DenseMatrix) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<()> {
    std::fs::write(path, format_matrix(m))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::symmetric_eig;
    use crate::operator::inner;
    use crate::solvers::objective;

    fn rel_err(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn initial_factor_examples() {
        let b = cp_initial_factor(&DenseMatrix::identity(3, 3), 3).unwrap();
        assert_eq!(b, DenseMatrix::identity(3, 3));

        let b = cp_initial_factor(&DenseMatrix::identity(2, 2), 3).unwrap();
        let h = 0.5f64.sqrt();
        let expected = DenseMatrix::from_row_slice(2, 3, &[h, 0.0, h, 0.0, 1.0, 0.0]);
        assert!((&b - &expected).norm() < 1e-15);
        assert!((&b * b.transpose() - DenseMatrix::identity(2, 2)).norm() < 1e-15);

        assert!(matches!(
            cp_initial_factor(&DenseMatrix::identity(3, 3), 2),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn initial_factor_reconstructs_random_cp() {
        for seed in 0..5 {
            let g = gen_random_cp(10, seed);
            let b = cp_initial_factor(&g, 15).unwrap();
            assert_eq!(b.shape(), (10, 15));
            assert!(rel_err(&(&b * b.transpose()), &g) < 1e-8);
        }
    }

    #[test]
    fn initial_factor_eig_branch() {
        // rank-deficient: Cholesky breaks down
        let v = DenseMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let g = &v * v.transpose();
        assert!(cholesky(&g).is_none());
        let b = cp_initial_factor(&g, 5).unwrap();
        assert!(rel_err(&(&b * b.transpose()), &g) < 1e-8);

        let indefinite = DenseMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            cp_initial_factor(&indefinite, 3),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn random_cp_examples() {
        let g = gen_random_cp(1, 9);
        assert!(g[(0, 0)] > 0.0);
        assert_eq!(gen_random_cp(6, 4), gen_random_cp(6, 4));
        assert_ne!(gen_random_cp(6, 4), gen_random_cp(6, 5));
        let g = gen_random_cp(5, 1);
        let eig = symmetric_eig(&g).unwrap();
        assert!(eig.values[4] >= -1e-10 * eig.values[0]);
        assert!(g.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn g_lambda_examples() {
        let p = g_lambda(0.0).unwrap();
        assert_eq!(p[(0, 0)], 2.0);
        assert_eq!(p[(0, 1)], 1.0);
        let g = g_lambda(1.0).unwrap();
        assert_eq!(g.row(0).iter().cloned().collect::<Vec<_>>(), vec![8.0, 5.0, 1.0, 1.0, 5.0]);
        assert_eq!(g, g.transpose());
        assert_eq!(g_lambda(0.5).unwrap()[(0, 0)], 5.0);
        assert!(g_lambda(1.5).is_err());
        assert!(g_lambda(-0.1).is_err());
    }

    #[test]
    fn cp_problem_examples() {
        let p = cp_problem(DenseMatrix::identity(4, 4)).unwrap();
        assert_eq!(objective(&p, &DenseMatrix::identity(4, 4)), 0.0);

        let g = gen_random_cp(6, 2);
        let b = cp_initial_factor(&g, 9).unwrap();
        let p = cp_problem(b.clone()).unwrap();
        let dense = symmetric_eig(&(b.transpose() * &b)).unwrap().values[0];
        assert!((p.lambda_max() - dense).abs() < 1e-10 * dense);
        let mut rng = seeded_rng(1);
        let q = gaussian_matrix(&mut rng, 9, 9);
        let w = gaussian_matrix(&mut rng, 6, 9);
        let lhs = inner(&p.operator.apply(&q), &w);
        let rhs = inner(&q, &p.operator.adjoint(&w));
        assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn sparse_mf_examples() {
        let (g, b) = gen_sparse_mf(12, 12, 3).unwrap();
        assert!(symmetric_eig(&g).unwrap().values[11] > 0.0);
        assert!(rel_err(&(&b * &b), &g) < 1e-8);
        let again = gen_sparse_mf(12, 12, 3).unwrap();
        assert_eq!(again.1, b);

        let (g, b) = gen_sparse_mf(20, 7, 8).unwrap();
        assert!(rel_err(&(&b * &b), &g) < 1e-8);

        let diag = DenseMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let p = sparse_mf_problem(diag, 1).unwrap();
        assert_eq!(objective(&p, &DenseMatrix::identity(3, 3)), 0.0);
        assert!(gen_sparse_mf(5, 0, 1).is_err());
    }

    #[test]
    fn outlier_instance_examples() {
        let inst = gen_outlier_instance(60, 30, 5, 0, 4).unwrap();
        let w = DenseMatrix::from_column_slice(60, 1, &inst.w_true);
        let aw = LinearOperator::with_lambda_max(inst.a.clone(), 0.0).apply(&w);
        assert_eq!(aw.as_slice(), inst.b.as_slice());

        let inst = gen_outlier_instance(60, 30, 5, 4, 4).unwrap();
        for col in inst.a.column_iter() {
            assert!((col.norm() - 1.0).abs() < 1e-12);
        }
        assert_eq!(inst.w_true.iter().filter(|&&v| v != 0.0).count(), 5);
        let w = DenseMatrix::from_column_slice(60, 1, &inst.w_true);
        let aw = &inst.a * &w;
        let residual: Vec<f64> = inst.b.iter().zip(aw.iter()).map(|(b, a)| b - a).collect();
        for (i, e) in residual.iter().enumerate() {
            if inst.outlier_indices.contains(&i) {
                assert!((e.abs() - 10.0).abs() < 1e-9);
            } else {
                assert!(e.abs() < 1e-12);
            }
        }
        assert_eq!(inst.outlier_indices, vec![26, 27, 28, 29]);
    }

    #[test]
    fn outlier_problem_examples() {
        let inst = gen_outlier_instance(80, 40, 6, 5, 11).unwrap();
        let w_true = DenseMatrix::from_column_slice(80, 1, &inst.w_true);
        let b = inst.b.clone();
        let p = outlier_problem(inst, 6, 5).unwrap();
        assert_eq!(objective(&p, &w_true), 0.0);

        // at x = 0 the r entries of largest |b_i| are absorbed
        let mut mags: Vec<f64> = b.iter().map(|v| v * v).collect();
        mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = 0.5 * mags[..35].iter().sum::<f64>();
        let got = objective(&p, &DenseMatrix::zeros(80, 1));
        assert!((got - expected).abs() < 1e-12 * expected.max(1.0));
    }

    #[test]
    fn orthogonal_init_examples() {
        let q = random_orthogonal_init(1, 5);
        let g: f64 = seeded_rng(5).sample(StandardNormal);
        assert_eq!(q[(0, 0)], g.signum());
        assert_eq!(random_orthogonal_init(7, 2), random_orthogonal_init(7, 2));
        for r in [2usize, 30, 200] {
            let q = random_orthogonal_init(r, r as u64);
            assert!((q.tr_mul(&q) - DenseMatrix::identity(r, r)).norm() < 1e-10);
        }
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, 0, 0, 0);
        assert_ne!(a, derive_seed(1, 0, 1, 0));
        assert_ne!(a, derive_seed(1, 1, 0, 0));
        assert_ne!(a, derive_seed(2, 0, 0, 0));
        assert_eq!(a, derive_seed(1, 0, 0, 0));
    }

    #[test]
    fn matrix_text_format() {
        let m = DenseMatrix::from_row_slice(2, 3, &[1.0, 2.5, -3.0, 0.1, 1e-20, 7.0]);
        let text = format_matrix(&m);
        assert!(text.starts_with("2 3\n1.0 2.5 -3.0\n"));
        assert_eq!(parse_matrix(&text).unwrap(), m);
        assert_eq!(
            parse_matrix("2 2\n1 2\n3   4").unwrap(),
            DenseMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0])
        );
        assert!(matches!(parse_matrix("2 2\n1 2 3"), Err(Error::Parse(_))));
        assert!(matches!(parse_matrix("2 x"), Err(Error::Parse(_))));
        assert!(matches!(parse_matrix("1 1\nabc"), Err(Error::Parse(_))));
    }
}
