use proptest::prelude::*;
use splitfeas::numerics::{
    cholesky, matrix_sqrt_psd, pseudoinverse, svd, symmetric_eig, DenseMatrix,
};

fn matrix(rows: usize, cols: usize, seed: &[f64]) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |i, j| {
        let k = (i * 31 + j * 17) % seed.len();
        seed[k] * (1.0 + ((i + 2 * j) % 7) as f64 * 0.1)
    })
}

fn rel_err(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    (a - b).norm() / (1.0 + b.norm())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn svd_reconstructs(rows in 1usize..=50, cols in 1usize..=50, seed in prop::collection::vec(-5.0f64..5.0, 97)) {
        let m = matrix(rows, cols, &seed);
        let d = svd(&m).unwrap();
        prop_assert!(rel_err(&d.reconstruct(), &m) < 1e-12);
        prop_assert!(d.singular_values.as_slice().windows(2).all(|w| w[0] >= w[1]));
        let k = rows.min(cols);
        prop_assert!(rel_err(&(d.u.transpose() * &d.u), &DenseMatrix::identity(k, k)) < 1e-12);
    }

    #[test]
    fn eig_reconstructs(n in 1usize..=50, seed in prop::collection::vec(-5.0f64..5.0, 97)) {
        let g = matrix(n, n, &seed);
        let s = &g + g.transpose();
        let e = symmetric_eig(&s).unwrap();
        let lam = DenseMatrix::from_diagonal(&e.values);
        prop_assert!(rel_err(&(&e.vectors * lam * e.vectors.transpose()), &s) < 1e-12);
        prop_assert!(e.values.as_slice().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn psd_factors(n in 1usize..=30, seed in prop::collection::vec(-5.0f64..5.0, 97)) {
        let g = matrix(n, n + 3, &seed);
        let s = &g * g.transpose() + DenseMatrix::identity(n, n);
        let l = cholesky(&s).unwrap();
        prop_assert!(rel_err(&(&l * l.transpose()), &s) < 1e-12);
        let root = matrix_sqrt_psd(&s).unwrap();
        prop_assert!(rel_err(&(&root * &root), &s) < 1e-10);
    }

    #[test]
    fn pseudoinverse_penrose(rows in 1usize..=20, cols in 1usize..=20, seed in prop::collection::vec(-5.0f64..5.0, 97)) {
        let m = matrix(rows, cols, &seed);
        let p = pseudoinverse(&m).unwrap();
        prop_assert!(rel_err(&(&m * &p * &m), &m) < 1e-9);
        prop_assert!(rel_err(&(&p * &m * &p), &p) < 1e-9);
    }
}
