use crate::numerics::{dot, spectral_norm_sq, DenseMatrix};

/// Left multiplication `X -> A X` by a dense matrix, with its adjoint `Y -> A^T Y`.
///
/// Points of the solvers are matrices: a plain vector is a single-column matrix, and
/// matrix unknowns such as the orthogonal `Q` of the factorization problems are acted on
/// column by column. `lambda_max(A^T A)` is the same for both readings.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    matrix: DenseMatrix,
    lambda_max: f64,
}

impl LinearOperator {
    pub fn new(matrix: DenseMatrix) -> Self {
        let lambda_max = spectral_norm_sq(&matrix);
        Self { matrix, lambda_max }
    }

    /// Uses a caller-supplied `lambda_max(A^T A)` instead of computing it.
    pub fn with_lambda_max(matrix: DenseMatrix, lambda_max: f64) -> Self {
        Self { matrix, lambda_max }
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn apply(&self, x: &DenseMatrix) -> DenseMatrix {
        debug_assert_eq!(x.nrows(), self.cols());
        if x.ncols() == 1 {
            // Single vectors are frequently sparse; skip zero coordinates.
            let mut y = DenseMatrix::zeros(self.rows(), 1);
            let out = y.as_mut_slice();
            for (j, &xj) in x.iter().enumerate() {
                if xj != 0.0 {
                    let col = self.column(j);
                    for (o, a) in out.iter_mut().zip(col) {
                        *o += xj * a;
                    }
                }
            }
            y
        } else {
            &self.matrix * x
        }
    }

    pub fn adjoint(&self, y: &DenseMatrix) -> DenseMatrix {
        debug_assert_eq!(y.nrows(), self.rows());
        if y.ncols() == 1 {
            let ys = y.as_slice();
            DenseMatrix::from_fn(self.cols(), 1, |j, _| dot(self.column(j), ys))
        } else {
            self.matrix.transpose() * y
        }
    }

    fn column(&self, j: usize) -> &[f64] {
        let m = self.rows();
        &self.matrix.as_slice()[j * m..(j + 1) * m]
    }
}

/// Frobenius inner product.
pub fn inner(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    dot(a.as_slice(), b.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn adjoint_identity_vectors_and_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DenseMatrix::from_fn(13, 21, |_, _| rng.sample(StandardNormal));
        let op = LinearOperator::new(a.clone());
        for cols in [1usize, 4] {
            let x = DenseMatrix::from_fn(21, cols, |_, _| rng.sample(StandardNormal));
            let w = DenseMatrix::from_fn(13, cols, |_, _| rng.sample(StandardNormal));
            let lhs = inner(&op.apply(&x), &w);
            let rhs = inner(&x, &op.adjoint(&w));
            assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
            assert!((op.apply(&x) - &a * &x).norm() < 1e-12);
            assert!((op.adjoint(&w) - a.transpose() * &w).norm() < 1e-12);
        }
    }

    #[test]
    fn sparse_apply_skips_zeros() {
        let a = DenseMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let op = LinearOperator::new(a);
        let x = DenseMatrix::from_column_slice(3, 1, &[0.0, 1.0, 0.0]);
        assert_eq!(op.apply(&x).as_slice(), &[2.0, 5.0]);
    }
}
