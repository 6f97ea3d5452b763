//! Closed sets with closed-form projections.
//!
//! Projections onto the nonconvex sets are set-valued in general. Every routine here
//! returns one fixed element: hard thresholding keeps the largest entries and breaks ties
//! toward the lowest index, and the orthogonal projection is the polar factor from
//! [`crate::numerics::polar_factor`] (for singular input, the one given by the
//! sign-normalized SVD).

use crate::error::{invalid, Error, Result};
use crate::numerics::{polar_factor, DenseMatrix};

/// Default entrywise bound of [`ProjectableSet::BoxSparseVectors`].
pub const DEFAULT_BOX_BOUND: f64 = 1e8;
/// Frobenius tolerance on `Q^T Q - I` for orthogonal-matrix membership.
pub const ORTHOGONAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum ProjectableSet {
    /// Entrywise nonnegative `rows x cols` matrices.
    NonnegativeOrthant { rows: usize, cols: usize },
    /// `order x order` orthogonal matrices.
    OrthogonalMatrices { order: usize },
    /// `{x in R^dim : ||x||_0 <= sparsity, ||x||_inf <= bound}`.
    BoxSparseVectors {
        dim: usize,
        sparsity: usize,
        bound: f64,
    },
    /// `rows x cols` matrices whose columns each have at most `sparsity` nonzeros.
    ColumnSparseMatrices {
        rows: usize,
        cols: usize,
        sparsity: usize,
    },
    /// `{y : ||y||_0 <= sparsity} + shift`.
    ShiftedSparseVectors { sparsity: usize, shift: Vec<f64> },
}

impl ProjectableSet {
    pub fn nonnegative(rows: usize, cols: usize) -> Self {
        Self::NonnegativeOrthant { rows, cols }
    }

    pub fn orthogonal(order: usize) -> Self {
        Self::OrthogonalMatrices { order }
    }

    pub fn box_sparse(dim: usize, sparsity: usize, bound: f64) -> Result<Self> {
        if sparsity > dim {
            return Err(invalid(format!("sparsity {sparsity} exceeds dimension {dim}")));
        }
        if !(bound > 0.0) {
            return Err(invalid(format!("box bound must be positive, got {bound}")));
        }
        Ok(Self::BoxSparseVectors {
            dim,
            sparsity,
            bound,
        })
    }

    pub fn column_sparse(rows: usize, cols: usize, sparsity: usize) -> Result<Self> {
        if sparsity > rows {
            return Err(invalid(format!(
                "column sparsity {sparsity} exceeds column length {rows}"
            )));
        }
        Ok(Self::ColumnSparseMatrices {
            rows,
            cols,
            sparsity,
        })
    }

    pub fn shifted_sparse(sparsity: usize, shift: Vec<f64>) -> Result<Self> {
        if sparsity > shift.len() {
            return Err(invalid(format!(
                "sparsity {sparsity} exceeds dimension {}",
                shift.len()
            )));
        }
        Ok(Self::ShiftedSparseVectors { sparsity, shift })
    }

    /// Shape `(rows, cols)` of the points of this set.
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Self::NonnegativeOrthant { rows, cols } => (*rows, *cols),
            Self::OrthogonalMatrices { order } => (*order, *order),
            Self::BoxSparseVectors { dim, .. } => (*dim, 1),
            Self::ColumnSparseMatrices { rows, cols, .. } => (*rows, *cols),
            Self::ShiftedSparseVectors { shift, .. } => (shift.len(), 1),
        }
    }

    /// True when the set is convex. The sparse kinds are convex only in their
    /// degenerate cases (a singleton, a box or the whole space).
    pub fn is_convex(&self) -> bool {
        match self {
            Self::NonnegativeOrthant { .. } => true,
            Self::OrthogonalMatrices { .. } => false,
            Self::BoxSparseVectors { dim, sparsity, .. } => *sparsity == 0 || sparsity >= dim,
            Self::ColumnSparseMatrices { rows, sparsity, .. } => *sparsity == 0 || sparsity >= rows,
            Self::ShiftedSparseVectors { sparsity, shift } => {
                *sparsity == 0 || *sparsity >= shift.len()
            }
        }
    }

    pub fn project(&self, p: &DenseMatrix) -> DenseMatrix {
        debug_assert_eq!(p.shape(), self.shape());
        match self {
            Self::NonnegativeOrthant { .. } => project_nonneg(p),
            Self::OrthogonalMatrices { order } => project_orthogonal(p, *order),
            Self::BoxSparseVectors {
                sparsity, bound, ..
            } => {
                let out = project_box_sparse(p.as_slice(), *sparsity, *bound);
                DenseMatrix::from_vec(p.nrows(), p.ncols(), out)
            }
            Self::ColumnSparseMatrices { sparsity, .. } => project_column_sparse(p, *sparsity),
            Self::ShiftedSparseVectors { sparsity, shift } => {
                let out = shifted_sparse_unchecked(p.as_slice(), *sparsity, shift);
                DenseMatrix::from_vec(p.nrows(), p.ncols(), out)
            }
        }
    }

    pub fn distance(&self, p: &DenseMatrix) -> f64 {
        (p - self.project(p)).norm()
    }

    pub fn contains(&self, p: &DenseMatrix) -> bool {
        if p.shape() != self.shape() || p.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            Self::NonnegativeOrthant { .. } => p.iter().all(|&v| v >= 0.0),
            Self::OrthogonalMatrices { order } => {
                ((p.transpose() * p) - DenseMatrix::identity(*order, *order)).norm() < ORTHOGONAL_TOL
            }
            Self::BoxSparseVectors {
                sparsity, bound, ..
            } => {
                p.iter().filter(|&&v| v != 0.0).count() <= *sparsity
                    && p.iter().all(|v| v.abs() <= *bound)
            }
            Self::ColumnSparseMatrices { sparsity, .. } => p
                .column_iter()
                .all(|c| c.iter().filter(|&&v| v != 0.0).count() <= *sparsity),
            Self::ShiftedSparseVectors { sparsity, shift } => {
                p.iter().zip(shift).filter(|(y, b)| y != b).count() <= *sparsity
            }
        }
    }
}

/// Indices of the `k` largest keys; ties go to the lower index.
pub fn top_k_indices(keys: &[f64], k: usize) -> Vec<usize> {
    let n = keys.len();
    if k >= n {
        return (0..n).collect();
    }
    if k == 0 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.select_nth_unstable_by(k - 1, |&a, &b| {
        keys[b].total_cmp(&keys[a]).then(a.cmp(&b))
    });
    idx.truncate(k);
    idx
}

pub fn project_nonneg(x: &DenseMatrix) -> DenseMatrix {
    x.map(|v| v.max(0.0))
}

/// Polar factor `U V^T` of the square matrix `x`, the nearest `r x r` orthogonal matrix.
pub fn project_orthogonal(x: &DenseMatrix, r: usize) -> DenseMatrix {
    debug_assert_eq!(x.shape(), (r, r));
    polar_factor(x).unwrap_or_else(|_| DenseMatrix::from_element(r, r, f64::NAN))
}

/// Hard thresholding: keep the `s` largest-magnitude entries.
pub fn project_sparse(x: &[f64], s: usize) -> Vec<f64> {
    let keys: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let mut out = vec![0.0; x.len()];
    for i in top_k_indices(&keys, s) {
        out[i] = x[i];
    }
    out
}

/// Projection onto `{x : ||x||_0 <= s, ||x||_inf <= bound}`.
///
/// Keeping coordinate `i` reduces the squared distance by
/// `x_i^2 - (|x_i| - bound)_+^2`; the `s` largest reductions are kept and clipped.
pub fn project_box_sparse(x: &[f64], s: usize, bound: f64) -> Vec<f64> {
    let gains: Vec<f64> = x
        .iter()
        .map(|v| {
            let excess = (v.abs() - bound).max(0.0);
            v * v - excess * excess
        })
        .collect();
    let mut out = vec![0.0; x.len()];
    for i in top_k_indices(&gains, s) {
        out[i] = x[i].clamp(-bound, bound);
    }
    out
}

pub fn project_column_sparse(x: &DenseMatrix, s: usize) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(x.nrows(), x.ncols());
    for (j, col) in x.column_iter().enumerate() {
        let kept = project_sparse(col.as_slice(), s);
        out.column_mut(j).copy_from_slice(&kept);
    }
    out
}

/// Projection onto `{y : ||y||_0 <= r} + b`, i.e. `b + project_sparse(y - b, r)`.
pub fn project_shifted_sparse(y: &[f64], r: usize, b: &[f64]) -> Result<Vec<f64>> {
    if y.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "point has length {}, shift has length {}",
            y.len(),
            b.len()
        )));
    }
    Ok(shifted_sparse_unchecked(y, r, b))
}

fn shifted_sparse_unchecked(y: &[f64], r: usize, b: &[f64]) -> Vec<f64> {
    let keys: Vec<f64> = y.iter().zip(b).map(|(yi, bi)| (yi - bi).abs()).collect();
    let mut out = b.to_vec();
    // kept coordinates are copied from y rather than rebuilt as b + (y - b)
    for i in top_k_indices(&keys, r) {
        out[i] = y[i];
    }
    out
}

pub fn distance(set: &ProjectableSet, p: &DenseMatrix) -> f64 {
    set.distance(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> DenseMatrix {
        DenseMatrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn nonneg_examples() {
        let x = DenseMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 0.0, -3.0]);
        let expected = DenseMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0]);
        assert_eq!(project_nonneg(&x), expected);
        assert_eq!(project_nonneg(&expected), expected);
    }

    #[test]
    fn orthogonal_examples() {
        let i3 = DenseMatrix::identity(3, 3);
        assert!((project_orthogonal(&i3, 3) - &i3).norm() < 1e-14);
        let d = DenseMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        assert!((project_orthogonal(&d, 2) - DenseMatrix::identity(2, 2)).norm() < 1e-14);
        // [[0,-2],[1,0]] = [[0,-1],[1,0]] * diag(1,2)
        let x = DenseMatrix::from_row_slice(2, 2, &[0.0, -2.0, 1.0, 0.0]);
        let expected = DenseMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!((project_orthogonal(&x, 2) - expected).norm() < 1e-14);
    }

    #[test]
    fn sparse_examples() {
        assert_eq!(project_sparse(&[3.0, -5.0], 1), vec![0.0, -5.0]);
        assert_eq!(project_sparse(&[2.0, -2.0, 1.0], 1), vec![2.0, 0.0, 0.0]);
        assert_eq!(project_sparse(&[2.0, -2.0, 1.0], 0), vec![0.0, 0.0, 0.0]);
        assert_eq!(project_sparse(&[2.0, -2.0, 1.0], 3), vec![2.0, -2.0, 1.0]);
    }

    #[test]
    fn box_sparse_examples() {
        let x = [0.3, -4.0, 2.5, 0.0, -1.0];
        assert_eq!(project_box_sparse(&x, 2, 1e8), project_sparse(&x, 2));
        // gains 25 - 4 = 21 and 4 - 0 = 4
        assert_eq!(project_box_sparse(&[5.0, -2.0], 1, 3.0), vec![3.0, 0.0]);
        assert_eq!(project_box_sparse(&[10.0, -5.0, 0.5], 2, 1.0), vec![1.0, -1.0, 0.0]);
    }

    #[test]
    fn column_sparse_examples() {
        let x = DenseMatrix::from_row_slice(2, 2, &[3.0, 1.0, -5.0, 2.0]);
        let expected = DenseMatrix::from_row_slice(2, 2, &[0.0, 0.0, -5.0, 2.0]);
        assert_eq!(project_column_sparse(&x, 1), expected);
        assert_eq!(project_column_sparse(&expected, 1), expected);
    }

    #[test]
    fn shifted_sparse_examples() {
        let b = [1.0, -2.0, 3.0];
        assert_eq!(project_shifted_sparse(&[7.0, 7.0, 7.0], 0, &b).unwrap(), b.to_vec());
        assert_eq!(project_shifted_sparse(&b, 2, &b).unwrap(), b.to_vec());
        assert_eq!(
            project_shifted_sparse(&[1.0, 5.0, 3.5], 1, &b).unwrap(),
            vec![1.0, 5.0, 3.0]
        );
        assert!(matches!(
            project_shifted_sparse(&[1.0], 0, &b),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn distance_examples() {
        let orthant = ProjectableSet::nonnegative(2, 1);
        assert_eq!(orthant.distance(&col(&[2.0, 0.0])), 0.0);
        assert_eq!(orthant.distance(&col(&[-3.0, 4.0])), 3.0);
        let sparse = ProjectableSet::box_sparse(3, 1, 1e8).unwrap();
        assert_eq!(sparse.distance(&col(&[0.0, 4.0, 0.0])), 0.0);
        assert_eq!(sparse.distance(&col(&[3.0, 4.0, 0.0])), 3.0);
    }

    #[test]
    fn membership() {
        let orth = ProjectableSet::orthogonal(2);
        assert!(orth.contains(&DenseMatrix::identity(2, 2)));
        assert!(!orth.contains(&(DenseMatrix::identity(2, 2) * 1.001)));
        assert!(!orth.contains(&DenseMatrix::identity(3, 3)));
        let bs = ProjectableSet::box_sparse(3, 1, 2.0).unwrap();
        assert!(bs.contains(&col(&[0.0, -2.0, 0.0])));
        assert!(!bs.contains(&col(&[0.0, -2.5, 0.0])));
        assert!(!bs.contains(&col(&[1.0, -1.0, 0.0])));
        let sh = ProjectableSet::shifted_sparse(1, vec![1.0, 1.0]).unwrap();
        assert!(sh.contains(&col(&[1.0, 9.0])));
        assert!(!sh.contains(&col(&[0.0, 9.0])));
    }

    #[test]
    fn convexity_flags() {
        assert!(ProjectableSet::nonnegative(2, 2).is_convex());
        assert!(!ProjectableSet::orthogonal(3).is_convex());
        assert!(!ProjectableSet::box_sparse(4, 2, 1e8).unwrap().is_convex());
        assert!(ProjectableSet::shifted_sparse(0, vec![1.0, -1.0]).unwrap().is_convex());
        assert!(!ProjectableSet::shifted_sparse(1, vec![1.0, -1.0]).unwrap().is_convex());
    }

    #[test]
    fn constructor_validation() {
        assert!(ProjectableSet::box_sparse(2, 3, 1.0).is_err());
        assert!(ProjectableSet::box_sparse(2, 1, 0.0).is_err());
        assert!(ProjectableSet::column_sparse(2, 2, 3).is_err());
        assert!(ProjectableSet::shifted_sparse(2, vec![0.0]).is_err());
    }
}
