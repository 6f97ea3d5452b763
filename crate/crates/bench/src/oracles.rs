//! Independent oracles for the projections: exhaustive search over supports for the
//! sparse sets, a closed form for the orthant, and comparison against sampled orthogonal
//! matrices for the orthogonal group.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use splitfeas::numerics::DenseMatrix;
use splitfeas::problems::{derive_seed, gaussian_matrix, random_orthogonal_init, seeded_rng};
use splitfeas::sets::{project_sparse, ProjectableSet};

/// Relative tolerance on squared distances against the exhaustive optimum.
pub const DIST_TOL: f64 = 1e-10;
/// Orthogonal samples compared against each orthogonal projection.
const ORTHO_SAMPLES: usize = 40;

/// Results of one projection kind over a batch of random inputs.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub kind: &'static str,
    pub inputs: usize,
    pub failures: Vec<String>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// All `k`-subsets of `0..dim`, in lexicographic order.
pub fn supports(dim: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, dim: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..=dim - left {
            cur.push(i);
            rec(i + 1, dim, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, dim, k.min(dim), &mut Vec::new(), &mut out);
    out
}

/// Smallest squared distance from `x` to a vector supported on at most `k` entries in
/// `[-bound, bound]`, by trying every support of size `min(k, dim)`.
pub fn brute_sparse_dist_sq(x: &[f64], k: usize, bound: f64) -> f64 {
    supports(x.len(), k)
        .into_iter()
        .map(|supp| {
            let mut d = x.iter().map(|v| v * v).sum::<f64>();
            for i in supp {
                let c = x[i].clamp(-bound, bound);
                d += (x[i] - c).powi(2) - x[i] * x[i];
            }
            d.max(0.0)
        })
        .fold(f64::INFINITY, f64::min)
}

fn close(got: f64, best: f64) -> bool {
    (got - best).abs() <= DIST_TOL * (1.0 + best)
}

/// Random entries, rounded to a coarse grid half of the time so that ties occur.
fn random_entries(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let coarse = rng.random_bool(0.5);
    (0..len)
        .map(|_| {
            let v: f64 = rng.random_range(-10.0..10.0);
            if coarse {
                v.round()
            } else {
                v
            }
        })
        .collect()
}

fn col(v: &[f64]) -> DenseMatrix {
    DenseMatrix::from_column_slice(v.len(), 1, v)
}

/// Common checks: the projection lies in the set and projecting again changes nothing.
fn check_membership(set: &ProjectableSet, x: &DenseMatrix, p: &DenseMatrix) -> Option<String> {
    if !set.contains(p) {
        return Some(format!("projection of {:?} is not in the set", x.as_slice()));
    }
    let again = set.project(p);
    if (&again - p).norm() > 1e-12 * (1.0 + p.norm()) {
        return Some(format!("projection of {:?} is not idempotent", x.as_slice()));
    }
    None
}

fn run_kind(
    kind: &'static str,
    seed: u64,
    tag: u64,
    count: usize,
    mut one: impl FnMut(&mut ChaCha8Rng) -> Option<String>,
) -> OracleReport {
    let mut failures = Vec::new();
    for i in 0..count {
        let mut rng = seeded_rng(derive_seed(seed, tag, i as u64, 0));
        if let Some(msg) = one(&mut rng) {
            failures.push(msg);
        }
    }
    OracleReport { kind, inputs: count, failures }
}

/// Runs `count` random inputs through every projection, with ambient dimension at most
/// `max_dim`.
pub fn projection_suite(seed: u64, count: usize, max_dim: usize) -> Vec<OracleReport> {
    let max_dim = max_dim.max(1);
    let mut reports = Vec::new();

    reports.push(run_kind("sparse", seed, 11, count, |rng| {
        let dim = rng.random_range(1..=max_dim);
        let k = rng.random_range(0..=dim);
        let x = random_entries(rng, dim);
        let p = project_sparse(&x, k);
        let got: f64 = x.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum();
        let best = brute_sparse_dist_sq(&x, k, f64::INFINITY);
        if p.iter().filter(|v| **v != 0.0).count() > k || !close(got, best) {
            return Some(format!("sparse k={k} x={x:?}: distance^2 {got:e}, optimum {best:e}"));
        }
        None
    }));

    reports.push(run_kind("box-sparse", seed, 12, count, |rng| {
        let dim = rng.random_range(1..=max_dim);
        let k = rng.random_range(0..=dim);
        let bound = if rng.random_bool(0.2) { 1e8 } else { rng.random_range(0.5..12.0) };
        let x = random_entries(rng, dim);
        let set = ProjectableSet::box_sparse(dim, k, bound).ok()?;
        let xm = col(&x);
        let p = set.project(&xm);
        let best = brute_sparse_dist_sq(&x, k, bound);
        let got = (&xm - &p).norm_squared();
        if !close(got, best) {
            return Some(format!("box-sparse k={k} bound={bound} x={x:?}: {got:e} vs {best:e}"));
        }
        check_membership(&set, &xm, &p)
    }));

    reports.push(run_kind("column-sparse", seed, 13, count, |rng| {
        let rows = rng.random_range(1..=max_dim);
        let cols = rng.random_range(1..=(max_dim / rows).max(1));
        let k = rng.random_range(0..=rows);
        let x = DenseMatrix::from_vec(rows, cols, random_entries(rng, rows * cols));
        let set = ProjectableSet::column_sparse(rows, cols, k).ok()?;
        let p = set.project(&x);
        let best: f64 = x
            .column_iter()
            .map(|c| brute_sparse_dist_sq(c.as_slice(), k, f64::INFINITY))
            .sum();
        let got = (&x - &p).norm_squared();
        if !close(got, best) {
            return Some(format!("column-sparse k={k} x={:?}: {got:e} vs {best:e}", x.as_slice()));
        }
        check_membership(&set, &x, &p)
    }));

    reports.push(run_kind("shifted-sparse", seed, 14, count, |rng| {
        let dim = rng.random_range(1..=max_dim);
        let k = rng.random_range(0..=dim);
        let y = random_entries(rng, dim);
        let shift = random_entries(rng, dim);
        let set = ProjectableSet::shifted_sparse(k, shift.clone()).ok()?;
        let ym = col(&y);
        let p = set.project(&ym);
        let centered: Vec<f64> = y.iter().zip(&shift).map(|(a, b)| a - b).collect();
        let best = brute_sparse_dist_sq(&centered, k, f64::INFINITY);
        let got = (&ym - &p).norm_squared();
        if !close(got, best) {
            return Some(format!("shifted-sparse k={k} y={y:?} b={shift:?}: {got:e} vs {best:e}"));
        }
        check_membership(&set, &ym, &p)
    }));

    reports.push(run_kind("nonnegative", seed, 15, count, |rng| {
        let rows = rng.random_range(1..=max_dim);
        let cols = rng.random_range(1..=(max_dim / rows).max(1));
        let x = DenseMatrix::from_vec(rows, cols, random_entries(rng, rows * cols));
        let set = ProjectableSet::nonnegative(rows, cols);
        let p = set.project(&x);
        // coordinatewise minimizer of (x_i - p_i)^2 over p_i >= 0
        let exact = x.map(|v| if v > 0.0 { v } else { 0.0 });
        if (&p - &exact).norm() != 0.0 {
            return Some(format!("nonnegative x={:?}", x.as_slice()));
        }
        for _ in 0..20 {
            let z = DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(0.0..10.0));
            if (&x - &z).norm() < (&x - &p).norm() - 1e-12 {
                return Some(format!("nonnegative x={:?}: sampled point is closer", x.as_slice()));
            }
        }
        check_membership(&set, &x, &p)
    }));

    reports.push(run_kind("orthogonal", seed, 16, count, |rng| {
        let max_order = (1..=max_dim).take_while(|r| r * r <= max_dim).last().unwrap_or(1);
        let order = rng.random_range(1..=max_order);
        let x = DenseMatrix::from_vec(order, order, random_entries(rng, order * order));
        let set = ProjectableSet::orthogonal(order);
        let p = set.project(&x);
        if let Some(msg) = check_membership(&set, &x, &p) {
            return Some(msg);
        }
        let base = (&x - &p).norm();
        for j in 0..ORTHO_SAMPLES {
            let q = if j % 2 == 0 {
                random_orthogonal_init(order, rng.random())
            } else {
                cayley_perturbation(&p, rng, 10f64.powi(-(j as i32 % 6)))
            };
            if (&x - &q).norm() < base - 1e-10 {
                return Some(format!(
                    "orthogonal x={:?}: sample at distance {:e} beats {base:e}",
                    x.as_slice(),
                    (&x - &q).norm()
                ));
            }
        }
        None
    }));

    reports
}

/// `P (I - S)^{-1} (I + S)` for a random skew-symmetric `S` of size `eps`: an orthogonal
/// matrix near `P` that does not go through the polar factor.
fn cayley_perturbation(p: &DenseMatrix, rng: &mut ChaCha8Rng, eps: f64) -> DenseMatrix {
    let r = p.nrows();
    let g = gaussian_matrix(rng, r, r);
    let s = (&g - g.transpose()) * (0.5 * eps);
    let id = DenseMatrix::identity(r, r);
    match (&id - &s).try_inverse() {
        Some(inv) => p * inv * (&id + &s),
        None => p.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn supports_enumerate_binomials() {
        assert_eq!(supports(5, 2).len(), 10);
        assert_eq!(supports(4, 0), vec![Vec::<usize>::new()]);
        assert_eq!(supports(3, 5).len(), 1);
    }

    #[test]
    fn brute_force_small_cases() {
        assert_eq!(brute_sparse_dist_sq(&[3.0, -1.0, 2.0], 1, f64::INFINITY), 5.0);
        assert_eq!(brute_sparse_dist_sq(&[3.0, -1.0, 2.0], 1, 1.0), 1.0 + 4.0 + 4.0);
    }

    #[test]
    fn suite_passes_on_small_batch() {
        for report in projection_suite(3, 60, 10) {
            assert!(report.passed(), "{}: {:?}", report.kind, report.failures);
        }
    }

    #[test]
    fn cayley_stays_orthogonal() {
        let mut rng = seeded_rng(5);
        let p = random_orthogonal_init(3, 9);
        let q = cayley_perturbation(&p, &mut rng, 0.3);
        assert!((q.transpose() * &q - DenseMatrix::identity(3, 3)).norm() < 1e-12);
    }
}
