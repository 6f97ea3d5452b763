//! Solvers for the split feasibility problem `find x in C with A x in D`.
//!
//! All three DC-based methods minimize `F(x) = 1/2 d^2(Ax, D) + indicator_C(x)` by the
//! majorized proximal step
//!
//! ```text
//! u = Proj_C(x - A^T (A x - eta) / L),    eta = Proj_D(A x)
//! ```
//!
//! [`spfeas_dc_ls`] picks `L` by a Barzilai-Borwein guess followed by a nonmonotone
//! backtracking test, [`spfeas_dc`] keeps it fixed, and [`cq_iteration`] is the convex
//! special case written with a step length `gamma = 1/L`. [`modified_alt_proj`] is the
//! alternating-projection baseline for completely positive factorization.

use std::time::Instant;

use crate::error::{invalid, Error, Result};
use crate::numerics::{all_finite, polar_factor, pseudoinverse, DenseMatrix};
use crate::operator::{inner, LinearOperator};
use crate::sets::{project_nonneg, ProjectableSet};

/// Absolute slack used by [`check_descent_inequality`].
pub const DESCENT_SLACK: f64 = 1e-10;

/// The triple `(A, C, D)`.
#[derive(Debug, Clone)]
pub struct SplitProblem {
    pub operator: LinearOperator,
    pub c: ProjectableSet,
    pub d: ProjectableSet,
}

impl SplitProblem {
    /// Builds the problem and computes `lambda_max(A^T A)`.
    pub fn new(a: DenseMatrix, c: ProjectableSet, d: ProjectableSet) -> Result<Self> {
        Self::from_operator(LinearOperator::new(a), c, d)
    }

    pub fn from_operator(
        operator: LinearOperator,
        c: ProjectableSet,
        d: ProjectableSet,
    ) -> Result<Self> {
        let (c_rows, c_cols) = c.shape();
        let (d_rows, d_cols) = d.shape();
        if c_rows != operator.cols() || d_rows != operator.rows() || c_cols != d_cols {
            return Err(Error::DimensionMismatch(format!(
                "operator is {}x{}, C holds {}x{} points, D holds {}x{} points",
                operator.rows(),
                operator.cols(),
                c_rows,
                c_cols,
                d_rows,
                d_cols
            )));
        }
        if !(operator.lambda_max() >= 0.0) {
            return Err(invalid("lambda_max must be nonnegative"));
        }
        Ok(Self { operator, c, d })
    }

    pub fn lambda_max(&self) -> f64 {
        self.operator.lambda_max()
    }

    /// 2 when C is convex, 1 otherwise.
    pub fn r_c(&self) -> f64 {
        if self.c.is_convex() {
            2.0
        } else {
            1.0
        }
    }

    pub fn domain_shape(&self) -> (usize, usize) {
        self.c.shape()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerminationRule {
    /// Stop once every entry of `A x` is at least the threshold.
    MinEntry(f64),
    /// Stop once `d(A x, D)` drops below the tolerance.
    DistBelow(f64),
    /// Stop once [`relative_step_measure`] drops below the tolerance.
    RelativeStep(f64),
    MaxIterOnly,
}

/// Parameters of [`spfeas_dc_ls`].
#[derive(Debug, Clone)]
pub struct LsConfig {
    /// Nonmonotone window `M`: the test compares against the last `M + 1` values.
    pub memory: usize,
    pub tau: f64,
    pub c: f64,
    pub l_min: f64,
    pub l_max: f64,
    /// Initial guess at the first iteration (clamped into `[l_min, l_max]`).
    pub l_initial: f64,
    pub bb_threshold: f64,
    pub bb_decay: f64,
    pub max_iter: usize,
    pub l_blowup: f64,
    pub termination: TerminationRule,
    pub record_iterates: bool,
}

impl Default for LsConfig {
    fn default() -> Self {
        Self {
            memory: 4,
            tau: 2.0,
            c: 1e-4,
            l_min: 1e-8,
            l_max: 1e8,
            l_initial: 1.0,
            bb_threshold: 1e-16,
            bb_decay: 1.1,
            max_iter: 5000,
            l_blowup: 1e10,
            termination: TerminationRule::MaxIterOnly,
            record_iterates: false,
        }
    }
}

impl LsConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tau > 1.0
            && self.c > 0.0
            && self.l_min > 0.0
            && self.l_min <= self.l_max
            && self.bb_decay > 1.0
            && self.bb_threshold.is_finite()
            && self.l_initial.is_finite()
            && self.l_blowup > 0.0
            && termination_finite(&self.termination);
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid linesearch configuration {self:?}")))
        }
    }

    fn clamp(&self, l: f64) -> f64 {
        l.max(self.l_min).min(self.l_max)
    }
}

/// Parameters of the fixed-step solvers.
#[derive(Debug, Clone)]
pub struct FixedStepConfig {
    pub max_iter: usize,
    pub termination: TerminationRule,
    pub record_iterates: bool,
}

impl FixedStepConfig {
    pub fn new(max_iter: usize, termination: TerminationRule) -> Self {
        Self {
            max_iter,
            termination,
            record_iterates: false,
        }
    }

    pub fn recording(mut self) -> Self {
        self.record_iterates = true;
        self
    }
}

fn termination_finite(rule: &TerminationRule) -> bool {
    match rule {
        TerminationRule::MinEntry(v)
        | TerminationRule::DistBelow(v)
        | TerminationRule::RelativeStep(v) => v.is_finite(),
        TerminationRule::MaxIterOnly => true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Success,
    MaxIter,
    LBlowup,
    NumericalFailure,
}

/// Summary of one solver run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub final_x: DenseMatrix,
    /// `d(A final_x, D)`.
    pub final_dist: f64,
    /// Number of updates performed, so a run stopped by the iteration cap reports `max_iter + 1`.
    pub iters: usize,
    pub status: RunStatus,
    /// Accepted step parameters `L_bar_t`, one per update.
    pub l_history: Vec<f64>,
    /// `1/2 d^2(A x^t, D)` for `t = 0..=iters`.
    pub fval_history: Vec<f64>,
    /// `||x^{t+1} - x^t||`, one per update.
    pub step_norms: Vec<f64>,
    /// Backtracking multiplications per update (empty for fixed-step methods).
    pub ls_trials: Vec<usize>,
    pub wall_time: f64,
    /// Every iterate `x^0, x^1, ...` when recording was requested.
    pub iterates: Vec<DenseMatrix>,
}

impl RunRecord {
    pub fn final_fval(&self) -> f64 {
        0.5 * self.final_dist * self.final_dist
    }

    pub fn succeeded(&self) -> bool {
        self.status == RunStatus::Success
    }
}

struct Evaluation {
    ax: DenseMatrix,
    eta: DenseMatrix,
    dist_sq: f64,
}

fn evaluate(problem: &SplitProblem, x: &DenseMatrix) -> Evaluation {
    let ax = problem.operator.apply(x);
    let eta = problem.d.project(&ax);
    let dist_sq = (&ax - &eta).norm_squared();
    Evaluation { ax, eta, dist_sq }
}

fn gradient(problem: &SplitProblem, ev: &Evaluation) -> DenseMatrix {
    problem.operator.adjoint(&(&ev.ax - &ev.eta))
}

/// `Proj_C(x - step * grad)`. Every solver goes through this so that equal step
/// lengths produce bitwise-equal iterates.
fn prox_step(problem: &SplitProblem, x: &DenseMatrix, grad: &DenseMatrix, step: f64) -> DenseMatrix {
    let moved = x.zip_map(grad, |xi, gi| xi - step * gi);
    problem.c.project(&moved)
}

/// `1/2 d^2(A x, D)`.
pub fn objective(problem: &SplitProblem, x: &DenseMatrix) -> f64 {
    0.5 * evaluate(problem, x).dist_sq
}

/// Relative stationarity measure used by [`TerminationRule::RelativeStep`]:
///
/// ```text
/// sqrt((sqrt(lambda_max) ||A dx|| + L_prev ||dx||)^2 + ||dx||^2) / max(1, ||x||),  dx = x - x_prev
/// ```
pub fn relative_step_measure(
    problem: &SplitProblem,
    x: &DenseMatrix,
    x_prev: &DenseMatrix,
    l_prev: f64,
) -> f64 {
    let adx = problem.operator.apply(&(x - x_prev)).norm();
    relative_step_from_parts(problem, x, x_prev, adx, l_prev)
}

fn relative_step_from_parts(
    problem: &SplitProblem,
    x: &DenseMatrix,
    x_prev: &DenseMatrix,
    adx: f64,
    l_prev: f64,
) -> f64 {
    let dxn = (x - x_prev).norm();
    let a = problem.lambda_max().sqrt() * adx + l_prev * dxn;
    (a * a + dxn * dxn).sqrt() / x.norm().max(1.0)
}

/// The previous iterate, its image under `A` and `L_bar` of the step that left it.
type PrevStep<'a> = (&'a DenseMatrix, &'a DenseMatrix, f64);

fn terminated(
    rule: TerminationRule,
    problem: &SplitProblem,
    x: &DenseMatrix,
    ev: &Evaluation,
    prev: Option<PrevStep<'_>>,
) -> bool {
    match rule {
        TerminationRule::MinEntry(threshold) => ev.ax.min() >= threshold,
        TerminationRule::DistBelow(tol) => ev.dist_sq.sqrt() < tol,
        TerminationRule::RelativeStep(tol) => match prev {
            // A (x - x_prev) from the cached products saves a pass over A.
            Some((x_prev, ax_prev, l_prev)) => {
                let adx = (&ev.ax - ax_prev).norm();
                relative_step_from_parts(problem, x, x_prev, adx, l_prev) < tol
            }
            None => false,
        },
        TerminationRule::MaxIterOnly => false,
    }
}

fn check_start(problem: &SplitProblem, x0: &DenseMatrix) -> Result<()> {
    if x0.shape() != problem.domain_shape() {
        return Err(Error::DimensionMismatch(format!(
            "x0 is {}x{}, expected {:?}",
            x0.nrows(),
            x0.ncols(),
            problem.domain_shape()
        )));
    }
    if !problem.c.contains(x0) {
        return Err(invalid("x0 is not a member of C"));
    }
    Ok(())
}

/// Initial step parameter from the Barzilai-Borwein quotient `<Y, S> / ||S||^2`, or a
/// decayed copy of the previous accepted value when `<Y, S>` is below the threshold.
/// The result is clamped into `[l_min, l_max]`.
pub fn bb_initial_l(s: &DenseMatrix, y: &DenseMatrix, l_prev: f64, cfg: &LsConfig) -> f64 {
    let ys = inner(y, s);
    let ss = s.norm_squared();
    if ys >= cfg.bb_threshold && ss > 0.0 {
        cfg.clamp(ys / ss)
    } else {
        cfg.clamp(l_prev / cfg.bb_decay)
    }
}

struct Trace {
    start: Instant,
    record_iterates: bool,
    l_history: Vec<f64>,
    fval_history: Vec<f64>,
    step_norms: Vec<f64>,
    ls_trials: Vec<usize>,
    iterates: Vec<DenseMatrix>,
}

impl Trace {
    fn new(record_iterates: bool, x0: &DenseMatrix, dist_sq0: f64) -> Self {
        Self {
            start: Instant::now(),
            record_iterates,
            l_history: Vec::new(),
            fval_history: vec![0.5 * dist_sq0],
            step_norms: Vec::new(),
            ls_trials: Vec::new(),
            iterates: if record_iterates { vec![x0.clone()] } else { Vec::new() },
        }
    }

    fn accept(&mut self, x: &DenseMatrix, dist_sq: f64, step_norm: f64, l: Option<f64>) {
        self.fval_history.push(0.5 * dist_sq);
        self.step_norms.push(step_norm);
        if let Some(l) = l {
            self.l_history.push(l);
        }
        if self.record_iterates {
            self.iterates.push(x.clone());
        }
    }

    fn finish(self, x: DenseMatrix, dist_sq: f64, iters: usize, status: RunStatus) -> RunRecord {
        RunRecord {
            final_dist: dist_sq.sqrt(),
            final_x: x,
            iters,
            status,
            l_history: self.l_history,
            fval_history: self.fval_history,
            step_norms: self.step_norms,
            ls_trials: self.ls_trials,
            wall_time: self.start.elapsed().as_secs_f64(),
            iterates: self.iterates,
        }
    }
}

fn healthy(x: &DenseMatrix, ev: &Evaluation) -> bool {
    ev.dist_sq.is_finite() && all_finite(x)
}

/// Nonmonotone proximal-gradient method with Barzilai-Borwein initial steps.
///
/// At iteration `t` the trial `L_t` starts at [`bb_initial_l`] (or `cfg.l_initial` for
/// `t = 0`) and is multiplied by `tau` until
///
/// ```text
/// d^2(A u, D) <= max_{[t-M]_+ <= i <= t} d^2(A x^i, D) - c ||u - x^t||^2.
/// ```
///
/// The projection `eta^t` used in the gradient is computed once per iteration and reused
/// across backtracking trials.
pub fn spfeas_dc_ls(problem: &SplitProblem, cfg: &LsConfig, x0: &DenseMatrix) -> Result<RunRecord> {
    cfg.validate()?;
    check_start(problem, x0)?;

    let mut x = x0.clone();
    let mut ev = evaluate(problem, &x);
    let mut trace = Trace::new(cfg.record_iterates, &x, ev.dist_sq);
    let mut dist_sq_hist = vec![ev.dist_sq];
    let mut grad = gradient(problem, &ev);
    // (x^{t-1}, grad^{t-1}, A x^{t-1}, L_bar_{t-1})
    let mut prev: Option<(DenseMatrix, DenseMatrix, DenseMatrix, f64)> = None;
    let mut t = 0usize;

    let status = loop {
        if !healthy(&x, &ev) {
            break RunStatus::NumericalFailure;
        }
        let prev_ref = prev.as_ref().map(|(xp, _, axp, l)| (xp, axp, *l));
        if terminated(cfg.termination, problem, &x, &ev, prev_ref) {
            break RunStatus::Success;
        }
        if t > cfg.max_iter {
            break RunStatus::MaxIter;
        }

        let mut l = match &prev {
            None => cfg.clamp(cfg.l_initial),
            Some((xp, gp, _, lp)) => bb_initial_l(&(&x - xp), &(&grad - gp), *lp, cfg),
        };
        let lo = t.saturating_sub(cfg.memory);
        let window_max = dist_sq_hist[lo..=t]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);

        let mut trials = 0usize;
        let accepted = loop {
            let u = prox_step(problem, &x, &grad, 1.0 / l);
            let eu = evaluate(problem, &u);
            let step_sq = (&u - &x).norm_squared();
            if !eu.dist_sq.is_finite() || !step_sq.is_finite() {
                break None;
            }
            if eu.dist_sq <= window_max - cfg.c * step_sq {
                break Some((u, eu, step_sq));
            }
            l *= cfg.tau;
            trials += 1;
            if l > cfg.l_blowup {
                break None;
            }
        };
        let Some((u, eu, step_sq)) = accepted else {
            break if l > cfg.l_blowup {
                RunStatus::LBlowup
            } else {
                RunStatus::NumericalFailure
            };
        };

        let new_grad = gradient(problem, &eu);
        trace.accept(&u, eu.dist_sq, step_sq.sqrt(), Some(l));
        trace.ls_trials.push(trials);
        dist_sq_hist.push(eu.dist_sq);
        let old_x = std::mem::replace(&mut x, u);
        let old_grad = std::mem::replace(&mut grad, new_grad);
        let old_ev = std::mem::replace(&mut ev, eu);
        prev = Some((old_x, old_grad, old_ev.ax, l));
        t += 1;
    };

    Ok(trace.finish(x, ev.dist_sq, t, status))
}

/// Shared loop of the fixed-step methods: `x^{t+1} = Proj_C(x^t - step * grad^t)`.
fn fixed_step_loop(
    problem: &SplitProblem,
    step: f64,
    l_equiv: f64,
    x0: &DenseMatrix,
    cfg: &FixedStepConfig,
) -> RunRecord {
    let mut x = x0.clone();
    let mut ev = evaluate(problem, &x);
    let mut trace = Trace::new(cfg.record_iterates, &x, ev.dist_sq);
    let mut prev: Option<(DenseMatrix, DenseMatrix)> = None;
    let mut t = 0usize;

    let status = loop {
        if !healthy(&x, &ev) {
            break RunStatus::NumericalFailure;
        }
        let prev_ref = prev.as_ref().map(|(xp, axp)| (xp, axp, l_equiv));
        if terminated(cfg.termination, problem, &x, &ev, prev_ref) {
            break RunStatus::Success;
        }
        if t > cfg.max_iter {
            break RunStatus::MaxIter;
        }
        let grad = gradient(problem, &ev);
        let u = prox_step(problem, &x, &grad, step);
        let eu = evaluate(problem, &u);
        let step_norm = (&u - &x).norm();
        trace.accept(&u, eu.dist_sq, step_norm, Some(l_equiv));
        let old_x = std::mem::replace(&mut x, u);
        let old_ev = std::mem::replace(&mut ev, eu);
        prev = Some((old_x, old_ev.ax));
        t += 1;
    };

    trace.finish(x, ev.dist_sq, t, status)
}

/// Fixed-step method with `L > lambda_max(A^T A) / r_C`.
pub fn spfeas_dc(
    problem: &SplitProblem,
    l: f64,
    x0: &DenseMatrix,
    cfg: &FixedStepConfig,
) -> Result<RunRecord> {
    check_start(problem, x0)?;
    let bound = problem.lambda_max() / problem.r_c();
    if !(l.is_finite() && l > bound) {
        return Err(invalid(format!(
            "step parameter L = {l} must exceed lambda_max / r_C = {bound}"
        )));
    }
    if !termination_finite(&cfg.termination) {
        return Err(invalid("termination threshold must be finite"));
    }
    Ok(fixed_step_loop(problem, 1.0 / l, l, x0, cfg))
}

/// Classical CQ iteration `x^{t+1} = Proj_C(x^t - gamma A^T (A x^t - Proj_D(A x^t)))`
/// for convex `C` and `D`, with `0 < gamma < 2 / lambda_max(A^T A)`.
pub fn cq_iteration(
    problem: &SplitProblem,
    gamma: f64,
    x0: &DenseMatrix,
    cfg: &FixedStepConfig,
) -> Result<RunRecord> {
    if !problem.c.is_convex() || !problem.d.is_convex() {
        return Err(invalid("the CQ iteration requires convex C and D"));
    }
    let lambda = problem.lambda_max();
    if !(gamma > 0.0 && gamma * lambda < 2.0 && gamma.is_finite()) {
        return Err(invalid(format!(
            "step length {gamma} outside (0, 2 / lambda_max) with lambda_max = {lambda}"
        )));
    }
    check_start(problem, x0)?;
    if !termination_finite(&cfg.termination) {
        return Err(invalid("termination threshold must be finite"));
    }
    Ok(fixed_step_loop(problem, gamma, 1.0 / gamma, x0, cfg))
}

/// Settings for [`modified_alt_proj`].
#[derive(Debug, Clone)]
pub struct AltProjConfig {
    pub max_iter: usize,
    /// Success once `min(B Q^t) >= success_threshold`.
    pub success_threshold: f64,
    /// Keep iterates invariant under the column permutations that fix both `B` and `Q^0`.
    ///
    /// Each step commutes with permuting rows and columns of `Q` along bitwise-identical
    /// columns of `B`, so in exact arithmetic an invariant start (such as `Q^0 = I` with
    /// a factor that repeats one column) keeps every iterate invariant. In floating
    /// point, rounding breaks the symmetry and the drift grows geometrically. With the
    /// lock, the projection target is averaged over the group before taking its polar
    /// factor. It has no effect when `Q^0` is not invariant.
    pub symmetry_lock: bool,
}

impl AltProjConfig {
    pub fn new(max_iter: usize, success_threshold: f64) -> Self {
        Self {
            max_iter,
            success_threshold,
            symmetry_lock: true,
        }
    }
}

/// Equivalence classes of bitwise-identical columns of a matrix. Permuting indices
/// within a class acts on `r x r` matrices by `Q -> P^T Q P`; an entry's orbit under
/// that group is determined by the classes of its row and column and by whether it
/// sits on the diagonal.
#[derive(Debug, Clone)]
pub struct ColumnSymmetry {
    class_of: Vec<usize>,
    classes: usize,
}

impl ColumnSymmetry {
    pub fn of_columns(b: &DenseMatrix) -> Self {
        let r = b.ncols();
        let mut class_of = vec![usize::MAX; r];
        let mut classes = 0;
        for j in 0..r {
            if class_of[j] != usize::MAX {
                continue;
            }
            class_of[j] = classes;
            for k in j + 1..r {
                if class_of[k] == usize::MAX && b.column(k) == b.column(j) {
                    class_of[k] = classes;
                }
            }
            classes += 1;
        }
        Self { class_of, classes }
    }

    /// Whether some class has more than one member.
    pub fn is_trivial(&self) -> bool {
        self.classes == self.class_of.len()
    }

    fn orbit(&self, i: usize, j: usize) -> usize {
        (self.class_of[i] * self.classes + self.class_of[j]) * 2 + usize::from(i == j)
    }

    /// Whether `q` is fixed by every permutation in the group.
    pub fn is_invariant(&self, q: &DenseMatrix) -> bool {
        let mut first = vec![None; 2 * self.classes * self.classes];
        for j in 0..q.ncols() {
            for i in 0..q.nrows() {
                let slot = &mut first[self.orbit(i, j)];
                match slot {
                    None => *slot = Some(q[(i, j)]),
                    Some(v) if *v != q[(i, j)] => return false,
                    _ => {}
                }
            }
        }
        true
    }

    /// Polar factor of the orbit average of `t`.
    ///
    /// Invariant matrices are block diagonal in a basis made of the normalized class
    /// indicators and, for each class, the vectors summing to zero on it: one block of
    /// order equal to the number of classes, and on each class complement a multiple of
    /// the identity. The polar factor is computed blockwise.
    pub fn invariant_polar(&self, t: &DenseMatrix) -> DenseMatrix {
        let k = self.classes;
        let r = self.class_of.len();
        let mut size = vec![0usize; k];
        for &c in &self.class_of {
            size[c] += 1;
        }
        let mut reduced = DenseMatrix::zeros(k, k);
        let mut diag = vec![0.0; k];
        let mut off = vec![0.0; k];
        for j in 0..r {
            let cj = self.class_of[j];
            for i in 0..r {
                let ci = self.class_of[i];
                let v = t[(i, j)];
                reduced[(ci, cj)] += v;
                if ci == cj {
                    if i == j {
                        diag[ci] += v;
                    } else {
                        off[ci] += v;
                    }
                }
            }
        }
        let norm: Vec<f64> = size.iter().map(|&s| (s as f64).sqrt()).collect();
        for j in 0..k {
            for i in 0..k {
                reduced[(i, j)] /= norm[i] * norm[j];
            }
        }
        let signs: Vec<f64> = (0..k)
            .map(|c| {
                let s = size[c] as f64;
                if size[c] < 2 {
                    return 0.0;
                }
                let lambda = diag[c] / s - off[c] / (s * (s - 1.0));
                if lambda > 0.0 {
                    1.0
                } else if lambda < 0.0 {
                    -1.0
                } else {
                    f64::NAN
                }
            })
            .collect();
        let Ok(polar) = polar_factor(&reduced) else {
            return DenseMatrix::from_element(r, r, f64::NAN);
        };
        DenseMatrix::from_fn(r, r, |i, j| {
            let (ci, cj) = (self.class_of[i], self.class_of[j]);
            let mut v = polar[(ci, cj)] / (norm[ci] * norm[cj]);
            if ci == cj && size[ci] > 1 {
                let delta = if i == j { 1.0 } else { 0.0 };
                v += signs[ci] * (delta - 1.0 / size[ci] as f64);
            }
            v
        })
    }

    /// Replaces every entry by the mean over its orbit.
    pub fn symmetrize(&self, q: &mut DenseMatrix) {
        let slots = 2 * self.classes * self.classes;
        let mut sums = vec![0.0; slots];
        let mut counts = vec![0usize; slots];
        for j in 0..q.ncols() {
            for i in 0..q.nrows() {
                let k = self.orbit(i, j);
                sums[k] += q[(i, j)];
                counts[k] += 1;
            }
        }
        for j in 0..q.ncols() {
            for i in 0..q.nrows() {
                let k = self.orbit(i, j);
                if counts[k] > 1 {
                    q[(i, j)] = sums[k] / counts[k] as f64;
                }
            }
        }
    }
}

/// Modified alternating projections for finding an orthogonal `Q` with `B Q >= 0`:
///
/// ```text
/// W^t = max(B Q^t, 0),   Q^{t+1} = Proj_orth(B^+ W^t + (I - B^+ B) Q^t)
/// ```
///
/// The target is evaluated as `Q^t + B^+ (W^t - B Q^t)`, where `W^t - B Q^t` is exact in
/// floating point. Forming `(I - B^+ B) Q^t` explicitly leaves the iterates stuck at
/// `min(B Q) ~ -1e-14` for `n = 40`, above the usual `-1e-15` success threshold.
///
/// The recorded objective is `1/2 d^2(B Q^t, R_+)`.
pub fn modified_alt_proj(
    b: &DenseMatrix,
    q0: &DenseMatrix,
    cfg: &AltProjConfig,
) -> Result<RunRecord> {
    let r = b.ncols();
    let orth = ProjectableSet::orthogonal(r);
    if q0.shape() != (r, r) || !orth.contains(q0) {
        return Err(invalid("Q0 must be an orthogonal matrix matching the columns of B"));
    }
    if !cfg.success_threshold.is_finite() {
        return Err(invalid("success threshold must be finite"));
    }
    let b_pinv = pseudoinverse(b)?;
    let lock = if cfg.symmetry_lock {
        let sym = ColumnSymmetry::of_columns(b);
        (!sym.is_trivial() && sym.is_invariant(q0)).then_some(sym)
    } else {
        None
    };

    let mut q = q0.clone();
    let mut bq = b * &q;
    let nonneg_dist_sq = |bq: &DenseMatrix| bq.iter().map(|v| v.min(0.0).powi(2)).sum::<f64>();
    let mut dist_sq = nonneg_dist_sq(&bq);
    let mut trace = Trace::new(false, &q, dist_sq);
    let mut t = 0usize;

    let status = loop {
        if !dist_sq.is_finite() || !all_finite(&q) {
            break RunStatus::NumericalFailure;
        }
        if bq.min() >= cfg.success_threshold {
            break RunStatus::Success;
        }
        if t > cfg.max_iter {
            break RunStatus::MaxIter;
        }
        let w = project_nonneg(&bq);
        let target = &q + &b_pinv * (w - &bq);
        let q_next = match &lock {
            Some(sym) => sym.invariant_polar(&target),
            None => orth.project(&target),
        };
        let step_norm = (&q_next - &q).norm();
        q = q_next;
        bq = b * &q;
        dist_sq = nonneg_dist_sq(&bq);
        trace.accept(&q, dist_sq, step_norm, None);
        t += 1;
    };

    Ok(trace.finish(q, dist_sq, t, status))
}

/// Unit-step fixed-point residual `||x - Proj_C(x - A^T (A x - Proj_D(A x)))||`,
/// zero at every solution of the feasibility problem.
pub fn stationarity_residual(problem: &SplitProblem, x: &DenseMatrix) -> f64 {
    let ev = evaluate(problem, x);
    let grad = gradient(problem, &ev);
    (x - prox_step(problem, x, &grad, 1.0)).norm()
}

/// Whether one majorized step from `x` with parameter `L` satisfies
///
/// ```text
/// F(u) <= F(x) - (r_C L - lambda_max) / 2 ||u - x||^2
/// ```
///
/// up to [`DESCENT_SLACK`].
pub fn check_descent_inequality(problem: &SplitProblem, x: &DenseMatrix, l: f64) -> bool {
    let ev = evaluate(problem, x);
    let grad = gradient(problem, &ev);
    let u = prox_step(problem, x, &grad, 1.0 / l);
    let fu = objective(problem, &u);
    let fx = 0.5 * ev.dist_sq;
    let slope = (problem.r_c() * l - problem.lambda_max()) / 2.0;
    fu <= fx - slope * (&u - x).norm_squared() + DESCENT_SLACK
}
