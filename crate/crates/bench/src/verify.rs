//! The `verify` suite: projection oracles, descent and equivalence checks, trace
//! invariants and stationarity of solved runs on the smallest experiment configurations.
//!
//! Every check is deterministic in the seed; the summary lines carry no timings.

use std::time::Instant;

use rand::Rng;
use splitfeas::invariants::{
    check_fixed_step_descent, check_l_bar_bound, check_linesearch_count, check_membership,
    check_nonmonotone_bound,
};
use splitfeas::numerics::DenseMatrix;
use splitfeas::problems::{
    cp_initial_factor, cp_problem, derive_seed, gaussian_matrix, gen_random_cp,
    random_orthogonal_init, seeded_rng,
};
use splitfeas::solvers::{check_descent_inequality, relative_step_measure};
use splitfeas::{
    cq_iteration, spfeas_dc, spfeas_dc_ls, FixedStepConfig, LsConfig, ProjectableSet, RunRecord,
    RunStatus, SplitProblem, TerminationRule,
};

use crate::experiment::{run_experiment, Algorithm, ExperimentSpec, Family, RankSpec};
use crate::oracles::projection_suite;

pub const PROJECTION_INPUTS: usize = 500;
pub const PROJECTION_MAX_DIM: usize = 10;
pub const DESCENT_STEPS: usize = 100;
pub const EQUIVALENCE_INSTANCES: usize = 20;
pub const STATIONARITY_TOL: f64 = 1e-6;
/// Equivalence runs stop by the relative-step rule at this tolerance. Running on into a
/// stall at an infeasible stationary point would let rounding reject a step that exact
/// arithmetic accepts.
pub const EQUIVALENCE_STOP: f64 = 1e-6;
pub const EQUIVALENCE_MAX_ITER: usize = 500;
/// Margin `L - lambda_max / r_C` of the equivalence runs.
const EQUIVALENCE_MARGIN: f64 = 0.5;
/// Excess added to `c` in the negative control, relative to `r_C L - lambda_max`.
pub const NEGATIVE_CONTROL_EXCESS: f64 = 100.0;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Added to `c = r_C L - lambda_max` in the equivalence check (0 for the real check);
    /// a positive value must make the check fail.
    pub inject_c_excess: f64,
    /// Include the stationarity runs on the experiment configurations.
    pub stationarity: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 1, inject_c_excess: 0.0, stationarity: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
    pub elapsed: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn summary_lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| format!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail))
            .collect()
    }
}

fn outcome(name: &str, failures: &[String], detail: String) -> CheckOutcome {
    CheckOutcome {
        name: name.to_string(),
        passed: failures.is_empty(),
        detail: match failures.first() {
            None => detail,
            Some(first) => format!("{detail}; {} failure(s), first: {first}", failures.len()),
        },
    }
}

pub fn verify_suite(opts: &VerifyOptions) -> VerifyReport {
    let start = Instant::now();
    let mut checks = Vec::new();
    for report in projection_suite(opts.seed, PROJECTION_INPUTS, PROJECTION_MAX_DIM) {
        checks.push(outcome(
            &format!("projection/{}", report.kind),
            &report.failures,
            format!("{} inputs, dimension <= {PROJECTION_MAX_DIM}", report.inputs),
        ));
    }
    checks.push(descent_check(opts.seed, true));
    checks.push(descent_check(opts.seed, false));

    let mut traces = TraceLog::default();
    checks.push(dc_linesearch_equivalence(opts.seed, opts.inject_c_excess, &mut traces));
    checks.push(negative_control(opts.seed));
    checks.push(cq_equivalence(opts.seed, &mut traces));
    default_linesearch_traces(opts.seed, &mut traces);
    checks.push(traces.check());
    if opts.stationarity {
        checks.extend(stationarity_checks(opts.seed));
    }
    VerifyReport { checks, elapsed: start.elapsed().as_secs_f64() }
}

/// Small random sparse-recovery instance with box-sparse `C` and shifted-sparse `D`.
pub fn random_sparse_instance(seed: u64) -> (SplitProblem, DenseMatrix) {
    let mut rng = seeded_rng(seed);
    let m = rng.random_range(2..=10);
    let n = rng.random_range(2..=10);
    let a = gaussian_matrix(&mut rng, m, n);
    let b: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let s = rng.random_range(1..=n);
    let r = rng.random_range(0..=m);
    let c = ProjectableSet::box_sparse(n, s, 5.0).expect("valid sparsity");
    let d = ProjectableSet::shifted_sparse(r, b).expect("valid sparsity");
    let x0 = c.project(&gaussian_matrix(&mut rng, n, 1));
    (SplitProblem::new(a, c, d).expect("consistent shapes"), x0)
}

/// Random instance with nonconvex sets: sparse recovery, or orthogonal `C` with a
/// nonnegative or column-sparse `D`.
fn random_nonconvex_instance(seed: u64) -> (SplitProblem, DenseMatrix) {
    let mut rng = seeded_rng(derive_seed(seed, 0, 0, 1));
    match rng.random_range(0..3) {
        0 => random_sparse_instance(seed),
        kind => {
            let r = rng.random_range(2..=4);
            let n = rng.random_range(1..=4);
            let b = gaussian_matrix(&mut rng, n, r);
            let d = if kind == 1 {
                ProjectableSet::nonnegative(n, r)
            } else {
                ProjectableSet::column_sparse(n, r, rng.random_range(0..=n)).expect("valid")
            };
            let q0 = random_orthogonal_init(r, rng.random());
            let p = SplitProblem::new(b, ProjectableSet::orthogonal(r), d).expect("shapes");
            (p, q0)
        }
    }
}

fn random_convex_instance(seed: u64) -> (SplitProblem, DenseMatrix) {
    let mut rng = seeded_rng(seed);
    let m = rng.random_range(2..=10);
    let n = rng.random_range(2..=10);
    let a = gaussian_matrix(&mut rng, m, n);
    let c = ProjectableSet::nonnegative(n, 1);
    let d = if rng.random_bool(0.5) {
        ProjectableSet::nonnegative(m, 1)
    } else {
        let target: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        ProjectableSet::shifted_sparse(0, target).expect("valid")
    };
    let x0 = c.project(&gaussian_matrix(&mut rng, n, 1));
    (SplitProblem::new(a, c, d).expect("shapes"), x0)
}

/// One majorized step from a random point satisfies the descent inequality, with
/// `L > lambda_max / 2` on convex `C` and `L > lambda_max` otherwise.
fn descent_check(seed: u64, convex: bool) -> CheckOutcome {
    let mut failures = Vec::new();
    for i in 0..DESCENT_STEPS as u64 {
        let inst_seed = derive_seed(seed, if convex { 21 } else { 22 }, i, 0);
        let (problem, _) = if convex {
            random_convex_instance(inst_seed)
        } else {
            random_nonconvex_instance(inst_seed)
        };
        let mut rng = seeded_rng(derive_seed(inst_seed, 1, 0, 0));
        let (rows, cols) = problem.domain_shape();
        let x = problem.c.project(&(gaussian_matrix(&mut rng, rows, cols) * 3.0));
        let lambda = problem.lambda_max();
        let lower = if convex { lambda / 2.0 } else { lambda };
        let l = lower * (1.0 + rng.random_range(1e-6..2.0)) + 1e-12;
        if !check_descent_inequality(&problem, &x, l) {
            failures.push(format!("instance {i}, L = {l:e}, lambda_max = {lambda:e}"));
        }
    }
    let (name, bound) = if convex {
        ("descent/convex", "L > lambda_max/2")
    } else {
        ("descent/nonconvex", "L > lambda_max")
    };
    outcome(name, &failures, format!("{DESCENT_STEPS} single steps, {bound}"))
}

fn bitwise_equal(a: &RunRecord, b: &RunRecord) -> bool {
    a.iters == b.iters
        && a.iterates.len() == b.iterates.len()
        && a.iterates
            .iter()
            .zip(&b.iterates)
            .all(|(x, y)| x.iter().zip(y.iter()).all(|(p, q)| p.to_bits() == q.to_bits()))
}

/// Number of equivalence instances whose two trajectories differ.
fn equivalence_mismatches(seed: u64, excess: f64, traces: &mut TraceLog) -> Vec<String> {
    let stop = TerminationRule::RelativeStep(EQUIVALENCE_STOP);
    let mut failures = Vec::new();
    for i in 0..EQUIVALENCE_INSTANCES as u64 {
        let (problem, x0) = random_sparse_instance(derive_seed(seed, 31, i, 0));
        let (lambda, r_c) = (problem.lambda_max(), problem.r_c());
        let l = lambda / r_c + EQUIVALENCE_MARGIN;
        let c = (r_c * l - lambda) * (1.0 + excess);
        let fixed_cfg = FixedStepConfig::new(EQUIVALENCE_MAX_ITER, stop).recording();
        let ls_cfg = LsConfig {
            l_min: l,
            l_max: l,
            l_initial: l,
            c,
            max_iter: EQUIVALENCE_MAX_ITER,
            termination: stop,
            record_iterates: true,
            ..LsConfig::default()
        };
        match (spfeas_dc(&problem, l, &x0, &fixed_cfg), spfeas_dc_ls(&problem, &ls_cfg, &x0)) {
            (Ok(fixed), Ok(ls)) => {
                if !bitwise_equal(&fixed, &ls) {
                    failures.push(format!(
                        "instance {i}: {} vs {} updates, trajectories differ",
                        fixed.iters, ls.iters
                    ));
                }
                traces.fixed.push((problem.clone(), l, fixed));
                traces.linesearch.push((problem, ls_cfg, ls));
            }
            (Err(e), _) | (_, Err(e)) => failures.push(format!("instance {i}: {e}")),
        }
    }
    failures
}

fn dc_linesearch_equivalence(seed: u64, excess: f64, traces: &mut TraceLog) -> CheckOutcome {
    let failures = equivalence_mismatches(seed, excess, traces);
    outcome(
        "equivalence/dc-dcls",
        &failures,
        format!(
            "{EQUIVALENCE_INSTANCES} instances, L_min = L_max = L, c = r_C L - lambda_max{}",
            if excess > 0.0 { format!(" (c inflated by {excess}x)") } else { String::new() }
        ),
    )
}

/// Inflating `c` must break the equivalence on some instance.
fn negative_control(seed: u64) -> CheckOutcome {
    let mismatches = equivalence_mismatches(seed, NEGATIVE_CONTROL_EXCESS, &mut TraceLog::default());
    CheckOutcome {
        name: "equivalence/negative-control".into(),
        passed: !mismatches.is_empty(),
        detail: format!(
            "c inflated by {NEGATIVE_CONTROL_EXCESS}x: {}/{EQUIVALENCE_INSTANCES} mismatches detected",
            mismatches.len()
        ),
    }
}

fn cq_equivalence(seed: u64, traces: &mut TraceLog) -> CheckOutcome {
    let mut failures = Vec::new();
    for i in 0..EQUIVALENCE_INSTANCES as u64 {
        let (problem, x0) = random_convex_instance(derive_seed(seed, 41, i, 0));
        let lambda = problem.lambda_max();
        let mut rng = seeded_rng(derive_seed(seed, 42, i, 0));
        // gamma = 1 / L anywhere in (0, 2 / lambda_max)
        let l = lambda / 2.0 * (1.0 + rng.random_range(0.01..3.0));
        let cfg = FixedStepConfig::new(EQUIVALENCE_MAX_ITER, TerminationRule::RelativeStep(EQUIVALENCE_STOP))
            .recording();
        match (spfeas_dc(&problem, l, &x0, &cfg), cq_iteration(&problem, 1.0 / l, &x0, &cfg)) {
            (Ok(dc), Ok(cq)) => {
                if !bitwise_equal(&dc, &cq) {
                    failures.push(format!("instance {i}: trajectories differ"));
                }
                traces.fixed.push((problem, l, dc));
            }
            (Err(e), _) | (_, Err(e)) => failures.push(format!("instance {i}: {e}")),
        }
    }
    outcome(
        "equivalence/cq-dc",
        &failures,
        format!("{EQUIVALENCE_INSTANCES} convex instances, gamma = 1/L"),
    )
}

/// Recorded traces whose invariants are checked together.
#[derive(Default)]
struct TraceLog {
    linesearch: Vec<(SplitProblem, LsConfig, RunRecord)>,
    fixed: Vec<(SplitProblem, f64, RunRecord)>,
}

/// Line-search runs with the default parameters, on sparse recovery and on small
/// factorization instances.
fn default_linesearch_traces(seed: u64, traces: &mut TraceLog) {
    for i in 0..EQUIVALENCE_INSTANCES as u64 {
        let (problem, x0) = random_sparse_instance(derive_seed(seed, 51, i, 0));
        let cfg = LsConfig { max_iter: 300, record_iterates: true, ..LsConfig::default() };
        if let Ok(rec) = spfeas_dc_ls(&problem, &cfg, &x0) {
            traces.linesearch.push((problem, cfg, rec));
        }
        let n = 3 + (i as usize % 4);
        let g = gen_random_cp(n, derive_seed(seed, 52, i, 0));
        if let Ok(problem) = cp_initial_factor(&g, 2 * n).and_then(cp_problem) {
            let q0 = random_orthogonal_init(2 * n, derive_seed(seed, 53, i, 0));
            let mut cfg = splitfeas::problems::cp_ls_config();
            cfg.max_iter = 300;
            cfg.record_iterates = true;
            if let Ok(rec) = spfeas_dc_ls(&problem, &cfg, &q0) {
                traces.linesearch.push((problem, cfg, rec));
            }
        }
    }
}

impl TraceLog {
    fn check(&self) -> CheckOutcome {
        let mut failures = Vec::new();
        for (k, (problem, cfg, rec)) in self.linesearch.iter().enumerate() {
            let (lambda, r_c) = (problem.lambda_max(), problem.r_c());
            let results = [
                ("window bound", check_nonmonotone_bound(rec, cfg)),
                ("L bound", check_l_bar_bound(rec, cfg, lambda, r_c)),
                ("backtracking count", check_linesearch_count(rec, cfg, lambda, r_c)),
                ("membership", check_membership(rec, &problem.c)),
                ("stop rule", check_relative_stop(problem, cfg.termination, rec)),
            ];
            for (what, res) in results {
                if let Err(e) = res {
                    failures.push(format!("linesearch trace {k}, {what}: {e}"));
                }
            }
        }
        for (k, (problem, l, rec)) in self.fixed.iter().enumerate() {
            let (lambda, r_c) = (problem.lambda_max(), problem.r_c());
            for (what, res) in [
                ("descent", check_fixed_step_descent(rec, *l, lambda, r_c)),
                ("membership", check_membership(rec, &problem.c)),
            ] {
                if let Err(e) = res {
                    failures.push(format!("fixed-step trace {k}, {what}: {e}"));
                }
            }
        }
        outcome(
            "traces/invariants",
            &failures,
            format!(
                "{} linesearch traces (window bound, L bound, backtracking count, membership), {} fixed-step traces (descent, membership)",
                self.linesearch.len(),
                self.fixed.len()
            ),
        )
    }
}

/// A run stopped by the relative-step rule has the recomputed measure below the
/// tolerance at its last step and not below it one step earlier.
fn check_relative_stop(
    problem: &SplitProblem,
    rule: TerminationRule,
    rec: &RunRecord,
) -> Result<(), String> {
    let TerminationRule::RelativeStep(tol) = rule else {
        return Ok(());
    };
    if rec.status != RunStatus::Success || rec.iterates.len() < 2 {
        return Ok(());
    }
    let t = rec.iterates.len() - 1;
    let measure = |k: usize| relative_step_measure(problem, &rec.iterates[k], &rec.iterates[k - 1], rec.l_history[k - 1]);
    let last = measure(t);
    if !(last < tol * (1.0 + 1e-9)) {
        return Err(format!("stopped with measure {last:e} >= {tol:e}"));
    }
    if t >= 2 && measure(t - 1) < tol * (1.0 - 1e-9) {
        return Err(format!("measure fell below {tol:e} one step before stopping"));
    }
    Ok(())
}

/// Stationarity residual at the final iterate of every solved run, on the smallest
/// configuration of each experiment family.
fn stationarity_checks(seed: u64) -> Vec<CheckOutcome> {
    let mut specs = Vec::new();

    let mut cp = ExperimentSpec::new(Family::CpIdentity);
    cp.sizes = vec![10];
    cp.trials = 10;
    specs.push(cp);

    let mut cp_random = ExperimentSpec::new(Family::CpRandomInit);
    cp_random.sizes = vec![10];
    cp_random.trials = 5;
    specs.push(cp_random);

    let mut glambda = ExperimentSpec::new(Family::CpGLambda);
    glambda.lambdas = vec![0.0];
    glambda.trials = 20;
    specs.push(glambda);

    let mut sparse = ExperimentSpec::new(Family::SparseFact);
    sparse.ranks = vec![RankSpec::Fraction(0.7)];
    sparse.trials = 1;
    specs.push(sparse);

    // the fixed-step run alone takes 30-45 s here; its residuals are covered by the
    // outlier acceptance run
    let mut outlier = ExperimentSpec::new(Family::Outlier);
    outlier.trials = 1;
    outlier.algorithms = vec![Algorithm::DcLs];
    specs.push(outlier);

    let mut checks = Vec::new();
    for mut spec in specs {
        spec.seed = seed;
        spec.timing = false;
        let name = format!("stationarity/{}", spec.family);
        let result = match run_experiment(&spec) {
            Ok(r) => r,
            Err(e) => {
                checks.push(CheckOutcome { name, passed: false, detail: e.to_string() });
                continue;
            }
        };
        let mut failures = Vec::new();
        let (mut solved, mut worst) = (0usize, 0.0f64);
        for cell in &result.cells {
            for (alg, outs) in cell.algorithms.iter().zip(&cell.outcomes) {
                for (t, o) in outs.iter().enumerate() {
                    if let Some(res) = o.stationarity {
                        solved += 1;
                        worst = worst.max(res);
                        if !(res <= STATIONARITY_TOL) {
                            failures.push(format!("{alg} trial {t}: residual {res:e}"));
                        }
                    }
                }
            }
        }
        let algs: Vec<&str> = spec.algorithms.iter().map(|a: &Algorithm| a.name()).collect();
        checks.push(outcome(
            &name,
            &failures,
            format!(
                "{solved} solved runs ({}), max residual {worst:.1e} <= {STATIONARITY_TOL:e}",
                algs.join(",")
            ),
        ));
    }
    checks
}
