//! Experiment specifications and the trial runner.
//!
//! Every trial is built from seeds derived from the experiment seed, the cell (one
//! combination of sizes) and the trial index, so trials can run on any number of worker
//! threads and still produce the same rows.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use splitfeas::numerics::DenseMatrix;
use splitfeas::problems::{
    cp_initial_factor, cp_ls_config, cp_problem, derive_seed, g_lambda, gen_outlier_instance,
    gen_random_cp, gen_sparse_mf, outlier_ls_config, outlier_problem, random_orthogonal_init,
    sparse_mf_ls_config, sparse_mf_problem, ALTPROJ_THRESHOLD, CP_DCLS_THRESHOLD, CP_MAX_ITER,
    DC_L_MARGIN, OUTLIER_DC_MAX_ITER, OUTLIER_TOL, SPARSE_MF_MAX_ITER, SPARSE_MF_TOL,
};
use splitfeas::solvers::stationarity_residual;
use splitfeas::{
    modified_alt_proj, spfeas_dc, spfeas_dc_ls, AltProjConfig, FixedStepConfig, RunRecord,
    SplitProblem, TerminationRule,
};

use crate::report::{aggregate, AggregateRow};
use crate::{usage, Result};

/// Outlier runs count as solved when they stop by the relative-step rule with
/// `d(A x, D)` at most this value.
pub const OUTLIER_SUCCESS_DIST: f64 = 1e-6;
/// Order of the factor for the `G_lambda` family.
pub const GLAMBDA_RANK: usize = 12;
/// Environment variable bounding the worker pool.
pub const THREADS_ENV: &str = "SPLITFEAS_THREADS";

const TAG_INSTANCE: u64 = 1;
const TAG_INIT: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    CpIdentity,
    CpRandomInit,
    CpGLambda,
    SparseFact,
    Outlier,
    ProjTest,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::CpIdentity => "cpfact-identity",
            Family::CpRandomInit => "cpfact-random-init",
            Family::CpGLambda => "cpfact-glambda",
            Family::SparseFact => "sparsefact",
            Family::Outlier => "outlier",
            Family::ProjTest => "projtest",
        }
    }

    fn is_cp(self) -> bool {
        matches!(self, Family::CpIdentity | Family::CpRandomInit | Family::CpGLambda)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = crate::BenchError;

    fn from_str(s: &str) -> Result<Self> {
        [
            Family::CpIdentity,
            Family::CpRandomInit,
            Family::CpGLambda,
            Family::SparseFact,
            Family::Outlier,
            Family::ProjTest,
        ]
        .into_iter()
        .find(|f| f.name() == s)
        .ok_or_else(|| usage(format!("unknown experiment family '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    DcLs,
    Dc,
    AltProj,
    Cq,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::DcLs => "dcls",
            Algorithm::Dc => "dc",
            Algorithm::AltProj => "altproj",
            Algorithm::Cq => "cq",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = crate::BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dcls" => Ok(Algorithm::DcLs),
            "dc" => Ok(Algorithm::Dc),
            "altproj" => Ok(Algorithm::AltProj),
            "cq" => Ok(Algorithm::Cq),
            other => Err(usage(format!("unknown algorithm '{other}'"))),
        }
    }
}

pub fn parse_algorithms(list: &str) -> Result<Vec<Algorithm>> {
    let algs = list
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<Vec<Algorithm>>>()?;
    if algs.is_empty() {
        return Err(usage("empty algorithm list"));
    }
    Ok(algs)
}

/// A size given either directly or relative to `n`: `15`, `1.5n`, `3n+1`, or a
/// fraction of `n` such as `0.7`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankSpec {
    Fixed(usize),
    Affine { scale: f64, offset: f64 },
    Fraction(f64),
}

impl RankSpec {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            RankSpec::Fixed(v) => v,
            RankSpec::Affine { scale, offset } => (scale * n as f64 + offset).round().max(0.0) as usize,
            RankSpec::Fraction(f) => (f * n as f64).round() as usize,
        }
    }
}

impl fmt::Display for RankSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankSpec::Fixed(v) => write!(f, "{v}"),
            RankSpec::Affine { scale, offset } if *offset == 0.0 => write!(f, "{scale}n"),
            RankSpec::Affine { scale, offset } => write!(f, "{scale}n{offset:+}"),
            RankSpec::Fraction(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for RankSpec {
    type Err = crate::BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || usage(format!("cannot parse size '{s}' (expected 15, 1.5n, 3n+1 or 0.7)"));
        let t = s.trim();
        if let Some(pos) = t.find('n') {
            let (head, tail) = (&t[..pos], &t[pos + 1..]);
            let scale = if head.is_empty() { 1.0 } else { head.parse().map_err(|_| bad())? };
            let offset = if tail.is_empty() {
                0.0
            } else {
                let v: f64 = tail.trim_start_matches('+').parse().map_err(|_| bad())?;
                if !(tail.starts_with('+') || tail.starts_with('-')) {
                    return Err(bad());
                }
                v
            };
            if !(scale > 0.0 && f64::is_finite(scale) && offset.is_finite()) {
                return Err(bad());
            }
            return Ok(RankSpec::Affine { scale, offset });
        }
        if let Ok(v) = t.parse::<usize>() {
            return Ok(RankSpec::Fixed(v));
        }
        match t.parse::<f64>() {
            Ok(v) if v > 0.0 && v <= 1.0 => Ok(RankSpec::Fraction(v)),
            _ => Err(bad()),
        }
    }
}

/// Comma-separated list parser shared by the CLI flags.
pub fn parse_list<T: FromStr>(list: &str, what: &str) -> Result<Vec<T>> {
    list.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| usage(format!("cannot parse {what} '{}'", s.trim())))
        })
        .collect()
}

/// One experiment: a family, the size grid, trial counts and the algorithms to compare.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub family: Family,
    /// Values of `n` (ignored by the `G_lambda` family, which is always 5 x 5).
    pub sizes: Vec<usize>,
    /// Measurements `m` for outlier detection.
    pub m: Option<usize>,
    /// Factor order `r` for factorization, the sparsity fraction for sparse
    /// factorization, and the outlier count for outlier detection.
    pub ranks: Vec<RankSpec>,
    /// Sparsity `s` (overrides the fraction for sparse factorization).
    pub sparsity: Option<usize>,
    pub lambdas: Vec<f64>,
    pub trials: usize,
    /// Random restarts per instance for `cpfact-random-init`; `None` picks 100 when
    /// `n <= 50` and 10 otherwise.
    pub max_inits: Option<usize>,
    pub algorithms: Vec<Algorithm>,
    pub seed: u64,
    /// Overrides every algorithm's iteration cap.
    pub max_iter: Option<usize>,
    pub symmetry_lock: bool,
    /// Record run times; when off the CPU columns are zero and output is reproducible.
    pub timing: bool,
    /// User-supplied matrix to factorize instead of random ones (factorization families).
    pub matrix: Option<DenseMatrix>,
}

impl ExperimentSpec {
    pub fn new(family: Family) -> Self {
        let (sizes, ranks, trials, algorithms) = match family {
            Family::CpIdentity | Family::CpRandomInit => (
                vec![10, 20, 30, 40],
                vec![RankSpec::Affine { scale: 1.5, offset: 0.0 }],
                50,
                vec![Algorithm::DcLs, Algorithm::AltProj],
            ),
            Family::CpGLambda => (
                vec![5],
                vec![RankSpec::Fixed(GLAMBDA_RANK)],
                100,
                vec![Algorithm::DcLs, Algorithm::AltProj],
            ),
            Family::SparseFact => (
                vec![100],
                vec![RankSpec::Fraction(0.7), RankSpec::Fraction(0.8), RankSpec::Fraction(0.9)],
                20,
                vec![Algorithm::DcLs, Algorithm::Dc],
            ),
            Family::Outlier => (
                vec![10000],
                vec![RankSpec::Fixed(100)],
                20,
                vec![Algorithm::DcLs, Algorithm::Dc],
            ),
            Family::ProjTest => (vec![10], vec![], 500, vec![]),
        };
        Self {
            family,
            sizes,
            m: (family == Family::Outlier).then_some(2000),
            ranks,
            sparsity: (family == Family::Outlier).then_some(500),
            lambdas: if family == Family::CpGLambda {
                vec![0.0, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95, 0.96, 0.97, 0.98, 0.99]
            } else {
                Vec::new()
            },
            trials,
            max_inits: None,
            algorithms,
            seed: 1,
            max_iter: None,
            symmetry_lock: true,
            timing: true,
            matrix: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.family == Family::ProjTest {
            return Err(usage("projtest runs the projection oracles and has no experiment rows"));
        }
        if self.trials == 0 {
            return Err(usage("--trials must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(usage("no algorithms requested"));
        }
        if self.ranks.is_empty() {
            return Err(usage("no value of r given"));
        }
        if self.family != Family::CpGLambda && self.matrix.is_none() {
            if self.sizes.is_empty() || self.sizes.contains(&0) {
                return Err(usage("sizes must be positive"));
            }
        }
        if self.family == Family::CpGLambda {
            if self.lambdas.is_empty() {
                return Err(usage("no lambda values given"));
            }
            if let Some(l) = self.lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
                return Err(usage(format!("lambda = {l} outside [0, 1]")));
            }
        }
        if self.max_inits == Some(0) {
            return Err(usage("--max-inits must be at least 1"));
        }
        for &alg in &self.algorithms {
            let ok = match alg {
                Algorithm::DcLs | Algorithm::Dc => true,
                Algorithm::AltProj => self.family.is_cp(),
                Algorithm::Cq => false,
            };
            if !ok {
                return Err(usage(format!(
                    "algorithm {alg} is not applicable to the {} family{}",
                    self.family,
                    if alg == Algorithm::Cq {
                        " (the CQ iteration needs convex C and D; it is exercised by verify)"
                    } else {
                        ""
                    }
                )));
            }
        }
        for cell in self.cells() {
            cell.check(self.family)?;
        }
        Ok(())
    }

    /// The grid of size combinations, in output order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        match self.family {
            Family::CpGLambda => {
                for &lambda in &self.lambdas {
                    for rank in &self.ranks {
                        cells.push(Cell { n: 5, m: None, r: rank.resolve(5), s: None, lambda: Some(lambda) });
                    }
                }
            }
            Family::Outlier => {
                for &n in &self.sizes {
                    for rank in &self.ranks {
                        let m = self.m.unwrap_or(n / 5);
                        cells.push(Cell {
                            n,
                            m: Some(m),
                            r: rank.resolve(m),
                            s: Some(self.sparsity.unwrap_or(n / 20)),
                            lambda: None,
                        });
                    }
                }
            }
            Family::SparseFact => {
                for &n in &self.sizes {
                    for rank in &self.ranks {
                        let s = self.sparsity.unwrap_or_else(|| rank.resolve(n));
                        cells.push(Cell { n, m: None, r: n, s: Some(s), lambda: None });
                    }
                }
            }
            Family::CpIdentity | Family::CpRandomInit => {
                let sizes = match &self.matrix {
                    Some(g) => vec![g.nrows()],
                    None => self.sizes.clone(),
                };
                for &n in &sizes {
                    for rank in &self.ranks {
                        cells.push(Cell { n, m: None, r: rank.resolve(n), s: None, lambda: None });
                    }
                }
            }
            Family::ProjTest => {}
        }
        cells
    }

    fn inits_for(&self, n: usize) -> usize {
        match self.family {
            Family::CpRandomInit => self.max_inits.unwrap_or(if n <= 50 { 100 } else { 10 }),
            _ => 1,
        }
    }
}

/// One size combination of an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub n: usize,
    pub m: Option<usize>,
    /// Factor order, or the outlier count for outlier detection.
    pub r: usize,
    pub s: Option<usize>,
    pub lambda: Option<f64>,
}

impl Cell {
    fn check(&self, family: Family) -> Result<()> {
        match family {
            Family::CpIdentity | Family::CpRandomInit | Family::CpGLambda if self.r < self.n => {
                Err(usage(format!("r = {} must be at least n = {}", self.r, self.n)))
            }
            Family::SparseFact if !matches!(self.s, Some(s) if s >= 1 && s <= self.n) => Err(usage(
                format!("sparsity {:?} outside [1, n = {}]", self.s, self.n),
            )),
            Family::Outlier => {
                let (m, s) = (self.m.unwrap_or(0), self.s.unwrap_or(0));
                if m == 0 || s > self.n || self.r > m {
                    Err(usage(format!(
                        "outlier sizes need m >= 1, s <= n and r <= m (n={}, m={m}, s={s}, r={})",
                        self.n, self.r
                    )))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Stable key mixed into every seed of the cell.
    fn key(&self) -> u64 {
        let mut h = derive_seed(self.n as u64, self.r as u64, self.m.unwrap_or(0) as u64, self.s.unwrap_or(0) as u64);
        if let Some(l) = self.lambda {
            h = derive_seed(h, l.to_bits(), 0, 0);
        }
        h
    }
}

/// Result of one algorithm on one trial (all restarts included).
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub success: bool,
    /// `1/2 d^2` at termination of the last run.
    pub fval: f64,
    pub final_dist: f64,
    /// Total updates over all restarts.
    pub iters: usize,
    pub cpu: f64,
    /// Restarts used (1 unless the family retries random initial points).
    pub inits: usize,
    /// Unit-step stationarity residual at the final iterate of a successful run.
    pub stationarity: Option<f64>,
    /// Why the trial could not be run, when it failed before or inside the solver.
    pub error: Option<String>,
}

impl TrialOutcome {
    fn failed(err: impl fmt::Display) -> Self {
        Self {
            success: false,
            fval: f64::NAN,
            final_dist: f64::NAN,
            iters: 0,
            cpu: 0.0,
            inits: 1,
            stationarity: None,
            error: Some(err.to_string()),
        }
    }
}

/// Outcomes of one cell, `outcomes[alg][trial]`.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: Cell,
    pub algorithms: Vec<Algorithm>,
    pub outcomes: Vec<Vec<TrialOutcome>>,
}

impl CellResult {
    pub fn outcomes_for(&self, alg: Algorithm) -> Option<&[TrialOutcome]> {
        self.algorithms
            .iter()
            .position(|&a| a == alg)
            .map(|i| self.outcomes[i].as_slice())
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub rows: Vec<AggregateRow>,
    pub cells: Vec<CellResult>,
}

/// Worker count from [`THREADS_ENV`], defaulting to the machine's parallelism.
pub fn worker_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    run_experiment_with(spec, |_| {})
}

/// Runs every cell and trial, calling `on_row` as each aggregate row is complete.
pub fn run_experiment_with(
    spec: &ExperimentSpec,
    mut on_row: impl FnMut(&AggregateRow),
) -> Result<ExperimentResult> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_threads())
        .build()
        .map_err(|e| usage(format!("cannot start worker pool: {e}")))?;
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for cell in spec.cells() {
        let per_trial: Vec<Vec<TrialOutcome>> = pool.install(|| {
            (0..spec.trials)
                .into_par_iter()
                .map(|trial| run_trial(spec, &cell, trial as u64))
                .collect()
        });
        let outcomes: Vec<Vec<TrialOutcome>> = (0..spec.algorithms.len())
            .map(|k| per_trial.iter().map(|t| t[k].clone()).collect())
            .collect();
        for (k, &alg) in spec.algorithms.iter().enumerate() {
            let row = aggregate(spec.family, alg, &cell, &outcomes[k]);
            on_row(&row);
            rows.push(row);
        }
        cells.push(CellResult { cell, algorithms: spec.algorithms.clone(), outcomes });
    }
    Ok(ExperimentResult { rows, cells })
}

fn stream_seed(spec: &ExperimentSpec, cell: &Cell, tag: u64, trial: u64, sub: u64) -> u64 {
    derive_seed(derive_seed(spec.seed, tag, cell.key(), 0), tag, trial, sub)
}

/// Builds the trial's instance and runs every requested algorithm on it.
fn run_trial(spec: &ExperimentSpec, cell: &Cell, trial: u64) -> Vec<TrialOutcome> {
    let all_failed = |e: &dyn fmt::Display| vec![TrialOutcome::failed(e); spec.algorithms.len()];
    match spec.family {
        Family::CpIdentity | Family::CpRandomInit | Family::CpGLambda => {
            let g = match (&spec.matrix, cell.lambda) {
                (Some(g), _) => Ok(g.clone()),
                (None, Some(lambda)) => g_lambda(lambda),
                (None, None) => Ok(gen_random_cp(cell.n, stream_seed(spec, cell, TAG_INSTANCE, trial, 0))),
            };
            let setup = g.and_then(|g| cp_initial_factor(&g, cell.r)).and_then(|b| {
                let problem = cp_problem(b.clone())?;
                Ok((b, problem))
            });
            match setup {
                Ok((b, problem)) => spec
                    .algorithms
                    .iter()
                    .map(|&alg| run_cp(spec, cell, trial, alg, &b, &problem))
                    .collect(),
                Err(e) => all_failed(&e),
            }
        }
        Family::SparseFact => {
            let s = cell.s.unwrap_or(cell.n);
            let setup = gen_sparse_mf(cell.n, s, stream_seed(spec, cell, TAG_INSTANCE, trial, 0))
                .and_then(|(_, b)| sparse_mf_problem(b, s));
            match setup {
                Ok(problem) => {
                    let q0 = DenseMatrix::identity(cell.n, cell.n);
                    let stop = TerminationRule::DistBelow(SPARSE_MF_TOL);
                    spec.algorithms
                        .iter()
                        .map(|&alg| run_single(spec, alg, &problem, &q0, stop, SPARSE_MF_MAX_ITER, |rec| rec.succeeded()))
                        .collect()
                }
                Err(e) => all_failed(&e),
            }
        }
        Family::Outlier => {
            let (m, s) = (cell.m.unwrap_or(0), cell.s.unwrap_or(0));
            let seed = stream_seed(spec, cell, TAG_INSTANCE, trial, 0);
            let setup = gen_outlier_instance(cell.n, m, s, cell.r, seed)
                .and_then(|inst| outlier_problem(inst, s, cell.r));
            match setup {
                Ok(problem) => {
                    let x0 = DenseMatrix::zeros(cell.n, 1);
                    let stop = TerminationRule::RelativeStep(OUTLIER_TOL);
                    let solved = |rec: &RunRecord| rec.succeeded() && rec.final_dist <= OUTLIER_SUCCESS_DIST;
                    spec.algorithms
                        .iter()
                        .map(|&alg| run_single(spec, alg, &problem, &x0, stop, OUTLIER_DC_MAX_ITER, solved))
                        .collect()
                }
                Err(e) => all_failed(&e),
            }
        }
        Family::ProjTest => all_failed(&"projtest has no trials"),
    }
}

fn outcome(
    spec: &ExperimentSpec,
    problem: &SplitProblem,
    rec: &RunRecord,
    success: bool,
) -> TrialOutcome {
    TrialOutcome {
        success,
        fval: rec.final_fval(),
        final_dist: rec.final_dist,
        iters: rec.iters,
        cpu: if spec.timing { rec.wall_time } else { 0.0 },
        inits: 1,
        stationarity: success.then(|| stationarity_residual(problem, &rec.final_x)),
        error: None,
    }
}

/// Runs `alg` once from `x0`. `dc_cap` is the fixed-step method's default cap.
fn run_single(
    spec: &ExperimentSpec,
    alg: Algorithm,
    problem: &SplitProblem,
    x0: &DenseMatrix,
    stop: TerminationRule,
    dc_cap: usize,
    solved: impl Fn(&RunRecord) -> bool,
) -> TrialOutcome {
    let rec = match alg {
        Algorithm::DcLs => {
            let mut cfg = match spec.family {
                Family::Outlier => outlier_ls_config(),
                _ => sparse_mf_ls_config(),
            };
            if let Some(cap) = spec.max_iter {
                cfg.max_iter = cap;
            }
            spfeas_dc_ls(problem, &cfg, x0)
        }
        Algorithm::Dc => {
            let l = problem.lambda_max() / problem.r_c() + DC_L_MARGIN;
            let cfg = FixedStepConfig::new(spec.max_iter.unwrap_or(dc_cap), stop);
            spfeas_dc(problem, l, x0, &cfg)
        }
        Algorithm::AltProj | Algorithm::Cq => {
            return TrialOutcome::failed(format!("{alg} is not applicable to {}", spec.family))
        }
    };
    match rec {
        Ok(rec) => {
            let ok = solved(&rec);
            outcome(spec, problem, &rec, ok)
        }
        Err(e) => TrialOutcome::failed(e),
    }
}

/// One factorization run of `alg` from `q0`.
fn run_cp_once(
    spec: &ExperimentSpec,
    alg: Algorithm,
    b: &DenseMatrix,
    problem: &SplitProblem,
    q0: &DenseMatrix,
) -> TrialOutcome {
    let cap = spec.max_iter.unwrap_or(CP_MAX_ITER);
    let rec = match alg {
        Algorithm::DcLs => {
            let mut cfg = cp_ls_config();
            cfg.max_iter = cap;
            spfeas_dc_ls(problem, &cfg, q0)
        }
        Algorithm::Dc => {
            let l = problem.lambda_max() / problem.r_c() + DC_L_MARGIN;
            let cfg = FixedStepConfig::new(cap, TerminationRule::MinEntry(CP_DCLS_THRESHOLD));
            spfeas_dc(problem, l, q0, &cfg)
        }
        Algorithm::AltProj => {
            let mut cfg = AltProjConfig::new(cap, ALTPROJ_THRESHOLD);
            cfg.symmetry_lock = spec.symmetry_lock;
            modified_alt_proj(b, q0, &cfg)
        }
        Algorithm::Cq => return TrialOutcome::failed("cq is not applicable to factorization"),
    };
    match rec {
        Ok(rec) => {
            let ok = rec.succeeded();
            outcome(spec, problem, &rec, ok)
        }
        Err(e) => TrialOutcome::failed(e),
    }
}

/// Factorization trial: one run from `Q0 = I`, or random restarts until the first success.
fn run_cp(
    spec: &ExperimentSpec,
    cell: &Cell,
    trial: u64,
    alg: Algorithm,
    b: &DenseMatrix,
    problem: &SplitProblem,
) -> TrialOutcome {
    if spec.family == Family::CpIdentity {
        return run_cp_once(spec, alg, b, problem, &DenseMatrix::identity(cell.r, cell.r));
    }
    let inits = spec.inits_for(cell.n);
    let mut total = TrialOutcome::failed("no initial point tried");
    let (mut iters, mut cpu) = (0usize, 0.0);
    for k in 0..inits {
        let q0 = random_orthogonal_init(cell.r, stream_seed(spec, cell, TAG_INIT, trial, k as u64));
        total = run_cp_once(spec, alg, b, problem, &q0);
        iters += total.iters;
        cpu += total.cpu;
        total.inits = k + 1;
        if total.success {
            break;
        }
    }
    total.iters = iters;
    total.cpu = cpu;
    total
}
