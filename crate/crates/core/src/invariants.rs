//! Checks of the properties every solver trace must satisfy.
//!
//! Each check returns `Err` with a description of the first violation.

use crate::sets::ProjectableSet;
use crate::solvers::{LsConfig, RunRecord, DESCENT_SLACK};

pub type CheckResult = std::result::Result<(), String>;

/// Relative slack for comparisons of quantities recomputed from the trace.
const REL_SLACK: f64 = 1e-12;

/// Every accepted step of [`crate::solvers::spfeas_dc_ls`] satisfies
/// `d^2(A x^{t+1}, D) <= max_{[t-M]_+ <= i <= t} d^2(A x^i, D) - c ||x^{t+1} - x^t||^2`.
pub fn check_nonmonotone_bound(rec: &RunRecord, cfg: &LsConfig) -> CheckResult {
    let d2: Vec<f64> = rec.fval_history.iter().map(|f| 2.0 * f).collect();
    for (t, &step) in rec.step_norms.iter().enumerate() {
        let lo = t.saturating_sub(cfg.memory);
        let window = d2[lo..=t].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let rhs = window - cfg.c * step * step;
        if d2[t + 1] > rhs + REL_SLACK * window.abs() {
            return Err(format!(
                "step {t}: d^2 = {:e} exceeds window bound {rhs:e}",
                d2[t + 1]
            ));
        }
    }
    Ok(())
}

/// `max_t L_bar_t <= tau * max(L_max, (c + lambda_max) / r_C)`.
pub fn check_l_bar_bound(rec: &RunRecord, cfg: &LsConfig, lambda_max: f64, r_c: f64) -> CheckResult {
    let bound = cfg.tau * cfg.l_max.max((cfg.c + lambda_max) / r_c);
    match rec.l_history.iter().cloned().fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v)))) {
        Some(max) if max > bound * (1.0 + REL_SLACK) => {
            Err(format!("largest accepted L = {max:e} exceeds {bound:e}"))
        }
        _ => Ok(()),
    }
}

/// Backtracking multiplications per iteration are at most
/// `ceil(log_tau((c + lambda_max) / (r_C L_min))) + 1`.
pub fn linesearch_trial_bound(cfg: &LsConfig, lambda_max: f64, r_c: f64) -> usize {
    let ratio = (cfg.c + lambda_max) / (r_c * cfg.l_min);
    let steps = (ratio.ln() / cfg.tau.ln()).ceil();
    steps.max(0.0) as usize + 1
}

pub fn check_linesearch_count(
    rec: &RunRecord,
    cfg: &LsConfig,
    lambda_max: f64,
    r_c: f64,
) -> CheckResult {
    let bound = linesearch_trial_bound(cfg, lambda_max, r_c);
    match rec.ls_trials.iter().enumerate().find(|(_, &k)| k > bound) {
        Some((t, k)) => Err(format!("iteration {t} used {k} backtracking steps, bound {bound}")),
        None => Ok(()),
    }
}

/// Every recorded iterate (or at least the final one) lies in `C`.
pub fn check_membership(rec: &RunRecord, c: &ProjectableSet) -> CheckResult {
    if let Some(t) = rec.iterates.iter().position(|x| !c.contains(x)) {
        return Err(format!("iterate {t} is not in C"));
    }
    if !c.contains(&rec.final_x) {
        return Err("final iterate is not in C".into());
    }
    Ok(())
}

/// On a converged run, steps in the last tenth are no larger than the largest step in
/// the first tenth.
pub fn check_vanishing_steps(rec: &RunRecord) -> CheckResult {
    let n = rec.step_norms.len();
    let tenth = n / 10;
    if tenth == 0 {
        return Ok(());
    }
    let head = rec.step_norms[..tenth].iter().cloned().fold(0.0, f64::max);
    match rec.step_norms[n - tenth..].iter().find(|&&s| s > head) {
        Some(s) => Err(format!("late step {s:e} exceeds early maximum {head:e}")),
        None => Ok(()),
    }
}

/// Fixed-step descent: `F(x^{t+1}) <= F(x^t) - (r_C L - lambda_max) / 2 ||x^{t+1} - x^t||^2`.
pub fn check_fixed_step_descent(rec: &RunRecord, l: f64, lambda_max: f64, r_c: f64) -> CheckResult {
    let slope = (r_c * l - lambda_max) / 2.0;
    for (t, &step) in rec.step_norms.iter().enumerate() {
        let rhs = rec.fval_history[t] - slope * step * step;
        if rec.fval_history[t + 1] > rhs + DESCENT_SLACK {
            return Err(format!(
                "step {t}: F = {:e} exceeds descent bound {rhs:e}",
                rec.fval_history[t + 1]
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DenseMatrix;
    use crate::solvers::RunStatus;

    fn record(fvals: Vec<f64>, steps: Vec<f64>, ls: Vec<usize>, ls_l: Vec<f64>) -> RunRecord {
        RunRecord {
            final_x: DenseMatrix::zeros(1, 1),
            final_dist: (2.0 * fvals.last().unwrap()).sqrt(),
            iters: steps.len(),
            status: RunStatus::MaxIter,
            l_history: ls_l,
            fval_history: fvals,
            step_norms: steps,
            ls_trials: ls,
            wall_time: 0.0,
            iterates: Vec::new(),
        }
    }

    #[test]
    fn nonmonotone_bound_detects_violation() {
        let cfg = LsConfig {
            memory: 1,
            c: 1.0,
            ..LsConfig::default()
        };
        // d^2 = 2, 1, 1.5: step 1 may rise above d^2_1 but not above max(2, 1) - c s^2
        let ok = record(vec![1.0, 0.5, 0.75], vec![0.5, 0.5], vec![], vec![]);
        assert!(check_nonmonotone_bound(&ok, &cfg).is_ok());
        let bad = record(vec![1.0, 0.5, 0.95], vec![0.5, 0.5], vec![], vec![]);
        assert!(check_nonmonotone_bound(&bad, &cfg).is_err());
    }

    #[test]
    fn linesearch_bound_values() {
        let cfg = LsConfig::default();
        // (1e-4 + 1) / (2 * 1e-8) ~ 5e7 -> 26 doublings
        assert_eq!(linesearch_trial_bound(&cfg, 1.0, 2.0), 27);
        let rec = record(vec![0.0, 0.0], vec![0.0], vec![28], vec![1.0]);
        assert!(check_linesearch_count(&rec, &cfg, 1.0, 2.0).is_err());
    }

    #[test]
    fn l_bar_and_vanishing_steps() {
        let cfg = LsConfig::default();
        let rec = record(vec![0.0; 3], vec![1.0, 0.1], vec![0, 0], vec![1.0, 3e8]);
        assert!(check_l_bar_bound(&rec, &cfg, 1.0, 2.0).is_err());
        let steps: Vec<f64> = (0..20).map(|k| 1.0 / (k + 1) as f64).collect();
        let rec = record(vec![0.0; 21], steps.clone(), vec![], vec![]);
        assert!(check_vanishing_steps(&rec).is_ok());
        let mut rising = steps;
        rising.reverse();
        let rec = record(vec![0.0; 21], rising, vec![], vec![]);
        assert!(check_vanishing_steps(&rec).is_err());
    }
}
