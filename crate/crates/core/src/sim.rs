//! Monte Carlo evaluation of controllers on the true model.
//!
//! Discounted returns over a truncation horizon, path-parallel with per-path
//! seeds and reduction in path order. [`compare`] evaluates several
//! controllers under common random numbers (shared path seeds), so gap
//! estimates between controllers are paired differences with far lower
//! variance than independent runs.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{sample_trajectory, Controller, Pomdp};
use crate::seeds;
use crate::stability::StabilityReport;

/// Evaluation of one controller.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub controller: String,
    pub returns: Vec<f64>,
    pub mean: f64,
    pub std_error: f64,
    pub horizon: usize,
    pub n_paths: usize,
    /// Discounted mass beyond the horizon: beta^H ||c|| / (1 - beta).
    pub truncation_bound: f64,
    pub seed: u64,
}

/// Smallest horizon H with beta^H ||c|| / (1 - beta) <= tol.
pub fn horizon_for_tolerance(discount: f64, cost_sup: f64, tol: f64) -> usize {
    if cost_sup <= 0.0 {
        return 1;
    }
    let mut h = 1usize;
    while discount.powi(h as i32) * cost_sup / (1.0 - discount) > tol && h < 100_000 {
        h += 1;
    }
    h
}

/// Average discounted return of a controller over seeded rollouts.
pub fn evaluate_policy(
    pomdp: &Pomdp,
    controller: &dyn Controller,
    label: &str,
    horizon: usize,
    n_paths: usize,
    seed: u64,
) -> Result<EvalReport> {
    if n_paths == 0 {
        return Err(Error::Precondition("n_paths must be >= 1".into()));
    }
    let returns: Vec<Result<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|path| {
            let mut ctrl = controller.clone_box();
            let traj = sample_trajectory(
                pomdp,
                ctrl.as_mut(),
                horizon,
                seeds::derive_seed(seed, path as u64),
            )?;
            let mut discounted = 0.0;
            let mut weight = 1.0;
            for &c in &traj.costs {
                discounted += weight * c;
                weight *= pomdp.discount;
            }
            Ok(discounted)
        })
        .collect();
    let returns: Vec<f64> = returns.into_iter().collect::<Result<_>>()?;
    let mean = returns.iter().sum::<f64>() / n_paths as f64;
    let var = returns
        .iter()
        .map(|r| (r - mean) * (r - mean))
        .sum::<f64>()
        / (n_paths.saturating_sub(1)).max(1) as f64;
    let truncation_bound =
        pomdp.discount.powi(horizon as i32) * pomdp.cost.sup_norm / (1.0 - pomdp.discount);
    let envelope = pomdp.cost.sup_norm / (1.0 - pomdp.discount) + truncation_bound;
    if mean.abs() > envelope {
        return Err(Error::ModelInconsistency {
            component: "evaluation".into(),
            reason: format!("mean return {mean} escapes the analytic envelope {envelope}"),
        });
    }
    Ok(EvalReport {
        controller: label.to_string(),
        returns,
        mean,
        std_error: (var / n_paths as f64).sqrt(),
        horizon,
        n_paths,
        truncation_bound,
        seed,
    })
}

/// Paired gap against the best-performing controller in a comparison.
#[derive(Debug, Clone)]
pub struct GapEstimate {
    pub controller: String,
    /// Mean of the per-path differences (this controller minus reference).
    pub gap: f64,
    pub std_error: f64,
}

/// Side-by-side evaluation of several controllers plus optional bounds.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub evals: Vec<EvalReport>,
    /// Label of the controller with the lowest mean return.
    pub reference: String,
    pub gaps: Vec<GapEstimate>,
    pub stability: Option<StabilityReport>,
}

/// Evaluate all controllers under common random numbers and report paired
/// gaps relative to the best of them.
pub fn compare(
    pomdp: &Pomdp,
    controllers: &[(&str, Box<dyn Controller>)],
    stability: Option<StabilityReport>,
    horizon: usize,
    n_paths: usize,
    seed: u64,
) -> Result<ComparisonReport> {
    if controllers.is_empty() {
        return Err(Error::Precondition("need at least one controller".into()));
    }
    let evals: Vec<EvalReport> = controllers
        .iter()
        .map(|(label, ctrl)| evaluate_policy(pomdp, ctrl.as_ref(), label, horizon, n_paths, seed))
        .collect::<Result<_>>()?;
    let best = evals
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.mean.partial_cmp(&b.mean).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let reference = evals[best].controller.clone();
    let gaps = evals
        .iter()
        .map(|e| {
            let diffs: Vec<f64> = e
                .returns
                .iter()
                .zip(&evals[best].returns)
                .map(|(a, b)| a - b)
                .collect();
            let gap = diffs.iter().sum::<f64>() / diffs.len() as f64;
            let var = diffs.iter().map(|d| (d - gap) * (d - gap)).sum::<f64>()
                / (diffs.len().saturating_sub(1)).max(1) as f64;
            GapEstimate {
                controller: e.controller.clone(),
                gap,
                std_error: (var / diffs.len() as f64).sqrt(),
            }
        })
        .collect();
    Ok(ComparisonReport {
        evals,
        reference,
        gaps,
        stability,
    })
}

/// CSV with one row per (controller, path).
pub fn write_paths_csv(evals: &[EvalReport], w: &mut impl std::io::Write) -> std::io::Result<()> {
    writeln!(w, "controller,path,discounted_return")?;
    for e in evals {
        for (p, r) in e.returns.iter().enumerate() {
            writeln!(w, "{},{p},{r}", e.controller)?;
        }
    }
    Ok(())
}

/// Summary CSV: one row per controller plus gap columns; when a stability
/// report is attached, the combined performance bound rides along so gaps
/// and bounds sit side by side.
pub fn write_summary_csv(
    report: &ComparisonReport,
    w: &mut impl std::io::Write,
) -> std::io::Result<()> {
    writeln!(
        w,
        "controller,mean,std_error,n_paths,horizon,truncation_bound,gap_vs_best,gap_std_error,bound_main"
    )?;
    let bound = report
        .stability
        .as_ref()
        .map(|s| s.bound_main.total.to_string())
        .unwrap_or_default();
    for (e, g) in report.evals.iter().zip(&report.gaps) {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            e.controller,
            e.mean,
            e.std_error,
            e.n_paths,
            e.horizon,
            e.truncation_bound,
            g.gap,
            g.std_error,
            bound
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_model, params_from, ConstantController, RandomController};
    use std::sync::Arc;

    #[test]
    fn zero_cost_evaluates_to_zero() {
        let mut p = builtin_model("finite-toy", &Default::default()).unwrap();
        p.cost.eval = Arc::new(|_x, _u| 0.0);
        p.cost.sup_norm = 0.0;
        let ctrl = ConstantController { action: 0 };
        let report = evaluate_policy(&p, &ctrl, "zero", 50, 64, 3).unwrap();
        assert_eq!(report.mean, 0.0);
        assert!(report.returns.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn constant_cost_gives_exact_geometric_sum() {
        let mut p = builtin_model("finite-toy", &Default::default()).unwrap();
        p.cost.eval = Arc::new(|_x, _u| 0.25);
        p.cost.sup_norm = 0.25;
        let beta = p.discount;
        let h = 30usize;
        let ctrl = ConstantController { action: 0 };
        let report = evaluate_policy(&p, &ctrl, "const", h, 16, 3).unwrap();
        let expect = 0.25 * (1.0 - beta.powi(h as i32)) / (1.0 - beta);
        for &r in &report.returns {
            assert!((r - expect).abs() < 1e-12);
        }
        assert!(report.std_error < 1e-12);
    }

    #[test]
    fn identical_controllers_have_exactly_zero_gap() {
        let p = builtin_model("finite-toy", &Default::default()).unwrap();
        let a: Box<dyn Controller> = Box::new(RandomController::uniform(2));
        let b: Box<dyn Controller> = Box::new(RandomController::uniform(2));
        let report = compare(&p, &[("a", a), ("b", b)], None, 60, 200, 17).unwrap();
        let gap_b = &report.gaps[1];
        assert_eq!(gap_b.gap, 0.0);
        assert_eq!(gap_b.std_error, 0.0);
        assert_eq!(report.evals[0].returns, report.evals[1].returns);
    }

    #[test]
    fn returns_respect_the_analytic_envelope() {
        let p = builtin_model("linear-gaussian-1d", &Default::default()).unwrap();
        let ctrl = RandomController::uniform(p.n_actions());
        let report = evaluate_policy(&p, &ctrl, "rand", 60, 200, 5).unwrap();
        let cap = p.cost.sup_norm / (1.0 - p.discount);
        for &r in &report.returns {
            assert!(r.abs() <= cap + report.truncation_bound);
        }
    }

    #[test]
    fn horizon_meets_truncation_tolerance() {
        let h = horizon_for_tolerance(0.8, 1.0, 1e-3);
        assert!(0.8f64.powi(h as i32) / 0.2 <= 1e-3);
        assert!(0.8f64.powi(h as i32 - 1) / 0.2 > 1e-3);
    }

    #[test]
    fn doubling_paths_shrinks_std_error_like_sqrt2() {
        let p = builtin_model("finite-toy", &Default::default()).unwrap();
        let ctrl = RandomController::uniform(2);
        let mut ratios = Vec::new();
        for rep in 0..20u64 {
            let a = evaluate_policy(&p, &ctrl, "r", 40, 400, 1000 + rep).unwrap();
            let b = evaluate_policy(&p, &ctrl, "r", 40, 800, 5000 + rep).unwrap();
            ratios.push(b.std_error / a.std_error);
        }
        let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let target = 1.0 / 2f64.sqrt();
        assert!(
            (mean_ratio - target).abs() <= 0.15 * target,
            "mean ratio {mean_ratio} vs {target}"
        );
    }

    #[test]
    fn evaluation_is_deterministic_across_thread_pools() {
        let p = builtin_model("finite-toy", &Default::default()).unwrap();
        let ctrl = RandomController::uniform(2);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| evaluate_policy(&p, &ctrl, "r", 50, 300, 9).unwrap().returns)
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn vi_optimal_controller_matches_planner_value() {
        // Belief-grid planner value vs realized Monte Carlo value.
        let p = builtin_model(
            "finite-toy",
            &params_from(&[("states", 2.0), ("obs", 2.0), ("actions", 2.0)]),
        )
        .unwrap();
        let fs = p.finite_support.as_ref().unwrap();
        let hmm =
            crate::discretize::build_hidden_model(&p, &fs.state_grid.clone(), None, 1, 0).unwrap();
        let grid = crate::quantize::SimplexGrid::new(2, 30).unwrap();
        let mdp = crate::beliefmdp::build_belief_mdp(&hmm, &grid).unwrap();
        let sol = crate::beliefmdp::solve_belief_mdp(&mdp, hmm.discount, 1e-9, 100_000).unwrap();
        let ctrl = crate::beliefmdp::belief_controller(&hmm, &sol, &grid);
        let horizon = horizon_for_tolerance(p.discount, 1.0, 1e-4);
        let report = evaluate_policy(&p, &ctrl, "belief", horizon, 4000, 77).unwrap();

        // The planner's value at the prior: average the first correction
        // over the observation marginal (the rollout value includes the
        // first observation, the grid value conditions on it).
        let prior = hmm.prior_belief();
        let mut v_prior = 0.0;
        for y in 0..hmm.n_obs {
            let (b, lik) = crate::discretize::bayes_correct(&hmm, &prior, y).unwrap();
            if lik > 0.0 {
                v_prior += lik * sol.values[grid.nearest(b.probs()).unwrap()];
            }
        }
        let tol = report.truncation_bound + 3.0 * report.std_error + 0.05;
        assert!(
            (report.mean - v_prior).abs() <= tol,
            "realized {} vs planner {v_prior} (tol {tol})",
            report.mean
        );
    }
}
