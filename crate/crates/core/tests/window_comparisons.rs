//! Monte Carlo comparisons between window lengths on the toy benchmark.

use pomdp_approx::discretize::build_hidden_model;
use pomdp_approx::model::{builtin_model, params_from, Controller};
use pomdp_approx::sim::compare;
use pomdp_approx::window::{build_window_mdp, solve_window, window_controller, WindowController};

/// Toy tuned so memory genuinely matters: slow chain, moderately informative
/// channel, and a state-independent fallback action so acting blind is not
/// catastrophic.
fn benchmark() -> pomdp_approx::model::Pomdp {
    builtin_model(
        "finite-toy",
        &params_from(&[
            ("trans_peak", 0.85),
            ("channel_acc", 0.5),
            ("safe_cost", 0.3),
            ("discount", 0.8),
        ]),
    )
    .unwrap()
}

fn controller_for(
    p: &pomdp_approx::model::Pomdp,
    window: usize,
) -> (WindowController, f64) {
    let fs = p.finite_support.as_ref().unwrap();
    let hmm = build_hidden_model(p, &fs.state_grid.clone(), None, 1, 0).unwrap();
    let mdp = build_window_mdp(&hmm, &hmm.prior_belief(), window, 100_000).unwrap();
    let sol = solve_window(&mdp, 1e-9, 100_000).unwrap();
    let v_prior = sol.values.iter().sum::<f64>() / sol.values.len() as f64;
    (window_controller(&mdp, &sol, 0).unwrap(), v_prior)
}

/// Paired comparison of N = 2 against N = 0 with the controllers exactly as
/// shipped (the N = 0 controller acts from the first observation).
#[test]
fn longer_window_beats_short_on_benchmark() {
    let p = benchmark();
    let (c0, _) = controller_for(&p, 0);
    let (c2, _) = controller_for(&p, 2);
    let ctrls: Vec<(&str, Box<dyn Controller>)> =
        vec![("N0", Box::new(c0)), ("N2", Box::new(c2))];
    let report = compare(&p, &ctrls, None, 200, 2000, 31).unwrap();
    let d: Vec<f64> = report.evals[1]
        .returns
        .iter()
        .zip(&report.evals[0].returns)
        .map(|(a, b)| a - b)
        .collect();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (d.len() - 1) as f64;
    let se = (var / d.len() as f64).sqrt();
    assert!(
        mean <= 3.0 * se,
        "N2 realized cost exceeds N0 beyond noise: {mean} +- {se}"
    );
}

/// Growth sanity for consecutive window lengths. All controllers share a
/// common 3-step warm-up so each comparison starts from a full buffer, the
/// setting the approximation guarantees are stated in.
#[test]
fn window_growth_is_monotone_within_noise() {
    let p = benchmark();
    let ctrls: Vec<(String, Box<dyn Controller>)> = (0..=3usize)
        .map(|n| {
            let (c, _) = controller_for(&p, n);
            (
                format!("N{n}"),
                Box::new(c.with_warmup_steps(3)) as Box<dyn Controller>,
            )
        })
        .collect();
    let refs: Vec<(&str, Box<dyn Controller>)> = ctrls
        .iter()
        .map(|(l, c)| (l.as_str(), c.clone_box()))
        .collect();
    let report = compare(&p, &refs, None, 200, 4000, 99).unwrap();
    for n in 0..3 {
        let d: Vec<f64> = report.evals[n + 1]
            .returns
            .iter()
            .zip(&report.evals[n].returns)
            .map(|(a, b)| a - b)
            .collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (d.len() - 1) as f64;
        let se = (var / d.len() as f64).sqrt();
        assert!(
            mean <= 3.0 * se,
            "window {} -> {}: realized cost grew by {mean} (se {se})",
            n,
            n + 1
        );
    }
}

/// Gaps against a common oracle shrink (within noise) as the window grows.
#[test]
fn window_gap_to_oracle_shrinks() {
    let p = benchmark();
    let fs = p.finite_support.as_ref().unwrap();
    let hmm = build_hidden_model(&p, &fs.state_grid.clone(), None, 1, 0).unwrap();
    let grid = pomdp_approx::quantize::SimplexGrid::new(2, 40).unwrap();
    let mdp = pomdp_approx::beliefmdp::build_belief_mdp(&hmm, &grid).unwrap();
    let sol = pomdp_approx::beliefmdp::solve_belief_mdp(&mdp, hmm.discount, 1e-9, 100_000).unwrap();
    let oracle = pomdp_approx::beliefmdp::belief_controller(&hmm, &sol, &grid);

    let (c0, _) = controller_for(&p, 0);
    let (c1, _) = controller_for(&p, 1);
    let ctrls: Vec<(&str, Box<dyn Controller>)> = vec![
        ("oracle", Box::new(oracle)),
        ("N0", Box::new(c0.with_warmup_steps(1))),
        ("N1", Box::new(c1.with_warmup_steps(1))),
    ];
    let report = compare(&p, &ctrls, None, 200, 4000, 7).unwrap();
    let gap = |i: usize| -> (f64, f64) {
        let d: Vec<f64> = report.evals[i]
            .returns
            .iter()
            .zip(&report.evals[0].returns)
            .map(|(a, b)| a - b)
            .collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (d.len() - 1) as f64;
        (mean, (var / d.len() as f64).sqrt())
    };
    let (g0, s0) = gap(1);
    let (g1, s1) = gap(2);
    assert!(
        g1 <= g0 + 3.0 * (s0 * s0 + s1 * s1).sqrt(),
        "gap grew with window: N0 {g0} +- {s0}, N1 {g1} +- {s1}"
    );
}
