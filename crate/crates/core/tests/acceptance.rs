//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured runtime (run with `--nocapture` to see them). Criterion 9
//! (artifact determinism) lives in the runner crate's acceptance suite.

use std::time::Instant;

use rand::Rng;

use pomdp_approx::beliefmdp::{
    build_belief_mdp, build_reachable_belief_mdp, reachable_controller, solve_belief_mdp,
    solve_reachable, value_iteration,
};
use pomdp_approx::discretize::{build_hidden_model, filter_update, Belief};
use pomdp_approx::learn::{q_learn_finite_memory, sup_norm_diff, LearningConfig};
use pomdp_approx::model::{builtin_model, params_from, Controller, RandomController};
use pomdp_approx::quantize::{Quantizer, SimplexGrid};
use pomdp_approx::seeds::rng_from;
use pomdp_approx::sim::{compare, horizon_for_tolerance};
use pomdp_approx::stability::{
    aggregate_columns, bound_main, bound_obs_disc, dobrushin_finite, estimate_lt, hilbert_metric,
    hilbert_rate_set, mixing_constant,
};
use pomdp_approx::window::{build_window_mdp, solve_window, window_controller};

fn report(criterion: &str, t0: Instant, budget_s: f64, detail: &str) {
    let elapsed = t0.elapsed().as_secs_f64();
    println!("criterion {criterion}: PASS in {elapsed:.2}s (budget {budget_s}s): {detail}");
    assert!(
        elapsed < budget_s,
        "criterion {criterion} exceeded its runtime budget: {elapsed:.2}s"
    );
}

/// Criterion 1: identity quantization reproduces the finite-toy tables
/// bit-exactly through the exact-integration path.
#[test]
fn criterion_01_identity_quantization_exactness() {
    let t0 = Instant::now();
    let p = builtin_model(
        "finite-toy",
        &params_from(&[("states", 2.0), ("obs", 2.0), ("actions", 2.0)]),
    )
    .unwrap();
    let fs = p.finite_support.as_ref().unwrap();
    let hmm = build_hidden_model(&p, &fs.state_grid.clone(), Some(&fs.obs_grid.clone()), 1, 7)
        .unwrap();
    assert!(hmm.meta.exact);
    assert_eq!(hmm.transition, fs.transition);
    assert_eq!(hmm.channel, fs.channel);
    for i in 0..hmm.n_states {
        for u in 0..hmm.n_actions {
            let expect = (p.cost.eval)(&fs.state_grid.representative(i), u);
            assert_eq!(hmm.cost[i][u], expect);
        }
    }
    report("01 identity-quantization", t0, 1.0, "tables bit-exact");
}

/// Criterion 2: per-sweep Bellman contraction factor <= beta (exact), and
/// 0 <= V* <= ||c|| / (1 - beta), over 1000 random finite MDPs.
#[test]
fn criterion_02_bellman_contraction_and_envelope() {
    let t0 = Instant::now();
    let mut rng = rng_from(0x2222, 0);
    for _ in 0..1000 {
        let n = rng.random_range(2..=32);
        let n_u = rng.random_range(1..=4);
        let beta: f64 = rng.random_range(0.1..0.95);
        let costs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n_u).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let transitions: Vec<Vec<Vec<(usize, f64)>>> = (0..n)
            .map(|_| {
                (0..n_u)
                    .map(|_| {
                        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
                        let s: f64 = raw.iter().sum();
                        raw.iter().enumerate().map(|(j, v)| (j, v / s)).collect()
                    })
                    .collect()
            })
            .collect();

        let sweep = |v: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|s| {
                    (0..n_u)
                        .map(|u| {
                            costs[s][u]
                                + beta
                                    * transitions[s][u]
                                        .iter()
                                        .map(|&(sp, p)| p * v[sp])
                                        .sum::<f64>()
                        })
                        .fold(f64::INFINITY, f64::min)
                })
                .collect()
        };
        let v1: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v2: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let before = v1
            .iter()
            .zip(&v2)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let (t1, t2) = (sweep(&v1), sweep(&v2));
        let after = t1
            .iter()
            .zip(&t2)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(after <= beta * before, "contraction: {after} > {}", beta * before);

        let sol = value_iteration(&costs, &transitions, beta, 1e-8, 100_000).unwrap();
        let c_max = costs
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |m, &c| m.max(c));
        for &v in &sol.values {
            assert!(v >= 0.0 && v <= c_max / (1.0 - beta), "envelope: {v}");
        }
    }
    report("02 bellman-contraction", t0, 30.0, "1000 random MDPs");
}

/// Criterion 3: Dobrushin coefficients are nonincreasing under output
/// refinement, exactly, for nested quantizers on a 64-point output grid.
///
/// Channels are generated with dyadic probabilities (multiples of 2^-16), so
/// every sum in the coefficient computation is exact in f64 and the
/// inequality can be asserted with zero tolerance. With arbitrary float
/// masses, mathematically equal coefficients at adjacent scales round
/// differently (the summation groupings differ) and flip by an ulp.
#[test]
fn criterion_03_dobrushin_partition_monotonicity() {
    let t0 = Instant::now();
    let mut rng = rng_from(0x3333, 0);
    let n_out = 64usize;
    let denom = 1u32 << 16;
    for _ in 0..100 {
        let n_in = rng.random_range(2..=8);
        let rows: Vec<Vec<f64>> = (0..n_in)
            .map(|_| {
                // Random composition of 2^16 into n_out parts via sorted cuts.
                let mut cuts: Vec<u32> = (0..n_out - 1).map(|_| rng.random_range(0..=denom)).collect();
                cuts.push(0);
                cuts.push(denom);
                cuts.sort_unstable();
                cuts.windows(2)
                    .map(|w| f64::from(w[1] - w[0]) / f64::from(denom))
                    .collect()
            })
            .collect();
        let mut coarser: Option<f64> = None;
        for cells in [2usize, 4, 8, 16, 64] {
            let groups: Vec<usize> = (0..n_out).map(|j| j * cells / n_out).collect();
            let aggregated = aggregate_columns(&rows, &groups, cells);
            let delta = dobrushin_finite(&aggregated).unwrap();
            if let Some(prev) = coarser {
                assert!(delta <= prev, "refinement increased delta: {delta} > {prev}");
            }
            coarser = Some(delta);
        }
    }
    report("03 dobrushin-monotonicity", t0, 10.0, "100 dyadic channels, 2/4/8/16/64 cells");
}

/// Criterion 4: the filter contracts the Hilbert metric at rate
/// r = max_u (1 - eps_u^2 eps) / (1 + eps_u^2 eps), with zero violations
/// over 10^4 random comparable pairs per instance.
#[test]
fn criterion_04_hilbert_contraction() {
    let t0 = Instant::now();
    let mut rng = rng_from(0x4444, 0);
    let mut instances = 0;
    while instances < 20 {
        let n = rng.random_range(2..=4);
        let n_y = rng.random_range(2..=3);
        let n_u = rng.random_range(1..=3);
        // Mixing kernels: random rows blended with uniform.
        let transition: Vec<Vec<Vec<f64>>> = (0..n_u)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
                        let s: f64 = raw.iter().sum();
                        raw.iter().map(|v| 0.5 * v / s + 0.5 / n as f64).collect()
                    })
                    .collect()
            })
            .collect();
        let eps_u: Vec<f64> = transition.iter().map(|t| mixing_constant(t)).collect();
        if eps_u.iter().any(|&e| e < 0.2) {
            continue;
        }
        // Channel rows with a hard floor at 0.2.
        let channel: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let raw: Vec<f64> = (0..n_y).map(|_| rng.random_range(0.0..1.0)).collect();
                let s: f64 = raw.iter().sum();
                let free = 1.0 - 0.2 * n_y as f64;
                raw.iter().map(|v| 0.2 + free * v / s).collect()
            })
            .collect();
        let eps = channel
            .iter()
            .flat_map(|r| r.iter())
            .fold(f64::INFINITY, |m, &v| m.min(v));
        assert!(eps >= 0.2);
        let r = hilbert_rate_set(&eps_u, eps);
        assert!(r < 1.0);

        let hmm = pomdp_approx::discretize::hmm_from_tables(
            transition,
            channel,
            vec![vec![0.0; n_u]; n],
            vec![1.0 / n as f64; n],
            0.0,
            0.5,
        )
        .unwrap();
        for _ in 0..10_000 {
            let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Belief {
                let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
                let s: f64 = raw.iter().sum();
                Belief::new(raw.iter().map(|v| v / s).collect()).unwrap()
            };
            let mu = draw(&mut rng);
            let nu = draw(&mut rng);
            let u = rng.random_range(0..n_u);
            let y = rng.random_range(0..n_y);
            let (f_mu, _) = filter_update(&hmm, &mu, u, y).unwrap();
            let (f_nu, _) = filter_update(&hmm, &nu, u, y).unwrap();
            let lhs = hilbert_metric(f_mu.probs(), f_nu.probs());
            let rhs = r * hilbert_metric(mu.probs(), nu.probs());
            assert!(lhs <= rhs + 1e-12, "hilbert contraction violated: {lhs} > {rhs}");
        }
        instances += 1;
    }
    report("04 hilbert-contraction", t0, 60.0, "20 instances x 10^4 pairs, zero violations");
}

/// Criterion 5: estimated window losses L_t are dominated by the Dobrushin
/// prediction 2 alpha^N (plus Monte Carlo noise) whenever alpha < 1.
#[test]
fn criterion_05_lt_vs_dobrushin_bound() {
    let t0 = Instant::now();
    for (peak, acc) in [(0.2, 0.6), (0.3, 0.8), (0.1, 0.4)] {
        let p = builtin_model(
            "finite-toy",
            &params_from(&[("trans_peak", peak), ("channel_acc", acc)]),
        )
        .unwrap();
        let fs = p.finite_support.as_ref().unwrap();
        let hmm = build_hidden_model(&p, &fs.state_grid.clone(), None, 1, 0).unwrap();
        let mut delta_t = f64::INFINITY;
        for table in &hmm.transition {
            delta_t = delta_t.min(dobrushin_finite(table).unwrap());
        }
        let delta_o = dobrushin_finite(&hmm.channel).unwrap();
        let alpha = (1.0 - delta_t) * (2.0 - delta_o);
        assert!(alpha < 1.0, "benchmark must satisfy alpha < 1, got {alpha}");

        let pi_star = Belief::new(vec![0.3, 0.7]).unwrap();
        let explore = RandomController::uniform(hmm.n_actions);
        for window in [1usize, 2, 3] {
            for t in [0usize, 5] {
                let e = estimate_lt(&hmm, &pi_star, &explore, window, t, 4000, 0x55).unwrap();
                let bound = 2.0 * alpha.powi(window as i32);
                assert!(
                    e.value <= bound + 3.0 * e.std_error,
                    "peak {peak}, acc {acc}, N {window}, t {t}: {} > {bound} + 3se",
                    e.value
                );
            }
        }
    }
    report("05 lt-dobrushin", t0, 120.0, "3 instances, N in 1..3, t in {0,5}");
}

/// Criterion 6: finite-memory Q-learning converges to the window-MDP
/// solution within 5% of the value scale on at least 18 of 20 seeds.
#[test]
fn criterion_06_q_learning_convergence() {
    let t0 = Instant::now();
    let p = builtin_model(
        "finite-toy",
        &params_from(&[("states", 2.0), ("obs", 2.0), ("actions", 2.0)]),
    )
    .unwrap();
    let fs = p.finite_support.as_ref().unwrap();
    let hmm = build_hidden_model(&p, &fs.state_grid.clone(), None, 1, 0).unwrap();
    // The toy's kernels are doubly stochastic, so the hidden chain's
    // invariant measure under any exploration equals the uniform prior and
    // the learning target is the window MDP frozen at that prior.
    let mdp = build_window_mdp(&hmm, &hmm.prior_belief(), 1, 10_000).unwrap();
    assert_eq!(mdp.costs.len(), 8);
    let sol = solve_window(&mdp, 1e-10, 100_000).unwrap();
    let cap = 0.05 * hmm.cost_sup / (1.0 - hmm.discount);
    let mut hits = 0;
    for seed in 0..20u64 {
        let config = LearningConfig::uniform(2, 200_000, 1, 1000 + seed);
        let out = q_learn_finite_memory(&p, &fs.obs_grid.clone(), &config).unwrap();
        let diff = sup_norm_diff(&out.table, &sol.q).unwrap();
        if diff.visited <= cap {
            hits += 1;
        }
    }
    assert!(hits >= 18, "only {hits}/20 seeds within 0.05 of the planner Q");
    report(
        "06 q-learning",
        t0,
        180.0,
        &format!("{hits}/20 seeds within 0.05 * c/(1-beta)"),
    );
}

/// Criterion 7: realized window-policy gaps against a fine belief-grid
/// oracle stay below the combined bound, in every sweep cell.
#[test]
fn criterion_07_bound_vs_realized() {
    let t0 = Instant::now();
    let p = builtin_model("linear-gaussian-1d", &Default::default()).unwrap();
    let n_samples = 20_000usize;

    // Oracle: reachable belief-lattice controller on a 64-cell hidden grid,
    // resolution-30 simplex lattice, 16-cell observations.
    let qx64 = Quantizer::uniform(&p.state_box, &[64]).unwrap();
    let qy16 = Quantizer::uniform(&p.obs_box, &[16]).unwrap();
    let hmm_oracle = build_hidden_model(&p, &qx64, Some(&qy16), n_samples, 0x77).unwrap();
    let reach = build_reachable_belief_mdp(&hmm_oracle, 30, 400_000).unwrap();
    let oracle_sol = solve_reachable(&reach, hmm_oracle.discount, 1e-6, 100_000).unwrap();
    let oracle = reachable_controller(&hmm_oracle, &reach, &oracle_sol);

    let horizon = horizon_for_tolerance(p.discount, p.cost.sup_norm, 1e-4);
    let mut labels: Vec<String> = vec!["oracle".into()];
    let mut controllers: Vec<Box<dyn Controller>> = vec![Box::new(oracle)];
    let mut bounds: Vec<f64> = Vec::new();
    for &m_bins in &[4usize, 8] {
        let qy = Quantizer::uniform(&p.obs_box, &[m_bins]).unwrap();
        let hmm = build_hidden_model(&p, &qx64, Some(&qy), n_samples, 0x78).unwrap();
        let pi_star = hmm.prior_belief();
        for &n_window in &[0usize, 1] {
            let mdp = build_window_mdp(&hmm, &pi_star, n_window, 1_000_000).unwrap();
            let sol = solve_window(&mdp, 1e-6, 100_000).unwrap();
            labels.push(format!("window-M{m_bins}-N{n_window}"));
            controllers.push(Box::new(window_controller(&mdp, &sol, 0).unwrap()));

            let explore = RandomController::uniform(hmm.n_actions);
            let mut lt = Vec::new();
            for t in 0..10usize {
                lt.push(
                    estimate_lt(&hmm, &pi_star, &explore, n_window, t, 1000, 0x79 + t as u64)
                        .unwrap()
                        .value,
                );
            }
            let b = bound_main(
                p.cost.sup_norm,
                p.discount,
                p.channel.lipschitz_y,
                qy.diameter(),
                &lt,
                lt.len(),
            )
            .unwrap();
            bounds.push(b.total);
        }
    }

    let refs: Vec<(&str, Box<dyn Controller>)> = labels
        .iter()
        .zip(controllers)
        .map(|(l, c)| (l.as_str(), c))
        .collect();
    let report_cmp = compare(&p, &refs, None, horizon, 4000, 0x7A).unwrap();
    for (cell, bound) in report_cmp.evals[1..].iter().zip(&bounds) {
        let d: Vec<f64> = cell
            .returns
            .iter()
            .zip(&report_cmp.evals[0].returns)
            .map(|(a, b)| a - b)
            .collect();
        let gap = d.iter().sum::<f64>() / d.len() as f64;
        let var = d.iter().map(|x| (x - gap) * (x - gap)).sum::<f64>() / (d.len() - 1) as f64;
        let se = (var / d.len() as f64).sqrt();
        assert!(
            gap <= bound + 3.0 * se,
            "{}: realized gap {gap} exceeds bound {bound} + 3se",
            cell.controller
        );
        println!(
            "  {}: realized gap {gap:.4} +- {se:.4} <= bound {bound:.3}",
            cell.controller
        );
    }
    report("07 bound-vs-realized", t0, 600.0, "4 sweep cells vs reachable-lattice oracle");
}

/// Criterion 8: the observation-quantization bound equals the closed form
/// exactly and halves exactly when the cell diameter halves.
#[test]
fn criterion_08_observation_bound_scaling() {
    let t0 = Instant::now();
    let mut rng = rng_from(0x8888, 0);
    for _ in 0..100 {
        let c_sup = rng.random_range(0.0..3.0);
        let beta = rng.random_range(0.05..0.95);
        let alpha_y = rng.random_range(0.0..50.0);
        let l_y = rng.random_range(0.0..2.0);
        let got = bound_obs_disc(c_sup, beta, alpha_y, l_y);
        // Independent statement of the same formula.
        let expect = beta * c_sup * alpha_y * l_y / ((1.0 - beta) * (1.0 - beta));
        assert_eq!(got, expect);
        assert_eq!(bound_obs_disc(c_sup, beta, alpha_y, l_y / 2.0), got / 2.0);
    }
    report("08 obs-bound-scaling", t0, 1.0, "100 tuples, exact equality and halving");
}

/// Criterion 10: aggregating the observation channel cannot lower the
/// optimal belief-MDP value (degraded-channel direction), checked at fine
/// grid resolution.
#[test]
fn criterion_10_degraded_channel_direction() {
    let t0 = Instant::now();
    let p = builtin_model(
        "finite-toy",
        &params_from(&[("states", 2.0), ("obs", 4.0), ("actions", 2.0)]),
    )
    .unwrap();
    let fs = p.finite_support.as_ref().unwrap();
    let qx = fs.state_grid.clone();
    // Original 4-symbol channel vs its 2-cell aggregation.
    let hmm_fine = build_hidden_model(&p, &qx, None, 1, 0).unwrap();
    let qy2 = Quantizer::uniform(&p.obs_box, &[2]).unwrap();
    let hmm_coarse = build_hidden_model(&p, &qx, Some(&qy2), 1, 0).unwrap();

    let grid = SimplexGrid::new(2, 400).unwrap();
    let value_at_prior = |hmm: &pomdp_approx::discretize::FiniteHmm| -> f64 {
        let mdp = build_belief_mdp(hmm, &grid).unwrap();
        let sol = solve_belief_mdp(&mdp, hmm.discount, 1e-8, 200_000).unwrap();
        sol.values[grid.nearest(hmm.prior_belief().probs()).unwrap()]
    };
    let v_fine = value_at_prior(&hmm_fine);
    let v_coarse = value_at_prior(&hmm_coarse);
    assert!(
        v_coarse >= v_fine - 1e-3,
        "quantization helped: fine {v_fine} vs coarse {v_coarse}"
    );
    report(
        "10 degraded-channel",
        t0,
        120.0,
        &format!("V_coarse {v_coarse:.6} >= V_fine {v_fine:.6} - 1e-3"),
    );
}
