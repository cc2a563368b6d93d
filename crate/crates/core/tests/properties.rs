//! Property-based invariants across the quantization and filtering layers.

use proptest::prelude::*;

use pomdp_approx::discretize::{
    bayes_correct, filter_update, hmm_from_tables, predictor_update, Belief, FiniteHmm,
};
use pomdp_approx::model::DomainBox;
use pomdp_approx::quantize::{Quantizer, SimplexGrid};
use pomdp_approx::stability::tv_distance;
use pomdp_approx::window::WindowCoder;

fn belief_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-6f64..1.0, n).prop_map(|raw| {
        let s: f64 = raw.iter().sum();
        raw.iter().map(|v| v / s).collect()
    })
}

fn stochastic_row(n: usize) -> impl Strategy<Value = Vec<f64>> {
    belief_strategy(n)
}

fn random_hmm(n: usize, n_y: usize, n_u: usize) -> impl Strategy<Value = FiniteHmm> {
    (
        prop::collection::vec(prop::collection::vec(stochastic_row(n), n), n_u),
        prop::collection::vec(stochastic_row(n_y), n),
        belief_strategy(n),
    )
        .prop_map(move |(transition, channel, prior)| {
            hmm_from_tables(
                transition,
                channel,
                vec![vec![0.0; n_u]; n],
                prior,
                0.0,
                0.5,
            )
            .unwrap()
        })
}

proptest! {
    #[test]
    fn quantizer_assigns_each_point_to_its_own_bin(
        x in -2.0f64..2.0,
        y in -2.0f64..2.0,
        bins_x in 1usize..7,
        bins_y in 1usize..7,
    ) {
        let bx = DomainBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let q = Quantizer::uniform(&bx, &[bins_x, bins_y]).unwrap();
        let bin = q.quantize(&[x, y]).unwrap();
        prop_assert!(bin < q.n_bins());
        let (lo, hi) = q.bin_bounds(bin);
        let clamped = bx.clamp(&[x, y]);
        for d in 0..2 {
            prop_assert!(clamped[d] >= lo[d] - 1e-12 && clamped[d] <= hi[d] + 1e-12);
        }
        // The representative lies inside its own bin.
        let rep = q.representative(bin);
        prop_assert_eq!(q.quantize(&rep).unwrap(), bin);
    }

    #[test]
    fn simplex_projection_is_idempotent_and_sums_to_resolution(
        b in belief_strategy(4),
        m in 1u32..40,
    ) {
        let grid = SimplexGrid::new(4, m).unwrap();
        let counts = grid.project(&b).unwrap();
        prop_assert_eq!(counts.iter().map(|&k| u64::from(k)).sum::<u64>(), u64::from(m));
        let point = grid.point_of(&counts);
        prop_assert_eq!(grid.project(&point).unwrap(), counts);
    }

    #[test]
    fn filter_outputs_stay_on_the_simplex(
        hmm in random_hmm(3, 2, 2),
        b in belief_strategy(3),
        u in 0usize..2,
        y in 0usize..2,
    ) {
        let belief = Belief::new(b).unwrap();
        let pred = predictor_update(&hmm, &belief, u).unwrap();
        prop_assert!((pred.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let (post, lik) = filter_update(&hmm, &belief, u, y).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&lik));
        prop_assert!((post.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(post.probs().iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn correction_likelihoods_sum_to_one(
        hmm in random_hmm(3, 3, 1),
        b in belief_strategy(3),
    ) {
        let belief = Belief::new(b).unwrap();
        let total: f64 = (0..3)
            .map(|y| bayes_correct(&hmm, &belief, y).unwrap().1)
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn prediction_contracts_tv_at_the_dobrushin_rate(
        hmm in random_hmm(3, 2, 1),
        a in belief_strategy(3),
        b in belief_strategy(3),
    ) {
        let delta = pomdp_approx::stability::dobrushin_finite(&hmm.transition[0]).unwrap();
        let mu = Belief::new(a).unwrap();
        let nu = Belief::new(b).unwrap();
        let before = tv_distance(mu.probs(), nu.probs());
        let after = tv_distance(
            predictor_update(&hmm, &mu, 0).unwrap().probs(),
            predictor_update(&hmm, &nu, 0).unwrap().probs(),
        );
        prop_assert!(
            after <= (1.0 - delta) * before + 1e-12,
            "{after} > (1 - {delta}) * {before}"
        );
    }

    #[test]
    fn window_codec_round_trips(
        n_obs in 2usize..5,
        n_actions in 1usize..4,
        window in 0usize..3,
        raw in 0usize..10_000,
    ) {
        let coder = WindowCoder::new(n_obs, n_actions, window);
        let code = raw % coder.count() as usize;
        let state = coder.decode(code);
        prop_assert_eq!(coder.encode(&state), code);
        prop_assert_eq!(state.observations.len(), window + 1);
        prop_assert_eq!(state.actions.len(), window);
    }
}
