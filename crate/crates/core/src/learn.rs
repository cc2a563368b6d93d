//! Tabular Q-learning for the finite approximate models.
//!
//! Two state codings: finite-memory windows of quantized observations and
//! actions, and nearest grid points of the running surrogate belief. Both use
//! the visit-count step-size rule (the k-th visit to a (state, action) pair
//! applies step size 1/k; all other entries are untouched) and randomized
//! exploration with full support.
//!
//! The window learner interacts with the true continuous model, quantizing
//! each observation on the fly; a surrogate-environment variant exists for
//! oracle tests against planners on the same tables. The belief learner runs
//! on the surrogate, where the belief process it must track is available.

use rand_chacha::ChaCha8Rng;

use crate::discretize::{bayes_correct, filter_update, FiniteHmm};
use crate::error::{Error, Result};
use crate::model::{sample_weighted, Pomdp};
use crate::quantize::{Quantizer, SimplexGrid};
use crate::seeds;
use crate::window::{WindowCoder, WindowState};

/// Action-value table with per-entry visit counts.
#[derive(Debug, Clone)]
pub struct QTable {
    pub values: Vec<Vec<f64>>,
    pub visits: Vec<Vec<u64>>,
    pub n_actions: usize,
    pub discount: f64,
}

impl QTable {
    pub fn zeros(n_states: usize, n_actions: usize, discount: f64) -> Self {
        Self {
            values: vec![vec![0.0; n_actions]; n_states],
            visits: vec![vec![0; n_actions]; n_states],
            n_actions,
            discount,
        }
    }

    pub fn n_states(&self) -> usize {
        self.values.len()
    }

    /// One Q-learning update with step size 1/(1 + previous visit count).
    fn update(&mut self, s: usize, u: usize, cost: f64, next_state: usize, cost_sup: f64) {
        let alpha = 1.0 / (self.visits[s][u] + 1) as f64;
        let next_min = self.values[next_state]
            .iter()
            .fold(f64::INFINITY, |m, &q| m.min(q));
        self.values[s][u] =
            (1.0 - alpha) * self.values[s][u] + alpha * (cost + self.discount * next_min);
        self.visits[s][u] += 1;
        debug_assert!(
            cost < 0.0
                || self.values[s][u] >= -1e-12
                    && self.values[s][u] <= cost_sup / (1.0 - self.discount) + 1e-9,
            "Q escaped [0, c/(1-beta)]"
        );
    }

    /// Entries never visited keep their initialization.
    pub fn unvisited_entries(&self) -> usize {
        self.visits
            .iter()
            .flat_map(|r| r.iter())
            .filter(|&&n| n == 0)
            .count()
    }

    /// Histogram of visit counts: (min, median, max) over entries.
    pub fn visit_histogram(&self) -> (u64, u64, u64) {
        let mut all: Vec<u64> = self.visits.iter().flat_map(|r| r.iter().copied()).collect();
        all.sort_unstable();
        (all[0], all[all.len() / 2], all[all.len() - 1])
    }

    /// CSV rows: state,action,q,visits.
    pub fn write_csv(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "state,action,q,visits")?;
        for (s, (qs, ns)) in self.values.iter().zip(&self.visits).enumerate() {
            for (u, (q, n)) in qs.iter().zip(ns).enumerate() {
                writeln!(w, "{s},{u},{q},{n}")?;
            }
        }
        Ok(())
    }
}

/// Exploration and run-length parameters for a learning run.
#[derive(Debug, Clone)]
pub struct LearningConfig {
    /// Per-action exploration probabilities; all must be positive.
    pub exploration: Vec<f64>,
    /// Total environment steps.
    pub steps: usize,
    /// Window length N (ignored by the belief learner).
    pub window: usize,
    pub seed: u64,
    /// Environment step counts at which to snapshot the table.
    pub checkpoints: Vec<usize>,
}

impl LearningConfig {
    pub fn uniform(n_actions: usize, steps: usize, window: usize, seed: u64) -> Self {
        Self {
            exploration: vec![1.0 / n_actions as f64; n_actions],
            steps,
            window,
            seed,
            checkpoints: Vec::new(),
        }
    }

    fn check(&self, n_actions: usize) -> Result<()> {
        if self.exploration.len() != n_actions {
            return Err(Error::DimensionMismatch(format!(
                "exploration weights: {} entries for {} actions",
                self.exploration.len(),
                n_actions
            )));
        }
        let sum: f64 = self.exploration.iter().sum();
        if self.exploration.iter().any(|&s| s <= 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(
                "exploration probabilities must be positive and sum to 1".into(),
            ));
        }
        if self.steps == 0 {
            return Err(Error::Precondition("steps must be >= 1".into()));
        }
        Ok(())
    }
}

/// A finished learning run: the final table plus any checkpoint snapshots.
#[derive(Debug, Clone)]
pub struct LearnOutcome {
    pub table: QTable,
    pub snapshots: Vec<(usize, QTable)>,
}

const ENV_TAG: u64 = 0x9E;
const EXPLORE_TAG: u64 = 0x9F;

/// Generic window-coded learning loop over an environment stepper.
///
/// `step` receives (current env state, action, rng) and returns
/// (realized cost, next env state, next raw observation index).
fn window_q_loop<S>(
    mut env_state: S,
    first_obs: usize,
    n_obs: usize,
    n_actions: usize,
    discount: f64,
    cost_sup: f64,
    config: &LearningConfig,
    mut step: impl FnMut(&S, usize, &mut ChaCha8Rng) -> Result<(f64, S, usize)>,
) -> Result<LearnOutcome> {
    config.check(n_actions)?;
    let coder = WindowCoder::new(n_obs, n_actions, config.window);
    const QTABLE_BUDGET: u128 = 10_000_000;
    if coder.count() > QTABLE_BUDGET {
        return Err(Error::BudgetExceeded {
            required: coder.count(),
            budget: QTABLE_BUDGET,
        });
    }
    let n_states = coder.count() as usize;
    let mut table = QTable::zeros(n_states, n_actions, discount);
    let mut snapshots = Vec::new();

    let mut env_rng = seeds::rng_from(config.seed, ENV_TAG);
    let mut explore_rng = seeds::rng_from(config.seed, EXPLORE_TAG);

    let mut obs_hist: Vec<usize> = vec![first_obs];
    let mut act_hist: Vec<usize> = Vec::new();
    // Pending (state, action, cost) awaiting its successor window.
    let mut pending: Option<(usize, usize, f64)> = None;

    for t in 0..config.steps {
        let window_full = obs_hist.len() > config.window;
        let code = if window_full {
            let state = WindowState {
                observations: obs_hist[obs_hist.len() - (config.window + 1)..].to_vec(),
                actions: act_hist[act_hist.len() - config.window..].to_vec(),
            };
            let code = coder.encode(&state);
            if let Some((s, u, c)) = pending.take() {
                table.update(s, u, c, code, cost_sup);
            }
            Some(code)
        } else {
            None
        };

        let u = sample_weighted(&config.exploration, &mut explore_rng);
        let (cost, next_state, next_obs) = step(&env_state, u, &mut env_rng)?;
        if let Some(code) = code {
            pending = Some((code, u, cost));
        }
        env_state = next_state;
        obs_hist.push(next_obs);
        act_hist.push(u);
        let keep = 2 * (config.window + 1);
        if obs_hist.len() > keep {
            obs_hist.drain(..obs_hist.len() - keep);
            act_hist.drain(..act_hist.len() - keep);
        }
        if config.checkpoints.contains(&(t + 1)) {
            snapshots.push((t + 1, table.clone()));
        }
    }

    Ok(LearnOutcome { table, snapshots })
}

/// Finite-memory Q-learning against the true continuous model; observations
/// are quantized with `qy` on the fly and updates begin once the first N+1
/// observations and N actions are buffered.
pub fn q_learn_finite_memory(
    pomdp: &Pomdp,
    qy: &Quantizer,
    config: &LearningConfig,
) -> Result<LearnOutcome> {
    pomdp.check()?;
    let mut init_rng = seeds::rng_from(config.seed, ENV_TAG ^ 0xFF);
    let x0 = (pomdp.prior.sampler)(&mut init_rng);
    let y0 = qy.quantize(&(pomdp.channel.sampler)(&x0, &mut init_rng))?;
    window_q_loop(
        x0,
        y0,
        qy.n_bins(),
        pomdp.n_actions(),
        pomdp.discount,
        pomdp.cost.sup_norm,
        config,
        |x, u, rng| {
            let cost = (pomdp.cost.eval)(x, u);
            let x2 = (pomdp.transition.sampler)(x, u, rng);
            let y2 = qy.quantize(&(pomdp.channel.sampler)(&x2, rng))?;
            Ok((cost, x2, y2))
        },
    )
}

/// Finite-memory Q-learning against the surrogate model itself (oracle mode:
/// the learned table targets exactly the tables a planner solves).
pub fn q_learn_finite_memory_hmm(hmm: &FiniteHmm, config: &LearningConfig) -> Result<LearnOutcome> {
    let mut init_rng = seeds::rng_from(config.seed, ENV_TAG ^ 0xFF);
    let x0 = sample_weighted(&hmm.prior, &mut init_rng);
    let y0 = sample_weighted(&hmm.channel[x0], &mut init_rng);
    window_q_loop(
        x0,
        y0,
        hmm.n_obs,
        hmm.n_actions,
        hmm.discount,
        hmm.cost_sup,
        config,
        |&x, u, rng| {
            let cost = hmm.cost[x][u];
            let x2 = sample_weighted(&hmm.transition[u][x], rng);
            let y2 = sample_weighted(&hmm.channel[x2], rng);
            Ok((cost, x2, y2))
        },
    )
}

/// Belief-grid Q-learning on the surrogate: the learner tracks the filter
/// alongside the environment and uses the nearest simplex grid point as its
/// state.
pub fn q_learn_belief(
    hmm: &FiniteHmm,
    grid: &SimplexGrid,
    config: &LearningConfig,
) -> Result<LearnOutcome> {
    config.check(hmm.n_actions)?;
    if grid.dimension() != hmm.n_states {
        return Err(Error::DimensionMismatch(
            "grid dimension != hidden states".into(),
        ));
    }
    // The tabular learner allocates the full grid; refuse sizes that cannot
    // be tabulated (coarsen the hidden grid or lower the resolution instead).
    const QTABLE_BUDGET: u128 = 10_000_000;
    if grid.size() > QTABLE_BUDGET {
        return Err(Error::BudgetExceeded {
            required: grid.size(),
            budget: QTABLE_BUDGET,
        });
    }
    let n_states = grid.size() as usize;
    let mut table = QTable::zeros(n_states, hmm.n_actions, hmm.discount);
    let mut snapshots = Vec::new();

    let mut env_rng = seeds::rng_from(config.seed, ENV_TAG);
    let mut explore_rng = seeds::rng_from(config.seed, EXPLORE_TAG);

    let mut x = sample_weighted(&hmm.prior, &mut env_rng);
    let y0 = sample_weighted(&hmm.channel[x], &mut env_rng);
    let (mut belief, _) = bayes_correct(hmm, &hmm.prior_belief(), y0)?;
    let mut state = grid.nearest(belief.probs())?;

    for t in 0..config.steps {
        let u = sample_weighted(&config.exploration, &mut explore_rng);
        let cost = hmm.cost[x][u];
        let x2 = sample_weighted(&hmm.transition[u][x], &mut env_rng);
        let y2 = sample_weighted(&hmm.channel[x2], &mut env_rng);
        let (next_belief, _) = filter_update(hmm, &belief, u, y2)?;
        let next_state = grid.nearest(next_belief.probs())?;
        table.update(state, u, cost, next_state, hmm.cost_sup);
        x = x2;
        belief = next_belief;
        state = next_state;
        if config.checkpoints.contains(&(t + 1)) {
            snapshots.push((t + 1, table.clone()));
        }
    }

    Ok(LearnOutcome { table, snapshots })
}

/// Greedy policy extracted from a learned table. States with no visited
/// entry fall back to the warm-up action and are flagged.
#[derive(Debug, Clone)]
pub struct GreedyPolicy {
    pub actions: Vec<usize>,
    pub unvisited: Vec<bool>,
}

/// Argmin over visited entries, ties to the smallest action index.
pub fn greedy_policy(table: &QTable, warmup: usize) -> GreedyPolicy {
    let mut actions = Vec::with_capacity(table.n_states());
    let mut unvisited = Vec::with_capacity(table.n_states());
    for (qs, ns) in table.values.iter().zip(&table.visits) {
        let mut best = f64::INFINITY;
        let mut arg = None;
        for (u, (&q, &n)) in qs.iter().zip(ns).enumerate() {
            if n > 0 && q < best {
                best = q;
                arg = Some(u);
            }
        }
        match arg {
            Some(u) => {
                actions.push(u);
                unvisited.push(false);
            }
            None => {
                actions.push(warmup);
                unvisited.push(true);
            }
        }
    }
    GreedyPolicy { actions, unvisited }
}

/// Sup-norm distance to a reference table, over visited entries and over all
/// entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupNormDiff {
    pub visited: f64,
    pub all: f64,
    pub visited_entries: usize,
    pub total_entries: usize,
}

pub fn sup_norm_diff(table: &QTable, reference: &[Vec<f64>]) -> Result<SupNormDiff> {
    if reference.len() != table.n_states()
        || reference.iter().any(|r| r.len() != table.n_actions)
    {
        return Err(Error::DimensionMismatch(
            "reference table shape differs from learned table".into(),
        ));
    }
    let mut visited = 0.0f64;
    let mut all = 0.0f64;
    let mut visited_entries = 0usize;
    let mut total = 0usize;
    for (s, (qs, ns)) in table.values.iter().zip(&table.visits).enumerate() {
        for (u, (&q, &n)) in qs.iter().zip(ns).enumerate() {
            let d = (q - reference[s][u]).abs();
            all = all.max(d);
            total += 1;
            if n > 0 {
                visited = visited.max(d);
                visited_entries += 1;
            }
        }
    }
    Ok(SupNormDiff {
        visited,
        all,
        visited_entries,
        total_entries: total,
    })
}
