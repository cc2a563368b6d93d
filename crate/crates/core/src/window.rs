//! Finite-window approximate MDP.
//!
//! States are the last N+1 discrete observations and N actions; the predictor
//! from before the window is frozen at a fixed belief `pi_star`. The
//! per-state conditional hidden-state belief corrects `pi_star` with the
//! oldest observation and then alternates predict/correct through the window;
//! costs average the surrogate cost under that belief, and transitions append
//! a fresh observation whose probability comes from the one-step-ahead
//! predictive distribution. A solved window MDP yields a controller that
//! plays a fixed warm-up action until its buffer holds N+1 observations.

use std::sync::Arc;

use rayon::prelude::*;

use crate::beliefmdp::{value_iteration, ValueSolution};
use crate::discretize::{bayes_correct, filter_update, predictor_update, Belief, FiniteHmm};
use crate::error::{Error, Result};
use crate::model::Controller;
use crate::quantize::Quantizer;

/// Window contents: observations oldest-to-newest (length N+1), actions
/// oldest-to-newest (length N).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowState {
    pub observations: Vec<usize>,
    pub actions: Vec<usize>,
}

/// Bijective codec between window states and integers in
/// [0, n_obs^(N+1) * n_actions^N). The newest observation is the
/// fastest-varying digit; actions occupy the most significant digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowCoder {
    pub n_obs: usize,
    pub n_actions: usize,
    pub window: usize,
}

impl WindowCoder {
    pub fn new(n_obs: usize, n_actions: usize, window: usize) -> Self {
        Self {
            n_obs,
            n_actions,
            window,
        }
    }

    /// Number of window states, exact in u128.
    pub fn count(&self) -> u128 {
        (self.n_obs as u128).pow(self.window as u32 + 1)
            * (self.n_actions as u128).pow(self.window as u32)
    }

    pub fn encode(&self, state: &WindowState) -> usize {
        debug_assert_eq!(state.observations.len(), self.window + 1);
        debug_assert_eq!(state.actions.len(), self.window);
        let mut code = 0usize;
        for &u in &state.actions {
            code = code * self.n_actions + u;
        }
        for &y in &state.observations {
            code = code * self.n_obs + y;
        }
        code
    }

    pub fn decode(&self, mut code: usize) -> WindowState {
        let mut observations = vec![0usize; self.window + 1];
        for slot in observations.iter_mut().rev() {
            *slot = code % self.n_obs;
            code /= self.n_obs;
        }
        let mut actions = vec![0usize; self.window];
        for slot in actions.iter_mut().rev() {
            *slot = code % self.n_actions;
            code /= self.n_actions;
        }
        WindowState {
            observations,
            actions,
        }
    }

    /// Drop the oldest (observation, action) pair and append the new ones.
    pub fn shift(&self, state: &WindowState, action: usize, new_obs: usize) -> WindowState {
        let mut observations = state.observations[1..].to_vec();
        observations.push(new_obs);
        let mut actions = if self.window == 0 {
            Vec::new()
        } else {
            state.actions[1..].to_vec()
        };
        if self.window > 0 {
            actions.push(action);
        }
        WindowState {
            observations,
            actions,
        }
    }
}

/// Conditional hidden-state belief of a window under the frozen predictor:
/// correct `pi_star` with the oldest observation, then predict/correct
/// through the remaining pairs. Returns the belief and whether every
/// correction had positive likelihood (false marks the window unreachable
/// under `pi_star`; the degenerate-evidence fallback was used).
pub fn conditional_belief(
    hmm: &FiniteHmm,
    pi_star: &Belief,
    state: &WindowState,
) -> Result<(Belief, bool)> {
    let mut reachable = true;
    let (mut belief, lik) = bayes_correct(hmm, pi_star, state.observations[0])?;
    if lik == 0.0 {
        reachable = false;
    }
    for k in 0..state.actions.len() {
        let (next, lik) = filter_update(hmm, &belief, state.actions[k], state.observations[k + 1])?;
        if lik == 0.0 {
            reachable = false;
        }
        belief = next;
    }
    Ok((belief, reachable))
}

/// Finite fully observed MDP over window codes.
#[derive(Debug, Clone)]
pub struct WindowMdp {
    pub window: usize,
    pub coder: WindowCoder,
    pub pi_star: Belief,
    /// Conditional belief per window code.
    pub beliefs: Vec<Belief>,
    /// False where a zero-likelihood correction forced the fallback.
    pub reachable: Vec<bool>,
    pub costs: Vec<Vec<f64>>,
    /// Sparse rows; each row's support is exactly the n_obs shift-consistent
    /// successors (successors of probability zero are kept).
    pub transitions: Vec<Vec<Vec<(usize, f64)>>>,
    pub discount: f64,
    pub cost_sup: f64,
    /// Copied from the surrogate so controllers can quantize raw
    /// observations.
    pub quantizer_y: Quantizer,
}

/// Build the window MDP for window length N (N = 0 uses the newest
/// observation alone). Errors when n_obs^(N+1) * n_actions^N exceeds
/// `budget`.
pub fn build_window_mdp(
    hmm: &FiniteHmm,
    pi_star: &Belief,
    window: usize,
    budget: usize,
) -> Result<WindowMdp> {
    if pi_star.len() != hmm.n_states {
        return Err(Error::DimensionMismatch(
            "pi_star dimension != hidden states".into(),
        ));
    }
    let coder = WindowCoder::new(hmm.n_obs, hmm.n_actions, window);
    let count = coder.count();
    if count > budget as u128 {
        return Err(Error::BudgetExceeded {
            required: count,
            budget: budget as u128,
        });
    }
    let count = count as usize;

    let per_state: Vec<Result<(Belief, bool, Vec<f64>, Vec<Vec<(usize, f64)>>)>> = (0..count)
        .into_par_iter()
        .map(|code| {
            let state = coder.decode(code);
            let (belief, reachable) = conditional_belief(hmm, pi_star, &state)?;
            let costs: Vec<f64> = (0..hmm.n_actions)
                .map(|u| {
                    belief
                        .probs()
                        .iter()
                        .enumerate()
                        .map(|(x, &w)| w * hmm.cost[x][u])
                        .sum()
                })
                .collect();
            let mut rows = Vec::with_capacity(hmm.n_actions);
            for u in 0..hmm.n_actions {
                let pred = predictor_update(hmm, &belief, u)?;
                let row: Vec<(usize, f64)> = (0..hmm.n_obs)
                    .map(|y_next| {
                        let prob: f64 = pred
                            .probs()
                            .iter()
                            .enumerate()
                            .map(|(x, &w)| w * hmm.channel[x][y_next])
                            .sum();
                        (coder.encode(&coder.shift(&state, u, y_next)), prob)
                    })
                    .collect();
                rows.push(row);
            }
            Ok((belief, reachable, costs, rows))
        })
        .collect();

    let mut beliefs = Vec::with_capacity(count);
    let mut reachable = Vec::with_capacity(count);
    let mut costs = Vec::with_capacity(count);
    let mut transitions = Vec::with_capacity(count);
    for r in per_state {
        let (b, reach, c, t) = r?;
        beliefs.push(b);
        reachable.push(reach);
        costs.push(c);
        transitions.push(t);
    }

    Ok(WindowMdp {
        window,
        coder,
        pi_star: pi_star.clone(),
        beliefs,
        reachable,
        costs,
        transitions,
        discount: hmm.discount,
        cost_sup: hmm.cost_sup,
        quantizer_y: hmm.quantizer_y.clone(),
    })
}

/// Solve the window MDP by value iteration.
pub fn solve_window(mdp: &WindowMdp, tol: f64, max_iter: usize) -> Result<ValueSolution> {
    value_iteration(&mdp.costs, &mdp.transitions, mdp.discount, tol, max_iter)
}

/// CSV export of a window policy with a decoder legend:
/// code,y_oldest..y_newest,u_oldest..u_newest,reachable,value,action.
pub fn write_window_solution_csv(
    mdp: &WindowMdp,
    solution: &ValueSolution,
    w: &mut impl std::io::Write,
) -> std::io::Result<()> {
    write!(w, "code")?;
    for k in 0..=mdp.window {
        write!(w, ",y{k}")?;
    }
    for k in 0..mdp.window {
        write!(w, ",u{k}")?;
    }
    writeln!(w, ",reachable,value,action")?;
    for code in 0..mdp.costs.len() {
        let state = mdp.coder.decode(code);
        write!(w, "{code}")?;
        for y in &state.observations {
            write!(w, ",{y}")?;
        }
        for u in &state.actions {
            write!(w, ",{u}")?;
        }
        writeln!(
            w,
            ",{},{},{}",
            mdp.reachable[code] as u8, solution.values[code], solution.policy[code]
        )?;
    }
    Ok(())
}

/// Deterministic finite-memory controller: quantizes each observation, plays
/// the fixed warm-up action until the buffer holds N+1 observations and N
/// actions, then follows the greedy window policy.
pub struct WindowController {
    coder: WindowCoder,
    policy: Arc<Vec<usize>>,
    quantizer_y: Quantizer,
    warmup: usize,
    warmup_steps: usize,
    obs_buffer: Vec<usize>,
    act_buffer: Vec<usize>,
    steps_seen: usize,
}

impl WindowController {
    /// Extend the warm-up phase beyond the default N steps (used to compare
    /// controllers of different window lengths from a common start; the
    /// theory assumes a full buffer when acting begins).
    pub fn with_warmup_steps(mut self, steps: usize) -> Self {
        self.warmup_steps = steps.max(self.coder.window);
        self
    }

    /// Window code the controller currently sees, once warmed up.
    fn current_code(&self) -> usize {
        let n = self.obs_buffer.len();
        let state = WindowState {
            observations: self.obs_buffer[n - (self.coder.window + 1)..].to_vec(),
            actions: self.act_buffer[self.act_buffer.len() - self.coder.window..].to_vec(),
        };
        self.coder.encode(&state)
    }
}

impl Controller for WindowController {
    fn reset(&mut self, _seed: u64) {
        self.obs_buffer.clear();
        self.act_buffer.clear();
        self.steps_seen = 0;
    }

    fn act(&mut self, observation: &[f64]) -> usize {
        let y = self
            .quantizer_y
            .quantize(observation)
            .expect("observation must not contain NaN");
        self.obs_buffer.push(y);
        self.steps_seen += 1;
        let a = if self.steps_seen < self.warmup_steps + 1 {
            self.warmup
        } else {
            self.policy[self.current_code()]
        };
        self.act_buffer.push(a);
        // Only the trailing window is ever read.
        if self.obs_buffer.len() > 2 * (self.coder.window + 1) {
            self.obs_buffer.drain(..self.coder.window + 1);
            self.act_buffer.drain(..self.coder.window + 1);
        }
        a
    }

    fn clone_box(&self) -> Box<dyn Controller> {
        Box::new(WindowController {
            coder: self.coder,
            policy: Arc::clone(&self.policy),
            quantizer_y: self.quantizer_y.clone(),
            warmup: self.warmup,
            warmup_steps: self.warmup_steps,
            obs_buffer: self.obs_buffer.clone(),
            act_buffer: self.act_buffer.clone(),
            steps_seen: self.steps_seen,
        })
    }
}

/// Wrap a solved window MDP as a controller with the given warm-up action.
pub fn window_controller(
    mdp: &WindowMdp,
    solution: &ValueSolution,
    warmup: usize,
) -> Result<WindowController> {
    if warmup >= mdp.coder.n_actions {
        return Err(Error::IndexOutOfRange(format!(
            "warm-up action {warmup} out of range {}",
            mdp.coder.n_actions
        )));
    }
    Ok(WindowController {
        coder: mdp.coder,
        policy: Arc::new(solution.policy.clone()),
        quantizer_y: mdp.quantizer_y.clone(),
        warmup,
        warmup_steps: mdp.coder.window,
        obs_buffer: Vec::new(),
        act_buffer: Vec::new(),
        steps_seen: 0,
    })
}
