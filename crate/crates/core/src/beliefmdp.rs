//! Belief-MDP machinery on a finite surrogate model.
//!
//! [`build_belief_mdp`] lifts a [`FiniteHmm`] to a fully observed MDP on a
//! simplex grid: observation enumeration replaces the integral over the
//! observation space (exact, since the surrogate alphabet is finite), and
//! filter outputs are projected back to the grid by L1-nearest neighbor.
//! [`value_iteration`] solves any finite MDP given as cost and sparse
//! transition tables; sweeps write to a fresh table, so parallel execution
//! cannot change results.
//!
//! For hidden grids too fine to enumerate the whole lattice,
//! [`solve_reachable`] restricts the lattice to its closure under the
//! projected filter dynamics starting from the prior, which is the same
//! construction on the reachable sub-lattice.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::discretize::{bayes_correct, filter_update, Belief, FiniteHmm};
use crate::error::{Error, Result};
use crate::model::Controller;
use crate::quantize::SimplexGrid;

/// Solution of a finite discounted MDP.
#[derive(Debug, Clone)]
pub struct ValueSolution {
    pub values: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    /// Greedy policy; argmin ties resolve to the smallest action index.
    pub policy: Vec<usize>,
    pub iterations: usize,
    /// Sup-norm difference of the last two sweeps.
    pub residual: f64,
    pub converged: bool,
}

impl ValueSolution {
    /// CSV rows: state,value,action.
    pub fn write_csv(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "state,value,action")?;
        for (s, (v, a)) in self.values.iter().zip(&self.policy).enumerate() {
            writeln!(w, "{s},{v},{a}")?;
        }
        Ok(())
    }
}

/// Value iteration from V = 0 with the (1-beta)-scaled stopping rule: the
/// iteration stops once a sweep moves by at most tol (1-beta) / (2 beta) in
/// sup norm, which guarantees the returned values are within tol of the fixed
/// point. Reaching `max_iter` first flags the solution as non-converged.
pub fn value_iteration(
    costs: &[Vec<f64>],
    transitions: &[Vec<Vec<(usize, f64)>>],
    discount: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ValueSolution> {
    let n = costs.len();
    if n == 0 || transitions.len() != n {
        return Err(Error::DimensionMismatch(
            "costs and transitions must describe the same states".into(),
        ));
    }
    if !(0.0..1.0).contains(&discount) {
        return Err(Error::Precondition(format!(
            "discount must lie in [0, 1), got {discount}"
        )));
    }
    let n_actions = costs[0].len();
    for (s, (c, t)) in costs.iter().zip(transitions).enumerate() {
        if c.len() != n_actions || t.len() != n_actions {
            return Err(Error::DimensionMismatch(format!(
                "state {s} has inconsistent action count"
            )));
        }
    }

    let threshold = if discount > 0.0 {
        tol * (1.0 - discount) / (2.0 * discount)
    } else {
        f64::INFINITY
    };

    let q_of = |s: usize, u: usize, v: &[f64]| -> f64 {
        let future: f64 = transitions[s][u].iter().map(|&(sp, p)| p * v[sp]).sum();
        costs[s][u] + discount * future
    };

    let mut v = vec![0.0; n];
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    while iterations < max_iter {
        let new_v: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|s| {
                (0..n_actions)
                    .map(|u| q_of(s, u, &v))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        residual = v
            .iter()
            .zip(&new_v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = new_v;
        iterations += 1;
        if residual <= threshold {
            converged = true;
            break;
        }
    }

    // Final consistent (Q, V, policy) triple from one more application.
    let q: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|s| (0..n_actions).map(|u| q_of(s, u, &v)).collect())
        .collect();
    let mut values = vec![0.0; n];
    let mut policy = vec![0usize; n];
    for s in 0..n {
        let mut best = f64::INFINITY;
        let mut arg = 0usize;
        for (u, &qv) in q[s].iter().enumerate() {
            if qv < best {
                best = qv;
                arg = u;
            }
        }
        values[s] = best;
        policy[s] = arg;
    }

    Ok(ValueSolution {
        values,
        q,
        policy,
        iterations,
        residual,
        converged,
    })
}

/// Fully observed MDP over a simplex grid of beliefs.
#[derive(Debug, Clone)]
pub struct BeliefMdp {
    pub grid: SimplexGrid,
    pub points: Vec<Vec<f64>>,
    pub costs: Vec<Vec<f64>>,
    pub transitions: Vec<Vec<Vec<(usize, f64)>>>,
}

/// Enumerate the grid, push every (point, action, observation) branch through
/// the filter, and accumulate likelihood mass on the projected successors.
pub fn build_belief_mdp(hmm: &FiniteHmm, grid: &SimplexGrid) -> Result<BeliefMdp> {
    if grid.dimension() != hmm.n_states {
        return Err(Error::DimensionMismatch(format!(
            "grid dimension {} != hidden states {}",
            grid.dimension(),
            hmm.n_states
        )));
    }
    let points = grid.points()?;
    let rows: Vec<Result<(Vec<f64>, Vec<Vec<(usize, f64)>>)>> = points
        .par_iter()
        .map(|z| {
            let belief = Belief::new(z.clone())?;
            let costs: Vec<f64> = (0..hmm.n_actions)
                .map(|u| {
                    z.iter()
                        .enumerate()
                        .map(|(x, &w)| w * hmm.cost[x][u])
                        .sum()
                })
                .collect();
            let mut trans = Vec::with_capacity(hmm.n_actions);
            for u in 0..hmm.n_actions {
                let mut acc: std::collections::BTreeMap<usize, f64> = Default::default();
                for y in 0..hmm.n_obs {
                    let (next, lik) = filter_update(hmm, &belief, u, y)?;
                    if lik == 0.0 {
                        continue;
                    }
                    *acc.entry(grid.nearest(next.probs())?).or_insert(0.0) += lik;
                }
                trans.push(acc.into_iter().collect::<Vec<_>>());
            }
            Ok((costs, trans))
        })
        .collect();

    let mut costs = Vec::with_capacity(points.len());
    let mut transitions = Vec::with_capacity(points.len());
    for row in rows {
        let (c, t) = row?;
        costs.push(c);
        transitions.push(t);
    }
    Ok(BeliefMdp {
        grid: grid.clone(),
        points,
        costs,
        transitions,
    })
}

/// Solve a belief MDP by value iteration.
pub fn solve_belief_mdp(mdp: &BeliefMdp, discount: f64, tol: f64, max_iter: usize) -> Result<ValueSolution> {
    value_iteration(&mdp.costs, &mdp.transitions, discount, tol, max_iter)
}

/// Controller that tracks the exact surrogate filter and plays the grid
/// policy at the nearest grid point. The first observation corrects the
/// discretized prior; afterwards each step is predict-then-correct with the
/// previously played action.
pub struct BeliefGridController {
    hmm: Arc<FiniteHmm>,
    grid: SimplexGrid,
    policy: Arc<Vec<usize>>,
    belief: Belief,
    last_action: Option<usize>,
}

impl BeliefGridController {
    pub fn belief(&self) -> &Belief {
        &self.belief
    }
}

impl Controller for BeliefGridController {
    fn reset(&mut self, _seed: u64) {
        self.belief = self.hmm.prior_belief();
        self.last_action = None;
    }

    fn act(&mut self, observation: &[f64]) -> usize {
        let y = self
            .hmm
            .quantizer_y
            .quantize(observation)
            .expect("observation must not contain NaN");
        let (next, _) = match self.last_action {
            None => bayes_correct(&self.hmm, &self.belief, y),
            Some(u) => filter_update(&self.hmm, &self.belief, u, y),
        }
        .expect("filter update on valid indices");
        self.belief = next;
        let s = self
            .grid
            .nearest(self.belief.probs())
            .expect("filter output is a valid belief");
        let a = self.policy[s];
        self.last_action = Some(a);
        a
    }

    fn clone_box(&self) -> Box<dyn Controller> {
        Box::new(BeliefGridController {
            hmm: Arc::clone(&self.hmm),
            grid: self.grid.clone(),
            policy: Arc::clone(&self.policy),
            belief: self.belief.clone(),
            last_action: self.last_action,
        })
    }
}

/// Wrap a solved belief MDP as a deterministic feedback controller.
pub fn belief_controller(
    hmm: &FiniteHmm,
    solution: &ValueSolution,
    grid: &SimplexGrid,
) -> BeliefGridController {
    BeliefGridController {
        hmm: Arc::new(hmm.clone()),
        grid: grid.clone(),
        policy: Arc::new(solution.policy.clone()),
        belief: hmm.prior_belief(),
        last_action: None,
    }
}

/// Belief MDP restricted to the sub-lattice reachable from the prior under
/// the projected filter dynamics.
#[derive(Debug, Clone)]
pub struct ReachableBeliefMdp {
    pub grid: SimplexGrid,
    /// Lattice coordinates (integer counts) of every reachable state.
    pub states: Vec<Vec<u32>>,
    pub index: HashMap<Vec<u32>, usize>,
    pub costs: Vec<Vec<f64>>,
    pub transitions: Vec<Vec<Vec<(usize, f64)>>>,
}

/// Breadth-first closure of the projected filter dynamics, then the same
/// cost/transition construction as [`build_belief_mdp`] on the closed set.
///
/// The state set is seeded with the projected prior and all its one-step
/// corrections, so a controller that re-projects its belief after every
/// update never leaves the set.
pub fn build_reachable_belief_mdp(
    hmm: &FiniteHmm,
    resolution: u32,
    budget: usize,
) -> Result<ReachableBeliefMdp> {
    let grid = SimplexGrid::new(hmm.n_states, resolution)?;
    let mut index: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut states: Vec<Vec<u32>> = Vec::new();
    let mut queue: std::collections::VecDeque<usize> = Default::default();

    let push = |counts: Vec<u32>,
                    states: &mut Vec<Vec<u32>>,
                    index: &mut HashMap<Vec<u32>, usize>,
                    queue: &mut std::collections::VecDeque<usize>|
     -> Result<usize> {
        if let Some(&i) = index.get(&counts) {
            return Ok(i);
        }
        if states.len() >= budget {
            return Err(Error::BudgetExceeded {
                required: states.len() as u128 + 1,
                budget: budget as u128,
            });
        }
        let i = states.len();
        index.insert(counts.clone(), i);
        states.push(counts);
        queue.push_back(i);
        Ok(i)
    };

    let prior = hmm.prior_belief();
    push(grid.project(prior.probs())?, &mut states, &mut index, &mut queue)?;
    for y in 0..hmm.n_obs {
        let (b, _) = bayes_correct(hmm, &prior, y)?;
        push(grid.project(b.probs())?, &mut states, &mut index, &mut queue)?;
    }

    let mut transitions: Vec<Vec<Vec<(usize, f64)>>> = Vec::new();
    let mut costs: Vec<Vec<f64>> = Vec::new();
    while let Some(s) = queue.pop_front() {
        let z = grid.point_of(&states[s]);
        let belief = Belief::new(z.clone())?;
        costs.push(
            (0..hmm.n_actions)
                .map(|u| {
                    z.iter()
                        .enumerate()
                        .map(|(x, &w)| w * hmm.cost[x][u])
                        .sum()
                })
                .collect(),
        );
        let mut state_rows = Vec::with_capacity(hmm.n_actions);
        for u in 0..hmm.n_actions {
            let mut acc: std::collections::BTreeMap<usize, f64> = Default::default();
            for y in 0..hmm.n_obs {
                let (next, lik) = filter_update(hmm, &belief, u, y)?;
                let sp = push(
                    grid.project(next.probs())?,
                    &mut states,
                    &mut index,
                    &mut queue,
                )?;
                if lik > 0.0 {
                    *acc.entry(sp).or_insert(0.0) += lik;
                }
            }
            state_rows.push(acc.into_iter().collect::<Vec<_>>());
        }
        transitions.push(state_rows);
        debug_assert_eq!(transitions.len() - 1, s);
    }

    Ok(ReachableBeliefMdp {
        grid,
        states,
        index,
        costs,
        transitions,
    })
}

/// Solve the reachable belief MDP.
pub fn solve_reachable(
    mdp: &ReachableBeliefMdp,
    discount: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ValueSolution> {
    value_iteration(&mdp.costs, &mdp.transitions, discount, tol, max_iter)
}

/// Controller for a reachable-set solution. Unlike [`BeliefGridController`]
/// it re-projects its belief to the lattice after every update, which keeps
/// its state inside the closed set the policy was solved on.
pub struct ReachableBeliefController {
    hmm: Arc<FiniteHmm>,
    grid: SimplexGrid,
    policy: Arc<HashMap<Vec<u32>, usize>>,
    belief: Belief,
    last_action: Option<usize>,
}

impl Controller for ReachableBeliefController {
    fn reset(&mut self, _seed: u64) {
        self.belief = self.hmm.prior_belief();
        self.last_action = None;
    }

    fn act(&mut self, observation: &[f64]) -> usize {
        let y = self
            .hmm
            .quantizer_y
            .quantize(observation)
            .expect("observation must not contain NaN");
        let (next, _) = match self.last_action {
            None => bayes_correct(&self.hmm, &self.belief, y),
            Some(u) => filter_update(&self.hmm, &self.belief, u, y),
        }
        .expect("filter update on valid indices");
        let counts = self
            .grid
            .project(next.probs())
            .expect("filter output is a valid belief");
        self.belief = Belief::from_unchecked(self.grid.point_of(&counts));
        let a = *self
            .policy
            .get(&counts)
            .expect("projected state lies in the reachable closure");
        self.last_action = Some(a);
        a
    }

    fn clone_box(&self) -> Box<dyn Controller> {
        Box::new(ReachableBeliefController {
            hmm: Arc::clone(&self.hmm),
            grid: self.grid.clone(),
            policy: Arc::clone(&self.policy),
            belief: self.belief.clone(),
            last_action: self.last_action,
        })
    }
}

/// Wrap a reachable-set solution as a controller.
pub fn reachable_controller(
    hmm: &FiniteHmm,
    mdp: &ReachableBeliefMdp,
    solution: &ValueSolution,
) -> ReachableBeliefController {
    let policy: HashMap<Vec<u32>, usize> = mdp
        .states
        .iter()
        .enumerate()
        .map(|(i, k)| (k.clone(), solution.policy[i]))
        .collect();
    ReachableBeliefController {
        hmm: Arc::new(hmm.clone()),
        grid: mdp.grid.clone(),
        policy: Arc::new(policy),
        belief: hmm.prior_belief(),
        last_action: None,
    }
}
