//! Subcommand implementations.
//!
//! Every run writes its artifacts plus a `manifest.toml` recording the
//! library version, subcommand, master seed, config hash, and the full
//! resolved config, so any artifact is reproducible from its manifest alone.
//! Stage seeds derive from the master seed by name, so adding a stage never
//! perturbs the randomness of existing ones.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;

use pomdp_approx::beliefmdp::{
    self, belief_controller, build_belief_mdp, build_reachable_belief_mdp, reachable_controller,
    solve_belief_mdp, solve_reachable,
};
use pomdp_approx::discretize::{build_hidden_model, Belief, FiniteHmm};
use pomdp_approx::learn::{q_learn_belief, q_learn_finite_memory, LearnOutcome, LearningConfig};
use pomdp_approx::model::{builtin_model, Controller, Pomdp, RandomController};
use pomdp_approx::quantize::{Quantizer, SimplexGrid};
use pomdp_approx::seeds::derive_seed_str;
use pomdp_approx::sim::{compare, horizon_for_tolerance, write_paths_csv, write_summary_csv};
use pomdp_approx::stability::{ModelConstants, StabilityConfig, StabilityReport};
use pomdp_approx::window::{
    build_window_mdp, solve_window, window_controller, write_window_solution_csv, WindowCoder,
};

use crate::config::{config_hash, ExperimentConfig};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Discretize,
    SolveBelief,
    SolveWindow,
    LearnWindow,
    LearnBelief,
    Bounds,
    Evaluate,
    Sweep,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Discretize => "discretize",
            CommandKind::SolveBelief => "solve-belief",
            CommandKind::SolveWindow => "solve-window",
            CommandKind::LearnWindow => "learn-window",
            CommandKind::LearnBelief => "learn-belief",
            CommandKind::Bounds => "bounds",
            CommandKind::Evaluate => "evaluate",
            CommandKind::Sweep => "sweep",
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'a str,
    subcommand: &'a str,
    seed: u64,
    config_sha256: String,
    artifacts: Vec<String>,
    config: String,
}

struct Stage<'a> {
    config: &'a ExperimentConfig,
    out_dir: PathBuf,
    artifacts: Vec<PathBuf>,
}

impl<'a> Stage<'a> {
    fn new(config: &'a ExperimentConfig) -> Result<Self, CliError> {
        let out_dir = PathBuf::from(&config.output_dir);
        fs::create_dir_all(&out_dir)
            .map_err(|e| CliError::Runtime(format!("cannot create output dir: {e}")))?;
        Ok(Self {
            config,
            out_dir,
            artifacts: Vec::new(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn write_artifact(
        &mut self,
        name: &str,
        write: impl FnOnce(&mut fs::File) -> std::io::Result<()>,
    ) -> Result<(), CliError> {
        let path = self.path(name);
        let mut file = fs::File::create(&path)
            .map_err(|e| CliError::Runtime(format!("cannot create {name}: {e}")))?;
        write(&mut file).map_err(|e| CliError::Runtime(format!("cannot write {name}: {e}")))?;
        self.artifacts.push(path);
        Ok(())
    }

    fn finish(mut self, kind: CommandKind) -> Result<Vec<PathBuf>, CliError> {
        let mut names: Vec<String> = self
            .artifacts
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        names.sort();
        let manifest = Manifest {
            version: env!("CARGO_PKG_VERSION"),
            subcommand: kind.name(),
            seed: self.config.seed,
            config_sha256: config_hash(self.config),
            artifacts: names,
            config: self.config.canonical_toml(),
        };
        let text = toml::to_string(&manifest)
            .map_err(|e| CliError::Runtime(format!("manifest serialization: {e}")))?;
        let path = self.path("manifest.toml");
        fs::write(&path, text).map_err(|e| CliError::Runtime(format!("manifest write: {e}")))?;
        self.artifacts.push(path);
        Ok(self.artifacts)
    }
}

fn make_model(config: &ExperimentConfig) -> Result<Pomdp, CliError> {
    builtin_model(&config.model.name, &config.model.params)
        .map_err(|e| CliError::Validation(format!("model.name/model.params: {e}")))
}

fn make_quantizers(config: &ExperimentConfig, model: &Pomdp) -> Result<(Quantizer, Quantizer), CliError> {
    let qx = Quantizer::uniform(&model.state_box, &config.quantizers.state_bins)
        .map_err(|e| CliError::Validation(format!("quantizers.state_bins: {e}")))?;
    let qy = Quantizer::uniform(&model.obs_box, &config.quantizers.obs_bins)
        .map_err(|e| CliError::Validation(format!("quantizers.obs_bins: {e}")))?;
    Ok((qx, qy))
}

fn make_hmm(config: &ExperimentConfig, model: &Pomdp) -> Result<FiniteHmm, CliError> {
    let (qx, qy) = make_quantizers(config, model)?;
    build_hidden_model(
        model,
        &qx,
        Some(&qy),
        config.build.n_samples,
        derive_seed_str(config.seed, "discretize"),
    )
    .map_err(|e| CliError::Runtime(format!("discretize: {e}")))
}

fn pi_star_of(config: &ExperimentConfig, hmm: &FiniteHmm) -> Belief {
    match config.window.pi_star.as_str() {
        "uniform" => Belief::uniform(hmm.n_states),
        _ => hmm.prior_belief(),
    }
}

fn exploration_of(config: &ExperimentConfig, n_actions: usize) -> Vec<f64> {
    if config.learning.exploration.is_empty() {
        vec![1.0 / n_actions as f64; n_actions]
    } else {
        config.learning.exploration.clone()
    }
}

fn eval_horizon(config: &ExperimentConfig, model: &Pomdp) -> usize {
    if config.evaluation.horizon > 0 {
        config.evaluation.horizon
    } else {
        horizon_for_tolerance(
            model.discount,
            model.cost.sup_norm,
            config.evaluation.truncation_tol,
        )
    }
}

fn write_qtable_artifacts(
    stage: &mut Stage,
    prefix: &str,
    outcome: &LearnOutcome,
) -> Result<(), CliError> {
    stage.write_artifact(&format!("{prefix}.csv"), |f| outcome.table.write_csv(f))?;
    for (step, snapshot) in &outcome.snapshots {
        stage.write_artifact(&format!("{prefix}_step{step}.csv"), |f| snapshot.write_csv(f))?;
    }
    Ok(())
}

pub fn run_command(kind: CommandKind, config: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let mut stage = Stage::new(config)?;
    let model = make_model(config)?;
    match kind {
        CommandKind::Discretize => {
            let hmm = make_hmm(config, &model)?;
            let path = stage.path("hmm.csv");
            hmm.write_csv(&path)
                .map_err(|e| CliError::Runtime(format!("hmm.csv: {e}")))?;
            stage.artifacts.push(path);
        }
        CommandKind::SolveBelief => {
            let hmm = make_hmm(config, &model)?;
            let grid = SimplexGrid::new(hmm.n_states, config.quantizers.simplex_resolution)
                .map_err(|e| CliError::Validation(format!("quantizers.simplex_resolution: {e}")))?;
            if grid.size() <= config.quantizers.belief_budget as u128 {
                let mdp = build_belief_mdp(&hmm, &grid)
                    .map_err(|e| CliError::Runtime(format!("solve-belief: {e}")))?;
                let sol = solve_belief_mdp(&mdp, hmm.discount, config.solver.tol, config.solver.max_iter)
                    .map_err(|e| CliError::Runtime(format!("solve-belief: {e}")))?;
                stage.write_artifact("belief_solution.csv", |f| sol.write_csv(f))?;
                stage.write_artifact("belief_states.csv", |f| {
                    writeln!(f, "state,coords")?;
                    for (i, p) in mdp.points.iter().enumerate() {
                        let coords: Vec<String> = p.iter().map(|v| v.to_string()).collect();
                        writeln!(f, "{i},{}", coords.join(";"))?;
                    }
                    Ok(())
                })?;
            } else {
                let mdp = build_reachable_belief_mdp(
                    &hmm,
                    config.quantizers.simplex_resolution,
                    config.quantizers.belief_budget,
                )
                .map_err(|e| CliError::Runtime(format!("solve-belief: {e}")))?;
                let sol = solve_reachable(&mdp, hmm.discount, config.solver.tol, config.solver.max_iter)
                    .map_err(|e| CliError::Runtime(format!("solve-belief: {e}")))?;
                stage.write_artifact("belief_solution.csv", |f| sol.write_csv(f))?;
                stage.write_artifact("belief_states.csv", |f| {
                    writeln!(f, "state,coords")?;
                    for (i, k) in mdp.states.iter().enumerate() {
                        let coords: Vec<String> = mdp
                            .grid
                            .point_of(k)
                            .iter()
                            .map(|v| v.to_string())
                            .collect();
                        writeln!(f, "{i},{}", coords.join(";"))?;
                    }
                    Ok(())
                })?;
            }
        }
        CommandKind::SolveWindow => {
            let hmm = make_hmm(config, &model)?;
            let pi_star = pi_star_of(config, &hmm);
            let mdp = build_window_mdp(&hmm, &pi_star, config.window.length, config.window.budget)
                .map_err(|e| CliError::Runtime(format!("window: {e}")))?;
            let sol = solve_window(&mdp, config.solver.tol, config.solver.max_iter)
                .map_err(|e| CliError::Runtime(format!("window: {e}")))?;
            stage.write_artifact("window_solution.csv", |f| {
                write_window_solution_csv(&mdp, &sol, f)
            })?;
        }
        CommandKind::LearnWindow => {
            let (_, qy) = make_quantizers(config, &model)?;
            let lc = LearningConfig {
                exploration: exploration_of(config, model.n_actions()),
                steps: config.learning.steps,
                window: config.window.length,
                seed: derive_seed_str(config.seed, "learn-window"),
                checkpoints: config.learning.checkpoints.clone(),
            };
            let outcome = q_learn_finite_memory(&model, &qy, &lc)
                .map_err(|e| CliError::Runtime(format!("learn-window: {e}")))?;
            write_qtable_artifacts(&mut stage, "qtable_window", &outcome)?;
        }
        CommandKind::LearnBelief => {
            let hmm = make_hmm(config, &model)?;
            let grid = SimplexGrid::new(hmm.n_states, config.quantizers.simplex_resolution)
                .map_err(|e| CliError::Validation(format!("quantizers.simplex_resolution: {e}")))?;
            let lc = LearningConfig {
                exploration: exploration_of(config, model.n_actions()),
                steps: config.learning.steps,
                window: 0,
                seed: derive_seed_str(config.seed, "learn-belief"),
                checkpoints: config.learning.checkpoints.clone(),
            };
            let outcome = q_learn_belief(&hmm, &grid, &lc)
                .map_err(|e| CliError::Runtime(format!("learn-belief: {e}")))?;
            write_qtable_artifacts(&mut stage, "qtable_belief", &outcome)?;
        }
        CommandKind::Bounds => {
            let hmm = make_hmm(config, &model)?;
            let pi_star = pi_star_of(config, &hmm);
            let report = StabilityReport::compute(
                &hmm,
                &pi_star,
                ModelConstants::from_model(&model),
                &StabilityConfig {
                    window: config.window.length,
                    t_max: config.stability.t_max,
                    n_paths: config.stability.n_paths,
                    ltv_budget: config.stability.ltv_budget,
                    k_samples: config.stability.k_samples,
                    seed: derive_seed_str(config.seed, "stability"),
                },
            )
            .map_err(|e| CliError::Runtime(format!("bounds: {e}")))?;
            stage.write_artifact("stability.csv", |f| report.write_csv(f))?;
            stage.write_artifact("stability.txt", |f| write!(f, "{report}"))?;
        }
        CommandKind::Evaluate => {
            let hmm = make_hmm(config, &model)?;
            let pi_star = pi_star_of(config, &hmm);
            let horizon = eval_horizon(config, &model);

            let wmdp = build_window_mdp(&hmm, &pi_star, config.window.length, config.window.budget)
                .map_err(|e| CliError::Runtime(format!("window: {e}")))?;
            let wsol = solve_window(&wmdp, config.solver.tol, config.solver.max_iter)
                .map_err(|e| CliError::Runtime(format!("window: {e}")))?;
            let wctrl = window_controller(&wmdp, &wsol, config.window.warmup_action)
                .map_err(|e| CliError::Runtime(format!("window: {e}")))?;

            let grid = SimplexGrid::new(hmm.n_states, config.quantizers.simplex_resolution)
                .map_err(|e| CliError::Validation(format!("quantizers.simplex_resolution: {e}")))?;
            let bctrl: Box<dyn Controller> =
                if grid.size() <= config.quantizers.belief_budget as u128 {
                    let mdp = build_belief_mdp(&hmm, &grid)
                        .map_err(|e| CliError::Runtime(format!("belief: {e}")))?;
                    let sol =
                        solve_belief_mdp(&mdp, hmm.discount, config.solver.tol, config.solver.max_iter)
                            .map_err(|e| CliError::Runtime(format!("belief: {e}")))?;
                    Box::new(belief_controller(&hmm, &sol, &grid))
                } else {
                    let mdp = build_reachable_belief_mdp(
                        &hmm,
                        config.quantizers.simplex_resolution,
                        config.quantizers.belief_budget,
                    )
                    .map_err(|e| CliError::Runtime(format!("belief: {e}")))?;
                    let sol =
                        solve_reachable(&mdp, hmm.discount, config.solver.tol, config.solver.max_iter)
                            .map_err(|e| CliError::Runtime(format!("belief: {e}")))?;
                    Box::new(reachable_controller(&hmm, &mdp, &sol))
                };

            let stability = StabilityReport::compute(
                &hmm,
                &pi_star,
                ModelConstants::from_model(&model),
                &StabilityConfig {
                    window: config.window.length,
                    t_max: config.stability.t_max,
                    n_paths: config.stability.n_paths,
                    ltv_budget: config.stability.ltv_budget,
                    k_samples: config.stability.k_samples,
                    seed: derive_seed_str(config.seed, "stability"),
                },
            )
            .map_err(|e| CliError::Runtime(format!("evaluate bounds: {e}")))?;

            let random: Box<dyn Controller> = Box::new(RandomController::uniform(model.n_actions()));
            let window_label = format!("window-N{}", config.window.length);
            let belief_label = format!("belief-m{}", config.quantizers.simplex_resolution);
            let controllers: Vec<(&str, Box<dyn Controller>)> = vec![
                ("random", random),
                (&window_label, Box::new(wctrl)),
                (&belief_label, bctrl),
            ];
            let report = compare(
                &model,
                &controllers,
                Some(stability),
                horizon,
                config.evaluation.n_paths,
                derive_seed_str(config.seed, "evaluate"),
            )
            .map_err(|e| CliError::Runtime(format!("evaluate: {e}")))?;
            stage.write_artifact("eval_paths.csv", |f| write_paths_csv(&report.evals, f))?;
            stage.write_artifact("eval_summary.csv", |f| write_summary_csv(&report, f))?;
            if let Some(stability) = &report.stability {
                stage.write_artifact("stability.csv", |f| stability.write_csv(f))?;
            }
        }
        CommandKind::Sweep => {
            let horizon = eval_horizon(config, &model);
            let qx = Quantizer::uniform(&model.state_box, &config.quantizers.state_bins)
                .map_err(|e| CliError::Validation(format!("quantizers.state_bins: {e}")))?;
            let mut rows: Vec<String> = Vec::new();
            for &m_bins in &config.sweep.obs_bins {
                for &n_window in &config.sweep.windows {
                    for &m_res in &config.sweep.simplex_resolutions {
                        let qy = Quantizer::uniform(
                            &model.obs_box,
                            &vec![m_bins; model.obs_box.dim()],
                        )
                        .map_err(|e| CliError::Validation(format!("sweep.obs_bins: {e}")))?;
                        let hmm = build_hidden_model(
                            &model,
                            &qx,
                            Some(&qy),
                            config.build.n_samples,
                            derive_seed_str(config.seed, &format!("sweep-discretize-M{m_bins}")),
                        )
                        .map_err(|e| CliError::Runtime(format!("sweep discretize: {e}")))?;
                        let pi_star = pi_star_of(config, &hmm);
                        let coder = WindowCoder::new(hmm.n_obs, hmm.n_actions, n_window);
                        let state_space = coder.count();

                        let mdp =
                            build_window_mdp(&hmm, &pi_star, n_window, config.window.budget)
                                .map_err(|e| CliError::Runtime(format!("window: {e}")))?;
                        let sol = solve_window(&mdp, config.solver.tol, config.solver.max_iter)
                            .map_err(|e| CliError::Runtime(format!("window: {e}")))?;
                        let ctrl = window_controller(&mdp, &sol, config.window.warmup_action)
                            .map_err(|e| CliError::Runtime(format!("window: {e}")))?;

                        let eval = pomdp_approx::sim::evaluate_policy(
                            &model,
                            &ctrl,
                            &format!("window-M{m_bins}-N{n_window}"),
                            horizon,
                            config.evaluation.n_paths,
                            derive_seed_str(config.seed, "sweep-evaluate"),
                        )
                        .map_err(|e| CliError::Runtime(format!("sweep evaluate: {e}")))?;

                        // L_t estimates for the combined bound on this cell.
                        let explore = RandomController::uniform(hmm.n_actions);
                        let mut lt = Vec::with_capacity(config.stability.t_max);
                        for t in 0..config.stability.t_max {
                            lt.push(
                                pomdp_approx::stability::estimate_lt(
                                    &hmm,
                                    &pi_star,
                                    &explore,
                                    n_window,
                                    t,
                                    config.stability.n_paths,
                                    derive_seed_str(
                                        config.seed,
                                        &format!("sweep-lt-M{m_bins}-N{n_window}-t{t}"),
                                    ),
                                )
                                .map_err(|e| CliError::Runtime(format!("sweep L_t: {e}")))?
                                .value,
                            );
                        }
                        let bound = pomdp_approx::stability::bound_main(
                            model.cost.sup_norm,
                            model.discount,
                            model.channel.lipschitz_y,
                            hmm.quantizer_y.diameter(),
                            &lt,
                            lt.len(),
                        )
                        .map_err(|e| CliError::Runtime(format!("sweep bound: {e}")))?;

                        rows.push(format!(
                            "{m_bins},{n_window},{m_res},{state_space},{},{},{}",
                            bound.total, eval.mean, eval.std_error
                        ));
                    }
                }
            }
            stage.write_artifact("sweep.csv", |f| {
                writeln!(
                    f,
                    "obs_bins,window,simplex_resolution,state_space_size,bound_main,realized_mean,realized_std_error"
                )?;
                for row in &rows {
                    writeln!(f, "{row}")?;
                }
                Ok(())
            })?;
        }
    }
    stage.finish(kind)
}

/// Value-iteration reuse for external callers of the CLI library.
pub use beliefmdp::value_iteration;
