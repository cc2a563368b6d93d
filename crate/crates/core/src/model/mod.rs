//! Continuous-space POMDP models.
//!
//! A [`Pomdp`] bundles a transition kernel, an observation channel with a
//! density relative to a reference measure, a stage cost, a prior, a finite
//! action set, and a discount factor. Kernels and channels are closures that
//! take explicit seeded RNGs, so every component is immutable, shareable
//! across threads, and deterministic given a seed.
//!
//! Regularity constants (Lipschitz moduli, mixing constants, sup norms) are
//! declared by the model as certificates rather than estimated by the
//! library; [`validate_pomdp`] spot-checks them.

mod builtin;

pub use builtin::{builtin_model, BUILTIN_MODELS};

use std::collections::BTreeMap;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::quantize::Quantizer;
use crate::seeds;

/// Axis-aligned compact box in R^d.
#[derive(Debug, Clone)]
pub struct DomainBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidModel {
                component: "box".into(),
                reason: "lower/upper must be non-empty and of equal length".into(),
            });
        }
        for (d, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidModel {
                    component: "box".into(),
                    reason: format!("need finite lower < upper in dimension {d}: {lo} vs {hi}"),
                });
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .product()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
    }

    pub fn clamp(&self, point: &[f64]) -> Vec<f64> {
        point
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(x, (lo, hi))| x.clamp(*lo, *hi))
            .collect()
    }

    pub fn sample_uniform(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        use rand::Rng;
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| rng.random_range(*lo..*hi))
            .collect()
    }
}

/// Ordered finite set of action points in R^k.
#[derive(Debug, Clone)]
pub struct ActionSet {
    points: Vec<Vec<f64>>,
}

impl ActionSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidModel {
                component: "actions".into(),
                reason: "action set must be non-empty".into(),
            });
        }
        let dim = points[0].len();
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidModel {
                    component: "actions".into(),
                    reason: format!("action {i} has dimension {} != {dim}", p.len()),
                });
            }
            for q in points.iter().skip(i + 1) {
                if p == q {
                    return Err(Error::InvalidModel {
                        component: "actions".into(),
                        reason: format!("duplicate action point {p:?}"),
                    });
                }
            }
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> &[f64] {
        &self.points[index]
    }
}

pub type TransitionSampler = Arc<dyn Fn(&[f64], usize, &mut ChaCha8Rng) -> Vec<f64> + Send + Sync>;
pub type TransitionDensity = Arc<dyn Fn(&[f64], &[f64], usize) -> f64 + Send + Sync>;

/// Controlled transition kernel with declared regularity certificates.
pub struct TransitionKernel {
    /// Draws x' given (x, action index).
    pub sampler: TransitionSampler,
    /// Optional density t(x'|x,u) per unit volume.
    pub density: Option<TransitionDensity>,
    /// Declared Wasserstein-1 modulus K_T: W1(T(.|x,u), T(.|z,u)) <= K_T |x-z|.
    pub lipschitz_w1: f64,
    /// Optional per-action mixing constants.
    pub mixing: Option<Vec<f64>>,
}

pub type ChannelDensity = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type ChannelSampler = Arc<dyn Fn(&[f64], &mut ChaCha8Rng) -> Vec<f64> + Send + Sync>;
pub type MeasureSampler = Arc<dyn Fn(&mut ChaCha8Rng) -> Vec<f64> + Send + Sync>;

/// Observation channel O(dy|x) = g(x,y) lambda(dy).
///
/// The reference measure lambda defaults to normalized volume on the
/// observation box; models using another lambda supply their own sampler.
pub struct ObservationChannel {
    /// Density g(x, y) with respect to the reference measure.
    pub density: ChannelDensity,
    /// Draws y given x.
    pub sampler: ChannelSampler,
    /// Draws from the reference measure lambda.
    pub lambda_sampler: MeasureSampler,
    /// Declared Lipschitz-in-y modulus: |g(x,y) - g(x,y')| <= alpha_y |y-y'|.
    pub lipschitz_y: f64,
    /// Declared total-variation-in-x modulus K_O.
    pub tv_lipschitz_x: f64,
    /// Optional uniform lower bound with g >= eps everywhere.
    pub lower_bound: Option<f64>,
}

pub type CostEval = Arc<dyn Fn(&[f64], usize) -> f64 + Send + Sync>;

/// Stage cost c(x, u) with declared sup norm and Lipschitz modulus.
pub struct CostFunction {
    pub eval: CostEval,
    pub sup_norm: f64,
    pub lipschitz: f64,
}

/// Initial state distribution.
pub struct Prior {
    pub sampler: MeasureSampler,
    pub density: Option<Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>>,
}

/// Exact finite-support description carried by models whose kernels are
/// piecewise constant over a natural grid. Enables exact (sample-free)
/// surrogate construction.
#[derive(Debug, Clone)]
pub struct FiniteSupport {
    /// Natural grid whose cell centers are the state support points.
    pub state_grid: Quantizer,
    /// Natural grid whose cell centers are the observation support points.
    pub obs_grid: Quantizer,
    /// transition[u][i][j] = P(x' = point j | x in cell i, action u).
    pub transition: Vec<Vec<Vec<f64>>>,
    /// channel[i][j] = P(y = point j | x in cell i).
    pub channel: Vec<Vec<f64>>,
    /// Prior weights over state support points.
    pub prior: Vec<f64>,
}

impl std::fmt::Debug for TransitionKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransitionKernel")
            .field("lipschitz_w1", &self.lipschitz_w1)
            .field("mixing", &self.mixing)
            .field("has_density", &self.density.is_some())
            .finish()
    }
}

impl std::fmt::Debug for ObservationChannel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ObservationChannel")
            .field("lipschitz_y", &self.lipschitz_y)
            .field("tv_lipschitz_x", &self.tv_lipschitz_x)
            .field("lower_bound", &self.lower_bound)
            .finish()
    }
}

impl std::fmt::Debug for CostFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CostFunction")
            .field("sup_norm", &self.sup_norm)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl std::fmt::Debug for Prior {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Prior")
            .field("has_density", &self.density.is_some())
            .finish()
    }
}

/// Continuous-space partially observed model.
#[derive(Debug)]
pub struct Pomdp {
    pub name: String,
    pub state_box: DomainBox,
    pub obs_box: DomainBox,
    pub actions: ActionSet,
    pub transition: TransitionKernel,
    pub channel: ObservationChannel,
    pub cost: CostFunction,
    pub discount: f64,
    pub prior: Prior,
    pub finite_support: Option<FiniteSupport>,
}

impl Pomdp {
    /// Checks structural invariants that do not need sampling.
    pub fn check(&self) -> Result<()> {
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(Error::InvalidModel {
                component: "discount".into(),
                reason: format!("discount must lie strictly in (0,1), got {}", self.discount),
            });
        }
        if self.cost.sup_norm < 0.0 {
            return Err(Error::InvalidModel {
                component: "cost".into(),
                reason: "sup norm must be nonnegative".into(),
            });
        }
        Ok(())
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }
}

/// Feedback controller driven by the observation stream.
///
/// `act` receives the newest observation and returns an action index; the
/// controller keeps whatever history it needs. `reset` rewinds internal state
/// and reseeds any internal randomness, so a controller is a deterministic
/// function of (seed, observation sequence).
pub trait Controller: Send + Sync {
    fn reset(&mut self, seed: u64);
    fn act(&mut self, observation: &[f64]) -> usize;
    fn clone_box(&self) -> Box<dyn Controller>;
}

impl Clone for Box<dyn Controller> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

/// Plays one fixed action forever.
#[derive(Debug, Clone)]
pub struct ConstantController {
    pub action: usize,
}

impl Controller for ConstantController {
    fn reset(&mut self, _seed: u64) {}
    fn act(&mut self, _observation: &[f64]) -> usize {
        self.action
    }
    fn clone_box(&self) -> Box<dyn Controller> {
        Box::new(self.clone())
    }
}

/// Randomized stationary exploration: action i with probability weights[i],
/// independent of observations.
#[derive(Debug, Clone)]
pub struct RandomController {
    weights: Vec<f64>,
    rng: ChaCha8Rng,
}

impl RandomController {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if weights.is_empty() || weights.iter().any(|&w| w <= 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(
                "exploration weights must be positive and sum to 1".into(),
            ));
        }
        Ok(Self {
            weights,
            rng: seeds::rng_from(0, 0),
        })
    }

    pub fn uniform(n_actions: usize) -> Self {
        Self {
            weights: vec![1.0 / n_actions as f64; n_actions],
            rng: seeds::rng_from(0, 0),
        }
    }
}

/// Draws an index from explicit probability weights.
pub fn sample_weighted(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    use rand::Rng;
    let x: f64 = rng.random_range(0.0..1.0);
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if x < acc {
            return i;
        }
    }
    weights.len() - 1
}

impl Controller for RandomController {
    fn reset(&mut self, seed: u64) {
        self.rng = seeds::rng_from(seed, 0);
    }
    fn act(&mut self, _observation: &[f64]) -> usize {
        sample_weighted(&self.weights, &mut self.rng)
    }
    fn clone_box(&self) -> Box<dyn Controller> {
        Box::new(self.clone())
    }
}

/// One rollout of a POMDP: states x_0..x_H, observations y_0..y_H, actions
/// u_0..u_{H-1}, realized costs c_0..c_{H-1}.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub costs: Vec<f64>,
    pub seed: u64,
}

const TRAJ_ENV_TAG: u64 = 0x7261;
const TRAJ_CTRL_TAG: u64 = 0x7262;

/// Roll the model forward for `horizon` steps under a controller.
///
/// The environment stream and the controller's internal stream are derived
/// from `seed` with distinct tags, so the rollout is bit-reproducible.
pub fn sample_trajectory(
    pomdp: &Pomdp,
    controller: &mut dyn Controller,
    horizon: usize,
    seed: u64,
) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(Error::Precondition("horizon must be >= 1".into()));
    }
    pomdp.check()?;
    let mut rng = seeds::rng_from(seed, TRAJ_ENV_TAG);
    controller.reset(seeds::derive_seed(seed, TRAJ_CTRL_TAG));

    let mut states = Vec::with_capacity(horizon + 1);
    let mut observations = Vec::with_capacity(horizon + 1);
    let mut actions = Vec::with_capacity(horizon);
    let mut costs = Vec::with_capacity(horizon);

    let x0 = (pomdp.prior.sampler)(&mut rng);
    ensure_in_box(&pomdp.state_box, &x0, "prior")?;
    states.push(x0);

    for t in 0..=horizon {
        let x = states[t].clone();
        let y = (pomdp.channel.sampler)(&x, &mut rng);
        ensure_in_box(&pomdp.obs_box, &y, "channel")?;
        observations.push(y);
        if t == horizon {
            break;
        }
        let u = controller.act(&observations[t]);
        if u >= pomdp.n_actions() {
            return Err(Error::IndexOutOfRange(format!(
                "controller returned action {u}, model has {}",
                pomdp.n_actions()
            )));
        }
        let c = (pomdp.cost.eval)(&x, u);
        if c.abs() > pomdp.cost.sup_norm + 1e-12 {
            return Err(Error::ModelInconsistency {
                component: "cost".into(),
                reason: format!("|c| = {} exceeds declared sup norm {}", c.abs(), pomdp.cost.sup_norm),
            });
        }
        let x_next = (pomdp.transition.sampler)(&x, u, &mut rng);
        ensure_in_box(&pomdp.state_box, &x_next, "transition")?;
        actions.push(u);
        costs.push(c);
        states.push(x_next);
    }

    Ok(Trajectory {
        states,
        observations,
        actions,
        costs,
        seed,
    })
}

fn ensure_in_box(bx: &DomainBox, point: &[f64], component: &str) -> Result<()> {
    if !bx.contains(point) {
        return Err(Error::ModelInconsistency {
            component: component.into(),
            reason: format!("sampler output {point:?} lies outside the declared box"),
        });
    }
    Ok(())
}

/// Result of spot-checking a model's declared certificates.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// Worst |MC estimate of integral g dlambda - 1| over probed states.
    pub worst_channel_norm_gap: f64,
    /// Largest violation of the declared Lipschitz-in-y modulus (0 if none).
    pub worst_lipschitz_excess: f64,
    pub n_norm_points: usize,
    pub n_lipschitz_pairs: usize,
}

/// Spot-check declared certificates: channel normalization under lambda,
/// Lipschitz-in-y modulus of g, the cost sup norm, and kernel box closure.
/// Fails with a model-inconsistency error naming the offending component.
pub fn validate_pomdp(pomdp: &Pomdp, seed: u64) -> Result<ValidationReport> {
    pomdp.check()?;
    let mut rng = seeds::rng_from(seed, 0x76);

    // Channel normalization: MC estimate of integral g(x,y) lambda(dy).
    let n_points = 100;
    let n_lambda = 2000;
    let mut worst_gap: f64 = 0.0;
    for _ in 0..n_points {
        let x = pomdp.state_box.sample_uniform(&mut rng);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n_lambda {
            let y = (pomdp.channel.lambda_sampler)(&mut rng);
            let g = (pomdp.channel.density)(&x, &y);
            if g < 0.0 {
                return Err(Error::ModelInconsistency {
                    component: "channel".into(),
                    reason: format!("density g({x:?},{y:?}) = {g} is negative"),
                });
            }
            sum += g;
            sumsq += g * g;
        }
        let mean = sum / n_lambda as f64;
        let var = (sumsq / n_lambda as f64 - mean * mean).max(0.0);
        let se = (var / n_lambda as f64).sqrt();
        let gap = (mean - 1.0).abs();
        worst_gap = worst_gap.max(gap);
        if gap > 3.0 * se + 5e-3 {
            return Err(Error::ModelInconsistency {
                component: "channel".into(),
                reason: format!(
                    "integral of g(x,.) dlambda = {mean:.6} at x = {x:?} (se {se:.2e})"
                ),
            });
        }
    }

    // Lipschitz-in-y spot check of the declared alpha_Y.
    let n_pairs = 10_000;
    let mut worst_excess: f64 = 0.0;
    for _ in 0..n_pairs {
        let x = pomdp.state_box.sample_uniform(&mut rng);
        let y1 = (pomdp.channel.lambda_sampler)(&mut rng);
        let y2 = (pomdp.channel.lambda_sampler)(&mut rng);
        let dist: f64 = y1
            .iter()
            .zip(&y2)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let diff = ((pomdp.channel.density)(&x, &y1) - (pomdp.channel.density)(&x, &y2)).abs();
        let excess = diff - pomdp.channel.lipschitz_y * dist;
        worst_excess = worst_excess.max(excess);
        if excess > 1e-9 {
            return Err(Error::ModelInconsistency {
                component: "channel".into(),
                reason: format!(
                    "|g(x,y)-g(x,y')| = {diff:.6} exceeds alpha_Y * |y-y'| = {:.6}",
                    pomdp.channel.lipschitz_y * dist
                ),
            });
        }
        if let Some(eps) = pomdp.channel.lower_bound {
            let g = (pomdp.channel.density)(&x, &y1);
            if g < eps - 1e-12 {
                return Err(Error::ModelInconsistency {
                    component: "channel".into(),
                    reason: format!("g = {g} below declared lower bound {eps}"),
                });
            }
        }
    }

    // Cost bound and kernel box closure.
    use rand::Rng;
    for _ in 0..10_000 {
        let x = pomdp.state_box.sample_uniform(&mut rng);
        let u = rng.random_range(0..pomdp.n_actions());
        let c = (pomdp.cost.eval)(&x, u);
        if c.abs() > pomdp.cost.sup_norm + 1e-12 {
            return Err(Error::ModelInconsistency {
                component: "cost".into(),
                reason: format!("|c({x:?},{u})| = {} exceeds {}", c.abs(), pomdp.cost.sup_norm),
            });
        }
        let x2 = (pomdp.transition.sampler)(&x, u, &mut rng);
        ensure_in_box(&pomdp.state_box, &x2, "transition")?;
    }

    // A declared transition density must integrate to 1 over the box.
    if let Some(density) = &pomdp.transition.density {
        let vol = pomdp.state_box.volume();
        for _ in 0..20 {
            let x = pomdp.state_box.sample_uniform(&mut rng);
            let u = rng.random_range(0..pomdp.n_actions());
            let n = 4000;
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for _ in 0..n {
                let x2 = pomdp.state_box.sample_uniform(&mut rng);
                let t = vol * density(&x2, &x, u);
                if t < 0.0 {
                    return Err(Error::ModelInconsistency {
                        component: "transition".into(),
                        reason: format!("density t({x2:?}|{x:?},{u}) = {t} is negative"),
                    });
                }
                sum += t;
                sumsq += t * t;
            }
            let mean = sum / n as f64;
            let var = (sumsq / n as f64 - mean * mean).max(0.0);
            let se = (var / n as f64).sqrt();
            if (mean - 1.0).abs() > 3.0 * se + 5e-3 {
                return Err(Error::ModelInconsistency {
                    component: "transition".into(),
                    reason: format!(
                        "integral of t(.|x,u) dx' = {mean:.6} at x = {x:?}, u = {u} (se {se:.2e})"
                    ),
                });
            }
        }
    }

    Ok(ValidationReport {
        worst_channel_norm_gap: worst_gap,
        worst_lipschitz_excess: worst_excess,
        n_norm_points: n_points,
        n_lipschitz_pairs: n_pairs,
    })
}

/// Convenience for building parameter maps in code and tests.
pub fn params_from(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect()
}
