//! Filter-stability diagnostics and performance bounds.
//!
//! Exact quantities on finite tables: Dobrushin coefficients, mixing
//! constants, the Hilbert projective metric and its induced contraction rate.
//! Monte Carlo quantities: the expected prior-mismatch loss L_t of the
//! finite-window approximation and a lower estimate of the uniform
//! sample-path filter stability term. Closed-form performance bounds combine
//! these with the model's declared regularity certificates.
//!
//! Total variation here is the sup-over-events distance, `0.5 * l1`, with
//! values in [0, 1].
//!
//! Estimated fields are always reported with their sample count and standard
//! error: the supremum over policies in the loss constant is replaced by the
//! supplied exploration policy, so estimates are labeled as such and never
//! passed off as certified suprema.

use rayon::prelude::*;

use crate::discretize::{bayes_correct, filter_update, predictor_update, Belief, FiniteHmm};
use crate::error::{Error, Result};
use crate::model::{sample_weighted, Controller};
use crate::seeds;

/// Total variation distance (sup over events): 0.5 * sum |p - q|.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Dobrushin coefficient of a finite kernel: the minimum over input pairs of
/// the overlap of their output rows. Exact on finite alphabets, where the
/// finest partition attains the infimum.
pub fn dobrushin_finite(rows: &[Vec<f64>]) -> Result<f64> {
    for (i, row) in rows.iter().enumerate() {
        let sum: f64 = row.iter().sum();
        if row.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "row {i} is not stochastic (sum {sum})"
            )));
        }
    }
    let mut delta = f64::INFINITY;
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            let overlap: f64 = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| a.min(*b))
                .sum();
            delta = delta.min(overlap);
        }
    }
    if rows.len() < 2 {
        delta = 1.0;
    }
    Ok(delta)
}

/// Aggregate kernel columns over a partition of the output alphabet.
/// `groups[j]` is the coarse cell of output j.
pub fn aggregate_columns(rows: &[Vec<f64>], groups: &[usize], n_groups: usize) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|row| {
            let mut out = vec![0.0; n_groups];
            for (j, &p) in row.iter().enumerate() {
                out[groups[j]] += p;
            }
            out
        })
        .collect()
}

/// Grid-based estimate of the Dobrushin coefficient of a continuous channel:
/// the exact coefficient of the channel aggregated over the cells of `qy`,
/// minimized over sampled state pairs. Coarsening the output partition and
/// sampling finitely many pairs can only raise the coefficient, so this
/// estimate approaches the continuous value from above as the grid refines
/// and the pair budget grows; it is an estimate, not a certificate.
pub fn dobrushin_channel_estimate(
    pomdp: &crate::model::Pomdp,
    qy: &crate::quantize::Quantizer,
    n_pairs: usize,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = seeds::rng_from(seed, 0xD0B);
    let mut delta = f64::INFINITY;
    for pair in 0..n_pairs {
        let x1 = pomdp.state_box.sample_uniform(&mut rng);
        let x2 = pomdp.state_box.sample_uniform(&mut rng);
        let r1 = crate::discretize::degraded_channel_row(
            pomdp,
            qy,
            &x1,
            n_samples,
            seeds::derive_seed(seed, 2 * pair as u64),
        )?;
        let r2 = crate::discretize::degraded_channel_row(
            pomdp,
            qy,
            &x2,
            n_samples,
            seeds::derive_seed(seed, 2 * pair as u64 + 1),
        )?;
        let overlap: f64 = r1.iter().zip(&r2).map(|(a, b)| a.min(*b)).sum();
        delta = delta.min(overlap);
    }
    Ok(delta)
}

/// Largest eps in (0, 1] with eps * lambda <= K(x, .) <= lambda / eps, where
/// lambda is the column-average row. Returns 0 when the kernel has a zero
/// entry against positive reference mass (not mixing).
pub fn mixing_constant(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len() as f64;
    let n_cols = rows[0].len();
    let lambda: Vec<f64> = (0..n_cols)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for row in rows {
        for (j, &p) in row.iter().enumerate() {
            if lambda[j] <= 0.0 {
                continue;
            }
            let ratio = p / lambda[j];
            if ratio <= 0.0 {
                return 0.0;
            }
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    lo.min(1.0 / hi).clamp(0.0, 1.0)
}

/// Hilbert projective metric between two beliefs. Finite only for comparable
/// vectors (identical supports); +inf otherwise.
pub fn hilbert_metric(mu: &[f64], nu: &[f64]) -> f64 {
    let mut max_ratio: f64 = 0.0;
    let mut max_inv: f64 = 0.0;
    for (&a, &b) in mu.iter().zip(nu) {
        match (a > 0.0, b > 0.0) {
            (true, true) => {
                max_ratio = max_ratio.max(a / b);
                max_inv = max_inv.max(b / a);
            }
            (false, false) => {}
            _ => return f64::INFINITY,
        }
    }
    if max_ratio == 0.0 {
        return 0.0;
    }
    (max_ratio * max_inv).ln()
}

/// Filter contraction rate under the Hilbert metric for a kernel with mixing
/// constant eps_u and a channel bounded below by eps:
/// r = (1 - eps_u^2 eps) / (1 + eps_u^2 eps).
pub fn hilbert_rate(eps_u: f64, eps: f64) -> f64 {
    let a = eps_u * eps_u * eps;
    (1.0 - a) / (1.0 + a)
}

/// Rate over an action set: the worst (largest) per-action rate.
pub fn hilbert_rate_set(eps_us: &[f64], eps: f64) -> f64 {
    eps_us
        .iter()
        .map(|&e| hilbert_rate(e, eps))
        .fold(0.0, f64::max)
}

/// A Monte Carlo estimate with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples
            .iter()
            .map(|s| (s - mean) * (s - mean))
            .sum::<f64>()
            / (n.saturating_sub(1)).max(1) as f64;
        Estimate {
            value: mean,
            std_error: (var / n as f64).sqrt(),
            n,
        }
    }
}

/// Expected prior-mismatch loss of the window approximation at time t.
///
/// Simulates the surrogate chain under the exploration controller, tracks the
/// true predictor from the surrogate prior, and from time t runs two filters
/// over the same realized (observation, action) segment of length `window`,
/// one initialized at the realized predictor and one at `pi_star`. Returns
/// the mean total-variation distance of the two final posteriors.
///
/// The supremum over policies in the loss definition is replaced by the
/// supplied exploration policy; the result is an estimate under that policy.
pub fn estimate_lt(
    hmm: &FiniteHmm,
    pi_star: &Belief,
    explore: &dyn Controller,
    window: usize,
    t: usize,
    n_paths: usize,
    seed: u64,
) -> Result<Estimate> {
    if n_paths < 2 {
        return Err(Error::Precondition("need at least 2 paths".into()));
    }
    let samples: Vec<Result<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = seeds::rng_from(seed, path as u64);
            let mut ctrl = explore.clone_box();
            ctrl.reset(seeds::derive_seed(seed, 0xC000_0000 + path as u64));
            let mut x = sample_weighted(&hmm.prior, &mut rng);
            let mut predictor = hmm.prior_belief();

            // Burn in to time t, maintaining the true predictor.
            for _ in 0..t {
                let y = sample_weighted(&hmm.channel[x], &mut rng);
                let u = ctrl.act(&hmm.quantizer_y.representative(y));
                if u >= hmm.n_actions {
                    return Err(Error::IndexOutOfRange("explore action".into()));
                }
                let (posterior, _) = bayes_correct(hmm, &predictor, y)?;
                predictor = predictor_update(hmm, &posterior, u)?;
                x = sample_weighted(&hmm.transition[u][x], &mut rng);
            }

            // Paired filters over the same realized segment.
            let y0 = sample_weighted(&hmm.channel[x], &mut rng);
            let (mut b_true, _) = bayes_correct(hmm, &predictor, y0)?;
            let (mut b_star, _) = bayes_correct(hmm, pi_star, y0)?;
            let mut y_rep = hmm.quantizer_y.representative(y0);
            for _ in 0..window {
                let u = ctrl.act(&y_rep);
                if u >= hmm.n_actions {
                    return Err(Error::IndexOutOfRange("explore action".into()));
                }
                x = sample_weighted(&hmm.transition[u][x], &mut rng);
                let y = sample_weighted(&hmm.channel[x], &mut rng);
                let (bt, _) = filter_update(hmm, &b_true, u, y)?;
                let (bs, _) = filter_update(hmm, &b_star, u, y)?;
                b_true = bt;
                b_star = bs;
                y_rep = hmm.quantizer_y.representative(y);
            }
            Ok(tv_distance(b_true.probs(), b_star.probs()))
        })
        .collect();
    let samples: Vec<f64> = samples.into_iter().collect::<Result<_>>()?;
    Ok(Estimate::from_samples(&samples))
}

/// Lower estimate of the uniform sample-path filter stability term: the
/// maximum over random priors (plus all simplex corners) and random
/// (observation, action) sequences of the total-variation distance between
/// paired posteriors started at the prior and at `pi_star`. A running
/// maximum, so nondecreasing in `budget` for a fixed seed.
pub fn estimate_uniform_ltv(
    hmm: &FiniteHmm,
    pi_star: &Belief,
    window: usize,
    budget: usize,
    seed: u64,
) -> Result<f64> {
    if budget == 0 {
        return Err(Error::Precondition("budget must be >= 1".into()));
    }
    use rand::Rng;
    let n = hmm.n_states;
    let mut best: f64 = 0.0;
    for draw in 0..budget {
        let mut rng = seeds::rng_from(seed, draw as u64);
        // Dirichlet(1,..,1) prior via normalized exponentials.
        let raw: Vec<f64> = (0..n)
            .map(|_| (-rng.random_range(0.0f64..1.0).ln()).max(1e-300))
            .collect();
        let sum: f64 = raw.iter().sum();
        let z = Belief::new(raw.iter().map(|v| v / sum).collect())
            .unwrap_or_else(|_| Belief::uniform(n));
        let ys: Vec<usize> = (0..=window).map(|_| rng.random_range(0..hmm.n_obs)).collect();
        let us: Vec<usize> = (0..window)
            .map(|_| rng.random_range(0..hmm.n_actions))
            .collect();

        let posterior_from = |prior: &Belief| -> Result<Belief> {
            let (mut b, _) = bayes_correct(hmm, prior, ys[0])?;
            for k in 0..window {
                let (bn, _) = filter_update(hmm, &b, us[k], ys[k + 1])?;
                b = bn;
            }
            Ok(b)
        };
        let b_star = posterior_from(pi_star)?;
        let d = tv_distance(posterior_from(&z)?.probs(), b_star.probs());
        best = best.max(d);
        for corner in 0..n {
            let b = posterior_from(&Belief::point_mass(n, corner))?;
            best = best.max(tv_distance(b.probs(), b_star.probs()));
        }
    }
    Ok(best)
}

/// Sampled estimate of the Hilbert bound constant K: (2 / ln 3) times the
/// largest Hilbert distance between paired one-step posteriors (random and
/// corner priors vs pi_star, same realized first transition). Labeled an
/// estimate; the index set of the supremum is user baggage, so a certified K
/// may be supplied to [`bound_hilbert`] instead.
pub fn estimate_hilbert_k(
    hmm: &FiniteHmm,
    pi_star: &Belief,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    use rand::Rng;
    let n = hmm.n_states;
    let mut best: f64 = 0.0;
    for draw in 0..n_samples {
        let mut rng = seeds::rng_from(seed, 0x4B00_0000 + draw as u64);
        let raw: Vec<f64> = (0..n)
            .map(|_| (-rng.random_range(0.0f64..1.0).ln()).max(1e-300))
            .collect();
        let sum: f64 = raw.iter().sum();
        let z = Belief::new(raw.iter().map(|v| v / sum).collect())
            .unwrap_or_else(|_| Belief::uniform(n));
        let y0 = rng.random_range(0..hmm.n_obs);
        let y1 = rng.random_range(0..hmm.n_obs);
        let u0 = rng.random_range(0..hmm.n_actions);
        let one_step = |prior: &Belief| -> Result<Belief> {
            let (b0, _) = bayes_correct(hmm, prior, y0)?;
            let (b1, _) = filter_update(hmm, &b0, u0, y1)?;
            Ok(b1)
        };
        let z1_star = one_step(pi_star)?;
        let h = hilbert_metric(one_step(&z)?.probs(), z1_star.probs());
        if h.is_finite() {
            best = best.max(h);
        }
    }
    Ok(2.0 / 3f64.ln() * best)
}

/// Hidden-state discretization bound:
/// 2 K_O L_X / ((1-b)^2 (1 - b K_T)) + 2 K_c L_X / ((1-b)(1 - b K_T)).
/// Requires b K_T < 1.
pub fn bound_hidden_disc(k_o: f64, k_c: f64, k_t: f64, beta: f64, l_x: f64) -> Result<f64> {
    if beta * k_t >= 1.0 {
        return Err(Error::Precondition(format!(
            "hidden-state bound needs beta * K_T < 1, got {}",
            beta * k_t
        )));
    }
    let one = 1.0 - beta;
    let contr = 1.0 - beta * k_t;
    Ok(2.0 * k_o * l_x / (one * one * contr) + 2.0 * k_c * l_x / (one * contr))
}

/// Observation discretization bound: b ||c|| alpha_Y L_Y / (1-b)^2.
pub fn bound_obs_disc(c_sup: f64, beta: f64, alpha_y: f64, l_y: f64) -> f64 {
    beta * c_sup * alpha_y * l_y / ((1.0 - beta) * (1.0 - beta))
}

/// Combined bound with its truncation remainder made explicit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MainBound {
    pub total: f64,
    /// Observation-quantization term.
    pub obs_term: f64,
    /// Truncated discounted sum of the L_t losses.
    pub memory_term: f64,
    /// Tail bound from substituting the largest provided L_t beyond t_trunc.
    pub tail_term: f64,
}

/// Combined performance bound:
/// b ||c|| alpha_Y L_Y / (1-b)^2 + (2 ||c|| / (1-b)) sum_t b^t L_t,
/// with the sum truncated at `t_trunc` and the tail bounded by the largest
/// provided L_t value.
pub fn bound_main(
    c_sup: f64,
    beta: f64,
    alpha_y: f64,
    l_y: f64,
    l_t: &[f64],
    t_trunc: usize,
) -> Result<MainBound> {
    if l_t.len() < t_trunc {
        return Err(Error::Precondition(format!(
            "need at least {t_trunc} L_t values, got {}",
            l_t.len()
        )));
    }
    if l_t.iter().any(|&v| !(0.0..=2.0).contains(&v)) {
        return Err(Error::Precondition("L_t values must lie in [0, 2]".into()));
    }
    let obs_term = bound_obs_disc(c_sup, beta, alpha_y, l_y);
    let factor = 2.0 * c_sup / (1.0 - beta);
    let mut sum = 0.0;
    for (t, &l) in l_t.iter().take(t_trunc).enumerate() {
        sum += beta.powi(t as i32) * l;
    }
    let memory_term = factor * sum;
    let l_sup = l_t.iter().fold(0.0f64, |m, &v| m.max(v));
    let tail_term = factor * beta.powi(t_trunc as i32) * l_sup / (1.0 - beta);
    Ok(MainBound {
        total: obs_term + memory_term + tail_term,
        obs_term,
        memory_term,
        tail_term,
    })
}

/// Dobrushin-coefficient bound: (||c|| / (1-b)^2) (b alpha_Y L_Y + 4 a^N)
/// with a = (1 - min_u delta(T_u)) (2 - delta(O)).
pub fn bound_dobrushin(
    c_sup: f64,
    beta: f64,
    alpha_y: f64,
    l_y: f64,
    alpha: f64,
    window: usize,
) -> f64 {
    let one = 1.0 - beta;
    c_sup / (one * one) * (beta * alpha_y * l_y + 4.0 * alpha.powi(window as i32))
}

/// Hilbert-metric bound: 2 ||c|| r^(N-1) K / (1-b)^2. Requires r < 1, N >= 1.
pub fn bound_hilbert(c_sup: f64, beta: f64, r: f64, k: f64, window: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Precondition(format!(
            "hilbert bound needs r in [0,1), got {r}"
        )));
    }
    if window == 0 {
        return Err(Error::Precondition("hilbert bound needs N >= 1".into()));
    }
    let one = 1.0 - beta;
    Ok(2.0 * c_sup * r.powi(window as i32 - 1) * k / (one * one))
}

/// Regularity certificates a model declares, gathered for bound evaluation.
#[derive(Debug, Clone, Copy)]
pub struct ModelConstants {
    pub k_o: f64,
    pub k_c: f64,
    pub k_t: f64,
    pub alpha_y: f64,
    pub c_sup: f64,
    pub beta: f64,
}

impl ModelConstants {
    pub fn from_model(p: &crate::model::Pomdp) -> Self {
        Self {
            k_o: p.channel.tv_lipschitz_x,
            k_c: p.cost.lipschitz,
            k_t: p.transition.lipschitz_w1,
            alpha_y: p.channel.lipschitz_y,
            c_sup: p.cost.sup_norm,
            beta: p.discount,
        }
    }
}

/// Knobs for assembling a [`StabilityReport`].
#[derive(Debug, Clone)]
pub struct StabilityConfig {
    pub window: usize,
    /// Number of L_t values to estimate (t = 0 .. t_max-1).
    pub t_max: usize,
    pub n_paths: usize,
    pub ltv_budget: usize,
    pub k_samples: usize,
    pub seed: u64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            window: 1,
            t_max: 10,
            n_paths: 1000,
            ltv_budget: 200,
            k_samples: 200,
            seed: 1,
        }
    }
}

/// Everything the bound theory needs, in one report.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub window: usize,
    /// Dobrushin coefficient of the discrete channel.
    pub delta_channel: f64,
    /// Worst-case (minimum over actions) Dobrushin coefficient of T.
    pub delta_transition: f64,
    /// alpha = (1 - delta_transition) (2 - delta_channel).
    pub alpha: f64,
    /// Channel floor: min over (state, obs) of O(y|x).
    pub eps_channel: f64,
    /// Per-action mixing constants of T.
    pub eps_mixing: Vec<f64>,
    /// Hilbert contraction rate from the mixing constants.
    pub hilbert_r: f64,
    /// Sampled Hilbert bound constant (estimate, not a certified supremum).
    pub hilbert_k_estimate: f64,
    /// L_t estimates for t = 0..t_max under the exploration policy.
    pub l_t: Vec<Estimate>,
    /// Lower estimate of the uniform filter stability term.
    pub l_tv_uniform: f64,
    pub l_x: f64,
    pub l_y: f64,
    pub constants: ModelConstants,
    pub bound_hidden: Option<f64>,
    pub bound_obs: f64,
    pub bound_main: MainBound,
    pub bound_dobrushin: f64,
    pub bound_hilbert: Option<f64>,
    /// Estimation caveat carried by every report.
    pub caveat: &'static str,
}

impl StabilityReport {
    /// Assemble the full report for a surrogate model.
    pub fn compute(
        hmm: &FiniteHmm,
        pi_star: &Belief,
        constants: ModelConstants,
        config: &StabilityConfig,
    ) -> Result<Self> {
        let delta_channel = dobrushin_finite(&hmm.channel)?;
        let mut delta_transition = f64::INFINITY;
        for table in &hmm.transition {
            delta_transition = delta_transition.min(dobrushin_finite(table)?);
        }
        let alpha = (1.0 - delta_transition) * (2.0 - delta_channel);
        let eps_channel = hmm
            .channel
            .iter()
            .flat_map(|r| r.iter())
            .fold(f64::INFINITY, |m, &v| m.min(v));
        let eps_mixing: Vec<f64> = hmm.transition.iter().map(|t| mixing_constant(t)).collect();
        let hilbert_r = hilbert_rate_set(&eps_mixing, eps_channel);
        let hilbert_k_estimate = estimate_hilbert_k(hmm, pi_star, config.k_samples, config.seed)?;

        let explore = crate::model::RandomController::uniform(hmm.n_actions);
        let mut l_t = Vec::with_capacity(config.t_max);
        for t in 0..config.t_max {
            l_t.push(estimate_lt(
                hmm,
                pi_star,
                &explore,
                config.window,
                t,
                config.n_paths,
                seeds::derive_seed(config.seed, 0x1700 + t as u64),
            )?);
        }
        let l_tv_uniform = estimate_uniform_ltv(
            hmm,
            pi_star,
            config.window,
            config.ltv_budget,
            seeds::derive_seed(config.seed, 0x17FF),
        )?;

        let l_x = hmm.quantizer_x.diameter();
        let l_y = hmm.quantizer_y.diameter();
        let lt_values: Vec<f64> = l_t.iter().map(|e| e.value).collect();
        let bound_main_v = bound_main(
            constants.c_sup,
            constants.beta,
            constants.alpha_y,
            l_y,
            &lt_values,
            lt_values.len(),
        )?;
        let bound_hidden =
            bound_hidden_disc(constants.k_o, constants.k_c, constants.k_t, constants.beta, l_x)
                .ok();
        let bound_obs = bound_obs_disc(constants.c_sup, constants.beta, constants.alpha_y, l_y);
        let bound_dob = bound_dobrushin(
            constants.c_sup,
            constants.beta,
            constants.alpha_y,
            l_y,
            alpha,
            config.window,
        );
        let bound_hil = if hilbert_r < 1.0 && config.window >= 1 {
            bound_hilbert(
                constants.c_sup,
                constants.beta,
                hilbert_r,
                hilbert_k_estimate,
                config.window,
            )
            .ok()
        } else {
            None
        };

        Ok(Self {
            window: config.window,
            delta_channel,
            delta_transition,
            alpha,
            eps_channel,
            eps_mixing,
            hilbert_r,
            hilbert_k_estimate,
            l_t,
            l_tv_uniform,
            l_x,
            l_y,
            constants,
            bound_hidden,
            bound_obs,
            bound_main: bound_main_v,
            bound_dobrushin: bound_dob,
            bound_hilbert: bound_hil,
            caveat: "L_t and K are estimates under the uniform exploration policy, \
                     not certified suprema; L_TV_uniform is a lower estimate",
        })
    }

    /// Flat CSV: field,value,std_error,n,provenance.
    pub fn write_csv(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "field,value,std_error,n,provenance")?;
        let exact = |w: &mut dyn std::io::Write, k: &str, v: f64| {
            writeln!(w, "{k},{v},,,exact")
        };
        exact(w, "window", self.window as f64)?;
        exact(w, "delta_channel", self.delta_channel)?;
        exact(w, "delta_transition", self.delta_transition)?;
        exact(w, "alpha", self.alpha)?;
        exact(w, "eps_channel", self.eps_channel)?;
        for (u, e) in self.eps_mixing.iter().enumerate() {
            exact(w, &format!("eps_mixing_{u}"), *e)?;
        }
        exact(w, "hilbert_r", self.hilbert_r)?;
        writeln!(w, "hilbert_k,{},,,estimate", self.hilbert_k_estimate)?;
        for (t, e) in self.l_t.iter().enumerate() {
            writeln!(w, "l_t_{t},{},{},{},estimate", e.value, e.std_error, e.n)?;
        }
        writeln!(w, "l_tv_uniform,{},,,lower-estimate", self.l_tv_uniform)?;
        exact(w, "l_x", self.l_x)?;
        exact(w, "l_y", self.l_y)?;
        match self.bound_hidden {
            Some(v) => exact(w, "bound_hidden", v)?,
            None => writeln!(w, "bound_hidden,,,,inapplicable")?,
        }
        exact(w, "bound_obs", self.bound_obs)?;
        exact(w, "bound_main_total", self.bound_main.total)?;
        exact(w, "bound_main_obs_term", self.bound_main.obs_term)?;
        exact(w, "bound_main_memory_term", self.bound_main.memory_term)?;
        exact(w, "bound_main_tail_term", self.bound_main.tail_term)?;
        exact(w, "bound_dobrushin", self.bound_dobrushin)?;
        match self.bound_hilbert {
            Some(v) => exact(w, "bound_hilbert", v)?,
            None => writeln!(w, "bound_hilbert,,,,inapplicable")?,
        }
        writeln!(w, "caveat,\"{}\",,,note", self.caveat)?;
        Ok(())
    }
}

impl std::fmt::Display for StabilityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "stability report (window N = {})", self.window)?;
        writeln!(
            f,
            "  dobrushin: delta(O) = {:.6}, min_u delta(T_u) = {:.6}, alpha = {:.6}",
            self.delta_channel, self.delta_transition, self.alpha
        )?;
        writeln!(
            f,
            "  mixing: channel floor eps = {:.6}, eps_u = {:?}",
            self.eps_channel, self.eps_mixing
        )?;
        writeln!(
            f,
            "  hilbert: r = {:.6}, K (sampled) = {:.6}",
            self.hilbert_r, self.hilbert_k_estimate
        )?;
        for (t, e) in self.l_t.iter().enumerate() {
            writeln!(
                f,
                "  L_{t} = {:.6} (se {:.2e}, n = {})",
                e.value, e.std_error, e.n
            )?;
        }
        writeln!(f, "  L_TV_uniform >= {:.6}", self.l_tv_uniform)?;
        if let Some(v) = self.bound_hidden {
            writeln!(f, "  bound[hidden-disc] = {v:.6}")?;
        }
        writeln!(f, "  bound[obs-disc]    = {:.6}", self.bound_obs)?;
        writeln!(
            f,
            "  bound[main]        = {:.6} (obs {:.6} + memory {:.6} + tail {:.6})",
            self.bound_main.total,
            self.bound_main.obs_term,
            self.bound_main.memory_term,
            self.bound_main.tail_term
        )?;
        writeln!(f, "  bound[dobrushin]   = {:.6}", self.bound_dobrushin)?;
        if let Some(v) = self.bound_hilbert {
            writeln!(f, "  bound[hilbert]     = {v:.6}")?;
        }
        writeln!(f, "  note: {}", self.caveat)
    }
}
