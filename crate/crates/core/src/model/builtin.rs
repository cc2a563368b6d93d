//! Built-in benchmark models.
//!
//! * `linear-gaussian-1d`: scalar linear dynamics with truncated Gaussian
//!   process and observation noise on a compact box. Densities are
//!   renormalized over the box; all regularity certificates are computed in
//!   closed form from the parameters.
//! * `near-informative-channel`: the same dynamics with a sharper channel.
//! * `noninformative-channel`: the same dynamics with a channel that is
//!   uniform regardless of the state (alpha_Y = 0).
//! * `finite-toy`: kernels are point-mass mixtures on a natural grid
//!   embedded in the unit box, so exact tables exist for every quantity; the
//!   returned model carries its [`FiniteSupport`] description.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{
    ActionSet, CostFunction, DomainBox, FiniteSupport, ObservationChannel, Pomdp, Prior,
    TransitionKernel,
};
use crate::quantize::Quantizer;
use crate::stability;

pub const BUILTIN_MODELS: [&str; 4] = [
    "linear-gaussian-1d",
    "noninformative-channel",
    "near-informative-channel",
    "finite-toy",
];

/// Instantiate a built-in model by name with parameter overrides.
pub fn builtin_model(name: &str, params: &BTreeMap<String, f64>) -> Result<Pomdp> {
    match name {
        "linear-gaussian-1d" => linear_gaussian(name, params, 0.1, false),
        "near-informative-channel" => linear_gaussian(name, params, 0.02, false),
        "noninformative-channel" => linear_gaussian(name, params, 0.1, true),
        "finite-toy" => finite_toy(params),
        _ => Err(Error::UnknownModel {
            name: name.into(),
            available: BUILTIN_MODELS.join(", "),
        }),
    }
}

fn check_keys(params: &BTreeMap<String, f64>, known: &[&str]) -> Result<()> {
    for key in params.keys() {
        if !known.contains(&key.as_str()) {
            return Err(Error::InvalidModel {
                component: "params".into(),
                reason: format!("unknown parameter `{key}`; known: {}", known.join(", ")),
            });
        }
    }
    Ok(())
}

fn get(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

fn get_count(params: &BTreeMap<String, f64>, key: &str, default: usize) -> Result<usize> {
    let v = params.get(key).copied().unwrap_or(default as f64);
    let r = v.round();
    if (v - r).abs() > 1e-9 || r < 1.0 {
        return Err(Error::InvalidModel {
            component: "params".into(),
            reason: format!("parameter `{key}` must be a positive integer, got {v}"),
        });
    }
    Ok(r as usize)
}

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

fn normal_pdf(d: f64, sigma: f64) -> f64 {
    (-d * d / (2.0 * sigma * sigma)).exp() / (sigma * SQRT_2PI)
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// erf via the Abramowitz-Stegun 7.1.26 rational approximation
/// (absolute error below 1.5e-7, monotone, odd).
fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.327_591_1 * x);
    let poly = t
        * (0.254_829_592
            + t * (-0.284_496_736 + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
    sign * (1.0 - poly * (-x * x).exp())
}

/// Mass a Gaussian N(mean, sigma^2) puts on [lo, hi].
fn trunc_mass(mean: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    normal_cdf((hi - mean) / sigma) - normal_cdf((lo - mean) / sigma)
}

/// Rejection sampler for a Gaussian conditioned on [lo, hi].
fn sample_trunc_normal(
    mean: f64,
    sigma: f64,
    lo: f64,
    hi: f64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> f64 {
    use rand::Rng;
    use rand_distr::{Distribution, Normal};
    let normal = Normal::new(mean, sigma).expect("sigma > 0");
    for _ in 0..10_000 {
        let d: f64 = normal.sample(rng);
        if d >= lo && d <= hi {
            return d;
        }
    }
    // Practically unreachable for means inside the box; keep the rollout
    // alive rather than spinning.
    let d: f64 = normal.sample(rng);
    let _ = rng.random::<f64>();
    d.clamp(lo, hi)
}

fn linear_gaussian(
    name: &str,
    params: &BTreeMap<String, f64>,
    default_obs_sigma: f64,
    noninformative: bool,
) -> Result<Pomdp> {
    check_keys(
        params,
        &[
            "a",
            "process_sigma",
            "obs_sigma",
            "halfwidth",
            "n_actions",
            "action_span",
            "discount",
            "cost_action_weight",
        ],
    )?;
    let a = get(params, "a", 0.5);
    let sigma_w = get(params, "process_sigma", 0.1);
    let sigma_v = get(params, "obs_sigma", default_obs_sigma);
    let h = get(params, "halfwidth", 1.0);
    let n_actions = get_count(params, "n_actions", 3)?;
    let span = get(params, "action_span", 0.5);
    let discount = get(params, "discount", 0.8);
    let theta = get(params, "cost_action_weight", 0.1);
    if sigma_w <= 0.0 || sigma_v <= 0.0 || h <= 0.0 || span < 0.0 {
        return Err(Error::InvalidModel {
            component: "params".into(),
            reason: "sigmas and halfwidth must be positive, action_span nonnegative".into(),
        });
    }

    let state_box = DomainBox::new(vec![-h], vec![h])?;
    let obs_box = state_box.clone();
    let vol = 2.0 * h;

    let action_values: Vec<f64> = if n_actions == 1 {
        vec![0.0]
    } else {
        (0..n_actions)
            .map(|i| -span + 2.0 * span * i as f64 / (n_actions - 1) as f64)
            .collect()
    };
    let actions = ActionSet::new(action_values.iter().map(|&v| vec![v]).collect())?;

    let av = action_values.clone();
    let (lo, hi) = (-h, h);
    let transition_sampler = Arc::new(move |x: &[f64], u: usize, rng: &mut _| {
        let mean = a * x[0] + av[u];
        vec![sample_trunc_normal(mean, sigma_w, lo, hi, rng)]
    });
    let av_d = action_values.clone();
    let transition_density = Arc::new(move |x2: &[f64], x: &[f64], u: usize| {
        let mean = a * x[0] + av_d[u];
        if x2[0] < lo || x2[0] > hi {
            return 0.0;
        }
        normal_pdf(x2[0] - mean, sigma_w) / trunc_mass(mean, sigma_w, lo, hi)
    });

    // Worst-case truncation mass occurs with the mean at a box edge.
    let z_min = trunc_mass(h, sigma_v, lo, hi);
    let channel: ObservationChannel = if noninformative {
        let ob = obs_box.clone();
        let ob2 = obs_box.clone();
        ObservationChannel {
            density: Arc::new(|_x, _y| 1.0),
            sampler: Arc::new(move |_x, rng| ob.sample_uniform(rng)),
            lambda_sampler: Arc::new(move |rng| ob2.sample_uniform(rng)),
            lipschitz_y: 0.0,
            tv_lipschitz_x: 0.0,
            lower_bound: Some(1.0),
        }
    } else {
        let density = Arc::new(move |x: &[f64], y: &[f64]| {
            if y[0] < lo || y[0] > hi {
                return 0.0;
            }
            vol * normal_pdf(y[0] - x[0], sigma_v) / trunc_mass(x[0], sigma_v, lo, hi)
        });
        let sampler = Arc::new(move |x: &[f64], rng: &mut _| {
            vec![sample_trunc_normal(x[0], sigma_v, lo, hi, rng)]
        });
        let ob2 = obs_box.clone();
        // max |d g / d y| = vol * max|phi'| / Z_min, with max|phi'| at the
        // inflection point of the Gaussian.
        let max_slope = (-0.5f64).exp() / (SQRT_2PI * sigma_v * sigma_v);
        let alpha_y = vol * max_slope / z_min;
        let k_o = (1.0 / (sigma_v * SQRT_2PI)) * (1.0 / z_min + 0.5 / (z_min * z_min));
        ObservationChannel {
            density,
            sampler,
            lambda_sampler: Arc::new(move |rng| ob2.sample_uniform(rng)),
            lipschitz_y: alpha_y,
            tv_lipschitz_x: k_o,
            lower_bound: None,
        }
    };

    let c_norm = h * h + theta * span * span;
    let av_c = action_values.clone();
    let cost = CostFunction {
        eval: Arc::new(move |x: &[f64], u: usize| {
            (x[0] * x[0] + theta * av_c[u] * av_c[u]) / c_norm
        }),
        sup_norm: 1.0,
        lipschitz: 2.0 * h / c_norm,
    };

    let sb = state_box.clone();
    let prior = Prior {
        sampler: Arc::new(move |rng| sb.sample_uniform(rng)),
        density: Some(Arc::new(move |x: &[f64]| {
            if x[0] >= lo && x[0] <= hi {
                1.0 / vol
            } else {
                0.0
            }
        })),
    };

    Ok(Pomdp {
        name: name.into(),
        state_box,
        obs_box,
        actions,
        transition: TransitionKernel {
            sampler: transition_sampler,
            density: Some(transition_density),
            lipschitz_w1: a.abs(),
            mixing: None,
        },
        channel,
        cost,
        discount,
        prior,
        finite_support: None,
    })
}

fn finite_toy(params: &BTreeMap<String, f64>) -> Result<Pomdp> {
    check_keys(
        params,
        &[
            "states",
            "obs",
            "actions",
            "channel_acc",
            "trans_peak",
            "discount",
            "safe_cost",
        ],
    )?;
    let n_x = get_count(params, "states", 2)?;
    let n_y = get_count(params, "obs", 2)?;
    let n_u = get_count(params, "actions", 2)?;
    let acc = get(params, "channel_acc", 0.6);
    let peak = get(params, "trans_peak", 0.2);
    let discount = get(params, "discount", 0.8);
    // safe_cost > 0 turns action 0 into a state-independent fallback with
    // that cost; the remaining actions keep the match-the-state pattern.
    let safe_cost = get(params, "safe_cost", 0.0);
    if !(0.0..=1.0).contains(&acc) || !(0.0..=1.0).contains(&peak) || !(0.0..=1.0).contains(&safe_cost)
    {
        return Err(Error::InvalidModel {
            component: "params".into(),
            reason: "channel_acc, trans_peak, safe_cost must lie in [0,1]".into(),
        });
    }

    let state_box = DomainBox::new(vec![0.0], vec![1.0])?;
    let obs_box = DomainBox::new(vec![0.0], vec![1.0])?;
    let state_grid = Quantizer::uniform(&state_box, &[n_x])?;
    let obs_grid = Quantizer::uniform(&obs_box, &[n_y])?;
    let x_points: Vec<f64> = state_grid.representatives().iter().map(|p| p[0]).collect();
    let y_points: Vec<f64> = obs_grid.representatives().iter().map(|p| p[0]).collect();

    // Action u shifts the state one pattern over; every row mixes with the
    // uniform distribution, which keeps each action's kernel doubly
    // stochastic (uniform invariant measure) and mixing.
    let mut transition = vec![vec![vec![0.0; n_x]; n_x]; n_u];
    for (u, table) in transition.iter_mut().enumerate() {
        for (i, row) in table.iter_mut().enumerate() {
            for (j, p) in row.iter_mut().enumerate() {
                let target = (i + u) % n_x;
                *p = (1.0 - peak) / n_x as f64 + if j == target { peak } else { 0.0 };
            }
        }
    }
    let mut channel_table = vec![vec![0.0; n_y]; n_x];
    for (i, row) in channel_table.iter_mut().enumerate() {
        let bucket = i * n_y / n_x;
        for (j, p) in row.iter_mut().enumerate() {
            *p = (1.0 - acc) / n_y as f64 + if j == bucket { acc } else { 0.0 };
        }
    }

    // Certificates by exhaustive enumeration over support points.
    let mut k_t: f64 = 0.0;
    for table in &transition {
        for i in 0..n_x {
            for j in (i + 1)..n_x {
                let w1 = w1_discrete(&table[i], &table[j], &x_points);
                k_t = k_t.max(w1 / (x_points[j] - x_points[i]).abs());
            }
        }
    }
    let mut k_o: f64 = 0.0;
    for i in 0..n_x {
        for j in (i + 1)..n_x {
            let tv = 0.5
                * channel_table[i]
                    .iter()
                    .zip(&channel_table[j])
                    .map(|(p, q)| (p - q).abs())
                    .sum::<f64>();
            k_o = k_o.max(tv / (x_points[j] - x_points[i]).abs());
        }
    }
    let mut alpha_y: f64 = 0.0;
    for row in &channel_table {
        for j in 0..n_y {
            for j2 in (j + 1)..n_y {
                let diff = n_y as f64 * (row[j] - row[j2]).abs();
                alpha_y = alpha_y.max(diff / (y_points[j2] - y_points[j]).abs());
            }
        }
    }
    let g_min = n_y as f64
        * channel_table
            .iter()
            .flat_map(|r| r.iter())
            .fold(f64::INFINITY, |m, &v| m.min(v));
    let mut mixing = Vec::with_capacity(n_u);
    for table in &transition {
        mixing.push(stability::mixing_constant(table));
    }

    let actions = ActionSet::new((0..n_u).map(|u| vec![(u as f64 + 0.5) / n_u as f64]).collect())?;

    let sg = state_grid.clone();
    let xt = x_points.clone();
    let trans = transition.clone();
    let transition_sampler = Arc::new(move |x: &[f64], u: usize, rng: &mut _| {
        let i = sg.quantize(x).expect("state in box");
        let j = crate::model::sample_weighted(&trans[u][i], rng);
        vec![xt[j]]
    });

    let sg2 = state_grid.clone();
    let yt = y_points.clone();
    let chan = channel_table.clone();
    let channel_sampler = Arc::new(move |x: &[f64], rng: &mut _| {
        let i = sg2.quantize(x).expect("state in box");
        let j = crate::model::sample_weighted(&chan[i], rng);
        vec![yt[j]]
    });
    let sg3 = state_grid.clone();
    let og = obs_grid.clone();
    let chan2 = channel_table.clone();
    // Density with respect to the normalized counting measure on the
    // observation support points, extended piecewise-constant in both args.
    let channel_density = Arc::new(move |x: &[f64], y: &[f64]| {
        let i = sg3.quantize(x).expect("state in box");
        let j = og.quantize(y).expect("obs in box");
        n_y as f64 * chan2[i][j]
    });
    let yt2 = y_points.clone();
    let lambda_sampler = Arc::new(move |rng: &mut rand_chacha::ChaCha8Rng| {
        use rand::Rng;
        vec![yt2[rng.random_range(0..n_y)]]
    });

    let mut cost_table = vec![vec![0.0f64; n_u]; n_x];
    for (i, row) in cost_table.iter_mut().enumerate() {
        for (u, c) in row.iter_mut().enumerate() {
            *c = if safe_cost > 0.0 && u == 0 {
                safe_cost
            } else if i % n_u == u {
                0.0
            } else {
                1.0
            };
        }
    }
    let sg4 = state_grid.clone();
    let ct = cost_table.clone();
    let cost_eval = Arc::new(move |x: &[f64], u: usize| {
        let i = sg4.quantize(x).expect("state in box");
        ct[i][u]
    });
    let mut k_c: f64 = 0.0;
    for u in 0..n_u {
        for i in 0..n_x {
            for j in (i + 1)..n_x {
                let d = (cost_table[i][u] - cost_table[j][u]).abs();
                k_c = k_c.max(d / (x_points[j] - x_points[i]).abs());
            }
        }
    }

    let xt2 = x_points.clone();
    let prior_weights = vec![1.0 / n_x as f64; n_x];
    let pw = prior_weights.clone();
    let prior_sampler = Arc::new(move |rng: &mut rand_chacha::ChaCha8Rng| {
        let i = crate::model::sample_weighted(&pw, rng);
        vec![xt2[i]]
    });

    Ok(Pomdp {
        name: "finite-toy".into(),
        state_box,
        obs_box,
        actions,
        transition: TransitionKernel {
            sampler: transition_sampler,
            density: None,
            lipschitz_w1: k_t,
            mixing: Some(mixing),
        },
        channel: ObservationChannel {
            density: channel_density,
            sampler: channel_sampler,
            lambda_sampler,
            lipschitz_y: alpha_y,
            tv_lipschitz_x: k_o,
            lower_bound: Some(g_min),
        },
        cost: CostFunction {
            eval: cost_eval,
            sup_norm: 1.0,
            lipschitz: k_c,
        },
        discount,
        prior: Prior {
            sampler: prior_sampler,
            density: None,
        },
        finite_support: Some(FiniteSupport {
            state_grid,
            obs_grid,
            transition,
            channel: channel_table,
            prior: prior_weights,
        }),
    })
}

/// Exact W1 distance between two distributions on common 1-D support points.
fn w1_discrete(p: &[f64], q: &[f64], points: &[f64]) -> f64 {
    let mut cdf_gap = 0.0;
    let mut w1 = 0.0;
    for k in 0..points.len() - 1 {
        cdf_gap += p[k] - q[k];
        w1 += cdf_gap.abs() * (points[k + 1] - points[k]);
    }
    w1
}
