//! Finite surrogate models and the discrete Bayes filter.
//!
//! [`build_hidden_model`] averages the true kernels over hidden-state
//! quantization cells (uniform weighting measure per cell) and aggregates the
//! channel over observation cells, producing a [`FiniteHmm`] with stochastic
//! tables T, O and a cost table c. Models that carry a finite-support
//! description are built by exact integration; everything else is estimated
//! by seeded Monte Carlo, parallel over cells with per-cell seed streams.
//!
//! The filter recursion on the surrogate is the usual predict/correct pair;
//! a one-step likelihood below 1e-300 is treated as degenerate evidence and
//! the update returns the prediction with likelihood 0, so the fallback is
//! explicit and testable.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::Pomdp;
use crate::quantize::Quantizer;
use crate::seeds;

/// Probability vector over the hidden grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief(Vec<f64>);

impl Belief {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidDistribution("empty belief".into()));
        }
        let mut sum = 0.0;
        for &v in &p {
            if !(v >= -1e-9) {
                return Err(Error::InvalidDistribution(format!(
                    "belief coordinate {v} is negative or NaN"
                )));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "belief sums to {sum}, expected 1"
            )));
        }
        Ok(Self(p))
    }

    pub(crate) fn from_unchecked(p: Vec<f64>) -> Self {
        Self(p)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, i: usize) -> Self {
        let mut p = vec![0.0; n];
        p[i] = 1.0;
        Self(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Build provenance of a surrogate model.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildMeta {
    pub n_samples: usize,
    pub seed: u64,
    /// True when the tables came from exact integration of a finite-support
    /// model rather than Monte Carlo.
    pub exact: bool,
}

/// Finite surrogate of a continuous POMDP.
#[derive(Debug, Clone)]
pub struct FiniteHmm {
    pub n_states: usize,
    pub n_obs: usize,
    pub n_actions: usize,
    /// transition[u][i][j] = T(j | i, u); every row is stochastic.
    pub transition: Vec<Vec<Vec<f64>>>,
    /// channel[i][j] = O(j | i); every row is stochastic.
    pub channel: Vec<Vec<f64>>,
    /// cost[i][u], bounded by `cost_sup`.
    pub cost: Vec<Vec<f64>>,
    pub cost_sup: f64,
    pub discount: f64,
    /// Discretized prior over the hidden grid.
    pub prior: Vec<f64>,
    pub quantizer_x: Quantizer,
    pub quantizer_y: Quantizer,
    pub meta: BuildMeta,
}

impl FiniteHmm {
    /// Row-stochasticity check used by tests and loaders.
    pub fn check(&self) -> Result<()> {
        let check_row = |row: &[f64], what: &str| -> Result<()> {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidDistribution(format!(
                    "{what} row sums to {sum} or has negative mass"
                )));
            }
            Ok(())
        };
        for (u, table) in self.transition.iter().enumerate() {
            for (i, row) in table.iter().enumerate() {
                check_row(row, &format!("transition[{u}][{i}]"))?;
            }
        }
        for (i, row) in self.channel.iter().enumerate() {
            check_row(row, &format!("channel[{i}]"))?;
        }
        check_row(&self.prior, "prior")?;
        for row in &self.cost {
            for &c in row {
                if c.abs() > self.cost_sup + 1e-12 {
                    return Err(Error::InvalidDistribution(format!(
                        "cost {c} exceeds declared sup {}",
                        self.cost_sup
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn prior_belief(&self) -> Belief {
        Belief::from_unchecked(self.prior.clone())
    }
}

const BIN_TAG_BASE: u64 = 0xD15C_0000;
const PRIOR_TAG: u64 = 0xD15C_FFFF;
const CHANNEL_TAG: u64 = 0xD15C_FFFE;

/// Likelihoods below this are treated as degenerate evidence.
pub const LIKELIHOOD_FLOOR: f64 = 1e-300;

/// Build the finite surrogate model.
///
/// Hidden cells come from `qx`; observations are aggregated with `qy`. When
/// `qy` is `None` the model must already have a finite observation space (a
/// finite-support description), whose channel is copied exactly.
///
/// For each hidden cell the weighting measure is uniform on the cell: cell
/// kernels are cell-averages of the true kernels, estimated with `n_samples`
/// draws per cell (one transition draw per action and one observation draw
/// per hidden sample), or integrated exactly for finite-support models.
pub fn build_hidden_model(
    pomdp: &Pomdp,
    qx: &Quantizer,
    qy: Option<&Quantizer>,
    n_samples: usize,
    seed: u64,
) -> Result<FiniteHmm> {
    pomdp.check()?;
    if n_samples == 0 {
        return Err(Error::Precondition("n_samples must be >= 1".into()));
    }
    if let Some(fs) = &pomdp.finite_support {
        return build_exact(pomdp, fs, qx, qy, n_samples, seed);
    }
    let qy = qy.ok_or_else(|| {
        Error::Precondition(
            "observation quantizer required: the model has a continuous observation space".into(),
        )
    })?;
    build_monte_carlo(pomdp, qx, qy, n_samples, seed)
}

fn build_monte_carlo(
    pomdp: &Pomdp,
    qx: &Quantizer,
    qy: &Quantizer,
    n_samples: usize,
    seed: u64,
) -> Result<FiniteHmm> {
    let n_x = qx.n_bins();
    let n_y = qy.n_bins();
    let n_u = pomdp.n_actions();

    struct BinResult {
        t_rows: Vec<Vec<f64>>,
        o_row: Vec<f64>,
        c_row: Vec<f64>,
    }

    let results: Vec<Result<BinResult>> = (0..n_x)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeds::rng_from(seed, BIN_TAG_BASE + i as u64);
            let mut t_counts = vec![vec![0u64; n_x]; n_u];
            let mut o_counts = vec![0u64; n_y];
            let mut c_sums = vec![0.0f64; n_u];
            for _ in 0..n_samples {
                let z = qx.sample_in_bin(i, &mut rng);
                for (u, counts) in t_counts.iter_mut().enumerate() {
                    let x2 = (pomdp.transition.sampler)(&z, u, &mut rng);
                    counts[qx.quantize(&x2)?] += 1;
                    c_sums[u] += (pomdp.cost.eval)(&z, u);
                }
                let y = (pomdp.channel.sampler)(&z, &mut rng);
                o_counts[qy.quantize(&y)?] += 1;
            }
            let norm = n_samples as f64;
            let t_rows: Vec<Vec<f64>> = t_counts
                .iter()
                .map(|counts| counts.iter().map(|&c| c as f64 / norm).collect())
                .collect();
            for row in &t_rows {
                if row.iter().sum::<f64>() <= 0.0 {
                    return Err(Error::EmptyBin { bin: i });
                }
            }
            Ok(BinResult {
                t_rows,
                o_row: o_counts.iter().map(|&c| c as f64 / norm).collect(),
                c_row: c_sums.iter().map(|s| s / norm).collect(),
            })
        })
        .collect();

    let mut transition = vec![vec![Vec::new(); n_x]; n_u];
    let mut channel = Vec::with_capacity(n_x);
    let mut cost = Vec::with_capacity(n_x);
    for (i, r) in results.into_iter().enumerate() {
        let r = r?;
        for (u, row) in r.t_rows.into_iter().enumerate() {
            transition[u][i] = row;
        }
        channel.push(r.o_row);
        cost.push(r.c_row);
    }

    // A channel that is constant in x (declared K_O = 0) equals its own
    // cell average, so one shared estimate replaces the per-cell rows. This
    // keeps the rows literally identical, as the degenerate channel is.
    if pomdp.channel.tv_lipschitz_x == 0.0 {
        let mut rng = seeds::rng_from(seed, CHANNEL_TAG);
        let mut counts = vec![0u64; n_y];
        for _ in 0..n_samples {
            let z = pomdp.state_box.sample_uniform(&mut rng);
            let y = (pomdp.channel.sampler)(&z, &mut rng);
            counts[qy.quantize(&y)?] += 1;
        }
        let row: Vec<f64> = counts
            .iter()
            .map(|&c| c as f64 / n_samples as f64)
            .collect();
        channel = vec![row; n_x];
    }

    // Discretized prior from its own seed stream.
    let mut rng = seeds::rng_from(seed, PRIOR_TAG);
    let mut prior_counts = vec![0u64; n_x];
    for _ in 0..n_samples {
        let x0 = (pomdp.prior.sampler)(&mut rng);
        prior_counts[qx.quantize(&x0)?] += 1;
    }
    let prior: Vec<f64> = prior_counts
        .iter()
        .map(|&c| c as f64 / n_samples as f64)
        .collect();

    let hmm = FiniteHmm {
        n_states: n_x,
        n_obs: n_y,
        n_actions: n_u,
        transition,
        channel,
        cost,
        cost_sup: pomdp.cost.sup_norm,
        discount: pomdp.discount,
        prior,
        quantizer_x: qx.clone(),
        quantizer_y: qy.clone(),
        meta: BuildMeta {
            n_samples,
            seed,
            exact: false,
        },
    };
    hmm.check()?;
    Ok(hmm)
}

/// Volume fraction of each quantizer cell covered by each natural cell.
fn overlap_weights(qx: &Quantizer, natural: &Quantizer) -> Result<Vec<Vec<(usize, f64)>>> {
    let mut weights = Vec::with_capacity(qx.n_bins());
    for i in 0..qx.n_bins() {
        let (lo_a, hi_a) = qx.bin_bounds(i);
        let vol_a: f64 = lo_a.iter().zip(&hi_a).map(|(l, h)| h - l).product();
        let mut row = Vec::new();
        for k in 0..natural.n_bins() {
            let (lo_c, hi_c) = natural.bin_bounds(k);
            let mut overlap = 1.0;
            for d in 0..lo_a.len() {
                let len = (hi_a[d].min(hi_c[d]) - lo_a[d].max(lo_c[d])).max(0.0);
                overlap *= len;
            }
            if overlap > 0.0 {
                row.push((k, overlap / vol_a));
            }
        }
        if row.is_empty() {
            return Err(Error::EmptyBin { bin: i });
        }
        weights.push(row);
    }
    Ok(weights)
}

fn build_exact(
    pomdp: &Pomdp,
    fs: &crate::model::FiniteSupport,
    qx: &Quantizer,
    qy: Option<&Quantizer>,
    n_samples: usize,
    seed: u64,
) -> Result<FiniteHmm> {
    let n_x = qx.n_bins();
    let n_u = pomdp.n_actions();
    let weights = overlap_weights(qx, &fs.state_grid)?;
    let x_support = fs.state_grid.representatives();
    let y_support = fs.obs_grid.representatives();

    // Where each support point lands under the target quantizers.
    let x_map: Vec<usize> = x_support
        .iter()
        .map(|p| qx.quantize(p))
        .collect::<Result<_>>()?;
    let (n_y, y_map): (usize, Vec<usize>) = match qy {
        Some(q) => (
            q.n_bins(),
            y_support
                .iter()
                .map(|p| q.quantize(p))
                .collect::<Result<_>>()?,
        ),
        None => (fs.obs_grid.n_bins(), (0..fs.obs_grid.n_bins()).collect()),
    };

    let mut transition = vec![vec![vec![0.0; n_x]; n_x]; n_u];
    let mut channel = vec![vec![0.0; n_y]; n_x];
    let mut cost = vec![vec![0.0; n_u]; n_x];
    for i in 0..n_x {
        for &(k, w) in &weights[i] {
            for (u, table) in fs.transition.iter().enumerate() {
                for (kp, &p) in table[k].iter().enumerate() {
                    transition[u][i][x_map[kp]] += w * p;
                }
                cost[i][u] += w * (pomdp.cost.eval)(&x_support[k], u);
            }
            for (j, &p) in fs.channel[k].iter().enumerate() {
                channel[i][y_map[j]] += w * p;
            }
        }
    }
    let mut prior = vec![0.0; n_x];
    for (k, &p) in fs.prior.iter().enumerate() {
        prior[x_map[k]] += p;
    }

    let quantizer_y = match qy {
        Some(q) => q.clone(),
        None => fs.obs_grid.clone(),
    };
    let hmm = FiniteHmm {
        n_states: n_x,
        n_obs: n_y,
        n_actions: n_u,
        transition,
        channel,
        cost,
        cost_sup: pomdp.cost.sup_norm,
        discount: pomdp.discount,
        prior,
        quantizer_x: qx.clone(),
        quantizer_y,
        meta: BuildMeta {
            n_samples,
            seed,
            exact: true,
        },
    };
    hmm.check()?;
    Ok(hmm)
}

/// Prediction step: push a belief through the transition table of action u.
pub fn predictor_update(hmm: &FiniteHmm, belief: &Belief, u: usize) -> Result<Belief> {
    if u >= hmm.n_actions {
        return Err(Error::IndexOutOfRange(format!(
            "action {u} out of range {}",
            hmm.n_actions
        )));
    }
    if belief.len() != hmm.n_states {
        return Err(Error::DimensionMismatch("belief length".into()));
    }
    let mut pred = vec![0.0; hmm.n_states];
    for (i, &b) in belief.probs().iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        for (j, &p) in hmm.transition[u][i].iter().enumerate() {
            pred[j] += b * p;
        }
    }
    Ok(Belief::from_unchecked(pred))
}

/// Measurement step: weight a belief by the likelihood of observation y and
/// renormalize. Returns the posterior and the one-step likelihood. Evidence
/// below [`LIKELIHOOD_FLOOR`] returns the input belief with likelihood 0.
pub fn bayes_correct(hmm: &FiniteHmm, belief: &Belief, y: usize) -> Result<(Belief, f64)> {
    if y >= hmm.n_obs {
        return Err(Error::IndexOutOfRange(format!(
            "observation {y} out of range {}",
            hmm.n_obs
        )));
    }
    if belief.len() != hmm.n_states {
        return Err(Error::DimensionMismatch("belief length".into()));
    }
    let mut weighted = vec![0.0; hmm.n_states];
    let mut lik = 0.0;
    for (j, &b) in belief.probs().iter().enumerate() {
        let w = hmm.channel[j][y] * b;
        weighted[j] = w;
        lik += w;
    }
    if lik < LIKELIHOOD_FLOOR {
        return Ok((belief.clone(), 0.0));
    }
    for w in &mut weighted {
        *w /= lik;
    }
    Ok((Belief::from_unchecked(weighted), lik))
}

/// Full filter step: predict with action u, then correct with observation y.
pub fn filter_update(hmm: &FiniteHmm, belief: &Belief, u: usize, y: usize) -> Result<(Belief, f64)> {
    let pred = predictor_update(hmm, belief, u)?;
    bayes_correct(hmm, &pred, y)
}

/// Monte Carlo estimate of the cell-averaged channel density at (cell, y).
pub fn averaged_channel_density(
    pomdp: &Pomdp,
    qx: &Quantizer,
    bin: usize,
    y: &[f64],
    n_samples: usize,
    seed: u64,
) -> f64 {
    let mut rng = seeds::rng_from(seed, 0xA0 + bin as u64);
    let mut sum = 0.0;
    for _ in 0..n_samples {
        let z = qx.sample_in_bin(bin, &mut rng);
        sum += (pomdp.channel.density)(&z, y);
    }
    sum / n_samples as f64
}

/// Monte Carlo estimate of the aggregated (degraded) channel row O(B_j | x)
/// for a fixed continuous state, without averaging over a hidden cell.
pub fn degraded_channel_row(
    pomdp: &Pomdp,
    qy: &Quantizer,
    x: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = seeds::rng_from(seed, 0xDE);
    let mut counts = vec![0u64; qy.n_bins()];
    for _ in 0..n_samples {
        let y = (pomdp.channel.sampler)(x, &mut rng);
        counts[qy.quantize(&y)?] += 1;
    }
    Ok(counts
        .iter()
        .map(|&c| c as f64 / n_samples as f64)
        .collect())
}

/// Empirical Wasserstein-1 distance between two 1-D samples (sorted-match
/// estimator). Used as an independent oracle for kernel-approximation checks.
pub fn w1_empirical_1d(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    // Evaluate integral |F_a - F_b| on the merged grid.
    let mut w1 = 0.0;
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut prev = f64::NEG_INFINITY;
    while ia < a.len() || ib < b.len() {
        let next = match (a.get(ia), b.get(ib)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        if prev.is_finite() && next > prev {
            let fa = ia as f64 / a.len() as f64;
            let fb = ib as f64 / b.len() as f64;
            w1 += (fa - fb).abs() * (next - prev);
        }
        while ia < a.len() && a[ia] <= next {
            ia += 1;
        }
        while ib < b.len() && b[ib] <= next {
            ib += 1;
        }
        prev = next;
    }
    w1
}

// ---------------------------------------------------------------------------
// Flat CSV dump (documented in README): one record per line,
//   dims,<n_states>,<n_obs>,<n_actions>
//   meta,<n_samples>,<seed>,<exact>,<cost_sup>,<discount>
//   xq,<dim>,<lo...>,<hi...>,<bins...>      (one line per quantizer)
//   prior,<p...>
//   T,<u>,<i>,<row...>        row-major over (u, i)
//   O,<i>,<row...>
//   c,<i>,<costs per action...>
// Floats use Rust's shortest round-trip formatting, so load(save(h)) == h.
// ---------------------------------------------------------------------------

fn write_quantizer(w: &mut impl Write, tag: &str, q: &Quantizer) -> std::io::Result<()> {
    write!(w, "{tag},{}", q.dim())?;
    for v in &q.domain().lower {
        write!(w, ",{v}")?;
    }
    for v in &q.domain().upper {
        write!(w, ",{v}")?;
    }
    for b in q.bins_per_dim() {
        write!(w, ",{b}")?;
    }
    writeln!(w)
}

impl FiniteHmm {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        writeln!(w, "dims,{},{},{}", self.n_states, self.n_obs, self.n_actions)?;
        writeln!(
            w,
            "meta,{},{},{},{},{}",
            self.meta.n_samples, self.meta.seed, self.meta.exact as u8, self.cost_sup, self.discount
        )?;
        write_quantizer(&mut w, "xq", &self.quantizer_x)?;
        write_quantizer(&mut w, "yq", &self.quantizer_y)?;
        write!(w, "prior")?;
        for p in &self.prior {
            write!(w, ",{p}")?;
        }
        writeln!(w)?;
        for (u, table) in self.transition.iter().enumerate() {
            for (i, row) in table.iter().enumerate() {
                write!(w, "T,{u},{i}")?;
                for p in row {
                    write!(w, ",{p}")?;
                }
                writeln!(w)?;
            }
        }
        for (i, row) in self.channel.iter().enumerate() {
            write!(w, "O,{i}")?;
            for p in row {
                write!(w, ",{p}")?;
            }
            writeln!(w)?;
        }
        for (i, row) in self.cost.iter().enumerate() {
            write!(w, "c,{i}")?;
            for p in row {
                write!(w, ",{p}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let reader = std::io::BufReader::new(file);
        let mut lines = reader.lines();

        let parse_err = |msg: &str| Error::Parse(format!("hmm csv: {msg}"));
        let mut next_fields = |expect: &str| -> Result<Vec<String>> {
            let line = lines
                .next()
                .ok_or_else(|| parse_err(&format!("missing `{expect}` record")))?
                .map_err(Error::Io)?;
            let fields: Vec<String> = line.split(',').map(|s| s.to_string()).collect();
            if fields.first().map(String::as_str) != Some(expect) {
                return Err(parse_err(&format!("expected `{expect}`, got `{line}`")));
            }
            Ok(fields)
        };
        let f64_of = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad float `{s}`")))
        };

        let dims = next_fields("dims")?;
        let n_states: usize = dims[1].parse().map_err(|_| parse_err("dims"))?;
        let n_obs: usize = dims[2].parse().map_err(|_| parse_err("dims"))?;
        let n_actions: usize = dims[3].parse().map_err(|_| parse_err("dims"))?;

        let meta = next_fields("meta")?;
        let build_meta = BuildMeta {
            n_samples: meta[1].parse().map_err(|_| parse_err("meta"))?,
            seed: meta[2].parse().map_err(|_| parse_err("meta"))?,
            exact: meta[3] == "1",
        };
        let cost_sup = f64_of(&meta[4])?;
        let discount = f64_of(&meta[5])?;

        let mut read_quantizer = |tag: &str| -> Result<Quantizer> {
            let f = next_fields(tag)?;
            let dim: usize = f[1].parse().map_err(|_| parse_err(tag))?;
            let lower: Vec<f64> = f[2..2 + dim].iter().map(|s| f64_of(s)).collect::<Result<_>>()?;
            let upper: Vec<f64> = f[2 + dim..2 + 2 * dim]
                .iter()
                .map(|s| f64_of(s))
                .collect::<Result<_>>()?;
            let bins: Vec<usize> = f[2 + 2 * dim..2 + 3 * dim]
                .iter()
                .map(|s| s.parse().map_err(|_| parse_err(tag)))
                .collect::<Result<_>>()?;
            Quantizer::uniform(&crate::model::DomainBox::new(lower, upper)?, &bins)
        };
        let quantizer_x = read_quantizer("xq")?;
        let quantizer_y = read_quantizer("yq")?;

        let prior_fields = next_fields("prior")?;
        let prior: Vec<f64> = prior_fields[1..]
            .iter()
            .map(|s| f64_of(s))
            .collect::<Result<_>>()?;

        let mut transition = vec![vec![vec![0.0; n_states]; n_states]; n_actions];
        for _ in 0..n_actions * n_states {
            let f = next_fields("T")?;
            let u: usize = f[1].parse().map_err(|_| parse_err("T"))?;
            let i: usize = f[2].parse().map_err(|_| parse_err("T"))?;
            transition[u][i] = f[3..].iter().map(|s| f64_of(s)).collect::<Result<_>>()?;
        }
        let mut channel = vec![vec![0.0; n_obs]; n_states];
        for _ in 0..n_states {
            let f = next_fields("O")?;
            let i: usize = f[1].parse().map_err(|_| parse_err("O"))?;
            channel[i] = f[2..].iter().map(|s| f64_of(s)).collect::<Result<_>>()?;
        }
        let mut cost = vec![vec![0.0; n_actions]; n_states];
        for _ in 0..n_states {
            let f = next_fields("c")?;
            let i: usize = f[1].parse().map_err(|_| parse_err("c"))?;
            cost[i] = f[2..].iter().map(|s| f64_of(s)).collect::<Result<_>>()?;
        }

        let hmm = FiniteHmm {
            n_states,
            n_obs,
            n_actions,
            transition,
            channel,
            cost,
            cost_sup,
            discount,
            prior,
            quantizer_x,
            quantizer_y,
            meta: build_meta,
        };
        hmm.check()?;
        Ok(hmm)
    }
}

/// Hand-assembled surrogate for tests and stability experiments.
#[allow(clippy::too_many_arguments)]
pub fn hmm_from_tables(
    transition: Vec<Vec<Vec<f64>>>,
    channel: Vec<Vec<f64>>,
    cost: Vec<Vec<f64>>,
    prior: Vec<f64>,
    cost_sup: f64,
    discount: f64,
) -> Result<FiniteHmm> {
    let n_actions = transition.len();
    let n_states = channel.len();
    let n_obs = channel[0].len();
    let unit = crate::model::DomainBox::new(vec![0.0], vec![1.0])?;
    let hmm = FiniteHmm {
        n_states,
        n_obs,
        n_actions,
        transition,
        channel,
        cost,
        cost_sup,
        discount,
        prior,
        quantizer_x: Quantizer::uniform(&unit, &[n_states])?,
        quantizer_y: Quantizer::uniform(&unit, &[n_obs])?,
        meta: BuildMeta {
            n_samples: 0,
            seed: 0,
            exact: true,
        },
    };
    hmm.check()?;
    Ok(hmm)
}
