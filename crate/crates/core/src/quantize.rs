//! Quantizers for the hidden-state box, the observation box, and the belief
//! simplex.
//!
//! A [`Quantizer`] partitions an axis-aligned box into a uniform grid of
//! cells, maps points to cell indices, and exposes the maximum cell diameter
//! `L` that the approximation bounds are stated in. A [`SimplexGrid`] is the
//! lattice of probability vectors with coordinates k/m, used to quantize
//! beliefs.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::DomainBox;

/// Uniform grid quantizer over an axis-aligned box.
///
/// Cells partition the box; cell i along a dimension is the half-open
/// interval `(lo + i*w, lo + (i+1)*w]` except cell 0, which also contains the
/// lower face. Points exactly on a shared boundary therefore resolve to the
/// lower-index cell, and points outside the box are clamped to the nearest
/// face before quantization.
#[derive(Debug, Clone)]
pub struct Quantizer {
    domain: DomainBox,
    bins_per_dim: Vec<usize>,
    widths: Vec<f64>,
    diameter: f64,
}

impl Quantizer {
    /// Axis-aligned uniform grid with the given number of bins per dimension.
    pub fn uniform(domain: &DomainBox, bins_per_dim: &[usize]) -> Result<Self> {
        if bins_per_dim.len() != domain.dim() {
            return Err(Error::DimensionMismatch(format!(
                "box has {} dimensions, bins_per_dim has {}",
                domain.dim(),
                bins_per_dim.len()
            )));
        }
        if bins_per_dim.iter().any(|&b| b == 0) {
            return Err(Error::InvalidQuantizer(
                "bins_per_dim entries must be >= 1".into(),
            ));
        }
        let widths: Vec<f64> = (0..domain.dim())
            .map(|d| {
                let w = (domain.upper[d] - domain.lower[d]) / bins_per_dim[d] as f64;
                if !(w > 0.0) {
                    return Err(Error::InvalidQuantizer(format!(
                        "zero-volume box along dimension {d}"
                    )));
                }
                Ok(w)
            })
            .collect::<Result<_>>()?;
        let diameter = widths.iter().map(|w| w * w).sum::<f64>().sqrt();
        Ok(Self {
            domain: domain.clone(),
            bins_per_dim: bins_per_dim.to_vec(),
            widths,
            diameter,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn bins_per_dim(&self) -> &[usize] {
        &self.bins_per_dim
    }

    /// Total number of cells.
    pub fn n_bins(&self) -> usize {
        self.bins_per_dim.iter().product()
    }

    /// Maximum cell diameter (Euclidean); the grid's `L` constant.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Map a point to its cell index. Clamps out-of-box points to the nearest
    /// face first; ties on shared cell boundaries resolve to the lower index.
    pub fn quantize(&self, point: &[f64]) -> Result<usize> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, quantizer expects {}",
                point.len(),
                self.dim()
            )));
        }
        let mut flat = 0usize;
        for d in 0..self.dim() {
            let x = point[d];
            if x.is_nan() {
                return Err(Error::NanCoordinate);
            }
            let lo = self.domain.lower[d];
            let hi = self.domain.upper[d];
            let x = x.clamp(lo, hi);
            let b = self.bins_per_dim[d];
            let idx = if x <= lo {
                0
            } else {
                // ceil(r) - 1 puts exact boundaries into the lower cell.
                let r = (x - lo) / self.widths[d];
                (r.ceil() as usize).saturating_sub(1).min(b - 1)
            };
            flat = flat * b + idx;
        }
        Ok(flat)
    }

    fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0usize; self.dim()];
        for d in (0..self.dim()).rev() {
            idx[d] = flat % self.bins_per_dim[d];
            flat /= self.bins_per_dim[d];
        }
        idx
    }

    /// Cell center.
    pub fn representative(&self, bin: usize) -> Vec<f64> {
        let idx = self.multi_index(bin);
        (0..self.dim())
            .map(|d| self.domain.lower[d] + (idx[d] as f64 + 0.5) * self.widths[d])
            .collect()
    }

    /// All cell centers in flat-index order.
    pub fn representatives(&self) -> Vec<Vec<f64>> {
        (0..self.n_bins()).map(|i| self.representative(i)).collect()
    }

    /// Lower and upper corners of a cell.
    pub fn bin_bounds(&self, bin: usize) -> (Vec<f64>, Vec<f64>) {
        let idx = self.multi_index(bin);
        let lo = (0..self.dim())
            .map(|d| self.domain.lower[d] + idx[d] as f64 * self.widths[d])
            .collect();
        let hi = (0..self.dim())
            .map(|d| self.domain.lower[d] + (idx[d] as f64 + 1.0) * self.widths[d])
            .collect();
        (lo, hi)
    }

    /// Uniform sample from the interior of a cell.
    pub fn sample_in_bin(&self, bin: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        use rand::Rng;
        let (lo, hi) = self.bin_bounds(bin);
        lo.iter()
            .zip(hi.iter())
            .map(|(&a, &b)| rng.random_range(a..b))
            .collect()
    }
}

/// Lattice of probability vectors over `n` points with coordinates k/m.
///
/// Grid points are ordered lexicographically by their coordinate vectors;
/// that order defines the grid index returned by [`SimplexGrid::nearest`].
#[derive(Debug, Clone)]
pub struct SimplexGrid {
    n: usize,
    m: u32,
}

/// Tolerances for belief validation at the projection boundary.
const BELIEF_NEG_TOL: f64 = 1e-9;
const BELIEF_SUM_TOL: f64 = 1e-6;

impl SimplexGrid {
    pub fn new(n: usize, m: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidQuantizer(
                "simplex grid needs at least one coordinate".into(),
            ));
        }
        if m == 0 {
            return Err(Error::InvalidQuantizer(
                "simplex grid resolution must be >= 1".into(),
            ));
        }
        Ok(Self { n, m })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn resolution(&self) -> u32 {
        self.m
    }

    /// Number of grid points: C(m + n - 1, n - 1).
    pub fn size(&self) -> u128 {
        binomial(self.m as u128 + self.n as u128 - 1, self.n as u128 - 1)
    }

    /// All grid points in lexicographic order. Errors if the grid is too
    /// large to enumerate.
    pub fn points(&self) -> Result<Vec<Vec<f64>>> {
        const ENUM_LIMIT: u128 = 20_000_000;
        let size = self.size();
        if size > ENUM_LIMIT {
            return Err(Error::BudgetExceeded {
                required: size,
                budget: ENUM_LIMIT,
            });
        }
        let mut out = Vec::with_capacity(size as usize);
        let mut counts = vec![0u32; self.n];
        enumerate_rec(self.n, self.m, 0, self.m, &mut counts, &mut |c| {
            out.push(c.iter().map(|&k| k as f64 / self.m as f64).collect());
        });
        Ok(out)
    }

    /// Coordinates of a lattice point given its integer counts.
    pub fn point_of(&self, counts: &[u32]) -> Vec<f64> {
        counts.iter().map(|&k| k as f64 / self.m as f64).collect()
    }

    /// L1-nearest lattice point, returned as integer counts summing to m.
    /// Ties resolve to the lexicographically smallest coordinate vector.
    pub fn project(&self, belief: &[f64]) -> Result<Vec<u32>> {
        if belief.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "belief has {} coordinates, grid expects {}",
                belief.len(),
                self.n
            )));
        }
        let mut sum = 0.0;
        for &b in belief {
            if b.is_nan() {
                return Err(Error::NanCoordinate);
            }
            if b < -BELIEF_NEG_TOL {
                return Err(Error::InvalidDistribution(format!(
                    "negative coordinate {b} beyond tolerance"
                )));
            }
            sum += b;
        }
        if (sum - 1.0).abs() > BELIEF_SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "belief sums to {sum}, expected 1"
            )));
        }

        let m = self.m;
        let mut counts = vec![0u32; self.n];
        let mut fracs: Vec<(f64, usize)> = Vec::with_capacity(self.n);
        let mut total = 0u64;
        for (i, &b) in belief.iter().enumerate() {
            let t = b.clamp(0.0, 1.0) * m as f64;
            let k = (t.floor() as u32).min(m);
            counts[i] = k;
            fracs.push((t - k as f64, i));
            total += u64::from(k);
        }
        // Distribute the remaining mass to the largest fractional parts.
        // Among equal fractions prefer later coordinates, which keeps the
        // earlier coordinates small and the result lexicographically minimal.
        let deficit = (u64::from(m)).saturating_sub(total) as usize;
        debug_assert!(deficit <= self.n, "projection deficit exceeds dimension");
        fracs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(b.1.cmp(&a.1)));
        for &(_, i) in fracs.iter().take(deficit) {
            counts[i] += 1;
        }
        Ok(counts)
    }

    /// Lexicographic rank of a lattice point given by integer counts.
    pub fn rank(&self, counts: &[u32]) -> u128 {
        let mut rank: u128 = 0;
        let mut remaining = self.m as u128;
        for (pos, &k) in counts.iter().enumerate() {
            let free = (self.n - pos - 1) as u128;
            if free == 0 {
                break;
            }
            for v in 0..k as u128 {
                // completions with coordinate `pos` fixed to v
                rank += binomial(remaining - v + free - 1, free - 1);
            }
            remaining -= k as u128;
        }
        rank
    }

    /// Index of the L1-nearest grid point in lexicographic order.
    pub fn nearest(&self, belief: &[f64]) -> Result<usize> {
        let counts = self.project(belief)?;
        let rank = self.rank(&counts);
        usize::try_from(rank).map_err(|_| {
            Error::IndexOutOfRange(format!("grid rank {rank} exceeds addressable range"))
        })
    }
}

fn enumerate_rec(
    n: usize,
    m: u32,
    pos: usize,
    remaining: u32,
    counts: &mut Vec<u32>,
    f: &mut impl FnMut(&[u32]),
) {
    if pos == n - 1 {
        counts[pos] = remaining;
        f(counts);
        return;
    }
    for k in 0..=remaining {
        counts[pos] = k;
        enumerate_rec(n, m, pos + 1, remaining - k, counts, f);
    }
    let _ = m;
}

/// Exact binomial coefficient in u128.
pub fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 1..=k {
        r = r * (n - k + i) / i;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::rng_from;

    fn unit_box(dim: usize) -> DomainBox {
        DomainBox::new(vec![0.0; dim], vec![1.0; dim]).unwrap()
    }

    #[test]
    fn single_bin_grid() {
        let q = Quantizer::uniform(&unit_box(1), &[1]).unwrap();
        assert_eq!(q.n_bins(), 1);
        assert_eq!(q.representative(0), vec![0.5]);
        assert_eq!(q.diameter(), 1.0);
    }

    #[test]
    fn four_bin_grid() {
        let q = Quantizer::uniform(&unit_box(1), &[4]).unwrap();
        let reps: Vec<f64> = q.representatives().iter().map(|r| r[0]).collect();
        assert_eq!(reps, vec![0.125, 0.375, 0.625, 0.875]);
        assert_eq!(q.diameter(), 0.25);
    }

    #[test]
    fn two_d_cell_diagonal() {
        let q = Quantizer::uniform(&unit_box(2), &[2, 2]).unwrap();
        assert!((q.diameter() - (0.5f64 * 0.5 + 0.5 * 0.5).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn quantize_interior_point() {
        let q = Quantizer::uniform(&unit_box(1), &[4]).unwrap();
        assert_eq!(q.quantize(&[0.3]).unwrap(), 1);
    }

    #[test]
    fn boundary_ties_toward_lower_bin() {
        let q = Quantizer::uniform(&unit_box(1), &[4]).unwrap();
        assert_eq!(q.quantize(&[0.25]).unwrap(), 0);
        assert_eq!(q.quantize(&[0.5]).unwrap(), 1);
        assert_eq!(q.quantize(&[0.0]).unwrap(), 0);
        assert_eq!(q.quantize(&[1.0]).unwrap(), 3);
    }

    #[test]
    fn out_of_box_points_clamp() {
        let q = Quantizer::uniform(&unit_box(1), &[4]).unwrap();
        assert_eq!(q.quantize(&[1.7]).unwrap(), 3);
        assert_eq!(q.quantize(&[-0.2]).unwrap(), 0);
    }

    #[test]
    fn nan_is_an_error() {
        let q = Quantizer::uniform(&unit_box(1), &[4]).unwrap();
        assert!(matches!(q.quantize(&[f64::NAN]), Err(Error::NanCoordinate)));
    }

    #[test]
    fn zero_bins_rejected() {
        assert!(Quantizer::uniform(&unit_box(2), &[2, 0]).is_err());
    }

    #[test]
    fn partition_property() {
        let q = Quantizer::uniform(&unit_box(2), &[3, 5]).unwrap();
        let mut rng = rng_from(77, 0);
        use rand::Rng;
        for _ in 0..100_000 {
            let p = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            let bin = q.quantize(&p).unwrap();
            let (lo, hi) = q.bin_bounds(bin);
            for d in 0..2 {
                assert!(p[d] >= lo[d] - 1e-12 && p[d] <= hi[d] + 1e-12);
            }
        }
    }

    #[test]
    fn diameter_certificate() {
        let q = Quantizer::uniform(&unit_box(2), &[4, 4]).unwrap();
        let mut rng = rng_from(78, 0);
        for _ in 0..100_000 {
            let bin = {
                use rand::Rng;
                rng.random_range(0..q.n_bins())
            };
            let a = q.sample_in_bin(bin, &mut rng);
            let b = q.sample_in_bin(bin, &mut rng);
            let dist: f64 = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            assert!(dist <= q.diameter() + 1e-12);
        }
    }

    #[test]
    fn refinement_halves_diameter_exactly() {
        for bins in [1usize, 2, 3, 5] {
            let q1 = Quantizer::uniform(&unit_box(2), &[bins, bins]).unwrap();
            let q2 = Quantizer::uniform(&unit_box(2), &[2 * bins, 2 * bins]).unwrap();
            assert_eq!(q2.diameter(), q1.diameter() / 2.0);
        }
    }

    #[test]
    fn simplex_grid_size() {
        let g = SimplexGrid::new(3, 4).unwrap();
        assert_eq!(g.size(), binomial(6, 2));
        assert_eq!(g.points().unwrap().len() as u128, g.size());
    }

    #[test]
    fn simplex_points_sum_to_one() {
        let g = SimplexGrid::new(3, 5).unwrap();
        for p in g.points().unwrap() {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn nearest_identity_on_grid_points() {
        let g = SimplexGrid::new(3, 4).unwrap();
        for (i, p) in g.points().unwrap().iter().enumerate() {
            assert_eq!(g.nearest(p).unwrap(), i);
        }
    }

    #[test]
    fn nearest_prefers_l1_closest() {
        // n=2, m=2: grid points (0,1), (0.5,0.5), (1,0) in lex order.
        let g = SimplexGrid::new(2, 2).unwrap();
        let pts = g.points().unwrap();
        let idx = g.nearest(&[0.6, 0.4]).unwrap();
        assert_eq!(pts[idx], vec![0.5, 0.5]);
    }

    #[test]
    fn nearest_tie_takes_lex_smallest() {
        // (0.75, 0.25) is L1-equidistant from (0.5,0.5) and (1,0).
        let g = SimplexGrid::new(2, 2).unwrap();
        let pts = g.points().unwrap();
        let idx = g.nearest(&[0.75, 0.25]).unwrap();
        assert_eq!(pts[idx], vec![0.5, 0.5]);
    }

    #[test]
    fn nearest_rejects_bad_beliefs() {
        let g = SimplexGrid::new(2, 2).unwrap();
        assert!(g.nearest(&[0.7, 0.7]).is_err());
        assert!(g.nearest(&[1.2, -0.2]).is_err());
    }

    #[test]
    fn rank_agrees_with_enumeration() {
        for (n, m) in [(2usize, 3u32), (3, 4), (4, 3)] {
            let g = SimplexGrid::new(n, m).unwrap();
            let pts = g.points().unwrap();
            for (i, p) in pts.iter().enumerate() {
                let counts: Vec<u32> = p.iter().map(|&x| (x * m as f64).round() as u32).collect();
                assert_eq!(g.rank(&counts), i as u128);
            }
        }
    }

    #[test]
    fn nearest_matches_brute_force_scan() {
        let g = SimplexGrid::new(3, 6).unwrap();
        let pts = g.points().unwrap();
        let mut rng = rng_from(5150, 0);
        use rand::Rng;
        for _ in 0..2000 {
            let raw: Vec<f64> = (0..3).map(|_| -(rng.random_range(0.0f64..1.0)).ln()).collect();
            let s: f64 = raw.iter().sum();
            let b: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let fast = g.nearest(&b).unwrap();
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (i, p) in pts.iter().enumerate() {
                let d: f64 = p.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
                if d < best_d - 1e-15 {
                    best_d = d;
                    best = i;
                }
            }
            let fast_d: f64 = pts[fast].iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
            assert!(
                fast_d <= best_d + 1e-12,
                "projection {fast} not L1-optimal: {fast_d} vs {best_d} at {best}"
            );
        }
    }
}
