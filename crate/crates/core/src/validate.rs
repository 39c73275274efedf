//! Empirical validators for the convergence theorems: trajectory-averaged
//! information values, local ball-measure decay rates, covering-number
//! slopes across delta, and the pointwise information chain rule. Targets
//! always come from the measures module so the series and their limits are
//! produced by different code paths.

use crate::cover::katok_entropy_estimate;
use crate::error::{Error, Result};
use crate::measures::{
    pushforward_bernoulli, sample_trajectory, weighted_cylinder_log_measure_windows,
    weighted_measure_entropy, EntropyInterval, Measure,
};
use crate::rng::split_seed;
use crate::symbolic::{ceil_tol, FactorCode, SymbolicSystem, WeightVector};
use serde::Serialize;

/// An empirical series over a grid of orders, with normal-approximation
/// confidence halfwidths (3 sigma of the mean across samples) and the
/// module-supplied target.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceSeries {
    pub ns: Vec<usize>,
    pub values: Vec<f64>,
    pub ci_halfwidth: Vec<f64>,
    pub target: EntropyInterval,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesSummary {
    pub target: EntropyInterval,
    pub tail_gap: f64,
    pub tail_mean: f64,
    pub pass: bool,
}

impl ConvergenceSeries {
    fn validate(&self) -> Result<()> {
        if self.ns.len() != self.values.len() || self.ns.len() != self.ci_halfwidth.len() {
            return Err(Error::internal("series length mismatch"));
        }
        if self.ns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("n grid must be strictly increasing"));
        }
        Ok(())
    }

    /// Values over the final third of the grid: liminf/limsup proxies.
    pub fn tail(&self) -> &[f64] {
        let start = self.ns.len() - self.ns.len().div_ceil(3);
        &self.values[start..]
    }

    pub fn tail_gap(&self) -> f64 {
        let t = self.tail();
        let lo = t.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    pub fn tail_mean(&self) -> f64 {
        let t = self.tail();
        t.iter().sum::<f64>() / t.len() as f64
    }

    pub fn summary(&self, gap_tol: f64, mean_tol: f64) -> SeriesSummary {
        let tail_gap = self.tail_gap();
        let tail_mean = self.tail_mean();
        let target_mid = self.target.midpoint();
        SeriesSummary {
            target: self.target,
            tail_gap,
            tail_mean,
            pass: tail_gap <= gap_tol && (tail_mean - target_mid).abs() <= mean_tol,
        }
    }
}

/// Trajectory-averaged weighted information: for each `N` in the grid,
/// `-(1/N) log mu(join cylinder)` where the join constrains the point on
/// `[0, ceil(a1 N))` and its factor word on `[ceil(a1 N), ceil((a1+a2) N))`,
/// averaged over independent seeded trajectories. Converges to
/// `a1 h + a2 h_factor`.
pub fn smb_series(
    m: &Measure,
    code: &FactorCode,
    a: WeightVector,
    n_grid: &[usize],
    trajectories: usize,
    seed: u64,
) -> Result<ConvergenceSeries> {
    if trajectories < 1 {
        return Err(Error::invalid("need at least one trajectory"));
    }
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("n grid must be nonempty and increasing"));
    }
    let max_n = *n_grid.last().unwrap();
    let max_len = ceil_tol((a.a1 + a.a2) * max_n as f64).max(1);
    let mut per_n: Vec<Vec<f64>> = vec![Vec::with_capacity(trajectories); n_grid.len()];
    for t in 0..trajectories {
        let word = sample_trajectory(m, max_len, split_seed(seed, t as u64))?;
        for (gi, &n) in n_grid.iter().enumerate() {
            let l1 = ceil_tol(a.a1 * n as f64);
            let l2 = ceil_tol((a.a1 + a.a2) * n as f64);
            let log_mu = weighted_cylinder_log_measure_windows(m, code, &word, l1, l2)?;
            if log_mu == f64::NEG_INFINITY {
                return Err(Error::internal(
                    "sampled trajectory hit a null cylinder",
                ));
            }
            per_n[gi].push(-log_mu / n as f64);
        }
    }
    let target = weighted_measure_entropy(a, m, code)?.as_interval();
    let series = aggregate(n_grid, &per_n, target);
    series.validate()?;
    Ok(series)
}

/// Local decay of weighted ball measures: per sampled point,
/// `-(1/n) log mu(B^a(x, n, 2^-k))`, averaged across points per `n`.
pub fn brin_katok_series(
    m: &Measure,
    code: &FactorCode,
    a: WeightVector,
    resolution_k: usize,
    n_grid: &[usize],
    points: usize,
    seed: u64,
) -> Result<ConvergenceSeries> {
    if points < 1 {
        return Err(Error::invalid("need at least one point"));
    }
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("n grid must be nonempty and increasing"));
    }
    let max_n = *n_grid.last().unwrap();
    let max_len = ceil_tol((a.a1 + a.a2) * max_n as f64) + resolution_k;
    let mut per_n: Vec<Vec<f64>> = vec![Vec::with_capacity(points); n_grid.len()];
    for t in 0..points {
        let word = sample_trajectory(m, max_len.max(1), split_seed(seed, t as u64))?;
        for (gi, &n) in n_grid.iter().enumerate() {
            let l1 = ceil_tol(a.a1 * n as f64) + resolution_k;
            let l2 = ceil_tol((a.a1 + a.a2) * n as f64) + resolution_k;
            let log_mu = weighted_cylinder_log_measure_windows(m, code, &word, l1, l2)?;
            if log_mu == f64::NEG_INFINITY {
                return Err(Error::internal(
                    "sampled point hit a null ball",
                ));
            }
            per_n[gi].push(-log_mu / n as f64);
        }
    }
    let target = weighted_measure_entropy(a, m, code)?.as_interval();
    let series = aggregate(n_grid, &per_n, target);
    series.validate()?;
    Ok(series)
}

fn aggregate(n_grid: &[usize], per_n: &[Vec<f64>], target: EntropyInterval) -> ConvergenceSeries {
    let mut values = Vec::with_capacity(n_grid.len());
    let mut ci = Vec::with_capacity(n_grid.len());
    for samples in per_n {
        let k = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / k;
        let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (k - 1.0).max(1.0);
        values.push(mean);
        ci.push(3.0 * (var / k).sqrt());
    }
    ConvergenceSeries {
        ns: n_grid.to_vec(),
        values,
        ci_halfwidth: ci,
        target,
    }
}

/// The independence-defect statistic from the convergence proof:
/// `Z_m = mu(A) mu(B) / mu(A and B)` with `A` the point prefix on
/// `[0, ceil(a1 m))` and `B` the factor window on `[ceil(a1 m), ceil((a1+a2) m))`.
/// Reports the maximum of `(1/m) log Z_m` over seeded trajectories; the
/// Borel-Cantelli argument makes the limsup nonpositive.
pub fn smb_sandwich_statistic(
    m: &Measure,
    code: &FactorCode,
    a: WeightVector,
    m_order: usize,
    trajectories: usize,
    seed: u64,
) -> Result<f64> {
    let l1 = ceil_tol(a.a1 * m_order as f64);
    let l2 = ceil_tol((a.a1 + a.a2) * m_order as f64);
    let mut worst = f64::NEG_INFINITY;
    for t in 0..trajectories {
        let word = sample_trajectory(m, l2.max(1), split_seed(seed, t as u64))?;
        let log_a = m.log_cylinder(&word[..l1]);
        let window: Vec<u8> = word[l1..l2].iter().map(|&s| code.apply(s)).collect();
        let log_b = factor_window_log_probability(m, code, &window)?;
        let log_ab = weighted_cylinder_log_measure_windows(m, code, &word, l1, l2)?;
        if log_ab == f64::NEG_INFINITY || log_a == f64::NEG_INFINITY {
            return Err(Error::internal("null cylinder on a sampled trajectory"));
        }
        let z = (log_a + log_b - log_ab) / m_order as f64;
        worst = worst.max(z);
    }
    Ok(worst)
}

/// Log of the stationary probability that the factor word equals `window`
/// on some aligned block of its length; -inf when unrealizable.
pub fn factor_window_log_probability(
    m: &Measure,
    code: &FactorCode,
    window: &[u8],
) -> Result<f64> {
    if window.is_empty() {
        return Ok(0.0);
    }
    match m {
        Measure::Bernoulli(b) => {
            let q = pushforward_bernoulli(b, code)?;
            Ok(window.iter().map(|&c| q.probs()[c as usize].ln()).sum())
        }
        Measure::Markov(mk) => {
            let n = mk.size();
            let mut v: Vec<f64> = (0..n)
                .map(|s| {
                    if code.apply(s as u8) == window[0] {
                        mk.stationary()[s]
                    } else {
                        0.0
                    }
                })
                .collect();
            let mut acc = 0.0f64;
            for &c in &window[1..] {
                let mut next = vec![0.0; n];
                for (i, &vi) in v.iter().enumerate() {
                    if vi == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        if code.apply(j as u8) == c {
                            next[j] += vi * mk.stochastic()[i][j];
                        }
                    }
                }
                let norm: f64 = next.iter().sum();
                if norm == 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                acc += norm.ln();
                next.iter_mut().for_each(|x| *x /= norm);
                v = next;
            }
            let total: f64 = v.iter().sum();
            Ok(acc + total.ln())
        }
    }
}

/// Covering-number slopes across deltas, with the pairwise spread.
#[derive(Debug, Clone, Serialize)]
pub struct KatokDeltaReport {
    pub estimates: Vec<crate::cover::KatokEstimate>,
    pub max_pairwise_slope_gap: f64,
    pub pass: bool,
}

pub fn katok_delta_report(
    system: &SymbolicSystem,
    m: &Measure,
    a: WeightVector,
    resolution_k: usize,
    deltas: &[f64],
    n_grid: &[usize],
    tolerance: f64,
) -> Result<KatokDeltaReport> {
    if deltas.is_empty() || deltas.iter().any(|&d| !(0.0 < d && d < 1.0)) {
        return Err(Error::invalid("deltas must lie in (0,1)"));
    }
    let mut estimates = Vec::with_capacity(deltas.len());
    for &d in deltas {
        estimates.push(katok_entropy_estimate(system, m, a, resolution_k, n_grid, d)?);
    }
    let mut max_gap = 0.0f64;
    for i in 0..estimates.len() {
        for j in i + 1..estimates.len() {
            max_gap = max_gap.max((estimates[i].slope - estimates[j].slope).abs());
        }
    }
    Ok(KatokDeltaReport {
        estimates,
        max_pairwise_slope_gap: max_gap,
        pass: max_gap <= tolerance,
    })
}

/// A finite partition of the sequence space into cylinders over a coordinate
/// range `[start, end)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CylinderPartition {
    pub start: usize,
    pub end: usize,
}

impl CylinderPartition {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if end <= start {
            return Err(Error::invalid("partition range must be nonempty"));
        }
        Ok(CylinderPartition { start, end })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainRuleReport {
    pub atoms_checked: usize,
    pub max_residual: f64,
    pub pass: bool,
}

/// Pointwise check of `I(alpha v beta | gamma) = I(alpha | gamma) +
/// I(beta | alpha v gamma)` on every positive-measure atom of the join of
/// cylinder partitions, exact up to floating point.
pub fn chain_rule_check(
    m: &Measure,
    alpha: CylinderPartition,
    beta: CylinderPartition,
    gamma: Option<CylinderPartition>,
    alphabet: usize,
) -> Result<ChainRuleReport> {
    let end = alpha
        .end
        .max(beta.end)
        .max(gamma.map(|g| g.end).unwrap_or(0));
    if (alphabet as f64).powi(end as i32) > 2e6 {
        return Err(Error::refusal(format!(
            "chain-rule enumeration over {alphabet}^{end} atoms exceeds the cap"
        )));
    }
    // Enumerate assignments over the union of ranges as full words of length
    // `end` (coordinates outside every range marginalize out of all terms).
    let mut word = vec![0u8; end];
    let mut atoms = 0usize;
    let mut worst = 0.0f64;
    loop {
        let abg = masked_probability(m, &word, &join(&[Some(alpha), Some(beta), gamma]));
        if abg > 0.0 {
            atoms += 1;
            let g = masked_probability(m, &word, &join(&[gamma]));
            let ag = masked_probability(m, &word, &join(&[Some(alpha), gamma]));
            // I(a v b | g) = -log(abg / g); I(a | g) = -log(ag / g);
            // I(b | a v g) = -log(abg / ag).
            let lhs = -(abg / g).ln();
            let rhs = -(ag / g).ln() - (abg / ag).ln();
            worst = worst.max((lhs - rhs).abs());
        }
        // Next assignment.
        let mut i = 0;
        loop {
            if i == end {
                return Ok(ChainRuleReport {
                    atoms_checked: atoms,
                    max_residual: worst,
                    pass: worst <= 1e-10,
                });
            }
            word[i] += 1;
            if (word[i] as usize) < alphabet {
                break;
            }
            word[i] = 0;
            i += 1;
        }
    }
}

fn join(parts: &[Option<CylinderPartition>]) -> Vec<CylinderPartition> {
    parts.iter().flatten().cloned().collect()
}

fn masked_probability(m: &Measure, word: &[u8], parts: &[CylinderPartition]) -> f64 {
    let mut pattern: Vec<Option<u8>> = vec![None; word.len()];
    for p in parts {
        for i in p.start..p.end {
            pattern[i] = Some(word[i]);
        }
    }
    sparse_pattern_probability(m, &pattern)
}

/// Probability of observing the fixed symbols of a sparse pattern, exact
/// for both measure families.
pub fn sparse_pattern_probability(m: &Measure, pattern: &[Option<u8>]) -> f64 {
    match m {
        Measure::Bernoulli(b) => pattern
            .iter()
            .flatten()
            .map(|&s| b.probs()[s as usize])
            .product(),
        Measure::Markov(mk) => {
            let n = mk.size();
            let mut v: Vec<f64> = match pattern.first() {
                Some(Some(s)) => {
                    let mut v = vec![0.0; n];
                    v[*s as usize] = mk.stationary()[*s as usize];
                    v
                }
                _ => mk.stationary().to_vec(),
            };
            for slot in &pattern[1..] {
                let mut next = vec![0.0; n];
                for (i, &vi) in v.iter().enumerate() {
                    if vi == 0.0 {
                        continue;
                    }
                    match slot {
                        Some(s) => next[*s as usize] += vi * mk.stochastic()[i][*s as usize],
                        None => {
                            for j in 0..n {
                                next[j] += vi * mk.stochastic()[i][j];
                            }
                        }
                    }
                }
                v = next;
            }
            v.iter().sum()
        }
    }
}
