//! The Caratheodory cover machinery over weighted cylinders: exact minimum
//! cover costs by dynamic programming on the cylinder tree, the critical
//! exponent by threshold bisection, fractional cover costs by an exact LP,
//! and Katok covering numbers.
//!
//! In the symbolic metric every weighted Bowen ball of order `n` equals a
//! weighted cylinder, and a cylinder of order `n+1` sits inside exactly one
//! cylinder of order `n`. Cover optimization therefore decomposes over the
//! cylinder tree: the optimal cover of a node either takes the node's own
//! ball or splits into optimal covers of its children. Costs depend on a
//! node only through its last source symbol and its factor window, which
//! collapses the tree to a manageable state graph.

use crate::error::{Error, Result};
use crate::measures::{weighted_window_measure, Measure};
use crate::simplex::maximize_uniform_packing;
use crate::symbolic::{ball_spec, SymbolicSystem, WeightVector, WeightedBallSpec, WeightedCylinder};
use serde::Serialize;
use std::collections::HashMap;
use std::time::Instant;

/// Cap on collapsed DP states across all levels.
const STATE_CAP: usize = 8_000_000;
/// Cap on explicitly enumerated cylinders in Katok covering numbers.
pub const KATOK_CYLINDER_CAP: usize = 1 << 16;
/// Cap on LP covering constraints (one per deepest-level cylinder).
pub const LP_CONSTRAINT_CAP: usize = 512;
/// Cap on LP variables (one per candidate ball).
const LP_VARIABLE_CAP: usize = 8192;

/// One ball of a cover: the weighted Bowen ball of the given order around
/// `center`, at the cover's shared resolution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverBall {
    pub center: Vec<u8>,
    pub order: usize,
}

/// An explicit finite cover by weighted Bowen balls, multiplicity-free,
/// with a declared minimum order every ball must respect.
#[derive(Debug, Clone, Serialize)]
pub struct Cover {
    pub resolution_k: usize,
    pub min_order: usize,
    pub balls: Vec<CoverBall>,
}

impl Cover {
    /// Structural invariants: no duplicate balls, every order at least the
    /// declared minimum.
    pub fn validate(&self) -> Result<()> {
        for (i, b) in self.balls.iter().enumerate() {
            if b.order < self.min_order {
                return Err(Error::invalid(format!(
                    "ball {i} has order {} below the declared minimum {}",
                    b.order, self.min_order
                )));
            }
            if self.balls[i + 1..].contains(b) {
                return Err(Error::invalid(format!("duplicate ball at index {i}")));
            }
        }
        Ok(())
    }

    /// `sum_j exp(-s n_j)` over the balls.
    pub fn cost(&self, s: f64) -> f64 {
        self.balls.iter().map(|b| (-s * b.order as f64).exp()).sum()
    }

    /// Exhaustively verify at `depth` that every admissible word of that
    /// length lies in some ball. `depth` must be at least the deepest ball
    /// window.
    pub fn verify_covers(
        &self,
        system: &SymbolicSystem,
        a: WeightVector,
        depth: usize,
    ) -> Result<bool> {
        let mut specs = Vec::new();
        for b in &self.balls {
            let spec = ball_spec(a, b.order, self.resolution_k)?;
            if spec.len2 > depth || b.center.len() < spec.len2 {
                return Err(Error::invalid(
                    "cover verification depth too small for a ball".to_string(),
                ));
            }
            specs.push(spec);
        }
        let words = system.source().enumerate_words(depth)?;
        for w in &words {
            let covered = self
                .balls
                .iter()
                .zip(&specs)
                .any(|(b, spec)| system.in_weighted_ball(&b.center, w, spec).unwrap_or(false));
            if !covered {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `cover_cost` as a free function, mirroring the cover-side cost used by
/// the minimization below.
pub fn cover_cost(c: &Cover, s: f64) -> f64 {
    c.cost(s)
}

/// A weighted cover: balls with positive weights whose weighted indicator
/// sum dominates 1 on the target set.
#[derive(Debug, Clone, Serialize)]
pub struct FractionalCover {
    pub resolution_k: usize,
    pub entries: Vec<(CoverBall, f64)>,
}

impl FractionalCover {
    pub fn cost(&self, s: f64) -> f64 {
        self.entries
            .iter()
            .map(|(b, c)| c * (-s * b.order as f64).exp())
            .sum()
    }

    /// Exhaustively verify `sum_j c_j chi_ball >= 1` on every admissible word
    /// at `depth`.
    pub fn verify_dominates(
        &self,
        system: &SymbolicSystem,
        a: WeightVector,
        depth: usize,
    ) -> Result<bool> {
        let words = system.source().enumerate_words(depth)?;
        for w in &words {
            let mut total = 0.0;
            for (b, c) in &self.entries {
                let spec = ball_spec(a, b.order, self.resolution_k)?;
                if spec.len2 > depth {
                    return Err(Error::invalid("verification depth too small".to_string()));
                }
                if system.in_weighted_ball(&b.center, w, &spec)? {
                    total += c;
                }
            }
            if total < 1.0 - 1e-9 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

type StateKey = (u8, Vec<u8>);

struct Level {
    index: HashMap<StateKey, usize>,
    /// Per state: children as (index in next level, multiplicity).
    edges: Vec<Vec<(usize, f64)>>,
}

/// The collapsed cylinder-tree DP, built once per `(system, a, k, N, depth)`
/// and evaluated at many `s`.
pub struct CoverDp<'a> {
    system: &'a SymbolicSystem,
    specs: Vec<WeightedBallSpec>,
    levels: Vec<Level>,
    /// Root state multiplicities (number of order-N cylinders per state).
    root_mult: Vec<f64>,
    pub min_order: usize,
    pub max_order: usize,
}

impl<'a> CoverDp<'a> {
    pub fn build(
        system: &'a SymbolicSystem,
        a: WeightVector,
        resolution_k: usize,
        min_order: usize,
        depth_cap: usize,
    ) -> Result<Self> {
        if min_order < 1 {
            return Err(Error::invalid("min order N must be >= 1"));
        }
        let first = ball_spec(a, min_order, resolution_k)?;
        if first.len2 > depth_cap {
            return Err(Error::invalid(format!(
                "depth cap {depth_cap} too small: the order-{min_order} ball needs {} symbols",
                first.len2
            )));
        }
        let mut specs = vec![first];
        loop {
            let next = ball_spec(a, min_order + specs.len(), resolution_k)?;
            if next.len2 > depth_cap {
                break;
            }
            specs.push(next);
        }
        let max_order = min_order + specs.len() - 1;

        // Root states: enumerate realizable windows per ending symbol of an
        // admissible prefix of length len1(N).
        let counts = system.source().count_words_by_last(specs[0].len1);
        let mut index = HashMap::new();
        let mut root_mult = Vec::new();
        let win0 = specs[0].len2 - specs[0].len1;
        for (i, &cnt) in counts.iter().enumerate() {
            if cnt == 0 {
                continue;
            }
            let mut windows = Vec::new();
            enumerate_windows(system, i as u8, win0, &mut Vec::new(), &mut windows);
            for w in windows {
                let key = (i as u8, w);
                let idx = *index.entry(key).or_insert_with(|| {
                    root_mult.push(0.0);
                    root_mult.len() - 1
                });
                root_mult[idx] += cnt as f64;
            }
        }

        let mut levels = Vec::with_capacity(specs.len());
        let mut total_states = index.len();
        let mut current = index;
        for step in 0..specs.len() - 1 {
            let cur_spec = &specs[step];
            let next_spec = &specs[step + 1];
            let mut next_index: HashMap<StateKey, usize> = HashMap::new();
            let mut edges = vec![Vec::new(); current.len()];
            // Deterministic expansion order for reproducibility.
            let mut ordered: Vec<(&StateKey, &usize)> = current.iter().collect();
            ordered.sort_by(|a, b| a.0.cmp(b.0));
            for (key, &idx) in ordered {
                let children = expand_state(system, key, cur_spec, next_spec);
                for (child_key, mult) in children {
                    let next_idx = match next_index.get(&child_key) {
                        Some(&i) => i,
                        None => {
                            let i = next_index.len();
                            next_index.insert(child_key, i);
                            i
                        }
                    };
                    edges[idx].push((next_idx, mult));
                }
            }
            total_states += next_index.len();
            if total_states > STATE_CAP {
                return Err(Error::refusal(format!(
                    "cover DP exceeds {STATE_CAP} collapsed states; reduce depth or weights"
                )));
            }
            levels.push(Level {
                index: current,
                edges,
            });
            current = next_index;
        }
        levels.push(Level {
            index: current,
            edges: Vec::new(),
        });

        Ok(CoverDp {
            system,
            specs,
            levels,
            root_mult,
            min_order,
            max_order,
        })
    }

    /// Exact minimum of `sum exp(-s n_j)` over covers of the whole system by
    /// weighted balls with orders in `[min_order, max_order]`.
    pub fn cost(&self, s: f64) -> f64 {
        let root_costs = self.root_costs(s);
        self.root_mult
            .iter()
            .zip(&root_costs)
            .map(|(m, c)| m * c)
            .sum()
    }

    /// Same minimum restricted to the subtrees of the given order-N root
    /// cylinders (a union of root cells as the target set).
    pub fn cost_for_targets(&self, s: f64, targets: &[WeightedCylinder]) -> Result<f64> {
        let root_costs = self.root_costs(s);
        let spec = &self.specs[0];
        let mut total = 0.0;
        for t in targets {
            if t.prefix.len() != spec.len1 || t.window.len() != spec.len2 - spec.len1 {
                return Err(Error::invalid(
                    "target cylinder does not match the root spec".to_string(),
                ));
            }
            let key = (*t.prefix.last().unwrap(), t.window.clone());
            let idx = self.levels[0]
                .index
                .get(&key)
                .ok_or_else(|| Error::invalid("target cylinder is empty".to_string()))?;
            total += root_costs[*idx];
        }
        Ok(total)
    }

    fn root_costs(&self, s: f64) -> Vec<f64> {
        let deepest = self.levels.len() - 1;
        let mut costs = vec![(-s * (self.min_order + deepest) as f64).exp();
            self.levels[deepest].index.len()];
        for step in (0..deepest).rev() {
            let ball = (-s * (self.min_order + step) as f64).exp();
            let level = &self.levels[step];
            let mut new_costs = vec![0.0f64; level.index.len()];
            for (idx, children) in level.edges.iter().enumerate() {
                let sum: f64 = children.iter().map(|&(c, m)| m * costs[c]).sum();
                new_costs[idx] = ball.min(sum);
            }
            costs = new_costs;
        }
        costs
    }

    pub fn root_cylinders(&self) -> Result<Vec<WeightedCylinder>> {
        self.system.enumerate_weighted_cylinders(&self.specs[0])
    }
}

fn enumerate_windows(
    system: &SymbolicSystem,
    last: u8,
    len: usize,
    acc: &mut Vec<u8>,
    out: &mut Vec<Vec<u8>>,
) {
    if acc.len() == len {
        out.push(acc.clone());
        return;
    }
    for c in 0..system.target().size() as u8 {
        acc.push(c);
        if system.window_realizable(last, acc) {
            enumerate_windows(system, last, len, acc, out);
        }
        acc.pop();
    }
}

/// Children of a collapsed state between consecutive ball specs, with edge
/// multiplicities (number of distinct source extensions reaching each child).
fn expand_state(
    system: &SymbolicSystem,
    key: &StateKey,
    cur: &WeightedBallSpec,
    next: &WeightedBallSpec,
) -> Vec<(StateKey, f64)> {
    let (last, window) = key;
    let n = system.source().size();
    let d1 = next.len1 - cur.len1;
    // Count admissible source extensions of length d1 whose factor word
    // matches the consumed window prefix, grouped by endpoint.
    let mut reach = vec![0.0f64; n];
    reach[*last as usize] = 1.0;
    for r in 0..d1 {
        let mut step = vec![0.0f64; n];
        for (i, &c) in reach.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for j in 0..n {
                if !system.source().allowed(i as u8, j as u8) {
                    continue;
                }
                if r < window.len() && system.code().apply(j as u8) != window[r] {
                    continue;
                }
                step[j] += c;
            }
        }
        reach = step;
    }
    let leftover: Vec<u8> = window[d1.min(window.len())..].to_vec();
    let new_len = next.len2 - next.len1 - leftover.len();

    let mut out: HashMap<StateKey, f64> = HashMap::new();
    for (j, &paths) in reach.iter().enumerate() {
        if paths == 0.0 {
            continue;
        }
        if !system.window_realizable(j as u8, &leftover) {
            continue;
        }
        let mut acc = leftover.clone();
        let mut windows = Vec::new();
        extend_windows(system, j as u8, leftover.len() + new_len, &mut acc, &mut windows);
        for w in windows {
            *out.entry((j as u8, w)).or_insert(0.0) += paths;
        }
    }
    let mut v: Vec<(StateKey, f64)> = out.into_iter().collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    v
}

fn extend_windows(
    system: &SymbolicSystem,
    last: u8,
    target_len: usize,
    acc: &mut Vec<u8>,
    out: &mut Vec<Vec<u8>>,
) {
    if acc.len() == target_len {
        out.push(acc.clone());
        return;
    }
    for c in 0..system.target().size() as u8 {
        acc.push(c);
        if system.window_realizable(last, acc) {
            extend_windows(system, last, target_len, acc, out);
        }
        acc.pop();
    }
}

/// Exact minimum cover cost at truncation `[N, n_max(depth_cap)]`.
pub fn min_cover_cost(
    system: &SymbolicSystem,
    a: WeightVector,
    s: f64,
    resolution_k: usize,
    min_order: usize,
    depth_cap: usize,
) -> Result<f64> {
    Ok(CoverDp::build(system, a, resolution_k, min_order, depth_cap)?.cost(s))
}

/// One `(s, depth)` probe of the cover cost; serialized as a JSON line by
/// the harness.
#[derive(Debug, Clone, Serialize)]
pub struct CoverProbe {
    pub s: f64,
    pub depth: usize,
    pub cost: f64,
    pub elapsed_ms: u64,
}

/// Parameter bundle for the cover-side estimators.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoverParams {
    pub resolution_k: usize,
    pub min_order: usize,
    pub depth_cap: usize,
    pub tol: f64,
}

/// A bracket around the critical exponent with endpoint evidence.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentBracket {
    pub s_low: f64,
    pub s_high: f64,
    pub cost_low: f64,
    pub cost_high: f64,
}

impl ExponentBracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.s_low + self.s_high)
    }

    pub fn width(&self) -> f64 {
        self.s_high - self.s_low
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalExponentReport {
    pub bracket: ExponentBracket,
    pub probes: Vec<CoverProbe>,
    /// Truncation bias is one-sided at fixed N: deepening the cap can only
    /// lower the cost, so the bracket is labeled accordingly.
    pub note: &'static str,
}

/// Bracket the critical exponent of the truncated cover cost by bisecting
/// `cost(s)` against the threshold 1.
pub fn critical_exponent(
    system: &SymbolicSystem,
    a: WeightVector,
    resolution_k: usize,
    min_order: usize,
    depth_cap: usize,
    tol: f64,
) -> Result<CriticalExponentReport> {
    if tol <= 0.0 {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let dp = CoverDp::build(system, a, resolution_k, min_order, depth_cap)?;
    let mut probes = Vec::new();
    let probe = |s: f64, probes: &mut Vec<CoverProbe>| -> f64 {
        let t0 = Instant::now();
        let cost = dp.cost(s);
        probes.push(CoverProbe {
            s,
            depth: depth_cap,
            cost,
            elapsed_ms: t0.elapsed().as_millis() as u64,
        });
        cost
    };

    let cost_zero = probe(0.0, &mut probes);
    if cost_zero <= 1.0 + 1e-9 {
        // A single ball covers the system: zero entropy.
        return Ok(CriticalExponentReport {
            bracket: ExponentBracket {
                s_low: 0.0,
                s_high: 0.0,
                cost_low: cost_zero,
                cost_high: cost_zero,
            },
            probes,
            note: "zero-entropy system",
        });
    }
    let s_max = (system.source().size() as f64).ln() * (a.a1 + a.a2) + 1.0;
    let cost_max = probe(s_max, &mut probes);
    if cost_max >= 1.0 {
        return Err(Error::internal(format!(
            "cover cost did not drop below 1 at s = {s_max}; invalid system"
        )));
    }
    let (mut lo, mut hi) = (0.0f64, s_max);
    let (mut cost_lo, mut cost_hi) = (cost_zero, cost_max);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let c = probe(mid, &mut probes);
        if c >= 1.0 {
            lo = mid;
            cost_lo = c;
        } else {
            hi = mid;
            cost_hi = c;
        }
    }
    Ok(CriticalExponentReport {
        bracket: ExponentBracket {
            s_low: lo,
            s_high: hi,
            cost_low: cost_lo,
            cost_high: cost_hi,
        },
        probes,
        note: "lower-bound-biased: finite depth can only lower the cost",
    })
}

/// Exact optimum of the fractional-cover relaxation at the same truncation,
/// by LP over all candidate balls against the deepest-level cylinders.
/// Refuses instances beyond the configured exact-simplex caps.
pub fn fractional_cover_cost(
    system: &SymbolicSystem,
    a: WeightVector,
    s: f64,
    resolution_k: usize,
    min_order: usize,
    depth_cap: usize,
) -> Result<f64> {
    let first = ball_spec(a, min_order, resolution_k)?;
    if first.len2 > depth_cap {
        return Err(Error::invalid(format!(
            "depth cap {depth_cap} too small for the order-{min_order} ball"
        )));
    }
    let mut specs = vec![first];
    loop {
        let next = ball_spec(a, min_order + specs.len(), resolution_k)?;
        if next.len2 > depth_cap {
            break;
        }
        specs.push(next);
    }
    let deepest = specs.last().unwrap();
    let leaves = system.enumerate_weighted_cylinders(deepest)?;
    if leaves.len() > LP_CONSTRAINT_CAP {
        return Err(Error::refusal(format!(
            "fractional cover LP needs {} constraints, cap is {LP_CONSTRAINT_CAP}",
            leaves.len()
        )));
    }

    // Candidate balls: every nonempty cylinder at every order. A leaf belongs
    // to a ball iff the ball is its truncation at that order.
    let mut ball_index: HashMap<(usize, Vec<u8>, Vec<u8>), usize> = HashMap::new();
    let mut ball_orders: Vec<usize> = Vec::new();
    for (oi, spec) in specs.iter().enumerate() {
        let cyls = system.enumerate_weighted_cylinders(spec)?;
        for c in cyls {
            ball_index.insert((oi, c.prefix, c.window), ball_orders.len());
            ball_orders.push(min_order + oi);
        }
        if ball_orders.len() > LP_VARIABLE_CAP {
            return Err(Error::refusal(format!(
                "fractional cover LP needs more than {LP_VARIABLE_CAP} candidate balls"
            )));
        }
    }

    // Dual packing: rows = balls, columns = leaves.
    let mut rows = vec![vec![false; leaves.len()]; ball_orders.len()];
    for (li, leaf) in leaves.iter().enumerate() {
        for (oi, spec) in specs.iter().enumerate() {
            let prefix = leaf.prefix[..spec.len1].to_vec();
            let window: Vec<u8> = (spec.len1..spec.len2)
                .map(|p| {
                    if p < deepest.len1 {
                        system.code().apply(leaf.prefix[p])
                    } else {
                        leaf.window[p - deepest.len1]
                    }
                })
                .collect();
            let bi = ball_index
                .get(&(oi, prefix, window))
                .ok_or_else(|| Error::internal("leaf truncation not among balls"))?;
            rows[*bi][li] = true;
        }
    }
    let caps: Vec<f64> = ball_orders.iter().map(|&n| (-s * n as f64).exp()).collect();
    maximize_uniform_packing(&rows, &caps, leaves.len())
}

/// Smallest number of order-`n` weighted balls whose union has measure
/// `> 1 - delta`. The balls at a fixed spec are disjoint cylinders, so the
/// greedy largest-first choice is exactly optimal.
pub fn katok_covering_number(
    system: &SymbolicSystem,
    m: &Measure,
    a: WeightVector,
    n: usize,
    resolution_k: usize,
    delta: f64,
) -> Result<usize> {
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::invalid(format!("delta must be in (0,1), got {delta}")));
    }
    let spec = ball_spec(a, n, resolution_k)?;
    let count_bound = count_cylinders(system, &spec)?;
    if count_bound > KATOK_CYLINDER_CAP as u128 {
        return Err(Error::refusal(format!(
            "Katok covering at order {n} needs {count_bound} cylinders, cap is {KATOK_CYLINDER_CAP}"
        )));
    }
    let cyls = system.enumerate_weighted_cylinders(&spec)?;
    let mut masses: Vec<f64> = cyls
        .iter()
        .map(|c| weighted_window_measure(m, system.code(), &c.prefix, &c.window))
        .collect::<Result<_>>()?;
    masses.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let mut acc = 0.0;
    for (i, p) in masses.iter().enumerate() {
        acc += p;
        if acc > 1.0 - delta {
            return Ok(i + 1);
        }
    }
    Ok(masses.len())
}

fn count_cylinders(system: &SymbolicSystem, spec: &WeightedBallSpec) -> Result<u128> {
    // Transfer-style overestimate good enough for the cap check: prefixes
    // times window alternatives.
    let prefixes = system.source().count_words(spec.len1);
    let windows = (system.target().size() as u128)
        .checked_pow((spec.len2 - spec.len1) as u32)
        .unwrap_or(u128::MAX);
    Ok(prefixes.saturating_mul(windows))
}

/// Least-squares slope of `log N(n)` against `n` over the grid, with the
/// per-`n` covering numbers.
#[derive(Debug, Clone, Serialize)]
pub struct KatokEstimate {
    pub delta: f64,
    pub rows: Vec<KatokRow>,
    pub slope: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KatokRow {
    pub n: usize,
    pub covering_number: usize,
    pub log_covering_number: f64,
}

pub fn katok_entropy_estimate(
    system: &SymbolicSystem,
    m: &Measure,
    a: WeightVector,
    resolution_k: usize,
    n_grid: &[usize],
    delta: f64,
) -> Result<KatokEstimate> {
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("n grid must be nonempty and increasing"));
    }
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let count = katok_covering_number(system, m, a, n, resolution_k, delta)?;
        rows.push(KatokRow {
            n,
            covering_number: count,
            log_covering_number: (count as f64).ln(),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.log_covering_number).collect();
    let slope = least_squares_slope(&xs, &ys)?;
    Ok(KatokEstimate { delta, rows, slope })
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid("need at least two points for a slope"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx < 1e-15 {
        return Err(Error::invalid("degenerate fit: no spread in x"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{BernoulliMeasure, Measure};
    use crate::symbolic::Sft;

    fn full2() -> SymbolicSystem {
        SymbolicSystem::identity(Sft::full_shift(2).unwrap())
    }

    fn three_digit() -> SymbolicSystem {
        SymbolicSystem::new(
            Sft::full_shift(3).unwrap(),
            Sft::full_shift(2).unwrap(),
            vec![0, 1, 1],
        )
        .unwrap()
    }

    fn a(a1: f64, a2: f64) -> WeightVector {
        WeightVector::new(a1, a2).unwrap()
    }

    #[test]
    fn cover_cost_basics() {
        let c = Cover {
            resolution_k: 0,
            min_order: 1,
            balls: vec![CoverBall {
                center: vec![0],
                order: 1,
            }],
        };
        c.validate().unwrap();
        assert_eq!(cover_cost(&c, 0.0), 1.0);

        let m = 5;
        let c = Cover {
            resolution_k: 0,
            min_order: 3,
            balls: (0..m)
                .map(|i| CoverBall {
                    center: vec![i as u8],
                    order: 3,
                })
                .collect(),
        };
        assert!((cover_cost(&c, 0.5) - m as f64 * (-1.5f64).exp()).abs() < 1e-12);

        // s = log m, m balls of order 1 -> cost 1.
        let c = Cover {
            resolution_k: 0,
            min_order: 1,
            balls: (0..3)
                .map(|i| CoverBall {
                    center: vec![i as u8],
                    order: 1,
                })
                .collect(),
        };
        assert!((cover_cost(&c, 3.0f64.ln()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_shift_balanced_at_log2() {
        let sys = full2();
        for depth in [4usize, 6, 9] {
            let cost = min_cover_cost(&sys, a(1.0, 0.0), 2f64.ln(), 0, 1, depth).unwrap();
            assert!((cost - 1.0).abs() < 1e-12, "depth {depth}: {cost}");
        }
        // Monotone in s around the balance point.
        let lo = min_cover_cost(&sys, a(1.0, 0.0), 2f64.ln() - 0.1, 0, 1, 6).unwrap();
        let hi = min_cover_cost(&sys, a(1.0, 0.0), 2f64.ln() + 0.1, 0, 1, 6).unwrap();
        assert!(lo > 1.0 && hi < 1.0);
    }

    /// Independent oracle: exhaustive min-cost cover over the explicit
    /// cylinder tree, no state collapsing.
    fn brute_force_min_cover(
        sys: &SymbolicSystem,
        w: WeightVector,
        s: f64,
        k: usize,
        min_order: usize,
        depth_cap: usize,
    ) -> f64 {
        let mut specs = Vec::new();
        let mut n = min_order;
        while let Ok(spec) = ball_spec(w, n, k) {
            if spec.len2 > depth_cap {
                break;
            }
            specs.push(spec);
            n += 1;
        }
        let levels: Vec<Vec<WeightedCylinder>> = specs
            .iter()
            .map(|sp| sys.enumerate_weighted_cylinders(sp).unwrap())
            .collect();
        fn descend(
            sys: &SymbolicSystem,
            specs: &[WeightedBallSpec],
            levels: &[Vec<WeightedCylinder>],
            li: usize,
            cyl: &WeightedCylinder,
            s: f64,
            min_order: usize,
        ) -> f64 {
            let ball = (-s * (min_order + li) as f64).exp();
            if li + 1 == levels.len() {
                return ball;
            }
            // Children: next-level cylinders whose truncation is `cyl`.
            let next_spec = &specs[li + 1];
            let spec = &specs[li];
            let mut sum = 0.0;
            for child in &levels[li + 1] {
                let prefix_match = child.prefix[..spec.len1] == cyl.prefix[..];
                if !prefix_match {
                    continue;
                }
                let window_match = (spec.len1..spec.len2).all(|p| {
                    let sym = if p < next_spec.len1 {
                        sys.code().apply(child.prefix[p])
                    } else {
                        child.window[p - next_spec.len1]
                    };
                    sym == cyl.window[p - spec.len1]
                });
                if window_match {
                    sum += descend(sys, specs, levels, li + 1, child, s, min_order);
                }
            }
            ball.min(sum)
        }
        levels[0]
            .iter()
            .map(|c| descend(sys, &specs, &levels, 0, c, s, min_order))
            .sum()
    }

    #[test]
    fn dp_matches_brute_force_oracle() {
        let weighted = a(1.0, 1.0);
        let plain = a(1.0, 0.0);
        let cases: Vec<(SymbolicSystem, WeightVector, usize)> = vec![
            (full2(), plain, 5),
            (three_digit(), weighted, 6),
            (
                SymbolicSystem::identity(Sft::golden_mean()),
                plain,
                6,
            ),
            (three_digit(), a(0.5, 0.7), 6),
        ];
        for (sys, w, depth) in &cases {
            for s in [0.3, 0.7, 1.2, 1.9] {
                let dp = min_cover_cost(sys, *w, s, 0, 1, *depth).unwrap();
                let brute = brute_force_min_cover(sys, *w, s, 0, 1, *depth);
                assert!(
                    (dp - brute).abs() < 1e-9,
                    "s={s} depth={depth}: dp={dp} brute={brute}"
                );
            }
        }
        // Also with nontrivial min order and resolution.
        let sys = three_digit();
        for s in [1.0, 1.6] {
            let dp = min_cover_cost(&sys, a(1.0, 1.0), s, 1, 2, 8).unwrap();
            let brute = brute_force_min_cover(&sys, a(1.0, 1.0), s, 1, 2, 8);
            assert!((dp - brute).abs() < 1e-9);
        }
    }

    #[test]
    fn dp_matches_oracle_on_proper_factor_target() {
        // Proper SFT source with a proper SFT image: window realizability
        // pruning is active on both sides.
        let source = crate::symbolic::make_sft(
            3,
            vec![
                vec![true, true, false],
                vec![true, false, true],
                vec![false, true, true],
            ],
        )
        .unwrap();
        let table = vec![0u8, 1, 1];
        let target = crate::io::induced_target(&source, &table).unwrap();
        let sys = SymbolicSystem::new(source, target, table).unwrap();
        for (w, k, depth) in [(a(1.0, 1.0), 0usize, 8usize), (a(0.6, 0.8), 1, 8)] {
            for s in [0.4, 0.9, 1.5] {
                let dp = min_cover_cost(&sys, w, s, k, 1, depth).unwrap();
                let brute = brute_force_min_cover(&sys, w, s, k, 1, depth);
                assert!(
                    (dp - brute).abs() < 1e-9,
                    "s={s} k={k}: dp={dp} brute={brute}"
                );
            }
        }
    }

    #[test]
    fn dp_matches_oracle_with_fast_first_coordinate() {
        // a1 > 1 makes the point window grow by two symbols per order.
        let sys = three_digit();
        let w = a(2.0, 0.5);
        for s in [1.0, 2.4, 3.4] {
            let dp = min_cover_cost(&sys, w, s, 0, 1, 8).unwrap();
            let brute = brute_force_min_cover(&sys, w, s, 0, 1, 8);
            assert!((dp - brute).abs() < 1e-9, "s={s}: dp={dp} brute={brute}");
        }
        let gm = SymbolicSystem::identity(Sft::golden_mean());
        let w2 = a(1.7, 0.0);
        for s in [0.5, 1.0] {
            let dp = min_cover_cost(&gm, w2, s, 1, 1, 9).unwrap();
            let brute = brute_force_min_cover(&gm, w2, s, 1, 1, 9);
            assert!((dp - brute).abs() < 1e-9, "s={s}: dp={dp} brute={brute}");
        }
    }

    #[test]
    fn deeper_truncation_never_raises_the_cost() {
        // The one-sided truncation bias: at fixed minimum order, admitting
        // deeper balls can only lower the optimal cost.
        let sys = three_digit();
        let w = a(1.0, 1.0);
        for s in [1.5, 1.75, 2.0] {
            let mut prev = f64::INFINITY;
            for depth in [4usize, 8, 12, 16, 20] {
                let cost = min_cover_cost(&sys, w, s, 0, 1, depth).unwrap();
                assert!(cost <= prev + 1e-12, "s={s} depth={depth}: {cost} > {prev}");
                prev = cost;
            }
        }
    }

    #[test]
    fn weighted_three_digit_crossing_near_closed_form() {
        // Cost straddles 1 around the closed-form critical value
        // 2 log(1 + sqrt 2) when N tracks the depth cap.
        let sys = three_digit();
        let w = a(1.0, 1.0);
        let low = min_cover_cost(&sys, w, 1.70, 0, 8, 20).unwrap();
        let high = min_cover_cost(&sys, w, 1.85, 0, 8, 20).unwrap();
        assert!(low > 1.0, "cost at 1.70 was {low}");
        assert!(high < 1.0, "cost at 1.85 was {high}");
    }

    #[test]
    fn critical_exponent_full_shift() {
        let sys = full2();
        let rep = critical_exponent(&sys, a(1.0, 0.0), 0, 8, 10, 1e-3).unwrap();
        assert!(rep.bracket.width() <= 1e-3 + 1e-12);
        assert!(
            (rep.bracket.midpoint() - 2f64.ln()).abs() < 1e-3,
            "bracket {:?}",
            rep.bracket
        );
        assert!(rep.bracket.cost_low >= 1.0 && rep.bracket.cost_high < 1.0);
    }

    #[test]
    fn critical_exponent_golden_mean_vs_parry_oracle() {
        let sys = SymbolicSystem::identity(Sft::golden_mean());
        let rep = critical_exponent(&sys, a(1.0, 0.0), 0, 18, 20, 1e-3).unwrap();
        let target = crate::measures::adjacency_spectral_radius(sys.source()).ln();
        assert!(
            (rep.bracket.midpoint() - target).abs() < 0.02,
            "bracket {:?} vs {target}",
            rep.bracket
        );
    }

    #[test]
    fn critical_exponent_zero_entropy() {
        // Single fixed point: one symbol with a self-loop.
        let sys = SymbolicSystem::identity(Sft::full_shift(1).unwrap());
        let rep = critical_exponent(&sys, a(1.0, 0.0), 0, 1, 8, 1e-3).unwrap();
        assert_eq!(rep.bracket.s_low, 0.0);
        assert_eq!(rep.bracket.s_high, 0.0);
    }

    #[test]
    fn cost_monotone_in_min_order() {
        let sys = three_digit();
        let w = a(1.0, 1.0);
        let s = 1.75;
        let mut prev = 0.0;
        for min_order in 1..=4 {
            let c = min_cover_cost(&sys, w, s, 0, min_order, 10).unwrap();
            assert!(c >= prev - 1e-12, "N={min_order}: {c} < {prev}");
            prev = c;
        }
    }

    #[test]
    fn sub_sft_never_increases_exponent() {
        // golden-mean subshift inside the full 2-shift
        let full = full2();
        let gm = SymbolicSystem::identity(Sft::golden_mean());
        let rep_full = critical_exponent(&full, a(1.0, 0.0), 0, 8, 10, 1e-3).unwrap();
        let rep_gm = critical_exponent(&gm, a(1.0, 0.0), 0, 8, 10, 1e-3).unwrap();
        assert!(rep_gm.bracket.midpoint() <= rep_full.bracket.midpoint() + 1e-9);
    }

    #[test]
    fn subadditivity_over_root_splits() {
        let sys = three_digit();
        let w = a(1.0, 1.0);
        let dp = CoverDp::build(&sys, w, 0, 1, 8).unwrap();
        let roots = dp.root_cylinders().unwrap();
        let s = 1.5;
        let all = dp.cost_for_targets(s, &roots).unwrap();
        let (z1, z2) = roots.split_at(roots.len() / 2);
        let c1 = dp.cost_for_targets(s, z1).unwrap();
        let c2 = dp.cost_for_targets(s, z2).unwrap();
        assert!(all <= c1 + c2 + 1e-12);
        // Overlapping split: first two thirds and last two thirds.
        let z3 = &roots[..roots.len() * 2 / 3];
        let z4 = &roots[roots.len() / 3..];
        let c3 = dp.cost_for_targets(s, z3).unwrap();
        let c4 = dp.cost_for_targets(s, z4).unwrap();
        assert!(all <= c3 + c4 + 1e-12);
    }

    #[test]
    fn fractional_cost_examples() {
        // Full 2-shift at the balance point: the integral optimum is already
        // fractional-optimal.
        let sys = full2();
        let v = fractional_cover_cost(&sys, a(1.0, 0.0), 2f64.ln(), 0, 1, 4).unwrap();
        assert!((v - 1.0).abs() < 1e-9, "lp value {v}");

        // One-symbol system with the depth cap admitting only order N:
        // the single order-N ball.
        let one = SymbolicSystem::identity(Sft::full_shift(1).unwrap());
        let s = 0.7;
        let v = fractional_cover_cost(&one, a(1.0, 0.0), s, 0, 2, 2).unwrap();
        assert!((v - (-2.0 * s).exp()).abs() < 1e-9);
        // With deeper balls admitted, the deepest one is cheapest.
        let v6 = fractional_cover_cost(&one, a(1.0, 0.0), s, 0, 2, 6).unwrap();
        assert!((v6 - (-6.0 * s).exp()).abs() < 1e-9);
    }

    #[test]
    fn fractional_cap_refusal() {
        let sys = full2();
        // depth 12 -> 4096 leaves > 512
        assert!(matches!(
            fractional_cover_cost(&sys, a(1.0, 0.0), 0.5, 0, 1, 12),
            Err(Error::Refusal(_))
        ));
    }

    #[test]
    fn fractional_below_integral_on_examples() {
        let sys = three_digit();
        let w = a(1.0, 1.0);
        for s in [0.8, 1.4, 1.9] {
            let frac = fractional_cover_cost(&sys, w, s, 0, 1, 6).unwrap();
            let full = min_cover_cost(&sys, w, s, 0, 1, 6).unwrap();
            assert!(frac <= full + 1e-9, "s={s}: {frac} > {full}");
        }
    }

    #[test]
    fn katok_covering_number_examples() {
        // Uniform 2-shift, delta = 0.5, n = 4: need more than 8 of the 16
        // sixteenth-cylinders.
        let sys = full2();
        let m = Measure::Bernoulli(BernoulliMeasure::uniform(2).unwrap());
        let n9 = katok_covering_number(&sys, &m, a(1.0, 0.0), 4, 0, 0.5).unwrap();
        assert_eq!(n9, 9);

        // Exhaustive oracle at the same spot: no 8-subset reaches 1/2.
        // All cylinders have mass 1/16, so any 8 sum to exactly 1/2 (not >).
        assert!(8.0 * (1.0 / 16.0) <= 0.5);

        // delta near 1: one ball suffices.
        let n1 = katok_covering_number(&sys, &m, a(1.0, 0.0), 4, 0, 0.99).unwrap();
        assert_eq!(n1, 1);

        // Deterministic measure: a single ball carries all the mass.
        let d = Measure::Bernoulli(BernoulliMeasure::new(vec![1.0, 0.0]).unwrap());
        for n in 1..=6 {
            assert_eq!(katok_covering_number(&sys, &d, a(1.0, 0.0), n, 0, 0.5).unwrap(), 1);
        }

        // delta outside (0,1) rejected.
        assert!(katok_covering_number(&sys, &m, a(1.0, 0.0), 4, 0, 0.0).is_err());
        assert!(katok_covering_number(&sys, &m, a(1.0, 0.0), 4, 0, 1.0).is_err());
    }

    #[test]
    fn katok_number_brute_force_tiny() {
        // Non-uniform measure: compare greedy against subset brute force.
        let sys = full2();
        let m = Measure::Bernoulli(BernoulliMeasure::new(vec![0.7, 0.3]).unwrap());
        let w = a(1.0, 0.0);
        let delta = 0.4;
        let n = 3;
        let greedy = katok_covering_number(&sys, &m, w, n, 0, delta).unwrap();
        let spec = ball_spec(w, n, 0).unwrap();
        let cyls = sys.enumerate_weighted_cylinders(&spec).unwrap();
        let masses: Vec<f64> = cyls
            .iter()
            .map(|c| weighted_window_measure(&m, sys.code(), &c.prefix, &c.window).unwrap())
            .collect();
        let mut best = usize::MAX;
        for mask in 1u32..(1 << masses.len()) {
            let total: f64 = masses
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &p)| p)
                .sum();
            if total > 1.0 - delta {
                best = best.min(mask.count_ones() as usize);
            }
        }
        assert_eq!(greedy, best);
    }

    #[test]
    fn katok_monotonicities() {
        let sys = full2();
        let m = Measure::Bernoulli(BernoulliMeasure::new(vec![0.6, 0.4]).unwrap());
        let w = a(1.0, 0.0);
        // Nonincreasing in delta.
        let mut prev = usize::MAX;
        for delta in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let c = katok_covering_number(&sys, &m, w, 5, 0, delta).unwrap();
            assert!(c <= prev);
            prev = c;
        }
        // Nondecreasing in n.
        let mut prev = 0;
        for n in 1..=8 {
            let c = katok_covering_number(&sys, &m, w, n, 0, 0.4).unwrap();
            assert!(c >= prev);
            prev = c;
        }
        // Nondecreasing in k.
        let mut prev = 0;
        for k in 0..=3 {
            let c = katok_covering_number(&sys, &m, w, 5, k, 0.4).unwrap();
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn exponent_moves_little_between_resolutions() {
        // Coarsening the resolution from 2^-k to 2^-(k-3) offsets every
        // window by three symbols; at truncation depth D the exponent shifts
        // by about h * 3 / n_max. Assert the brackets stay within that band.
        let gm = SymbolicSystem::identity(Sft::golden_mean());
        let w = a(1.0, 0.0);
        let depth = 40;
        let coarse = critical_exponent(&gm, w, 0, 35, depth, 1e-3).unwrap();
        let fine = critical_exponent(&gm, w, 3, 35, depth, 1e-3).unwrap();
        let shift = (coarse.bracket.midpoint() - fine.bracket.midpoint()).abs();
        assert!(shift <= 0.08, "resolution shift {shift}");
    }

    #[test]
    fn katok_estimate_slope_near_log2() {
        let sys = full2();
        let m = Measure::Bernoulli(BernoulliMeasure::uniform(2).unwrap());
        let grid: Vec<usize> = (4..=14).collect();
        // Closed-form oracle for the counts themselves: more than half of
        // the 2^n equal cylinders are needed, so N(n) = 2^(n-1) + 1.
        for n in 4..=10usize {
            let c = katok_covering_number(&sys, &m, a(1.0, 0.0), n, 0, 0.5).unwrap();
            assert_eq!(c, (1 << (n - 1)) + 1);
        }
        let est = katok_entropy_estimate(&sys, &m, a(1.0, 0.0), 0, &grid, 0.5).unwrap();
        assert!(
            (est.slope - 2f64.ln()).abs() < 0.02,
            "slope {}",
            est.slope
        );
        // Deterministic measure: slope 0.
        let d = Measure::Bernoulli(BernoulliMeasure::new(vec![1.0, 0.0]).unwrap());
        let est0 = katok_entropy_estimate(&sys, &d, a(1.0, 0.0), 0, &grid, 0.5).unwrap();
        assert_eq!(est0.slope, 0.0);
    }

    #[test]
    fn explicit_cover_verification() {
        let sys = full2();
        let w = a(1.0, 0.0);
        // The four order-2 cylinders cover depth-3 words.
        let cover = Cover {
            resolution_k: 0,
            min_order: 2,
            balls: vec![
                CoverBall { center: vec![0, 0, 0], order: 2 },
                CoverBall { center: vec![0, 1, 0], order: 2 },
                CoverBall { center: vec![1, 0, 0], order: 2 },
                CoverBall { center: vec![1, 1, 0], order: 2 },
            ],
        };
        assert!(cover.verify_covers(&sys, w, 3).unwrap());
        let partial = Cover {
            resolution_k: 0,
            min_order: 2,
            balls: vec![CoverBall { center: vec![0, 0, 0], order: 2 }],
        };
        partial.validate().unwrap();
        let undeclared = Cover {
            resolution_k: 0,
            min_order: 3,
            balls: vec![CoverBall { center: vec![0, 0, 0], order: 2 }],
        };
        assert!(undeclared.validate().is_err());
        assert!(!partial.verify_covers(&sys, w, 3).unwrap());

        let frac = FractionalCover {
            resolution_k: 0,
            entries: vec![
                (CoverBall { center: vec![0, 0, 0], order: 1 }, 0.5),
                (CoverBall { center: vec![0, 0, 0], order: 1 }, 0.5),
                (CoverBall { center: vec![1, 0, 0], order: 1 }, 1.0),
            ],
        };
        assert!(frac.verify_dominates(&sys, w, 3).unwrap());
    }
}
