//! The measure side of the two-sided comparison: maximize
//! `a1 h(mu) + a2 h(mu o code^-1)` over product measures, with a closed form
//! for full shifts, a projected-gradient ascent, a brute-force grid oracle,
//! and the gap report pairing the maximum against the cover-side exponent.

use crate::cover::{critical_exponent, CoverParams, CriticalExponentReport};
use crate::error::{Error, Result};
use crate::measures::{
    bernoulli_entropy, hidden_markov_entropy_bounds, markov_entropy, parry_measure,
    pushforward_bernoulli, weighted_measure_entropy, BernoulliMeasure, EntropyInterval,
    MarkovMeasure, Measure,
};
use crate::rng::SplitMix64;
use crate::symbolic::{FactorCode, SymbolicSystem, WeightVector};
use serde::Serialize;

/// The partition of the source alphabet into code fibers, with their sizes.
#[derive(Debug, Clone, Serialize)]
pub struct ColumnStructure {
    pub fibers: Vec<Vec<u8>>,
    pub counts: Vec<usize>,
}

impl ColumnStructure {
    pub fn from_code(code: &FactorCode) -> Result<Self> {
        let fibers = code.fibers();
        if fibers.iter().any(|f| f.is_empty()) {
            return Err(Error::invalid("every column must contain a symbol"));
        }
        let counts = fibers.iter().map(|f| f.len()).collect();
        Ok(ColumnStructure { fibers, counts })
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Gradient,
    Grid,
    MarkovAscent,
}

#[derive(Debug, Clone, Serialize)]
pub struct VariationalResult {
    pub optimizer: BernoulliMeasure,
    pub value: f64,
    pub method: Method,
    pub converged: bool,
}

impl VariationalResult {
    /// Self-consistency: the reported value must be the weighted entropy of
    /// the reported optimizer.
    fn checked(
        optimizer: BernoulliMeasure,
        value: f64,
        method: Method,
        converged: bool,
        a: WeightVector,
        code: &FactorCode,
    ) -> Result<Self> {
        let recomputed = weighted_measure_entropy(a, &Measure::Bernoulli(optimizer.clone()), code)?
            .midpoint();
        if (recomputed - value).abs() > 1e-9 {
            return Err(Error::internal(format!(
                "variational value {value} inconsistent with optimizer entropy {recomputed}"
            )));
        }
        Ok(VariationalResult {
            optimizer,
            value,
            method,
            converged,
        })
    }
}

/// The objective `a1 H(p) + a2 H(q(p))` on the simplex.
pub fn objective(p: &[f64], code: &FactorCode, a: WeightVector) -> Result<f64> {
    let m = BernoulliMeasure::new(p.to_vec())?;
    let q = pushforward_bernoulli(&m, code)?;
    Ok(a.a1 * bernoulli_entropy(&m) + a.a2 * bernoulli_entropy(&q))
}

/// Closed-form optimum over product measures on a full shift: within each
/// column the probabilities are equal, across columns
/// `q_j proportional to N_j^(a1/(a1+a2))`, and the value is
/// `(a1+a2) log sum_j N_j^(a1/(a1+a2))`.
pub fn lagrange_optimum(
    cols: &ColumnStructure,
    a: WeightVector,
    code: &FactorCode,
) -> Result<VariationalResult> {
    let theta = a.a1 / (a.a1 + a.a2);
    let weights: Vec<f64> = cols.counts.iter().map(|&n| (n as f64).powf(theta)).collect();
    let z: f64 = weights.iter().sum();
    let value = (a.a1 + a.a2) * z.ln();

    let mut probs = vec![0.0; cols.alphabet_size()];
    for (fiber, w) in cols.fibers.iter().zip(&weights) {
        let q = w / z;
        for &s in fiber {
            probs[s as usize] = q / fiber.len() as f64;
        }
    }
    // Guard the simplex sum against accumulated rounding.
    let sum: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= sum);
    VariationalResult::checked(
        BernoulliMeasure::new(probs)?,
        value,
        Method::ClosedForm,
        true,
        a,
        code,
    )
}

const GRADIENT_ITER_CAP: usize = 20_000;

/// Projected-gradient ascent of the concave objective on the simplex
/// interior. The seed only perturbs the interior start; the optimum is
/// unique in `q` and reached from any interior point.
pub fn projected_gradient(
    code: &FactorCode,
    a: WeightVector,
    tol: f64,
    seed: u64,
) -> Result<VariationalResult> {
    if tol <= 0.0 {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let d = code.table().len();
    let mut rng = SplitMix64::new(seed);
    let mut p: Vec<f64> = (0..d).map(|_| 1.0 + 0.01 * rng.next_f64()).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);

    let grad = |p: &[f64]| -> Result<Vec<f64>> {
        let m = BernoulliMeasure::new(p.to_vec())?;
        let q = pushforward_bernoulli(&m, code)?;
        Ok((0..d)
            .map(|i| {
                let qi = q.probs()[code.apply(i as u8) as usize];
                -a.a1 * (1.0 + p[i].ln()) - a.a2 * (1.0 + qi.ln())
            })
            .collect())
    };

    let mut value = objective(&p, code, a)?;
    let mut converged = false;
    for _ in 0..GRADIENT_ITER_CAP {
        let g = grad(&p)?;
        let mean = g.iter().sum::<f64>() / d as f64;
        let dir: Vec<f64> = g.iter().map(|x| x - mean).collect();
        let norm = dir.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        if norm < tol {
            converged = true;
            break;
        }
        // Largest step keeping the iterate strictly interior, then backtrack.
        let mut step = 1.0f64;
        for i in 0..d {
            if dir[i] < 0.0 {
                step = step.min(-0.9 * p[i] / dir[i]);
            }
        }
        loop {
            let cand: Vec<f64> = p.iter().zip(&dir).map(|(&x, &dx)| x + step * dx).collect();
            let v = objective(&cand, code, a)?;
            if v > value {
                p = cand;
                value = v;
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                converged = norm < 1e-6;
                break;
            }
        }
        if converged {
            break;
        }
    }
    VariationalResult::checked(
        BernoulliMeasure::new(p)?,
        value,
        Method::Gradient,
        converged,
        a,
        code,
    )
}

pub const GRID_ALPHABET_CAP: usize = 5;
pub const GRID_STEP_CAP: f64 = 0.02;

/// Exhaustive simplex-grid maximum, lexicographically tie-broken for
/// reproducibility. The independent brute-force oracle; test-grade only.
pub fn grid_oracle(code: &FactorCode, a: WeightVector, step: f64) -> Result<VariationalResult> {
    let d = code.table().len();
    if d > GRID_ALPHABET_CAP {
        return Err(Error::refusal(format!(
            "grid oracle limited to alphabets of size <= {GRID_ALPHABET_CAP}, got {d}"
        )));
    }
    if !(step > 0.0 && step <= GRID_STEP_CAP) {
        return Err(Error::invalid(format!(
            "grid step must be in (0, {GRID_STEP_CAP}], got {step}"
        )));
    }
    let m = (1.0 / step).round() as usize;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut counts = vec![0usize; d];
    grid_rec(&mut counts, 0, m, &mut |counts: &[usize]| {
        let p: Vec<f64> = counts.iter().map(|&c| c as f64 / m as f64).collect();
        if let Ok(v) = objective(&p, code, a) {
            let better = match &best {
                None => true,
                Some((bv, bp)) => v > *bv || ((v - bv).abs() < 1e-15 && p < *bp),
            };
            if better {
                best = Some((v, p));
            }
        }
    });
    let (value, probs) = best.ok_or_else(|| Error::internal("empty grid"))?;
    VariationalResult::checked(
        BernoulliMeasure::new(probs)?,
        value,
        Method::Grid,
        true,
        a,
        code,
    )
}

fn grid_rec(counts: &mut Vec<usize>, i: usize, remaining: usize, f: &mut impl FnMut(&[usize])) {
    if i + 1 == counts.len() {
        counts[i] = remaining;
        f(counts);
        return;
    }
    for c in 0..=remaining {
        counts[i] = c;
        grid_rec(counts, i + 1, remaining - c, f);
    }
}

/// The measure-side optimum for a general system: closed form on full
/// shifts; on proper SFTs an ascent over memory-1 Markov measures with the
/// factor entropy evaluated as an interval. The value is always a certified
/// lower bound for the weighted entropy; attainment is only claimed in the
/// closed-form case.
#[derive(Debug, Clone, Serialize)]
pub struct VariationalValue {
    pub interval: EntropyInterval,
    pub method: Method,
    pub optimizer: Measure,
}

pub fn variational_value(system: &SymbolicSystem, a: WeightVector) -> Result<VariationalValue> {
    if system.source().is_full_shift() {
        let cols = ColumnStructure::from_code(system.code())?;
        let r = lagrange_optimum(&cols, a, system.code())?;
        return Ok(VariationalValue {
            interval: EntropyInterval::exact(r.value),
            method: Method::ClosedForm,
            optimizer: Measure::Bernoulli(r.optimizer),
        });
    }
    if a.a2 == 0.0 {
        // Maximal-entropy (Parry) measure is exactly optimal.
        let parry = parry_measure(system.source())?;
        let v = a.a1 * markov_entropy(&parry);
        return Ok(VariationalValue {
            interval: EntropyInterval::exact(v),
            method: Method::ClosedForm,
            optimizer: Measure::Markov(parry),
        });
    }
    if system.code().is_identity() {
        // Identity factor: objective is (a1+a2) h, again maximized by Parry.
        let parry = parry_measure(system.source())?;
        let v = (a.a1 + a.a2) * markov_entropy(&parry);
        return Ok(VariationalValue {
            interval: EntropyInterval::exact(v),
            method: Method::ClosedForm,
            optimizer: Measure::Markov(parry),
        });
    }
    markov_ascent(system, a)
}

/// Coordinate ascent over the rows of a Markov kernel supported on the SFT,
/// driving the midpoint of the interval objective. Small instances only.
fn markov_ascent(system: &SymbolicSystem, a: WeightVector) -> Result<VariationalValue> {
    let n = system.source().size();
    let start = parry_measure(system.source())?;
    let mut rows: Vec<Vec<f64>> = start.stochastic().to_vec();

    let eval = |rows: &[Vec<f64>]| -> Result<(f64, EntropyInterval)> {
        let m = MarkovMeasure::new(rows.to_vec())?;
        let h = markov_entropy(&m);
        let b = hidden_markov_entropy_bounds(&m, system.code(), 10, 1e-10)?;
        let i = EntropyInterval::new(
            a.a1 * h + a.a2 * b.interval.lower,
            a.a1 * h + a.a2 * b.interval.upper,
        )?;
        Ok((i.midpoint(), i))
    };
    let (mut best, mut interval) = eval(&rows)?;
    let mut step = 0.25f64;
    for _ in 0..60 {
        let mut improved = false;
        for i in 0..n {
            for j in 0..n {
                if !system.source().allowed(i as u8, j as u8) {
                    continue;
                }
                for sign in [1.0f64, -1.0] {
                    let mut cand = rows.clone();
                    cand[i][j] = (cand[i][j] + sign * step).clamp(1e-9, 1.0);
                    let s: f64 = cand[i].iter().sum();
                    cand[i].iter_mut().for_each(|x| *x /= s);
                    // Keep support inside the SFT.
                    let mut valid = true;
                    for (jj, &p) in cand[i].iter().enumerate() {
                        if p > 0.0 && !system.source().allowed(i as u8, jj as u8) {
                            valid = false;
                        }
                    }
                    if !valid {
                        continue;
                    }
                    if let Ok((v, iv)) = eval(&cand) {
                        if v > best + 1e-12 {
                            best = v;
                            interval = iv;
                            rows = cand;
                            improved = true;
                        }
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-6 {
                break;
            }
        }
    }
    Ok(VariationalValue {
        interval,
        method: Method::MarkovAscent,
        optimizer: Measure::Markov(MarkovMeasure::new(rows)?),
    })
}

/// The two-sided comparison: the measure-side maximum against the
/// cover-side exponent bracket.
#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub a: WeightVector,
    pub variational: VariationalValue,
    pub exponent: CriticalExponentReport,
    /// |bracket midpoint - variational midpoint|
    pub gap: f64,
    /// variational midpoint - bracket upper endpoint; <= slack certifies the
    /// lower-bound direction.
    pub lower_bound_margin: f64,
}

pub fn variational_gap_report(
    system: &SymbolicSystem,
    a: WeightVector,
    params: &CoverParams,
) -> Result<GapReport> {
    let variational = variational_value(system, a)?;
    let exponent = critical_exponent(
        system,
        a,
        params.resolution_k,
        params.min_order,
        params.depth_cap,
        params.tol,
    )?;
    let gap = (exponent.bracket.midpoint() - variational.interval.midpoint()).abs();
    let lower_bound_margin = variational.interval.midpoint() - exponent.bracket.s_high;
    Ok(GapReport {
        a,
        variational,
        exponent,
        gap,
        lower_bound_margin,
    })
}
