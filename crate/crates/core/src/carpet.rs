//! Self-affine invariant sets on the 2-torus under `(x1, x2) |->
//! (m1 x1, m2 x2 + phi(x1))`: the induced weight vector, the dimension
//! formula, digit coding of points, skew orbits, and an anisotropic
//! box-counting estimator used as a sanity cross-check.

use crate::error::{Error, Result};
use crate::symbolic::WeightVector;
use crate::variational::{lagrange_optimum, ColumnStructure};
use crate::symbolic::{Sft, SymbolicSystem};
use serde::Serialize;
use std::collections::HashSet;

/// A digit-defined invariant set for the diagonal endomorphism
/// `diag(m1, m2)` with `2 <= m1 <= m2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CarpetSpec {
    pub m1: u32,
    pub m2: u32,
    pub digits: Vec<(u32, u32)>,
}

impl CarpetSpec {
    pub fn new(m1: u32, m2: u32, mut digits: Vec<(u32, u32)>) -> Result<Self> {
        if m1 < 2 || m2 < m1 {
            return Err(Error::invalid(format!(
                "need 2 <= m1 <= m2, got ({m1}, {m2})"
            )));
        }
        if digits.is_empty() {
            return Err(Error::invalid("digit set must be nonempty"));
        }
        digits.sort();
        digits.dedup();
        for &(i, j) in &digits {
            if i >= m1 || j >= m2 {
                return Err(Error::invalid(format!(
                    "digit ({i}, {j}) outside [0,{m1}) x [0,{m2})"
                )));
            }
        }
        Ok(CarpetSpec { m1, m2, digits })
    }

    /// Digits per first coordinate: the fiber sizes of the projection.
    pub fn column_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.m1 as usize];
        for &(i, _) in &self.digits {
            counts[i as usize] += 1;
        }
        counts
    }

    /// Nonempty columns in order, with their digit counts.
    pub fn occupied_columns(&self) -> Vec<(u32, usize)> {
        self.column_counts()
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .map(|(i, c)| (i as u32, c))
            .collect()
    }

    /// The symbolic system of the digit shift: one source symbol per digit,
    /// coded by column onto the occupied-column alphabet.
    pub fn symbolic_system(&self) -> Result<SymbolicSystem> {
        let occupied = self.occupied_columns();
        let col_index = |i: u32| occupied.iter().position(|&(c, _)| c == i).unwrap() as u8;
        let source = Sft::full_shift(self.digits.len())?;
        let target = Sft::full_shift(occupied.len())?;
        let table: Vec<u8> = self.digits.iter().map(|&(i, _)| col_index(i)).collect();
        SymbolicSystem::new(source, target, table)
    }
}

/// A point of the torus with coordinates in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TorusPoint {
    pub x1: f64,
    pub x2: f64,
}

impl TorusPoint {
    pub fn new(x1: f64, x2: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&x1) || !(0.0..1.0).contains(&x2) {
            return Err(Error::invalid(format!(
                "torus coordinates must lie in [0,1): ({x1}, {x2})"
            )));
        }
        Ok(TorusPoint { x1, x2 })
    }
}

/// The weight vector the carpet geometry induces:
/// `a1 = 1/log m2`, `a2 = 1/log m1 - 1/log m2`. `m1 <= m2` makes `a2 >= 0`.
pub fn carpet_weights(spec: &CarpetSpec) -> WeightVector {
    let a1 = 1.0 / (spec.m2 as f64).ln();
    let a2 = 1.0 / (spec.m1 as f64).ln() - a1;
    WeightVector::new(a1, a2).expect("m1 <= m2 guarantees a valid weight vector")
}

/// Hausdorff dimension of the carpet:
/// `log_m1 sum_j N_j^(log m1 / log m2)` over column counts `N_j`.
/// Internally cross-checked against the weighted-entropy optimum under
/// [`carpet_weights`] divided into the same closed form.
pub fn carpet_dimension(spec: &CarpetSpec) -> Result<f64> {
    let ratio = (spec.m1 as f64).ln() / (spec.m2 as f64).ln();
    let sum: f64 = spec
        .occupied_columns()
        .iter()
        .map(|&(_, n)| (n as f64).powf(ratio))
        .sum();
    let dim = sum.ln() / (spec.m1 as f64).ln();

    // Consistency with the variational optimum under the carpet weights.
    let sys = spec.symbolic_system()?;
    let cols = ColumnStructure::from_code(sys.code())?;
    let opt = lagrange_optimum(&cols, carpet_weights(spec), sys.code())?;
    if (opt.value - dim).abs() > 1e-9 {
        return Err(Error::internal(format!(
            "dimension formula {dim} disagrees with variational value {}",
            opt.value
        )));
    }
    Ok(dim)
}

/// Expand a digit sequence into the torus point orbit it codes:
/// `p_t = (sum_r i_(t+r) m1^(-r-1), sum_r j_(t+r) m2^(-r-1))`.
pub fn encode_orbit(
    spec: &CarpetSpec,
    digit_sequence: &[(u32, u32)],
    length: usize,
) -> Result<Vec<TorusPoint>> {
    if length > digit_sequence.len() {
        return Err(Error::invalid(format!(
            "requested {length} orbit points from {} digits",
            digit_sequence.len()
        )));
    }
    for d in digit_sequence {
        if !spec.digits.contains(d) {
            return Err(Error::invalid(format!("digit {d:?} not in the carpet spec")));
        }
    }
    let mut points = Vec::with_capacity(length);
    for t in 0..length {
        let mut x1 = 0.0f64;
        let mut x2 = 0.0f64;
        for (i, j) in digit_sequence[t..].iter().rev() {
            x1 = (x1 + *i as f64) / spec.m1 as f64;
            x2 = (x2 + *j as f64) / spec.m2 as f64;
        }
        points.push(TorusPoint::new(x1.min(1.0 - f64::EPSILON), x2.min(1.0 - f64::EPSILON))?);
    }
    Ok(points)
}

/// Leading `depth` digits of the expansion of `p` in base `(m1, m2)`,
/// choosing the expansion that is not eventually all-(m-1).
///
/// Extraction runs in exact 64-bit fixed point: an f64 in [0,1) is a dyadic
/// rational, so its digits are computed without rounding drift and
/// `decode(encode(w))` recovers `w` for any depth the f64 mantissa resolves.
pub fn decode_point(spec: &CarpetSpec, p: TorusPoint, depth: usize) -> Vec<(u32, u32)> {
    let mut digits = Vec::with_capacity(depth);
    // x = n / 2^63 exactly (f64 carries at most 53 significant bits). The
    // +2^10 bias is one encode-rounding ulp upward: points whose expansion
    // terminates sit exactly on a digit boundary, and the bias resolves them
    // to the terminating (not eventually all-(m-1)) expansion regardless of
    // which way the f64 rounding went.
    let scale = (1u128) << 63;
    let bias = 1u128 << 10;
    let mut n1 = ((p.x1 * scale as f64) as u128 + bias).min(scale - 1);
    let mut n2 = ((p.x2 * scale as f64) as u128 + bias).min(scale - 1);
    for _ in 0..depth {
        let v1 = n1 * spec.m1 as u128;
        let v2 = n2 * spec.m2 as u128;
        let d1 = (v1 >> 63) as u32;
        let d2 = (v2 >> 63) as u32;
        digits.push((d1.min(spec.m1 - 1), d2.min(spec.m2 - 1)));
        n1 = v1 & (scale - 1);
        n2 = v2 & (scale - 1);
    }
    digits
}

/// One of the skew maps `phi` used over the first coordinate. Orbit code
/// never differentiates phi, so a small named family plus piecewise-linear
/// tables covers everything the simulations need.
#[derive(Debug, Clone, Serialize)]
pub enum PhiMap {
    Zero,
    Constant(f64),
    Linear,
    /// Sorted breakpoints `(x, phi(x))`, linearly interpolated, clamped at
    /// the ends.
    PiecewiseLinear(Vec<(f64, f64)>),
}

impl PhiMap {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PhiMap::Zero => 0.0,
            PhiMap::Constant(c) => *c,
            PhiMap::Linear => x,
            PhiMap::PiecewiseLinear(pts) => {
                if pts.is_empty() {
                    return 0.0;
                }
                if x <= pts[0].0 {
                    return pts[0].1;
                }
                for w in pts.windows(2) {
                    if x <= w[1].0 {
                        let t = (x - w[0].0) / (w[1].0 - w[0].0);
                        return w[0].1 + t * (w[1].1 - w[0].1);
                    }
                }
                pts[pts.len() - 1].1
            }
        }
    }
}

/// Iterate `(x1, x2) |-> (m1 x1 mod 1, m2 x2 + phi(x1) mod 1)` for `n`
/// steps; the trajectory includes the initial point.
pub fn skew_orbit(spec: &CarpetSpec, phi: &PhiMap, p0: TorusPoint, n: usize) -> Vec<TorusPoint> {
    let mut orbit = Vec::with_capacity(n + 1);
    let mut p = p0;
    orbit.push(p);
    for _ in 0..n {
        p = skew_step(spec, phi, p);
        orbit.push(p);
    }
    orbit
}

pub fn skew_step(spec: &CarpetSpec, phi: &PhiMap, p: TorusPoint) -> TorusPoint {
    let x1 = (p.x1 * spec.m1 as f64).rem_euclid(1.0);
    let x2 = (p.x2 * spec.m2 as f64 + phi.eval(p.x1)).rem_euclid(1.0);
    TorusPoint { x1, x2 }
}

/// Anisotropic box counting adapted to `(m1, m2)`: at level `k` the plane is
/// cut into approximate squares of side `m2^-k` by refining the first
/// coordinate to depth `ceil(k log m2 / log m1)`. Returns the least-squares
/// slope of `log(occupied)` against `-log scale = k log m2`.
pub fn box_counting_dimension(
    spec: &CarpetSpec,
    sample: &[TorusPoint],
    scales: &[u32],
) -> Result<f64> {
    if scales.len() < 2 {
        return Err(Error::invalid("need at least 2 scales"));
    }
    if sample.is_empty() {
        return Err(Error::invalid("empty sample"));
    }
    let mut xs = Vec::with_capacity(scales.len());
    let mut ys = Vec::with_capacity(scales.len());
    let log_ratio = (spec.m2 as f64).ln() / (spec.m1 as f64).ln();
    for &k in scales {
        let l = (log_ratio * k as f64 - 1e-9).ceil() as u32;
        let f1 = (spec.m1 as f64).powi(l as i32);
        let f2 = (spec.m2 as f64).powi(k as i32);
        let mut boxes: HashSet<(u64, u64)> = HashSet::new();
        for p in sample {
            boxes.insert(((p.x1 * f1) as u64, (p.x2 * f2) as u64));
        }
        xs.push(k as f64 * (spec.m2 as f64).ln());
        ys.push((boxes.len() as f64).ln());
    }
    crate::cover::least_squares_slope(&xs, &ys)
}

/// The carpet's code file representation (`carpet m1 m2` plus digit lines)
/// lives in [`crate::io`]; this keeps a stable identity used by tests.
pub fn mcmullen_example() -> CarpetSpec {
    CarpetSpec::new(2, 3, vec![(0, 0), (1, 1), (1, 2)]).expect("static spec is valid")
}

/// Identity used by the acceptance suite: under the carpet weights the full
/// digit set has weighted entropy exactly 2.
pub fn full_digit_identity(m1: u32, m2: u32) -> Result<f64> {
    let spec = CarpetSpec::new(
        m1,
        m2,
        (0..m1).flat_map(|i| (0..m2).map(move |j| (i, j))).collect(),
    )?;
    let a = carpet_weights(&spec);
    Ok(a.a1 * ((m1 as f64) * (m2 as f64)).ln() + a.a2 * (m1 as f64).ln())
}
