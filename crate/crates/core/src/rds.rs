//! Bundle random dynamical systems over ergodic drivers: rotations and
//! Markov shifts downstairs, symbolic shifts or carpet skew maps upstairs,
//! composed along driver orbits. Includes fiber disintegrations with exact
//! invariance, per-fiber Katok entropy estimates with their integrated mean,
//! and the Frostman inequality checker.

use crate::carpet::{CarpetSpec, TorusPoint};
use crate::cover::{katok_entropy_estimate, KatokEstimate};
use crate::error::{Error, Result};
use crate::measures::{weighted_cylinder_log_measure_windows, BernoulliMeasure, MarkovMeasure, Measure};
use crate::rng::{split_seed, SplitMix64};
use crate::symbolic::{ball_spec, FactorCode, SymbolicSystem, WeightVector};
use serde::Serialize;

/// Named rotation angles that are exactly irrational; custom floats are
/// accepted but flagged, since every float is rational.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RotationAngle {
    /// Fractional part of the golden ratio, (sqrt 5 - 1) / 2.
    GoldenMean,
    /// sqrt 2 - 1.
    SilverMean,
    Custom(f64),
}

impl RotationAngle {
    pub fn value(&self) -> f64 {
        match self {
            RotationAngle::GoldenMean => (5f64.sqrt() - 1.0) / 2.0,
            RotationAngle::SilverMean => 2f64.sqrt() - 1.0,
            RotationAngle::Custom(a) => *a,
        }
    }

    pub fn irrationality_note(&self) -> Option<String> {
        match self {
            RotationAngle::Custom(a) => Some(format!(
                "alpha = {a} supplied as a float and is therefore rational; \
                 equidistribution holds only to the float's precision"
            )),
            _ => None,
        }
    }
}

/// The driving system: an irrational rotation of the circle or an ergodic
/// Markov shift observed through a finite window.
#[derive(Debug, Clone, Serialize)]
pub enum Driver {
    Rotation { alpha: RotationAngle },
    MarkovShift { measure: MarkovMeasure, window: usize },
}

impl Driver {
    pub fn rotation(alpha: RotationAngle) -> Result<Self> {
        let v = alpha.value();
        if !(0.0 < v && v < 1.0) {
            return Err(Error::invalid(format!("rotation angle must be in (0,1), got {v}")));
        }
        Ok(Driver::Rotation { alpha })
    }

    /// Requires irreducibility and aperiodicity of the positive-transition
    /// graph, so the shift is ergodic (in fact mixing).
    pub fn markov_shift(measure: MarkovMeasure, window: usize) -> Result<Self> {
        if window < 2 {
            return Err(Error::invalid("driver window must be >= 2"));
        }
        if !is_irreducible_aperiodic(measure.stochastic()) {
            return Err(Error::invalid(
                "driver chain must be irreducible and aperiodic".to_string(),
            ));
        }
        Ok(Driver::MarkovShift { measure, window })
    }
}

fn is_irreducible_aperiodic(p: &[Vec<f64>]) -> bool {
    let n = p.len();
    let edge = |i: usize, j: usize| p[i][j] > 0.0;
    // Irreducible: every state reaches every state.
    for start in 0..n {
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if edge(u, v) && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return false;
        }
    }
    // Aperiodic: gcd over edges of (level[u] + 1 - level[v]) with BFS levels.
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if edge(u, v) && level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g: i64 = 0;
    for u in 0..n {
        for v in 0..n {
            if edge(u, v) {
                let d = level[u] as i64 + 1 - level[v] as i64;
                g = gcd(g, d.abs());
            }
        }
    }
    g == 1
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// A point of the driver: an angle for rotations, a finite symbol window for
/// Markov shifts (the shift drops the first symbol, so windows shrink unless
/// orbits are pre-generated with [`driver_orbit`]).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DriverPoint {
    Angle(f64),
    Window(Vec<u8>),
}

/// The driver orbit `(omega, theta omega, ..., theta^(n-1) omega)`. For
/// Markov shifts the path is extended by seeded sampling so every returned
/// window keeps the driver's window length.
pub fn driver_orbit(
    driver: &Driver,
    omega0: &DriverPoint,
    n: usize,
    seed: u64,
) -> Result<Vec<DriverPoint>> {
    if n < 1 {
        return Err(Error::invalid("orbit length must be >= 1"));
    }
    match (driver, omega0) {
        (Driver::Rotation { alpha }, DriverPoint::Angle(w0)) => {
            let a = alpha.value();
            let mut out = Vec::with_capacity(n);
            let mut w = w0.rem_euclid(1.0);
            for _ in 0..n {
                out.push(DriverPoint::Angle(w));
                w = (w + a).rem_euclid(1.0);
            }
            Ok(out)
        }
        (Driver::MarkovShift { measure, window }, DriverPoint::Window(w0)) => {
            if w0.len() < *window {
                return Err(Error::invalid(format!(
                    "initial window shorter than the driver window {window}"
                )));
            }
            let mut path = w0.clone();
            let mut rng = SplitMix64::new(seed);
            let mut state = *path.last().unwrap() as usize;
            while path.len() < window + n - 1 {
                state = rng.sample_index(&measure.stochastic()[state]);
                path.push(state as u8);
            }
            Ok((0..n)
                .map(|i| DriverPoint::Window(path[i..i + window].to_vec()))
                .collect())
        }
        _ => Err(Error::invalid("driver point kind does not match the driver")),
    }
}

/// How the carpet skew constant depends on the driver point.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum SkewConstant {
    Zero,
    Constant(f64),
    /// `c(omega) = omega`; rotation drivers only.
    Omega,
}

/// The fiber family of the bundle. All symbolic families are kept
/// entropy-isospectral across `omega` so ground truth stays computable.
#[derive(Debug, Clone, Serialize)]
pub enum FiberFamily {
    /// The same shift with the same measure on every fiber.
    ConstantShift {
        system: SymbolicSystem,
        measure: Measure,
    },
    /// `f_omega = R(g(theta omega)) o shift o R(g(omega))^-1` for a finite
    /// list of symbol permutations selected measurably from `omega`.
    RelabeledShift {
        system: SymbolicSystem,
        base_measure: Measure,
        perms: Vec<Vec<u8>>,
    },
    /// `(x1, x2) |-> (m1 x1, m2 x2 + c(omega))` on the torus.
    CarpetSkew { spec: CarpetSpec, c: SkewConstant },
}

#[derive(Debug, Clone, Serialize)]
pub struct BundleRds {
    pub driver: Driver,
    pub fiber: FiberFamily,
}

/// A point of the fiber.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FiberPoint {
    Word(Vec<u8>),
    Torus(TorusPoint),
}

impl BundleRds {
    pub fn new(driver: Driver, fiber: FiberFamily) -> Result<Self> {
        if let FiberFamily::RelabeledShift { system, perms, .. } = &fiber {
            if perms.is_empty() {
                return Err(Error::invalid("need at least one permutation"));
            }
            for p in perms {
                let mut seen = vec![false; system.source().size()];
                if p.len() != system.source().size() {
                    return Err(Error::invalid("permutation size mismatch"));
                }
                for &s in p {
                    if (s as usize) >= seen.len() || seen[s as usize] {
                        return Err(Error::invalid("not a permutation"));
                    }
                    seen[s as usize] = true;
                }
                if !system.source().is_full_shift() {
                    return Err(Error::invalid(
                        "relabeled fibers require a full shift".to_string(),
                    ));
                }
            }
        }
        if let (FiberFamily::CarpetSkew { c: SkewConstant::Omega, .. }, Driver::MarkovShift { .. }) =
            (&fiber, &driver)
        {
            return Err(Error::invalid(
                "c(omega) = omega needs a rotation driver".to_string(),
            ));
        }
        Ok(BundleRds { driver, fiber })
    }

    /// Deterministic measurable selection of the permutation index.
    pub fn perm_index(&self, omega: &DriverPoint) -> usize {
        let count = match &self.fiber {
            FiberFamily::RelabeledShift { perms, .. } => perms.len(),
            _ => return 0,
        };
        match omega {
            DriverPoint::Angle(w) => ((w * count as f64) as usize).min(count - 1),
            DriverPoint::Window(w) => w[0] as usize % count,
        }
    }

    /// One driver step. Rotations advance exactly; Markov windows shift and
    /// shrink (pre-generate orbits with [`driver_orbit`] to avoid shrinkage).
    pub fn driver_step(&self, omega: &DriverPoint) -> Result<DriverPoint> {
        match (&self.driver, omega) {
            (Driver::Rotation { alpha }, DriverPoint::Angle(w)) => {
                Ok(DriverPoint::Angle((w + alpha.value()).rem_euclid(1.0)))
            }
            (Driver::MarkovShift { .. }, DriverPoint::Window(w)) => {
                if w.len() < 2 {
                    return Err(Error::invalid(
                        "driver window exhausted; generate a longer orbit".to_string(),
                    ));
                }
                Ok(DriverPoint::Window(w[1..].to_vec()))
            }
            _ => Err(Error::invalid("driver point kind does not match the driver")),
        }
    }

    fn skew_c(&self, omega: &DriverPoint) -> Result<f64> {
        match &self.fiber {
            FiberFamily::CarpetSkew { c, .. } => match (c, omega) {
                (SkewConstant::Zero, _) => Ok(0.0),
                (SkewConstant::Constant(v), _) => Ok(*v),
                (SkewConstant::Omega, DriverPoint::Angle(w)) => Ok(*w),
                (SkewConstant::Omega, _) => {
                    Err(Error::invalid("c(omega)=omega needs an angle".to_string()))
                }
            },
            _ => Err(Error::internal("not a carpet fiber")),
        }
    }

    /// One skew-product step `(omega, x) -> (theta omega, f_omega x)`.
    pub fn skew_product_step(
        &self,
        omega: &DriverPoint,
        x: &FiberPoint,
    ) -> Result<(DriverPoint, FiberPoint)> {
        let next_omega = self.driver_step(omega)?;
        let fx = match (&self.fiber, x) {
            (FiberFamily::ConstantShift { .. }, FiberPoint::Word(w)) => {
                if w.len() < 2 {
                    return Err(Error::invalid("fiber word exhausted".to_string()));
                }
                FiberPoint::Word(w[1..].to_vec())
            }
            (FiberFamily::RelabeledShift { perms, .. }, FiberPoint::Word(w)) => {
                if w.len() < 2 {
                    return Err(Error::invalid("fiber word exhausted".to_string()));
                }
                let g_now = &perms[self.perm_index(omega)];
                let g_next = &perms[self.perm_index(&next_omega)];
                let inv_now = invert_perm(g_now);
                FiberPoint::Word(
                    w[1..]
                        .iter()
                        .map(|&s| g_next[inv_now[s as usize] as usize])
                        .collect(),
                )
            }
            (FiberFamily::CarpetSkew { spec, .. }, FiberPoint::Torus(p)) => {
                let c = self.skew_c(omega)?;
                FiberPoint::Torus(TorusPoint {
                    x1: (p.x1 * spec.m1 as f64).rem_euclid(1.0),
                    x2: (p.x2 * spec.m2 as f64 + c).rem_euclid(1.0),
                })
            }
            _ => return Err(Error::invalid("fiber point kind does not match the fiber")),
        };
        Ok((next_omega, fx))
    }

    /// `n`-fold iteration, returning the full trajectory including the start.
    pub fn iterate(
        &self,
        omega: &DriverPoint,
        x: &FiberPoint,
        n: usize,
    ) -> Result<Vec<(DriverPoint, FiberPoint)>> {
        let mut out = Vec::with_capacity(n + 1);
        out.push((omega.clone(), x.clone()));
        for _ in 0..n {
            let (w, y) = out.last().unwrap();
            let next = self.skew_product_step(w, y)?;
            out.push(next);
        }
        Ok(out)
    }

    /// The fiber system (the relabeled families share the base system).
    pub fn fiber_system(&self) -> Result<&SymbolicSystem> {
        match &self.fiber {
            FiberFamily::ConstantShift { system, .. } => Ok(system),
            FiberFamily::RelabeledShift { system, .. } => Ok(system),
            FiberFamily::CarpetSkew { .. } => Err(Error::invalid(
                "carpet fibers have no symbolic system".to_string(),
            )),
        }
    }
}

fn invert_perm(p: &[u8]) -> Vec<u8> {
    let mut inv = vec![0u8; p.len()];
    for (i, &v) in p.iter().enumerate() {
        inv[v as usize] = i as u8;
    }
    inv
}

fn permute_measure(m: &Measure, perm: &[u8]) -> Measure {
    match m {
        Measure::Bernoulli(b) => {
            let mut probs = vec![0.0; b.size()];
            for (s, &p) in b.probs().iter().enumerate() {
                probs[perm[s] as usize] = p;
            }
            Measure::Bernoulli(BernoulliMeasure::new(probs).expect("permutation preserves the simplex"))
        }
        Measure::Markov(mk) => {
            let n = mk.size();
            let mut rows = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    rows[perm[i] as usize][perm[j] as usize] = mk.stochastic()[i][j];
                }
            }
            Measure::Markov(MarkovMeasure::new(rows).expect("permutation preserves stochasticity"))
        }
    }
}

/// The disintegration `omega -> mu_omega` of the constructed invariant
/// measures: constant or permuted copies of the base fiber measure.
#[derive(Debug, Clone)]
pub struct Disintegration<'a> {
    rds: &'a BundleRds,
}

impl<'a> Disintegration<'a> {
    pub fn new(rds: &'a BundleRds) -> Result<Self> {
        match rds.fiber {
            FiberFamily::CarpetSkew { .. } => Err(Error::invalid(
                "carpet fibers carry no symbolic disintegration here".to_string(),
            )),
            _ => Ok(Disintegration { rds }),
        }
    }

    pub fn measure_at(&self, omega: &DriverPoint) -> Measure {
        match &self.rds.fiber {
            FiberFamily::ConstantShift { measure, .. } => measure.clone(),
            FiberFamily::RelabeledShift {
                base_measure,
                perms,
                ..
            } => permute_measure(base_measure, &perms[self.rds.perm_index(omega)]),
            FiberFamily::CarpetSkew { .. } => unreachable!("rejected at construction"),
        }
    }

    /// Exact check of `f_omega mu_omega = mu_(theta omega)` on all cylinders
    /// to the given depth: returns the maximum absolute discrepancy.
    pub fn invariance_residual(&self, omega: &DriverPoint, depth: usize) -> Result<f64> {
        let system = self.rds.fiber_system()?;
        let next = self.rds.driver_step(omega)?;
        let mu_now = self.measure_at(omega);
        let mu_next = self.measure_at(&next);
        let words = system.source().enumerate_words(depth)?;
        let mut worst = 0.0f64;
        for w in &words {
            // Pull back the cylinder [w] through f_omega. For our families
            // f_omega = R_next o shift o R_now^-1, so the preimage is the
            // union over first symbols of relabeled cylinders.
            let pulled: f64 = match &self.rds.fiber {
                FiberFamily::ConstantShift { .. } => {
                    (0..system.source().size() as u8)
                        .map(|a| {
                            let mut cyl = Vec::with_capacity(w.len() + 1);
                            cyl.push(a);
                            cyl.extend_from_slice(w);
                            mu_now.cylinder(&cyl)
                        })
                        .sum()
                }
                FiberFamily::RelabeledShift { perms, .. } => {
                    let g_now = &perms[self.rds.perm_index(omega)];
                    let g_next = &perms[self.rds.perm_index(&next)];
                    let inv_next = invert_perm(g_next);
                    (0..system.source().size() as u8)
                        .map(|a| {
                            let mut cyl = Vec::with_capacity(w.len() + 1);
                            cyl.push(a);
                            cyl.extend(
                                w.iter().map(|&s| g_now[inv_next[s as usize] as usize]),
                            );
                            mu_now.cylinder(&cyl)
                        })
                        .sum()
                }
                FiberFamily::CarpetSkew { .. } => unreachable!(),
            };
            worst = worst.max((pulled - mu_next.cylinder(w)).abs());
        }
        Ok(worst)
    }
}

/// Per-fiber Katok estimate plus the Monte-Carlo integral over the driver.
#[derive(Debug, Clone, Serialize)]
pub struct FiberEntropyReport {
    pub per_omega: Vec<OmegaEstimate>,
    pub integrated_mean: f64,
    pub spread: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OmegaEstimate {
    pub omega: DriverPoint,
    pub estimate: KatokEstimate,
}

/// Run the Katok entropy estimator on each sampled fiber and integrate.
/// Ergodic families should show small spread (a.e. constancy).
pub fn fiber_katok_entropy(
    rds: &BundleRds,
    a: WeightVector,
    resolution_k: usize,
    n_grid: &[usize],
    delta: f64,
    omega_samples: usize,
    seed: u64,
) -> Result<FiberEntropyReport> {
    if omega_samples < 1 {
        return Err(Error::invalid("need at least one omega sample"));
    }
    let system = rds.fiber_system()?;
    let dis = Disintegration::new(rds)?;
    let omega0 = initial_driver_point(&rds.driver, split_seed(seed, 0));
    let orbit = driver_orbit(&rds.driver, &omega0, omega_samples, split_seed(seed, 1))?;
    let mut per_omega = Vec::with_capacity(omega_samples);
    for omega in orbit {
        let measure = dis.measure_at(&omega);
        let estimate = katok_entropy_estimate(system, &measure, a, resolution_k, n_grid, delta)?;
        per_omega.push(OmegaEstimate { omega, estimate });
    }
    let slopes: Vec<f64> = per_omega.iter().map(|o| o.estimate.slope).collect();
    let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
    let var = slopes.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>()
        / slopes.len() as f64;
    Ok(FiberEntropyReport {
        per_omega,
        integrated_mean: mean,
        spread: var.sqrt(),
    })
}

pub fn initial_driver_point(driver: &Driver, seed: u64) -> DriverPoint {
    let mut rng = SplitMix64::new(seed);
    match driver {
        Driver::Rotation { .. } => DriverPoint::Angle(rng.next_f64()),
        Driver::MarkovShift { measure, window } => {
            let mut w = Vec::with_capacity(*window);
            let mut state = rng.sample_index(measure.stationary());
            w.push(state as u8);
            for _ in 1..*window {
                state = rng.sample_index(&measure.stochastic()[state]);
                w.push(state as u8);
            }
            DriverPoint::Window(w)
        }
    }
}

/// One observed violation of the Frostman bound.
#[derive(Debug, Clone, Serialize)]
pub struct FrostmanViolation {
    pub sample_index: usize,
    pub order: usize,
    pub log_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrostmanReport {
    pub checks: usize,
    pub violations: usize,
    pub violating_samples: usize,
    pub samples: usize,
    pub max_log_ratio: f64,
    /// First few violations, for the report file.
    pub examples: Vec<FrostmanViolation>,
}

/// Sample points from the fiber measure and test
/// `mu(B^a(x, n, eps)) <= exp(-s n)` across the order range. `log_ratio` is
/// `log mu + s n`, positive exactly on violations.
#[allow(clippy::too_many_arguments)]
pub fn frostman_check(
    m: &Measure,
    code: &FactorCode,
    a: WeightVector,
    s: f64,
    resolution_k: usize,
    n_min: usize,
    n_max: usize,
    sample_count: usize,
    seed: u64,
) -> Result<FrostmanReport> {
    if s < 0.0 {
        return Err(Error::invalid("s must be >= 0"));
    }
    if n_min < 1 || n_max < n_min {
        return Err(Error::invalid("need 1 <= n_min <= n_max"));
    }
    let deepest = ball_spec(a, n_max, resolution_k)?;
    let mut checks = 0usize;
    let mut violations = 0usize;
    let mut violating_samples = 0usize;
    let mut max_log_ratio = f64::NEG_INFINITY;
    let mut examples = Vec::new();
    for i in 0..sample_count {
        let word = crate::measures::sample_trajectory(m, deepest.len2, split_seed(seed, i as u64))?;
        let mut this_sample_violates = false;
        for n in n_min..=n_max {
            let spec = ball_spec(a, n, resolution_k)?;
            let log_mu =
                weighted_cylinder_log_measure_windows(m, code, &word, spec.len1, spec.len2)?;
            checks += 1;
            let log_ratio = log_mu + s * n as f64;
            max_log_ratio = max_log_ratio.max(log_ratio);
            if log_ratio > 0.0 {
                violations += 1;
                this_sample_violates = true;
                if examples.len() < 100 {
                    examples.push(FrostmanViolation {
                        sample_index: i,
                        order: n,
                        log_ratio,
                    });
                }
            }
        }
        if this_sample_violates {
            violating_samples += 1;
        }
    }
    Ok(FrostmanReport {
        checks,
        violations,
        violating_samples,
        samples: sample_count,
        max_log_ratio,
        examples,
    })
}
