//! Subcommand implementations. Each handler resolves its config (file plus
//! flag overrides), runs the core operation, prints the headline result,
//! and, when an output path is set, writes the result file with a manifest.

use crate::config::KeyValues;
use crate::manifest::RunManifest;
use crate::output::{
    convert_base, points_csv, series_csv, write_json, write_json_lines, write_text, METRIC_NOTE,
};
use entrolab_core::carpet::{box_counting_dimension, carpet_dimension, carpet_weights, encode_orbit};
use entrolab_core::cover::{critical_exponent, katok_entropy_estimate, CoverParams};
use entrolab_core::measures::{
    bernoulli_entropy, hidden_markov_entropy_bounds, markov_entropy, weighted_measure_entropy,
    Measure,
};
use entrolab_core::rds::{
    fiber_katok_entropy, frostman_check, BundleRds, Driver, FiberFamily, RotationAngle,
};
use entrolab_core::rng::SplitMix64;
use entrolab_core::symbolic::{SymbolicSystem, WeightVector};
use entrolab_core::validate::{
    brin_katok_series, chain_rule_check, katok_delta_report, smb_series, CylinderPartition,
};
use entrolab_core::variational::{
    grid_oracle, lagrange_optimum, projected_gradient, variational_gap_report, ColumnStructure,
    VariationalResult,
};
use entrolab_core::{Error, Result};
use serde::Serialize;
use std::path::PathBuf;
use std::time::Instant;

pub struct Ctx {
    pub kv: KeyValues,
    pub manifest: RunManifest,
    started: Instant,
}

impl Ctx {
    pub fn new(kv: KeyValues) -> Self {
        let manifest = RunManifest::new(kv.echo());
        Ctx {
            kv,
            manifest,
            started: Instant::now(),
        }
    }

    fn load_system(&self) -> Result<SymbolicSystem> {
        let path = self.kv.require("system")?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read system {path}: {e}")))?;
        entrolab_core::io::parse_system(&text)
    }

    fn load_measure(&self) -> Result<Measure> {
        let path = self.kv.require("measure")?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read measure {path}: {e}")))?;
        entrolab_core::io::parse_measure(&text)
    }

    fn load_carpet(&self) -> Result<entrolab_core::carpet::CarpetSpec> {
        let path = self.kv.require("spec")?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read carpet spec {path}: {e}")))?;
        entrolab_core::io::parse_carpet(&text)
    }

    fn weights(&self) -> Result<WeightVector> {
        WeightVector::new(self.kv.require_f64("a1")?, self.kv.require_f64("a2")?)
    }

    fn seed(&self) -> Result<u64> {
        Ok(self.kv.get_u64("seed")?.unwrap_or(0))
    }

    fn out_path(&self) -> Option<PathBuf> {
        self.kv.get("output").map(PathBuf::from)
    }

    fn time_op<T>(&mut self, name: &str, f: impl FnOnce(&Self) -> Result<T>) -> Result<T> {
        let t0 = Instant::now();
        let r = f(self);
        self.manifest
            .op_timings_ms
            .push((name.to_string(), t0.elapsed().as_millis() as u64));
        r
    }

    /// Write the result JSON (if an output path is set) plus the manifest.
    fn finish<T: Serialize>(&mut self, result: &T) -> Result<()> {
        self.manifest.wall_ms = self.started.elapsed().as_millis() as u64;
        if let Some(out) = self.out_path() {
            write_json(&out, result, &mut self.manifest)?;
            let manifest = std::mem::replace(&mut self.manifest, RunManifest::new(Vec::new()));
            manifest.write_next_to(&out)?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct EntropyReport {
    kind: &'static str,
    log_base: String,
    entropy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    weighted: Option<f64>,
}

pub fn entropy_bernoulli(mut ctx: Ctx) -> Result<()> {
    let m = ctx.load_measure()?;
    let Measure::Bernoulli(b) = &m else {
        return Err(Error::invalid("expected a bernoulli measure file"));
    };
    let base = ctx.kv.get("log_base").unwrap_or("e").to_string();
    let h = convert_base(bernoulli_entropy(b), &base)?;
    let weighted = weighted_option(&ctx, &m)?
        .map(|v| convert_base(v, &base))
        .transpose()?;
    let report = EntropyReport {
        kind: "bernoulli",
        log_base: base,
        entropy: h,
        weighted,
    };
    println!("entropy = {h}");
    if let Some(w) = report.weighted {
        println!("weighted = {w}");
    }
    ctx.finish(&report)
}

pub fn entropy_markov(mut ctx: Ctx) -> Result<()> {
    let m = ctx.load_measure()?;
    let Measure::Markov(mk) = &m else {
        return Err(Error::invalid("expected a markov measure file"));
    };
    let base = ctx.kv.get("log_base").unwrap_or("e").to_string();
    let h = convert_base(markov_entropy(mk), &base)?;
    let weighted = weighted_option(&ctx, &m)?
        .map(|v| convert_base(v, &base))
        .transpose()?;
    let report = EntropyReport {
        kind: "markov",
        log_base: base,
        entropy: h,
        weighted,
    };
    println!("entropy rate = {h}");
    if let Some(w) = report.weighted {
        println!("weighted = {w}");
    }
    ctx.finish(&report)
}

/// Weighted value when a1/a2 and a system are supplied alongside a measure.
fn weighted_option(ctx: &Ctx, m: &Measure) -> Result<Option<f64>> {
    if ctx.kv.get("a1").is_none() || ctx.kv.get("system").is_none() {
        return Ok(None);
    }
    let a = ctx.weights()?;
    let sys = ctx.load_system()?;
    Ok(Some(
        weighted_measure_entropy(a, m, sys.code())?.midpoint(),
    ))
}

#[derive(Serialize)]
struct HiddenFactorReport {
    lower: f64,
    upper: f64,
    k_reached: usize,
    converged: bool,
}

pub fn entropy_hidden_factor(mut ctx: Ctx) -> Result<()> {
    let m = ctx.load_measure()?;
    let Measure::Markov(mk) = &m else {
        return Err(Error::invalid("hidden-factor needs a markov measure"));
    };
    let sys = ctx.load_system()?;
    let k_max = ctx.kv.get_usize("k_max")?.unwrap_or(16);
    let tol = ctx.kv.get_f64("tol")?.unwrap_or(1e-9);
    let b = hidden_markov_entropy_bounds(mk, sys.code(), k_max, tol)?;
    if !b.converged {
        eprintln!(
            "note: sandwich gap {} at k_max = {}; interval remains valid",
            b.interval.width(),
            b.k_reached
        );
    }
    let report = HiddenFactorReport {
        lower: b.interval.lower,
        upper: b.interval.upper,
        k_reached: b.k_reached,
        converged: b.converged,
    };
    println!("factor entropy in [{}, {}]", report.lower, report.upper);
    ctx.finish(&report)
}

#[derive(Serialize)]
struct WeightedCoverReport {
    a1: f64,
    a2: f64,
    resolution_k: usize,
    min_order: usize,
    depth_cap: usize,
    metric: &'static str,
    bias_note: &'static str,
    s_low: f64,
    s_high: f64,
    cost_low: f64,
    cost_high: f64,
}

pub fn entropy_weighted_cover(mut ctx: Ctx) -> Result<()> {
    let sys = ctx.load_system()?;
    let a = ctx.weights()?;
    let k = ctx.kv.get_usize("k")?.unwrap_or(0);
    let depth_cap = ctx.kv.require_usize("depth_cap")?;
    let tol = ctx.kv.get_f64("tol")?.unwrap_or(1e-3);
    let min_order = match ctx.kv.get_usize("min_order")? {
        Some(n) => n,
        None => default_min_order(a, k, depth_cap)?,
    };
    let report = ctx.time_op("critical_exponent", |_| {
        critical_exponent(&sys, a, k, min_order, depth_cap, tol)
    })?;
    let out = WeightedCoverReport {
        a1: a.a1,
        a2: a.a2,
        resolution_k: k,
        min_order,
        depth_cap,
        metric: METRIC_NOTE,
        bias_note: report.note,
        s_low: report.bracket.s_low,
        s_high: report.bracket.s_high,
        cost_low: report.bracket.cost_low,
        cost_high: report.bracket.cost_high,
    };
    println!(
        "exponent bracket [{}, {}] (costs {} / {})",
        out.s_low, out.s_high, out.cost_low, out.cost_high
    );
    if let Some(probes_path) = ctx.kv.get("probes").map(PathBuf::from) {
        write_json_lines(&probes_path, &report.probes, &mut ctx.manifest)?;
    }
    ctx.finish(&out)
}

/// Default minimum ball order: two below the deepest order the cap admits.
/// Keeping N near n_max suppresses the shallow-ball underestimate.
pub fn default_min_order(a: WeightVector, k: usize, depth_cap: usize) -> Result<usize> {
    let mut n = 1usize;
    let first = entrolab_core::symbolic::ball_spec(a, 1, k)?;
    if first.len2 > depth_cap {
        return Err(Error::invalid(format!(
            "depth cap {depth_cap} does not admit even an order-1 ball"
        )));
    }
    while entrolab_core::symbolic::ball_spec(a, n + 1, k)?.len2 <= depth_cap {
        n += 1;
    }
    Ok(n.saturating_sub(2).max(1))
}

#[derive(Serialize)]
struct KatokReport {
    a1: f64,
    a2: f64,
    resolution_k: usize,
    delta: f64,
    metric: &'static str,
    slope: f64,
    rows: Vec<(usize, usize, f64)>,
}

pub fn entropy_katok(mut ctx: Ctx) -> Result<()> {
    let sys = ctx.load_system()?;
    let m = ctx.load_measure()?;
    let a = ctx.weights()?;
    let k = ctx.kv.get_usize("k")?.unwrap_or(0);
    let delta = ctx.kv.require_f64("delta")?;
    let grid = ctx
        .kv
        .get_grid("n_grid")?
        .ok_or_else(|| Error::invalid("missing required key \"n_grid\""))?;
    let est = katok_entropy_estimate(&sys, &m, a, k, &grid, delta)?;
    let report = KatokReport {
        a1: a.a1,
        a2: a.a2,
        resolution_k: k,
        delta,
        metric: METRIC_NOTE,
        slope: est.slope,
        rows: est
            .rows
            .iter()
            .map(|r| (r.n, r.covering_number, r.log_covering_number))
            .collect(),
    };
    println!("katok slope = {}", est.slope);
    if let Some(table) = ctx.kv.get("table").map(PathBuf::from) {
        let mut csv = String::from("n,covering_number,log_covering_number\n");
        for (n, c, l) in &report.rows {
            csv.push_str(&format!("{n},{c},{l}\n"));
        }
        write_text(&table, &csv, &mut ctx.manifest)?;
    }
    ctx.finish(&report)
}

#[derive(Serialize)]
struct OptimizeReport {
    a1: f64,
    a2: f64,
    value: f64,
    optimizer_probs: Vec<f64>,
    method: entrolab_core::variational::Method,
}

pub fn variational_optimize(mut ctx: Ctx) -> Result<()> {
    let sys = ctx.load_system()?;
    let a = ctx.weights()?;
    let method = ctx.kv.get("method").unwrap_or("closed-form").to_string();
    let r: VariationalResult = match method.as_str() {
        "closed-form" => {
            if !sys.source().is_full_shift() {
                return Err(Error::invalid(
                    "closed-form optimization needs a full shift; use variational gap for SFTs",
                ));
            }
            lagrange_optimum(&ColumnStructure::from_code(sys.code())?, a, sys.code())?
        }
        "gradient" => projected_gradient(
            sys.code(),
            a,
            ctx.kv.get_f64("tol")?.unwrap_or(1e-9),
            ctx.seed()?,
        )?,
        "grid" => grid_oracle(sys.code(), a, ctx.kv.get_f64("step")?.unwrap_or(0.01))?,
        other => {
            return Err(Error::invalid(format!(
                "unknown method {other:?} (closed-form | gradient | grid)"
            )))
        }
    };
    let report = OptimizeReport {
        a1: a.a1,
        a2: a.a2,
        value: r.value,
        optimizer_probs: r.optimizer.probs().to_vec(),
        method: r.method,
    };
    println!("variational value = {}", r.value);
    if let Some(csv_path) = ctx.kv.get("csv").map(PathBuf::from) {
        let probs: Vec<String> = report.optimizer_probs.iter().map(|p| p.to_string()).collect();
        let csv = format!(
            "a1,a2,value,method,probs\n{},{},{},{:?},{}\n",
            report.a1,
            report.a2,
            report.value,
            report.method,
            probs.join(";")
        );
        write_text(&csv_path, &csv, &mut ctx.manifest)?;
    }
    ctx.finish(&report)
}

pub fn variational_gap(mut ctx: Ctx) -> Result<()> {
    let sys = ctx.load_system()?;
    let a = ctx.weights()?;
    let k = ctx.kv.get_usize("k")?.unwrap_or(0);
    let depth_cap = ctx.kv.require_usize("depth_cap")?;
    let tol = ctx.kv.get_f64("tol")?.unwrap_or(1e-3);
    let min_order = match ctx.kv.get_usize("min_order")? {
        Some(n) => n,
        None => default_min_order(a, k, depth_cap)?,
    };
    let params = CoverParams {
        resolution_k: k,
        min_order,
        depth_cap,
        tol,
    };
    let rep = ctx.time_op("variational_gap_report", |_| {
        variational_gap_report(&sys, a, &params)
    })?;
    println!(
        "variational = {} bracket = [{}, {}] gap = {}",
        rep.variational.interval.midpoint(),
        rep.exponent.bracket.s_low,
        rep.exponent.bracket.s_high,
        rep.gap
    );
    if let Some(probes_path) = ctx.kv.get("probes").map(PathBuf::from) {
        write_json_lines(&probes_path, &rep.exponent.probes, &mut ctx.manifest)?;
    }
    ctx.finish(&rep)
}

#[derive(Serialize)]
struct CarpetReport {
    m1: u32,
    m2: u32,
    digits: Vec<(u32, u32)>,
    a1: f64,
    a2: f64,
    dimension: f64,
}

pub fn dimension_carpet(mut ctx: Ctx) -> Result<()> {
    let spec = ctx.load_carpet()?;
    let a = carpet_weights(&spec);
    let dim = carpet_dimension(&spec)?;
    let report = CarpetReport {
        m1: spec.m1,
        m2: spec.m2,
        digits: spec.digits.clone(),
        a1: a.a1,
        a2: a.a2,
        dimension: dim,
    };
    println!("{dim}");
    ctx.finish(&report)
}

#[derive(Serialize)]
struct BoxCountReport {
    m1: u32,
    m2: u32,
    samples: usize,
    scales: Vec<u32>,
    estimate: f64,
    dimension_formula: f64,
}

pub fn dimension_box_count(mut ctx: Ctx) -> Result<()> {
    let spec = ctx.load_carpet()?;
    let samples = ctx.kv.get_usize("samples")?.unwrap_or(100_000);
    let depth = ctx.kv.get_usize("depth")?.unwrap_or(24);
    let scales: Vec<u32> = ctx
        .kv
        .get_grid("scales")?
        .unwrap_or_else(|| vec![1, 2, 3, 4])
        .into_iter()
        .map(|k| k as u32)
        .collect();
    let seed = ctx.seed()?;
    let mut rng = SplitMix64::new(seed);
    let mut points = Vec::with_capacity(samples);
    for _ in 0..samples {
        let word: Vec<(u32, u32)> = (0..depth)
            .map(|_| spec.digits[rng.next_below(spec.digits.len())])
            .collect();
        points.push(encode_orbit(&spec, &word, 1)?[0]);
    }
    let estimate = box_counting_dimension(&spec, &points, &scales)?;
    let report = BoxCountReport {
        m1: spec.m1,
        m2: spec.m2,
        samples,
        scales,
        estimate,
        dimension_formula: carpet_dimension(&spec)?,
    };
    println!("box-counting estimate = {estimate}");
    if let Some(points_path) = ctx.kv.get("points_out").map(PathBuf::from) {
        write_text(&points_path, &points_csv(&points), &mut ctx.manifest)?;
    }
    ctx.finish(&report)
}

fn build_rds(ctx: &Ctx) -> Result<BundleRds> {
    let driver = match ctx.kv.get("driver.kind").unwrap_or("rotation") {
        "rotation" => {
            let alpha = match ctx.kv.get("driver.alpha").unwrap_or("golden") {
                "golden" => RotationAngle::GoldenMean,
                "silver" => RotationAngle::SilverMean,
                other => {
                    let v: f64 = other.parse().map_err(|_| {
                        Error::Parse(format!("driver.alpha: bad value {other:?}"))
                    })?;
                    let angle = RotationAngle::Custom(v);
                    if let Some(note) = angle.irrationality_note() {
                        eprintln!("warning: {note}");
                    }
                    angle
                }
            };
            Driver::rotation(alpha)?
        }
        "markov" => {
            let path = ctx.kv.require("driver.matrix")?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("cannot read {path}: {e}")))?;
            let Measure::Markov(mk) = entrolab_core::io::parse_measure(&text)? else {
                return Err(Error::invalid("driver.matrix must be a markov measure file"));
            };
            let window = ctx.kv.get_usize("driver.window")?.unwrap_or(4);
            Driver::markov_shift(mk, window)?
        }
        other => return Err(Error::invalid(format!("unknown driver.kind {other:?}"))),
    };
    let system = ctx.load_system()?;
    let measure = ctx.load_measure()?;
    let fiber = match ctx.kv.get("fiber.kind").unwrap_or("constant") {
        "constant" => FiberFamily::ConstantShift { system, measure },
        "relabeled" => {
            let params = ctx.kv.get("fiber.params").unwrap_or("");
            let perms: Vec<Vec<u8>> = params
                .split(';')
                .filter(|p| !p.is_empty())
                .map(|p| {
                    p.split(',')
                        .map(|t| {
                            t.trim()
                                .parse::<u8>()
                                .map_err(|_| Error::Parse(format!("bad perm entry {t:?}")))
                        })
                        .collect::<Result<Vec<u8>>>()
                })
                .collect::<Result<_>>()?;
            if perms.is_empty() {
                return Err(Error::invalid(
                    "fiber.params must list permutations like 0,1,2;0,2,1",
                ));
            }
            FiberFamily::RelabeledShift {
                system,
                base_measure: measure,
                perms,
            }
        }
        other => return Err(Error::invalid(format!("unknown fiber.kind {other:?}"))),
    };
    BundleRds::new(driver, fiber)
}

#[derive(Serialize)]
struct OmegaRecord<'a> {
    omega: &'a entrolab_core::rds::DriverPoint,
    slope: f64,
}

#[derive(Serialize)]
struct IntegratedRecord {
    integrated: f64,
    spread: f64,
    omega_samples: usize,
    metric: &'static str,
}

pub fn rds_fiber_entropy(mut ctx: Ctx) -> Result<()> {
    let rds = build_rds(&ctx)?;
    let a = ctx.weights()?;
    let k = ctx.kv.get_usize("k")?.unwrap_or(0);
    let delta = ctx.kv.get_f64("delta")?.unwrap_or(0.5);
    let grid = ctx
        .kv
        .get_grid("n_grid")?
        .ok_or_else(|| Error::invalid("missing required key \"n_grid\""))?;
    let omega_samples = ctx.kv.get_usize("omega_samples")?.unwrap_or(16);
    let seed = ctx.seed()?;
    let rep = fiber_katok_entropy(&rds, a, k, &grid, delta, omega_samples, seed)?;
    println!(
        "integrated = {} spread = {}",
        rep.integrated_mean, rep.spread
    );
    if let Some(out) = ctx.kv.get("report").map(PathBuf::from) {
        let mut lines: Vec<serde_json::Value> = rep
            .per_omega
            .iter()
            .map(|o| {
                serde_json::to_value(OmegaRecord {
                    omega: &o.omega,
                    slope: o.estimate.slope,
                })
                .expect("serializes")
            })
            .collect();
        lines.push(
            serde_json::to_value(IntegratedRecord {
                integrated: rep.integrated_mean,
                spread: rep.spread,
                omega_samples,
                metric: METRIC_NOTE,
            })
            .expect("serializes"),
        );
        write_json_lines(&out, &lines, &mut ctx.manifest)?;
    }
    ctx.finish(&rep)
}

pub fn rds_frostman(mut ctx: Ctx) -> Result<()> {
    let m = ctx.load_measure()?;
    let sys = ctx.load_system()?;
    let a = ctx.weights()?;
    let s = ctx.kv.require_f64("s")?;
    let k = ctx.kv.get_usize("k")?.unwrap_or(0);
    let n_min = ctx.kv.get_usize("n_min")?.unwrap_or(20);
    let n_max = ctx.kv.get_usize("n_max")?.unwrap_or(60);
    let samples = ctx.kv.get_usize("samples")?.unwrap_or(10_000);
    let seed = ctx.seed()?;
    let rep = frostman_check(&m, sys.code(), a, s, k, n_min, n_max, samples, seed)?;
    println!(
        "violations = {} / {} checks (max log-ratio {})",
        rep.violations, rep.checks, rep.max_log_ratio
    );
    ctx.finish(&rep)
}

#[derive(Serialize)]
struct SeriesReport {
    target_lower: f64,
    target_upper: f64,
    tail_gap: f64,
    tail_mean: f64,
    pass: bool,
    metric: &'static str,
}

pub fn validate_smb(mut ctx: Ctx) -> Result<()> {
    let sys = ctx.load_system()?;
    let m = ctx.load_measure()?;
    let a = ctx.weights()?;
    let grid = ctx
        .kv
        .get_grid("n_grid")?
        .ok_or_else(|| Error::invalid("missing required key \"n_grid\""))?;
    let trajectories = ctx.kv.get_usize("trajectories")?.unwrap_or(200);
    let seed = ctx.seed()?;
    let series = smb_series(&m, sys.code(), a, &grid, trajectories, seed)?;
    finish_series(&mut ctx, series)
}

pub fn validate_brin_katok(mut ctx: Ctx) -> Result<()> {
    let sys = ctx.load_system()?;
    let m = ctx.load_measure()?;
    let a = ctx.weights()?;
    let k = ctx.kv.get_usize("k")?.unwrap_or(0);
    let grid = ctx
        .kv
        .get_grid("n_grid")?
        .ok_or_else(|| Error::invalid("missing required key \"n_grid\""))?;
    let points = ctx.kv.get_usize("points")?.unwrap_or(200);
    let seed = ctx.seed()?;
    let series = brin_katok_series(&m, sys.code(), a, k, &grid, points, seed)?;
    finish_series(&mut ctx, series)
}

fn finish_series(ctx: &mut Ctx, series: entrolab_core::validate::ConvergenceSeries) -> Result<()> {
    let gap_tol = ctx.kv.get_f64("gap_tol")?.unwrap_or(0.05);
    let mean_tol = ctx.kv.get_f64("mean_tol")?.unwrap_or(0.03);
    let summary = series.summary(gap_tol, mean_tol);
    println!(
        "target = {} tail mean = {} tail gap = {} pass = {}",
        summary.target.midpoint(),
        summary.tail_mean,
        summary.tail_gap,
        summary.pass
    );
    if let Some(csv_path) = ctx.kv.get("csv").map(PathBuf::from) {
        write_text(&csv_path, &series_csv(&series), &mut ctx.manifest)?;
    }
    let report = SeriesReport {
        target_lower: summary.target.lower,
        target_upper: summary.target.upper,
        tail_gap: summary.tail_gap,
        tail_mean: summary.tail_mean,
        pass: summary.pass,
        metric: METRIC_NOTE,
    };
    ctx.finish(&report)
}

pub fn validate_katok_delta(mut ctx: Ctx) -> Result<()> {
    let sys = ctx.load_system()?;
    let m = ctx.load_measure()?;
    let a = ctx.weights()?;
    let k = ctx.kv.get_usize("k")?.unwrap_or(0);
    let deltas = ctx
        .kv
        .get_f64_list("deltas")?
        .ok_or_else(|| Error::invalid("missing required key \"deltas\""))?;
    let grid = ctx
        .kv
        .get_grid("n_grid")?
        .ok_or_else(|| Error::invalid("missing required key \"n_grid\""))?;
    let tol = ctx.kv.get_f64("tol")?.unwrap_or(0.03);
    let rep = katok_delta_report(&sys, &m, a, k, &deltas, &grid, tol)?;
    println!(
        "max pairwise slope gap = {} pass = {}",
        rep.max_pairwise_slope_gap, rep.pass
    );
    ctx.finish(&rep)
}

pub fn validate_chain_rule(mut ctx: Ctx) -> Result<()> {
    let m = ctx.load_measure()?;
    // Coordinate ranges are half-open `start:end`.
    let parse_range = |s: &str| -> Result<CylinderPartition> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected start:end, found {s:?}")))?;
        let start: usize = a
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad range start {a:?}")))?;
        let end: usize = b
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad range end {b:?}")))?;
        CylinderPartition::new(start, end)
    };
    let alpha = parse_range(ctx.kv.require("alpha")?)?;
    let beta = parse_range(ctx.kv.require("beta")?)?;
    let gamma = ctx.kv.get("gamma").map(parse_range).transpose()?;
    let rep = chain_rule_check(&m, alpha, beta, gamma, m.size())?;
    println!(
        "atoms = {} max residual = {} pass = {}",
        rep.atoms_checked, rep.max_residual, rep.pass
    );
    ctx.finish(&rep)
}
