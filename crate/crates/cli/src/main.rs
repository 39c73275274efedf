//! `entrolab`: experiment harness for the weighted-entropy laboratory.
//!
//! Exit codes: 0 success, 1 internal invariant violation, 2 configuration
//! error, 3 exact-computation size cap refused the instance.

mod acceptance;
mod commands;
mod config;
mod manifest;
mod output;

use clap::{Args, Parser, Subcommand};
use commands::Ctx;
use config::KeyValues;
use entrolab_core::{Error, Result};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "entrolab", version, about = "weighted entropy laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Entropy rates, factor-entropy brackets, cover exponents, and Katok slopes
    Entropy {
        #[command(subcommand)]
        cmd: EntropyCmd,
    },
    /// The measure-side optimum and the two-sided gap report
    Variational {
        #[command(subcommand)]
        cmd: VariationalCmd,
    },
    /// Carpet dimensions and box-counting estimates
    Dimension {
        #[command(subcommand)]
        cmd: DimensionCmd,
    },
    /// Bundle random dynamical systems
    Rds {
        #[command(subcommand)]
        cmd: RdsCmd,
    },
    /// Empirical validators of the convergence theorems
    Validate {
        #[command(subcommand)]
        cmd: ValidateCmd,
    },
    /// Replay an acceptance criterion against its recorded expectation
    Reproduce {
        /// Criterion id (AC-1 .. AC-10)
        id: Option<String>,
        /// Run every criterion and summarize
        #[arg(long)]
        all: bool,
    },
    /// Recompute the digests recorded in a run manifest
    VerifyManifest {
        manifest: PathBuf,
    },
}

/// Flags shared by every experiment command.
#[derive(Args, Default)]
struct CommonArgs {
    /// Flat key=value config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Result file (JSON); a .manifest.json is written next to it
    #[arg(long)]
    output: Option<PathBuf>,
    /// Master seed for all randomized work
    #[arg(long)]
    seed: Option<u64>,
}

impl CommonArgs {
    fn kv(&self) -> Result<KeyValues> {
        let mut kv = match &self.config {
            Some(path) => KeyValues::from_file(path)?,
            None => KeyValues::default(),
        };
        if let Some(out) = &self.output {
            kv.set_override("output", out.display());
        }
        if let Some(seed) = self.seed {
            kv.set_override("seed", seed);
        }
        Ok(kv)
    }
}

macro_rules! set_opt {
    ($kv:expr, $key:literal, $val:expr) => {
        if let Some(v) = &$val {
            $kv.set_override($key, v);
        }
    };
}

#[derive(Subcommand)]
enum EntropyCmd {
    /// Entropy of a Bernoulli measure
    Bernoulli(MeasureArgs),
    /// Entropy rate of a stationary Markov chain
    Markov(MeasureArgs),
    /// Conditional-entropy sandwich for a hidden-Markov factor
    HiddenFactor(HiddenArgs),
    /// Critical-exponent bracket of the weighted cover cost
    WeightedCover(CoverArgs),
    /// Covering-number growth rate
    Katok(KatokArgs),
}

#[derive(Args)]
struct MeasureArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Measure file (bernoulli/markov format)
    #[arg(long)]
    measure: Option<PathBuf>,
    /// System file; enables the weighted value when a1/a2 are set
    #[arg(long)]
    system: Option<PathBuf>,
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long)]
    a2: Option<f64>,
    /// Report in this log base: e, 2, or 10
    #[arg(long)]
    log_base: Option<String>,
}

impl MeasureArgs {
    fn kv(&self) -> Result<KeyValues> {
        let mut kv = self.common.kv()?;
        set_opt!(kv, "measure", self.measure.as_ref().map(|p| p.display()));
        set_opt!(kv, "system", self.system.as_ref().map(|p| p.display()));
        set_opt!(kv, "a1", self.a1);
        set_opt!(kv, "a2", self.a2);
        set_opt!(kv, "log_base", self.log_base);
        Ok(kv)
    }
}

#[derive(Args)]
struct HiddenArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    measure: Option<PathBuf>,
    #[arg(long)]
    system: Option<PathBuf>,
    /// Deepest conditioning window
    #[arg(long)]
    k_max: Option<usize>,
    /// Stop once the sandwich gap drops below this
    #[arg(long)]
    tol: Option<f64>,
}

impl HiddenArgs {
    fn kv(&self) -> Result<KeyValues> {
        let mut kv = self.common.kv()?;
        set_opt!(kv, "measure", self.measure.as_ref().map(|p| p.display()));
        set_opt!(kv, "system", self.system.as_ref().map(|p| p.display()));
        set_opt!(kv, "k_max", self.k_max);
        set_opt!(kv, "tol", self.tol);
        Ok(kv)
    }
}

#[derive(Args)]
struct CoverArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    system: Option<PathBuf>,
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long)]
    a2: Option<f64>,
    /// Resolution exponent: eps = 2^-k
    #[arg(long)]
    k: Option<usize>,
    /// Symbol depth of the truncation
    #[arg(long)]
    depth: Option<usize>,
    /// Minimum ball order N (default: two below the deepest admitted order)
    #[arg(long)]
    min_order: Option<usize>,
    /// Bisection bracket width
    #[arg(long)]
    tol: Option<f64>,
    /// JSON-lines probe log: one {s, depth, cost, elapsed_ms} per evaluation
    #[arg(long)]
    probes: Option<PathBuf>,
}

impl CoverArgs {
    fn kv(&self) -> Result<KeyValues> {
        let mut kv = self.common.kv()?;
        set_opt!(kv, "system", self.system.as_ref().map(|p| p.display()));
        set_opt!(kv, "a1", self.a1);
        set_opt!(kv, "a2", self.a2);
        set_opt!(kv, "k", self.k);
        set_opt!(kv, "depth_cap", self.depth);
        set_opt!(kv, "min_order", self.min_order);
        set_opt!(kv, "tol", self.tol);
        set_opt!(kv, "probes", self.probes.as_ref().map(|p| p.display()));
        Ok(kv)
    }
}

#[derive(Args)]
struct KatokArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    system: Option<PathBuf>,
    #[arg(long)]
    measure: Option<PathBuf>,
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long)]
    a2: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    /// Orders to evaluate: comma list or start..end
    #[arg(long)]
    n_grid: Option<String>,
    #[arg(long)]
    delta: Option<f64>,
    /// Per-n CSV table
    #[arg(long)]
    table: Option<PathBuf>,
}

impl KatokArgs {
    fn kv(&self) -> Result<KeyValues> {
        let mut kv = self.common.kv()?;
        set_opt!(kv, "system", self.system.as_ref().map(|p| p.display()));
        set_opt!(kv, "measure", self.measure.as_ref().map(|p| p.display()));
        set_opt!(kv, "a1", self.a1);
        set_opt!(kv, "a2", self.a2);
        set_opt!(kv, "k", self.k);
        set_opt!(kv, "n_grid", self.n_grid);
        set_opt!(kv, "delta", self.delta);
        set_opt!(kv, "table", self.table.as_ref().map(|p| p.display()));
        Ok(kv)
    }
}

#[derive(Subcommand)]
enum VariationalCmd {
    /// Maximize a1 h + a2 h_factor over product measures
    Optimize(OptimizeArgs),
    /// Compare the optimum with the cover-exponent bracket
    Gap(CoverArgs),
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    system: Option<PathBuf>,
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long)]
    a2: Option<f64>,
    /// closed-form | gradient | grid
    #[arg(long)]
    method: Option<String>,
    /// Simplex grid step for the grid oracle
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// CSV mirror of the result record
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl OptimizeArgs {
    fn kv(&self) -> Result<KeyValues> {
        let mut kv = self.common.kv()?;
        set_opt!(kv, "system", self.system.as_ref().map(|p| p.display()));
        set_opt!(kv, "a1", self.a1);
        set_opt!(kv, "a2", self.a2);
        set_opt!(kv, "method", self.method);
        set_opt!(kv, "step", self.step);
        set_opt!(kv, "tol", self.tol);
        set_opt!(kv, "csv", self.csv.as_ref().map(|p| p.display()));
        Ok(kv)
    }
}

#[derive(Subcommand)]
enum DimensionCmd {
    /// Dimension of a digit-defined carpet
    Carpet(CarpetArgs),
    /// Anisotropic box-counting estimate from coded samples
    BoxCount(BoxCountArgs),
}

#[derive(Args)]
struct CarpetArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Carpet spec file (`carpet m1 m2` plus digit lines)
    #[arg(long)]
    spec: Option<PathBuf>,
}

impl CarpetArgs {
    fn kv(&self) -> Result<KeyValues> {
        let mut kv = self.common.kv()?;
        set_opt!(kv, "spec", self.spec.as_ref().map(|p| p.display()));
        Ok(kv)
    }
}

#[derive(Args)]
struct BoxCountArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Number of coded sample points
    #[arg(long)]
    samples: Option<usize>,
    /// Digit depth of each sample
    #[arg(long)]
    depth: Option<usize>,
    /// Grid levels to count at
    #[arg(long)]
    scales: Option<String>,
    /// CSV of the sampled points (x1,x2 at 17 significant digits)
    #[arg(long)]
    points_out: Option<PathBuf>,
}

impl BoxCountArgs {
    fn kv(&self) -> Result<KeyValues> {
        let mut kv = self.common.kv()?;
        set_opt!(kv, "spec", self.spec.as_ref().map(|p| p.display()));
        set_opt!(kv, "samples", self.samples);
        set_opt!(kv, "depth", self.depth);
        set_opt!(kv, "scales", self.scales);
        set_opt!(kv, "points_out", self.points_out.as_ref().map(|p| p.display()));
        Ok(kv)
    }
}

#[derive(Subcommand)]
enum RdsCmd {
    /// Per-fiber Katok estimates and their driver integral
    FiberEntropy(RdsArgs),
    /// Ball-measure decay bound checker
    Frostman(FrostmanArgs),
}

#[derive(Args)]
struct RdsArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    system: Option<PathBuf>,
    #[arg(long)]
    measure: Option<PathBuf>,
    /// rotation | markov
    #[arg(long)]
    driver: Option<String>,
    /// golden | silver | a float (floats are rational; a warning is printed)
    #[arg(long)]
    alpha: Option<String>,
    /// Markov driver matrix (measure file)
    #[arg(long)]
    driver_matrix: Option<PathBuf>,
    #[arg(long)]
    driver_window: Option<usize>,
    /// constant | relabeled
    #[arg(long)]
    fiber: Option<String>,
    /// Permutations for relabeled fibers, e.g. 0,1,2;0,2,1
    #[arg(long)]
    perms: Option<String>,
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long)]
    a2: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n_grid: Option<String>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    omega_samples: Option<usize>,
    /// JSON-lines report: one record per omega plus one integrated record
    #[arg(long)]
    report: Option<PathBuf>,
}

impl RdsArgs {
    fn kv(&self) -> Result<KeyValues> {
        let mut kv = self.common.kv()?;
        set_opt!(kv, "system", self.system.as_ref().map(|p| p.display()));
        set_opt!(kv, "measure", self.measure.as_ref().map(|p| p.display()));
        set_opt!(kv, "driver.kind", self.driver);
        set_opt!(kv, "driver.alpha", self.alpha);
        set_opt!(kv, "driver.matrix", self.driver_matrix.as_ref().map(|p| p.display()));
        set_opt!(kv, "driver.window", self.driver_window);
        set_opt!(kv, "fiber.kind", self.fiber);
        set_opt!(kv, "fiber.params", self.perms);
        set_opt!(kv, "a1", self.a1);
        set_opt!(kv, "a2", self.a2);
        set_opt!(kv, "k", self.k);
        set_opt!(kv, "n_grid", self.n_grid);
        set_opt!(kv, "delta", self.delta);
        set_opt!(kv, "omega_samples", self.omega_samples);
        set_opt!(kv, "report", self.report.as_ref().map(|p| p.display()));
        Ok(kv)
    }
}

#[derive(Args)]
struct FrostmanArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    system: Option<PathBuf>,
    #[arg(long)]
    measure: Option<PathBuf>,
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long)]
    a2: Option<f64>,
    /// The exponent to test against exp(-s n)
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
}

impl FrostmanArgs {
    fn kv(&self) -> Result<KeyValues> {
        let mut kv = self.common.kv()?;
        set_opt!(kv, "system", self.system.as_ref().map(|p| p.display()));
        set_opt!(kv, "measure", self.measure.as_ref().map(|p| p.display()));
        set_opt!(kv, "a1", self.a1);
        set_opt!(kv, "a2", self.a2);
        set_opt!(kv, "s", self.s);
        set_opt!(kv, "k", self.k);
        set_opt!(kv, "n_min", self.n_min);
        set_opt!(kv, "n_max", self.n_max);
        set_opt!(kv, "samples", self.samples);
        Ok(kv)
    }
}

#[derive(Subcommand)]
enum ValidateCmd {
    /// Trajectory-averaged information against the weighted entropy
    Smb(SeriesArgs),
    /// Ball-measure decay against the weighted entropy
    BrinKatok(SeriesArgs),
    /// Covering slopes across deltas
    KatokDelta(KatokDeltaArgs),
    /// Pointwise information chain rule on cylinder partitions
    ChainRule(ChainRuleArgs),
}

#[derive(Args)]
struct SeriesArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    system: Option<PathBuf>,
    #[arg(long)]
    measure: Option<PathBuf>,
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long)]
    a2: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n_grid: Option<String>,
    #[arg(long)]
    trajectories: Option<usize>,
    #[arg(long)]
    points: Option<usize>,
    /// Tail-gap tolerance for the pass flag
    #[arg(long)]
    gap_tol: Option<f64>,
    /// Tail-mean tolerance for the pass flag
    #[arg(long)]
    mean_tol: Option<f64>,
    /// CSV of (n, value, ci)
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl SeriesArgs {
    fn kv(&self) -> Result<KeyValues> {
        let mut kv = self.common.kv()?;
        set_opt!(kv, "system", self.system.as_ref().map(|p| p.display()));
        set_opt!(kv, "measure", self.measure.as_ref().map(|p| p.display()));
        set_opt!(kv, "a1", self.a1);
        set_opt!(kv, "a2", self.a2);
        set_opt!(kv, "k", self.k);
        set_opt!(kv, "n_grid", self.n_grid);
        set_opt!(kv, "trajectories", self.trajectories);
        set_opt!(kv, "points", self.points);
        set_opt!(kv, "gap_tol", self.gap_tol);
        set_opt!(kv, "mean_tol", self.mean_tol);
        set_opt!(kv, "csv", self.csv.as_ref().map(|p| p.display()));
        Ok(kv)
    }
}

#[derive(Args)]
struct KatokDeltaArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    system: Option<PathBuf>,
    #[arg(long)]
    measure: Option<PathBuf>,
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long)]
    a2: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    /// Comma-separated deltas in (0,1)
    #[arg(long)]
    deltas: Option<String>,
    #[arg(long)]
    n_grid: Option<String>,
    /// Maximum allowed pairwise slope gap
    #[arg(long)]
    tol: Option<f64>,
}

impl KatokDeltaArgs {
    fn kv(&self) -> Result<KeyValues> {
        let mut kv = self.common.kv()?;
        set_opt!(kv, "system", self.system.as_ref().map(|p| p.display()));
        set_opt!(kv, "measure", self.measure.as_ref().map(|p| p.display()));
        set_opt!(kv, "a1", self.a1);
        set_opt!(kv, "a2", self.a2);
        set_opt!(kv, "k", self.k);
        set_opt!(kv, "deltas", self.deltas);
        set_opt!(kv, "n_grid", self.n_grid);
        set_opt!(kv, "tol", self.tol);
        Ok(kv)
    }
}

#[derive(Args)]
struct ChainRuleArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    measure: Option<PathBuf>,
    /// Coordinate range start:end of the first partition
    #[arg(long)]
    alpha: Option<String>,
    /// Coordinate range start:end of the second partition
    #[arg(long)]
    beta: Option<String>,
    /// Optional conditioning range start:end
    #[arg(long)]
    gamma: Option<String>,
}

impl ChainRuleArgs {
    fn kv(&self) -> Result<KeyValues> {
        let mut kv = self.common.kv()?;
        set_opt!(kv, "measure", self.measure.as_ref().map(|p| p.display()));
        set_opt!(kv, "alpha", self.alpha);
        set_opt!(kv, "beta", self.beta);
        set_opt!(kv, "gamma", self.gamma);
        Ok(kv)
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Command::Entropy { cmd } => match cmd {
            EntropyCmd::Bernoulli(args) => commands::entropy_bernoulli(Ctx::new(args.kv()?)),
            EntropyCmd::Markov(args) => commands::entropy_markov(Ctx::new(args.kv()?)),
            EntropyCmd::HiddenFactor(args) => {
                commands::entropy_hidden_factor(Ctx::new(args.kv()?))
            }
            EntropyCmd::WeightedCover(args) => {
                commands::entropy_weighted_cover(Ctx::new(args.kv()?))
            }
            EntropyCmd::Katok(args) => commands::entropy_katok(Ctx::new(args.kv()?)),
        },
        Command::Variational { cmd } => match cmd {
            VariationalCmd::Optimize(args) => {
                commands::variational_optimize(Ctx::new(args.kv()?))
            }
            VariationalCmd::Gap(args) => commands::variational_gap(Ctx::new(args.kv()?)),
        },
        Command::Dimension { cmd } => match cmd {
            DimensionCmd::Carpet(args) => commands::dimension_carpet(Ctx::new(args.kv()?)),
            DimensionCmd::BoxCount(args) => commands::dimension_box_count(Ctx::new(args.kv()?)),
        },
        Command::Rds { cmd } => match cmd {
            RdsCmd::FiberEntropy(args) => commands::rds_fiber_entropy(Ctx::new(args.kv()?)),
            RdsCmd::Frostman(args) => commands::rds_frostman(Ctx::new(args.kv()?)),
        },
        Command::Validate { cmd } => match cmd {
            ValidateCmd::Smb(args) => commands::validate_smb(Ctx::new(args.kv()?)),
            ValidateCmd::BrinKatok(args) => commands::validate_brin_katok(Ctx::new(args.kv()?)),
            ValidateCmd::KatokDelta(args) => commands::validate_katok_delta(Ctx::new(args.kv()?)),
            ValidateCmd::ChainRule(args) => commands::validate_chain_rule(Ctx::new(args.kv()?)),
        },
        Command::Reproduce { id, all } => reproduce(id, all),
        Command::VerifyManifest { manifest } => verify_manifest(&manifest),
    }
}

fn reproduce(id: Option<String>, all: bool) -> Result<()> {
    let reports = if all {
        acceptance::run_all()
    } else {
        let id = id.ok_or_else(|| Error::invalid("give a criterion id or --all"))?;
        vec![acceptance::run(&id)?]
    };
    let mut failed = 0usize;
    for r in &reports {
        println!(
            "{} {} ({} ms): {}",
            r.id,
            if r.pass { "PASS" } else { "FAIL" },
            r.elapsed_ms,
            r.detail
        );
        if !r.pass {
            failed += 1;
        }
    }
    if reports.len() > 1 {
        println!(
            "summary: {} passed, {failed} failed of {}",
            reports.len() - failed,
            reports.len()
        );
    }
    if failed > 0 {
        Err(Error::internal(format!("{failed} criteria failed")))
    } else {
        Ok(())
    }
}

fn verify_manifest(path: &PathBuf) -> Result<()> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read manifest {}: {e}", path.display())))?;
    let manifest: manifest::RunManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("bad manifest: {e}")))?;
    let bad = manifest.verify()?;
    if bad.is_empty() {
        println!("ok: {} outputs verified", manifest.outputs.len());
        Ok(())
    } else {
        Err(Error::internal(format!(
            "digest mismatch in {} file(s): {}",
            bad.len(),
            bad.join(", ")
        )))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Invalid(_) | Error::Parse(_) => ExitCode::from(2),
                Error::Refusal(_) => ExitCode::from(3),
                Error::Internal(_) | Error::Io(_) => ExitCode::from(1),
            }
        }
    }
}
