//! Command-line layer over the experiment drivers: argument parsing, flat
//! `key=value` configuration files, and pure report production.
//!
//! Every subcommand resolves its parameters in the same order — built-in
//! defaults, then the optional `--config` file, then explicit flags — runs
//! one experiment driver, and emits a JSON report plus a CSV table. Report
//! production is a pure function of the resolved configuration
//! ([`produce_report`]), so output bytes are identical for identical
//! configurations regardless of worker-thread count or output location.
//!
//! Exit codes (see the binary): `0` success, `2` rejected input or I/O
//! failure, `3` a built-in experiment assertion failed.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use stochlab_core::besov::{self, BesovParams};
use stochlab_core::experiments::counterexample::{moment_rate_constant, psi_grid_holder_parts};
use stochlab_core::experiments::{
    approximation_builtin, corpus, divergence_experiment, domination_campaign, embedding_campaign,
    equivalence_experiment, frozen_set, psi_exact_moment, psi_holder_constant, psi_sup_bound,
    ApproxTable, DivergenceTable, DominationCampaign, EmbeddingCampaign, EquivalenceReport,
    PsiMoment, PsiSpec,
};
use stochlab_core::experiments::counterexample::build_psi;
use stochlab_core::stochint::terminal_moment_estimate;
use stochlab_core::sums::MeanStats;
use stochlab_core::{Error, Result};

// --------------------------------------------------------------------------
// Argument surface
// --------------------------------------------------------------------------

/// Numerical laboratory for stochastic integration with `l^p` targets.
#[derive(Debug, Parser)]
#[command(name = "stochlab", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Flat `key=value` configuration file; flags override its entries.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory receiving `report.json` and `table.csv`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Base seed for all randomness.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Exact constants, grid Hoelder norm, and Monte Carlo moment check for
    /// the explicit Hoelder-continuous integrand family.
    Counterexample(CounterexampleArgs),
    /// Moment-versus-Hoelder divergence table as the family deepens.
    Divergence(DivergenceArgs),
    /// Terminal-moment versus square-function ratio campaign over the
    /// bounded adapted corpus.
    Equivalence(EquivalenceArgs),
    /// Radonifying-norm embedding bound over the Lipschitz kernel corpus.
    Embedding(EmbeddingArgs),
    /// Domination monotonicity campaign over scaled step-process pairs.
    Domination(DominationArgs),
    /// Martingale-average approximation residuals for the built-in bounded
    /// Lipschitz process.
    Approximation(ApproximationArgs),
    /// Smoothness diagnostics (dyadic modulus profile, Besov seminorm,
    /// Hoelder norm) for one Lipschitz corpus kernel.
    Besov(BesovArgs),
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Target norm exponent, `1 <= p < 2`.
    #[arg(long)]
    pub p: Option<f64>,
    /// Top tent level `N`; the target space has dimension `2^(N+1)`.
    #[arg(long = "N")]
    pub top_level: Option<u32>,
    /// Grid level for materialization and Monte Carlo integration.
    #[arg(long)]
    pub level: Option<u32>,
    /// Grid level for the exact Hoelder-norm evaluation.
    #[arg(long = "holder-level")]
    pub holder_level: Option<u32>,
    /// Monte Carlo path count.
    #[arg(long)]
    pub paths: Option<u64>,
}

#[derive(Debug, Args)]
pub struct DivergenceArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Target norm exponent, `1 <= p < 2`.
    #[arg(long)]
    pub p: Option<f64>,
    /// Comma-separated strictly increasing top levels `N`.
    #[arg(long = "N-list", value_name = "N1,N2,...")]
    pub top_levels: Option<String>,
    /// Grid level for the Hoelder-norm column.
    #[arg(long)]
    pub level: Option<u32>,
}

#[derive(Debug, Args)]
pub struct EquivalenceArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Target norm exponent (`p = 1` is rejected: coordinate martingale
    /// differences in `l^1` are not unconditional, so no two-sided
    /// square-function comparison exists there).
    #[arg(long)]
    pub p: Option<f64>,
    /// Target dimension.
    #[arg(long)]
    pub n: Option<usize>,
    /// Brownian dimension.
    #[arg(long)]
    pub d: Option<usize>,
    /// Number of corpus instances.
    #[arg(long)]
    pub instances: Option<u64>,
    /// Monte Carlo paths per instance.
    #[arg(long)]
    pub paths: Option<u64>,
    /// Dyadic grid level.
    #[arg(long)]
    pub level: Option<u32>,
}

#[derive(Debug, Args)]
pub struct EmbeddingArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Target norm exponent, `1 <= p <= 2`.
    #[arg(long)]
    pub p: Option<f64>,
    /// Number of corpus instances.
    #[arg(long)]
    pub instances: Option<u64>,
    /// Dyadic grid level.
    #[arg(long)]
    pub level: Option<u32>,
    /// Deepest translation scale `2^{-n-1}` entering the block sum.
    #[arg(long = "n-max")]
    pub n_max: Option<u32>,
    /// Gaussian samples for the left-hand norm estimate.
    #[arg(long = "mc-samples")]
    pub mc_samples: Option<u64>,
}

#[derive(Debug, Args)]
pub struct DominationArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Target norm exponent.
    #[arg(long)]
    pub p: Option<f64>,
    /// Target dimension.
    #[arg(long)]
    pub n: Option<usize>,
    /// Brownian dimension.
    #[arg(long)]
    pub d: Option<usize>,
    /// Number of dominated pairs.
    #[arg(long)]
    pub instances: Option<u64>,
    /// Random functionals checked per pair.
    #[arg(long = "functional-samples")]
    pub functional_samples: Option<u64>,
    /// Gaussian samples for the Monte Carlo norm comparison.
    #[arg(long = "mc-samples")]
    pub mc_samples: Option<u64>,
    /// Dyadic grid level.
    #[arg(long)]
    pub level: Option<u32>,
}

#[derive(Debug, Args)]
pub struct ApproximationArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Dyadic grid level.
    #[arg(long)]
    pub level: Option<u32>,
    /// Deepest averaging level (`n_max >= 6`).
    #[arg(long = "n-max")]
    pub n_max: Option<u32>,
    /// Monte Carlo path count.
    #[arg(long)]
    pub paths: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BesovArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Norm exponent of both the target space and the modulus.
    #[arg(long)]
    pub p: Option<f64>,
    /// Smoothness order `s` in `(0, 1)`.
    #[arg(long)]
    pub s: Option<f64>,
    /// Summation exponent `q` (defaults to `p`).
    #[arg(long)]
    pub q: Option<f64>,
    /// Hoelder exponent for the pairwise norm column.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Corpus instance index.
    #[arg(long)]
    pub index: Option<u64>,
    /// Kernel output dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Dyadic grid level.
    #[arg(long)]
    pub level: Option<u32>,
}

// --------------------------------------------------------------------------
// Resolved configurations
// --------------------------------------------------------------------------

/// A fully resolved command: every parameter fixed, ready to run without
/// further input. [`produce_report`] is a pure function of this value.
#[derive(Debug, Clone)]
pub enum ResolvedCommand {
    Counterexample(CounterexampleConfig),
    Divergence(DivergenceConfig),
    Equivalence(EquivalenceConfig),
    Embedding(EmbeddingConfig),
    Domination(DominationConfig),
    Approximation(ApproximationConfig),
    Besov(BesovConfig),
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleConfig {
    pub p: f64,
    pub top_level: u32,
    pub grid_level: u32,
    pub holder_grid_level: u32,
    pub paths: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DivergenceConfig {
    pub p: f64,
    pub top_levels: Vec<u32>,
    pub holder_grid_level: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceConfig {
    pub p: f64,
    pub dim_out: usize,
    pub dim_in: usize,
    pub instances: u64,
    pub paths: u64,
    pub grid_level: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EmbeddingConfig {
    pub p: f64,
    pub instances: u64,
    pub grid_level: u32,
    pub n_max: u32,
    pub mc_samples: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DominationConfig {
    pub p: f64,
    pub dim_out: usize,
    pub dim_in: usize,
    pub instances: u64,
    pub functional_samples: u64,
    pub mc_samples: u64,
    pub grid_level: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproximationConfig {
    pub grid_level: u32,
    pub n_max: u32,
    pub paths: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BesovConfig {
    pub p: f64,
    pub s: f64,
    pub q: f64,
    pub alpha: f64,
    pub index: u64,
    pub dim: usize,
    pub grid_level: u32,
    pub seed: u64,
}

// --------------------------------------------------------------------------
// Configuration files
// --------------------------------------------------------------------------

/// Flat `key=value` file: one entry per line, `#` comments, keys equal to
/// the long flag names of the subcommand. Unknown keys are rejected so that
/// a typo cannot silently fall back to a default.
struct KeyMap(BTreeMap<String, String>);

impl KeyMap {
    fn load(path: Option<&Path>) -> Result<Self> {
        let mut map = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io(format!("config {}: {e}", path.display())))?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    Error::Parse(format!(
                        "config line {}: expected key=value, got `{line}`",
                        lineno + 1
                    ))
                })?;
                let key = k.trim().to_string();
                if map.insert(key.clone(), v.trim().to_string()).is_some() {
                    return Err(Error::Parse(format!("duplicate config key `{key}`")));
                }
            }
        }
        Ok(Self(map))
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.0.remove(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|e| {
                Error::Parse(format!("config key `{key}`: cannot parse `{raw}`: {e}"))
            }),
        }
    }

    fn finish(self) -> Result<()> {
        if self.0.is_empty() {
            Ok(())
        } else {
            let keys: Vec<_> = self.0.keys().cloned().collect();
            Err(Error::Parse(format!(
                "unrecognized config key(s): {}",
                keys.join(", ")
            )))
        }
    }
}

/// Defaults < config file < flag.
fn pick<T: FromStr>(flag: Option<T>, km: &mut KeyMap, key: &str, default: T) -> Result<T>
where
    T::Err: Display,
{
    Ok(flag.or(km.take(key)?).unwrap_or(default))
}

fn pick_opt<T: FromStr>(flag: Option<T>, km: &mut KeyMap, key: &str) -> Result<Option<T>>
where
    T::Err: Display,
{
    Ok(flag.or(km.take(key)?))
}

fn parse_u32_list(raw: &str) -> Result<Vec<u32>> {
    raw.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<u32>()
                .map_err(|e| Error::Parse(format!("size list entry `{s}`: {e}")))
        })
        .collect()
}

/// Resolves a parsed command line into a runnable configuration and the
/// output directory.
pub fn resolve(command: CommandArgs) -> Result<(ResolvedCommand, PathBuf)> {
    match command {
        CommandArgs::Counterexample(a) => {
            let mut km = KeyMap::load(a.common.config.as_deref())?;
            let out = pick(a.common.out, &mut km, "out", PathBuf::from("reports"))?;
            let cfg = CounterexampleConfig {
                p: pick(a.p, &mut km, "p", 1.5)?,
                top_level: pick(a.top_level, &mut km, "N", 4)?,
                grid_level: pick(a.level, &mut km, "level", 12)?,
                holder_grid_level: pick(a.holder_level, &mut km, "holder-level", 14)?,
                paths: pick(a.paths, &mut km, "paths", 100_000)?,
                seed: pick(a.common.seed, &mut km, "seed", 1)?,
            };
            km.finish()?;
            Ok((ResolvedCommand::Counterexample(cfg), out))
        }
        CommandArgs::Divergence(a) => {
            let mut km = KeyMap::load(a.common.config.as_deref())?;
            let out = pick(a.common.out, &mut km, "out", PathBuf::from("reports"))?;
            // The table is deterministic; accept and ignore a seed so shared
            // config files work across subcommands.
            let _ = pick(a.common.seed, &mut km, "seed", 1)?;
            let raw = pick(a.top_levels, &mut km, "N-list", "2,4,8,16,32".into())?;
            let cfg = DivergenceConfig {
                p: pick(a.p, &mut km, "p", 1.5)?,
                top_levels: parse_u32_list(&raw)?,
                holder_grid_level: pick(a.level, &mut km, "level", 14)?,
            };
            km.finish()?;
            Ok((ResolvedCommand::Divergence(cfg), out))
        }
        CommandArgs::Equivalence(a) => {
            let mut km = KeyMap::load(a.common.config.as_deref())?;
            let out = pick(a.common.out, &mut km, "out", PathBuf::from("reports"))?;
            let cfg = EquivalenceConfig {
                p: pick(a.p, &mut km, "p", 1.5)?,
                dim_out: pick(a.n, &mut km, "n", 8)?,
                dim_in: pick(a.d, &mut km, "d", 2)?,
                instances: pick(a.instances, &mut km, "instances", 50)?,
                paths: pick(a.paths, &mut km, "paths", 20_000)?,
                grid_level: pick(a.level, &mut km, "level", 8)?,
                seed: pick(a.common.seed, &mut km, "seed", 1)?,
            };
            km.finish()?;
            Ok((ResolvedCommand::Equivalence(cfg), out))
        }
        CommandArgs::Embedding(a) => {
            let mut km = KeyMap::load(a.common.config.as_deref())?;
            let out = pick(a.common.out, &mut km, "out", PathBuf::from("reports"))?;
            let cfg = EmbeddingConfig {
                p: pick(a.p, &mut km, "p", 1.5)?,
                instances: pick(a.instances, &mut km, "instances", 30)?,
                grid_level: pick(a.level, &mut km, "level", 8)?,
                n_max: pick(a.n_max, &mut km, "n-max", 7)?,
                mc_samples: pick(a.mc_samples, &mut km, "mc-samples", 4_000)?,
                seed: pick(a.common.seed, &mut km, "seed", 1)?,
            };
            km.finish()?;
            Ok((ResolvedCommand::Embedding(cfg), out))
        }
        CommandArgs::Domination(a) => {
            let mut km = KeyMap::load(a.common.config.as_deref())?;
            let out = pick(a.common.out, &mut km, "out", PathBuf::from("reports"))?;
            let cfg = DominationConfig {
                p: pick(a.p, &mut km, "p", 1.5)?,
                dim_out: pick(a.n, &mut km, "n", 4)?,
                dim_in: pick(a.d, &mut km, "d", 2)?,
                instances: pick(a.instances, &mut km, "instances", 30)?,
                functional_samples: pick(a.functional_samples, &mut km, "functional-samples", 64)?,
                mc_samples: pick(a.mc_samples, &mut km, "mc-samples", 4_000)?,
                grid_level: pick(a.level, &mut km, "level", 5)?,
                seed: pick(a.common.seed, &mut km, "seed", 1)?,
            };
            km.finish()?;
            Ok((ResolvedCommand::Domination(cfg), out))
        }
        CommandArgs::Approximation(a) => {
            let mut km = KeyMap::load(a.common.config.as_deref())?;
            let out = pick(a.common.out, &mut km, "out", PathBuf::from("reports"))?;
            let cfg = ApproximationConfig {
                grid_level: pick(a.level, &mut km, "level", 14)?,
                n_max: pick(a.n_max, &mut km, "n-max", 10)?,
                paths: pick(a.paths, &mut km, "paths", 10_000)?,
                seed: pick(a.common.seed, &mut km, "seed", 1)?,
            };
            km.finish()?;
            Ok((ResolvedCommand::Approximation(cfg), out))
        }
        CommandArgs::Besov(a) => {
            let mut km = KeyMap::load(a.common.config.as_deref())?;
            let out = pick(a.common.out, &mut km, "out", PathBuf::from("reports"))?;
            let p = pick(a.p, &mut km, "p", 2.0)?;
            let cfg = BesovConfig {
                p,
                s: pick(a.s, &mut km, "s", 0.5)?,
                q: pick_opt(a.q, &mut km, "q")?.unwrap_or(p),
                alpha: pick(a.alpha, &mut km, "alpha", 0.5)?,
                index: pick(a.index, &mut km, "index", 0)?,
                dim: pick(a.dim, &mut km, "dim", 3)?,
                grid_level: pick(a.level, &mut km, "level", 10)?,
                seed: pick(a.common.seed, &mut km, "seed", 1)?,
            };
            km.finish()?;
            Ok((ResolvedCommand::Besov(cfg), out))
        }
    }
}

// --------------------------------------------------------------------------
// Reports produced by the subcommands without a dedicated core report type
// --------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    /// Target dimension `2^(N+1)`.
    pub dim: usize,
    /// Hoelder exponent `1/p - 1/2`.
    pub alpha: f64,
    /// Exact terminal moment `E ||I(1)||_p^p` and its variants.
    pub moment: PsiMoment,
    /// Growth constant: the moment root equals `rate_constant * (N+1)^{1/p}`.
    pub rate_constant: f64,
    /// Uniform bound on `sup_t ||psi(t)||_p` over the whole family.
    pub sup_bound: f64,
    /// Uniform bound on the Hoelder norm over the whole family.
    pub holder_constant: f64,
    pub grid_holder_sup: f64,
    pub grid_holder_seminorm: f64,
    pub grid_holder_norm: f64,
    /// `grid_holder_norm <= holder_constant` (enforced).
    pub holder_within_constant: bool,
    /// Monte Carlo estimate of `E ||I(1)||_p^p`.
    pub mc_terminal: MeanStats,
    /// `|mc - exact|` in standard-error units.
    pub mc_deviation_se: f64,
    /// Deviation at most three standard errors (enforced).
    pub mc_within_3se: bool,
}

fn counterexample_report(cfg: &CounterexampleConfig) -> Result<CounterexampleReport> {
    if cfg.paths < 16 {
        return Err(Error::BadParameter(
            "the moment check needs at least 16 paths for a usable standard error".into(),
        ));
    }
    let spec = PsiSpec::new(cfg.top_level, cfg.p)?;
    let moment = psi_exact_moment(&spec)?;
    let holder_constant = psi_holder_constant(cfg.p)?;
    let (grid_sup, grid_semi) = psi_grid_holder_parts(&spec, cfg.holder_grid_level)?;
    let grid_norm = grid_sup + grid_semi;
    if grid_norm > holder_constant {
        return Err(Error::AssertionFailed(format!(
            "grid Hoelder norm {grid_norm} exceeds the uniform family bound {holder_constant}"
        )));
    }
    let psi = build_psi(&spec, cfg.grid_level)?;
    let mc = terminal_moment_estimate(&psi, cfg.p, cfg.paths, cfg.seed)?;
    let deviation = (mc.mean - moment.level_sum).abs() / mc.std_error;
    if !(deviation <= 3.0) {
        return Err(Error::AssertionFailed(format!(
            "Monte Carlo p-th moment {} deviates from the exact value {} by {deviation:.2} \
             standard errors",
            mc.mean, moment.level_sum
        )));
    }
    Ok(CounterexampleReport {
        dim: spec.dim(),
        alpha: spec.alpha(),
        moment,
        rate_constant: moment_rate_constant(cfg.p)?,
        sup_bound: psi_sup_bound(cfg.p)?,
        holder_constant,
        grid_holder_sup: grid_sup,
        grid_holder_seminorm: grid_semi,
        grid_holder_norm: grid_norm,
        holder_within_constant: true,
        mc_terminal: mc,
        mc_deviation_se: deviation,
        mc_within_3se: true,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BesovScaleRow {
    /// Dyadic scale index: the modulus is evaluated at `t = 2^{-n}`.
    pub n: u32,
    pub scale: f64,
    /// `L^p` modulus of continuity at that scale.
    pub modulus: f64,
    /// `2^{ns} * modulus`, the summand of the smoothness seminorm.
    pub weighted: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BesovReport {
    /// `L^p` norm of the kernel in time.
    pub lp_part: f64,
    /// Dyadic smoothness seminorm at `(s, p, q)`.
    pub seminorm: f64,
    /// `lp_part + seminorm`.
    pub norm: f64,
    pub holder_alpha: f64,
    pub holder_sup: f64,
    pub holder_seminorm: f64,
    pub holder_norm: f64,
    pub scales: Vec<BesovScaleRow>,
}

fn besov_report(cfg: &BesovConfig) -> Result<BesovReport> {
    let phi = corpus::schauder_series(cfg.seed, cfg.index, cfg.grid_level, cfg.dim, cfg.p)?;
    let f = phi.kernel_grid_function()?;
    let params = BesovParams::new(cfg.s, cfg.p, cfg.q, 1.0)?;
    let lp_part = f.time_lp_norm(cfg.p);
    let seminorm = besov::besov_seminorm_dyadic(&f, &params);
    let (holder_sup, holder_semi) = besov::holder_parts(&f, cfg.alpha)?;
    let mut scales = Vec::new();
    for n in 0..=cfg.grid_level {
        let scale = 0.5f64.powi(n as i32);
        let modulus = besov::modulus(&f, scale, cfg.p)?;
        scales.push(BesovScaleRow {
            n,
            scale,
            modulus,
            weighted: modulus / scale.powf(cfg.s),
        });
    }
    Ok(BesovReport {
        lp_part,
        seminorm,
        norm: lp_part + seminorm,
        holder_alpha: cfg.alpha,
        holder_sup,
        holder_seminorm: holder_semi,
        holder_norm: holder_sup + holder_semi,
        scales,
    })
}

// --------------------------------------------------------------------------
// Rendering
// --------------------------------------------------------------------------

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    config: &'a C,
    frozen: stochlab_core::experiments::FrozenSet,
    report: &'a R,
}

/// Pretty JSON with keys sorted at every level (routing through a sorted
/// value map), terminated by a newline.
fn render_json<C: Serialize, R: Serialize>(command: &str, config: &C, report: &R) -> Result<String> {
    let envelope = Envelope {
        command,
        config,
        frozen: frozen_set(),
        report,
    };
    let value = serde_json::to_value(&envelope)
        .map_err(|e| Error::Parse(format!("report serialization: {e}")))?;
    let mut text = serde_json::to_string_pretty(&value)
        .map_err(|e| Error::Parse(format!("report serialization: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

fn opt<T: Display>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn counterexample_csv(cfg: &CounterexampleConfig, r: &CounterexampleReport) -> String {
    let rows = [
        ("p", cfg.p.to_string()),
        ("top_level", cfg.top_level.to_string()),
        ("dim", r.dim.to_string()),
        ("alpha", r.alpha.to_string()),
        ("exact_pth_moment", r.moment.level_sum.to_string()),
        ("dropped_level_pth_moment", r.moment.dropped_level_sum.to_string()),
        ("moment_root", r.moment.root.to_string()),
        ("rate_constant", r.rate_constant.to_string()),
        ("sup_bound", r.sup_bound.to_string()),
        ("holder_constant", r.holder_constant.to_string()),
        ("holder_grid_level", cfg.holder_grid_level.to_string()),
        ("grid_holder_sup", r.grid_holder_sup.to_string()),
        ("grid_holder_seminorm", r.grid_holder_seminorm.to_string()),
        ("grid_holder_norm", r.grid_holder_norm.to_string()),
        ("mc_grid_level", cfg.grid_level.to_string()),
        ("paths", cfg.paths.to_string()),
        ("mc_terminal_mean", r.mc_terminal.mean.to_string()),
        ("mc_terminal_std_error", r.mc_terminal.std_error.to_string()),
        ("mc_deviation_se", r.mc_deviation_se.to_string()),
    ];
    csv(
        "quantity,value",
        rows.into_iter().map(|(k, v)| format!("{k},{v}")),
    )
}

fn divergence_csv(t: &DivergenceTable) -> String {
    csv(
        "top_level,moment_root,holder_norm,ratio",
        t.rows.iter().map(|r| {
            format!(
                "{},{},{},{}",
                r.top_level, r.moment_root, r.holder_norm, r.ratio
            )
        }),
    )
}

fn equivalence_csv(r: &EquivalenceReport) -> String {
    csv(
        "index,terminal_sq_mean,terminal_sq_se,square_fn_sq_mean,square_fn_sq_se,ratio",
        r.rows.iter().map(|row| {
            format!(
                "{},{},{},{},{},{}",
                row.index,
                row.terminal_sq.mean,
                row.terminal_sq.std_error,
                row.square_fn_sq.mean,
                row.square_fn_sq.std_error,
                row.ratio
            )
        }),
    )
}

fn embedding_csv(c: &EmbeddingCampaign) -> String {
    csv(
        "index,left_mean,left_se,lp_part,block_sum,right,truncation_rel_change,\
         left_leq_right,besov_seminorm,blocksum_ratio,blocksum_ok",
        c.rows.iter().enumerate().map(|(i, r)| {
            format!(
                "{},{},{},{},{},{},{},{},{},{},{}",
                i,
                r.left_fine.mean,
                r.left_fine.std_error,
                r.lp_part,
                r.block_sum,
                r.right,
                r.truncation_rel_change,
                r.left_leq_right,
                opt(r.besov_seminorm),
                opt(r.blocksum_ratio),
                opt(r.blocksum_ok)
            )
        }),
    )
}

fn domination_csv(c: &DominationCampaign) -> String {
    csv(
        "index,scale_min,scale_max,functionals_checked,violations,hypothesis_holds,\
         exact_phi,exact_psi,exact_ordered,phi_norm_mean,phi_norm_se,psi_norm_mean,\
         psi_norm_se,mc_ordered",
        c.rows.iter().map(|row| {
            let r = &row.report;
            format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                row.index,
                row.scale_min,
                row.scale_max,
                r.functionals_checked,
                r.violations.len(),
                r.hypothesis_holds,
                r.exact_phi,
                r.exact_psi,
                r.exact_ordered,
                r.phi_norm.mean,
                r.phi_norm.std_error,
                r.psi_norm.mean,
                r.psi_norm.std_error,
                r.mc_ordered
            )
        }),
    )
}

fn approximation_csv(t: &ApproxTable) -> String {
    csv(
        "n,l2_sq_mean,l2_sq_se,l2_residual_mean,l2_residual_se,sup_moment_mean,sup_moment_se",
        t.rows.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{}",
                r.n,
                r.l2_sq.mean,
                r.l2_sq.std_error,
                r.l2_residual.mean,
                r.l2_residual.std_error,
                r.sup_moment.mean,
                r.sup_moment.std_error
            )
        }),
    )
}

fn besov_csv(r: &BesovReport) -> String {
    csv(
        "n,scale,modulus,weighted",
        r.scales
            .iter()
            .map(|s| format!("{},{},{},{}", s.n, s.scale, s.modulus, s.weighted)),
    )
}

/// Runs the resolved command and renders `(report.json, table.csv)` bodies.
///
/// Pure: identical configurations yield identical bytes, independent of the
/// rayon worker count and of where the caller writes the results.
pub fn produce_report(resolved: &ResolvedCommand) -> Result<(String, String)> {
    match resolved {
        ResolvedCommand::Counterexample(cfg) => {
            let report = counterexample_report(cfg)?;
            Ok((
                render_json("counterexample", cfg, &report)?,
                counterexample_csv(cfg, &report),
            ))
        }
        ResolvedCommand::Divergence(cfg) => {
            let table = divergence_experiment(cfg.p, &cfg.top_levels, cfg.holder_grid_level)?;
            Ok((render_json("divergence", cfg, &table)?, divergence_csv(&table)))
        }
        ResolvedCommand::Equivalence(cfg) => {
            let report = equivalence_experiment(
                cfg.p,
                cfg.dim_out,
                cfg.dim_in,
                cfg.instances,
                cfg.paths,
                cfg.seed,
                cfg.grid_level,
            )?;
            Ok((
                render_json("equivalence", cfg, &report)?,
                equivalence_csv(&report),
            ))
        }
        ResolvedCommand::Embedding(cfg) => {
            let campaign = embedding_campaign(
                cfg.p,
                cfg.instances,
                cfg.grid_level,
                cfg.n_max,
                cfg.mc_samples,
                cfg.seed,
            )?;
            Ok((
                render_json("embedding", cfg, &campaign)?,
                embedding_csv(&campaign),
            ))
        }
        ResolvedCommand::Domination(cfg) => {
            let campaign = domination_campaign(
                cfg.p,
                cfg.dim_out,
                cfg.dim_in,
                cfg.instances,
                cfg.functional_samples,
                cfg.mc_samples,
                cfg.seed,
                cfg.grid_level,
            )?;
            Ok((
                render_json("domination", cfg, &campaign)?,
                domination_csv(&campaign),
            ))
        }
        ResolvedCommand::Approximation(cfg) => {
            let table = approximation_builtin(cfg.grid_level, cfg.n_max, cfg.paths, cfg.seed)?;
            Ok((
                render_json("approximation", cfg, &table)?,
                approximation_csv(&table),
            ))
        }
        ResolvedCommand::Besov(cfg) => {
            let report = besov_report(cfg)?;
            Ok((render_json("besov", cfg, &report)?, besov_csv(&report)))
        }
    }
}

// --------------------------------------------------------------------------
// Entry points
// --------------------------------------------------------------------------

/// Applies `STOCHLAB_WORKERS` to the global rayon pool when set. Results do
/// not depend on the worker count; the knob only controls parallelism.
pub fn configure_workers_from_env() -> Result<()> {
    match std::env::var("STOCHLAB_WORKERS") {
        Err(_) => Ok(()),
        Ok(raw) => {
            let n: usize = raw.parse().map_err(|_| {
                Error::Parse(format!("STOCHLAB_WORKERS=`{raw}` is not a worker count"))
            })?;
            if n == 0 {
                return Err(Error::BadParameter("STOCHLAB_WORKERS must be >= 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::BadParameter(format!("thread pool: {e}")))
        }
    }
}

/// Resolves, runs, and writes `report.json` and `table.csv` into the output
/// directory; returns both paths.
pub fn run(cli: Cli) -> Result<(PathBuf, PathBuf)> {
    let (resolved, out) = resolve(cli.command)?;
    let (json, table) = produce_report(&resolved)?;
    std::fs::create_dir_all(&out)
        .map_err(|e| Error::Io(format!("create {}: {e}", out.display())))?;
    let json_path = out.join("report.json");
    let csv_path = out.join("table.csv");
    std::fs::write(&json_path, json)
        .map_err(|e| Error::Io(format!("write {}: {e}", json_path.display())))?;
    std::fs::write(&csv_path, table)
        .map_err(|e| Error::Io(format!("write {}: {e}", csv_path.display())))?;
    Ok((json_path, csv_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> CommandArgs {
        Cli::try_parse_from(args).expect("parse").command
    }

    #[test]
    fn defaults_resolve() {
        let (resolved, out) = resolve(parse(&["stochlab", "divergence"])).unwrap();
        assert_eq!(out, PathBuf::from("reports"));
        match resolved {
            ResolvedCommand::Divergence(cfg) => {
                assert_eq!(cfg.p, 1.5);
                assert_eq!(cfg.top_levels, vec![2, 4, 8, 16, 32]);
                assert_eq!(cfg.holder_grid_level, 14);
            }
            other => panic!("wrong command: {other:?}"),
        }
    }

    #[test]
    fn flags_override_config_overrides_defaults() {
        let dir = std::env::temp_dir().join(format!("stochlab-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("eq.cfg");
        std::fs::write(&path, "# comment\np = 3.0\npaths=500\nlevel=6\n").unwrap();
        let (resolved, _) = resolve(parse(&[
            "stochlab",
            "equivalence",
            "--config",
            path.to_str().unwrap(),
            "--paths",
            "700",
        ]))
        .unwrap();
        match resolved {
            ResolvedCommand::Equivalence(cfg) => {
                assert_eq!(cfg.p, 3.0); // config beats default
                assert_eq!(cfg.paths, 700); // flag beats config
                assert_eq!(cfg.grid_level, 6);
                assert_eq!(cfg.dim_out, 8); // untouched default
            }
            other => panic!("wrong command: {other:?}"),
        }
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        let dir = std::env::temp_dir().join(format!("stochlab-cfg-bad-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.cfg");
        std::fs::write(&path, "pths=500\n").unwrap();
        let err = resolve(parse(&[
            "stochlab",
            "equivalence",
            "--config",
            path.to_str().unwrap(),
        ]))
        .unwrap_err();
        assert!(err.to_string().contains("pths"), "{err}");
    }

    #[test]
    fn malformed_config_values_are_rejected() {
        let dir = std::env::temp_dir().join(format!("stochlab-cfg-val-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        for (body, needle) in [
            ("paths=many\n", "paths"),
            ("paths=5\npaths=6\n", "duplicate"),
            ("paths\n", "key=value"),
        ] {
            let path = dir.join("val.cfg");
            std::fs::write(&path, body).unwrap();
            let err = resolve(parse(&[
                "stochlab",
                "equivalence",
                "--config",
                path.to_str().unwrap(),
            ]))
            .unwrap_err();
            assert!(err.to_string().contains(needle), "{body:?}: {err}");
        }
    }

    #[test]
    fn size_list_parsing() {
        assert_eq!(parse_u32_list("1, 2,3").unwrap(), vec![1, 2, 3]);
        assert!(parse_u32_list("1,x").is_err());
        assert!(parse_u32_list("").is_err());
    }

    #[test]
    fn divergence_report_shape() {
        let cfg = ResolvedCommand::Divergence(DivergenceConfig {
            p: 1.5,
            top_levels: vec![1, 3, 7],
            holder_grid_level: 9,
        });
        let (json, table) = produce_report(&cfg).unwrap();
        assert!(json.starts_with("{\n"));
        assert!(json.ends_with("}\n"));
        // Top-level keys arrive sorted.
        let pos = |k: &str| json.find(&format!("\"{k}\"")).unwrap();
        assert!(pos("command") < pos("config"));
        assert!(pos("config") < pos("frozen"));
        assert!(pos("frozen") < pos("report"));
        let lines: Vec<_> = table.lines().collect();
        assert_eq!(lines.len(), 4); // header + one row per size
        assert_eq!(lines[0], "top_level,moment_root,holder_norm,ratio");
        assert!(table.ends_with('\n'));
    }

    #[test]
    fn reports_are_reproducible() {
        let cfg = ResolvedCommand::Counterexample(CounterexampleConfig {
            p: 1.5,
            top_level: 1,
            grid_level: 6,
            holder_grid_level: 8,
            paths: 2_000,
            seed: 1,
        });
        let a = produce_report(&cfg).unwrap();
        let b = produce_report(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.0.contains("\"mc_within_3se\": true"));
    }

    #[test]
    fn besov_report_runs() {
        let cfg = ResolvedCommand::Besov(BesovConfig {
            p: 2.0,
            s: 0.5,
            q: 2.0,
            alpha: 0.5,
            index: 0,
            dim: 2,
            grid_level: 5,
            seed: 1,
        });
        let (json, table) = produce_report(&cfg).unwrap();
        assert!(json.contains("\"holder_norm\""));
        assert_eq!(table.lines().count(), 7); // header + scales 0..=5
    }

    #[test]
    fn equivalence_rejects_l1() {
        let cfg = ResolvedCommand::Equivalence(EquivalenceConfig {
            p: 1.0,
            dim_out: 4,
            dim_in: 2,
            instances: 2,
            paths: 100,
            grid_level: 5,
            seed: 1,
        });
        let err = produce_report(&cfg).unwrap_err();
        assert!(!err.is_assertion());
        assert!(err.to_string().contains("unconditional"), "{err}");
    }
}
