use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use offload_core::analytic::AnalyticResult;
use offload_core::contactsim::{
    explicit_sources, resolve_sources, run_batch, write_replications_csv, write_summary_csv, BatchResult,
};
use offload_core::loadopt::{optimize_beta, Coding};
use offload_core::mobilitysim::{estimate_rates, run_spatial_batch, RateEstimate};
use offload_core::model::{validate_scenario, ScenarioConfig};
use offload_core::seed::derive_seed;

use crate::{Engine, OnOff, OptimizeOpts, SimulateOpts, UsageError};

/// Seed stream used for rate estimation; replications use streams from 0 up.
pub const RATE_STREAM: u64 = u64::MAX;

/// Everything a command produced, held in memory until the run succeeded.
#[derive(Debug, Clone)]
pub struct Artifacts {
    /// File name and contents, in write order.
    pub files: Vec<(String, Vec<u8>)>,
    /// The file whose rows a sweep collects.
    pub primary: String,
    pub report: String,
    /// Config after defaults, overrides and rate estimation were applied.
    pub config: ScenarioConfig,
    pub seed: u64,
}

impl Artifacts {
    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }
}

/// Reads and validates a scenario file.
pub fn load(path: &Path) -> anyhow::Result<ScenarioConfig> {
    let cfg = ScenarioConfig::load(path)?;
    validate_scenario(&cfg)
        .into_result()
        .with_context(|| format!("invalid scenario {}", path.display()))?;
    Ok(cfg)
}

/// Fills in contact rates from a mobility run when the scenario has none.
pub fn ensure_rates(cfg: &mut ScenarioConfig, seed: u64) -> anyhow::Result<Option<RateEstimate>> {
    if cfg.contact_rates.is_some() {
        return Ok(None);
    }
    let est = estimate_rates(
        cfg,
        cfg.mobility.estimate_warmup_s,
        cfg.mobility.estimate_duration_s,
        derive_seed(seed, RATE_STREAM),
    )
    .context("estimating contact rates")?;
    cfg.contact_rates = Some(est.rates.clone());
    Ok(Some(est))
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> offload_core::Result<()>) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn rates_file(est: Option<RateEstimate>) -> anyhow::Result<Option<(String, Vec<u8>)>> {
    est.map(|e| Ok(("rates.csv".to_string(), csv_bytes(|b| e.write_csv(b))?)))
        .transpose()
}

pub fn analyze(mut cfg: ScenarioConfig) -> anyhow::Result<Artifacts> {
    validate_scenario(&cfg).into_result()?;
    let seed = cfg.rng_seed;
    let est = ensure_rates(&mut cfg, seed)?;
    let a = AnalyticResult::from_config(&cfg)?;
    let sources = resolve_sources(&cfg, &a)?;
    let beta = sources.total();
    let z_beta = a.fraction_multi_source(&sources.per_type_counts)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "scenario",
        "type",
        "count",
        "active_period_s",
        "spectral_radius",
        "supercritical",
        "extinction",
        "fraction",
        "sources",
        "beta",
        "fraction_at_beta",
    ])?;
    let mut report = String::new();
    writeln!(report, "scenario {}", cfg.name)?;
    writeln!(report, "R_q = {:.6}  supercritical = {}", a.spectral_radius, a.supercritical)?;
    writeln!(report, "{:>4} {:>7} {:>12} {:>12} {:>12} {:>7}", "type", "count", "tau_s", "w", "z_hat", "sources")?;
    for (h, t) in cfg.types.iter().enumerate() {
        w.write_record([
            cfg.name.clone(),
            (h + 1).to_string(),
            t.count.to_string(),
            t.active_period_s.to_string(),
            a.spectral_radius.to_string(),
            a.supercritical.to_string(),
            a.extinction[h].to_string(),
            a.fractions[h].to_string(),
            sources.per_type_counts[h].to_string(),
            beta.to_string(),
            z_beta.to_string(),
        ])?;
        writeln!(
            report,
            "{:>4} {:>7} {:>12} {:>12.6} {:>12.6} {:>7}",
            h + 1,
            t.count,
            t.active_period_s,
            a.extinction[h],
            a.fractions[h],
            sources.per_type_counts[h]
        )?;
    }
    writeln!(report, "z(beta = {beta}) = {z_beta:.6}")?;
    let mut files = vec![("analyze.csv".to_string(), w.into_inner()?)];
    files.extend(rates_file(est)?);
    Ok(Artifacts {
        files,
        primary: "analyze.csv".into(),
        report,
        config: cfg,
        seed,
    })
}

pub fn simulate(mut cfg: ScenarioConfig, opts: &SimulateOpts) -> anyhow::Result<Artifacts> {
    validate_scenario(&cfg).into_result()?;
    let seed = opts.seed.unwrap_or(cfg.rng_seed);
    let reps = opts.reps.unwrap_or(cfg.simulation.replications);
    if reps < 1 {
        return Err(UsageError("--reps must be at least 1".into()).into());
    }
    cfg.rng_seed = seed;
    cfg.simulation.replications = reps;
    let (sources, est) = match (opts.engine, explicit_sources(&cfg)?) {
        // the spatial engine needs no rates when the sources are given
        (Engine::Spatial, Some(s)) => (s, None),
        _ => {
            let est = ensure_rates(&mut cfg, seed)?;
            let a = AnalyticResult::from_config(&cfg)?;
            (resolve_sources(&cfg, &a)?, est)
        }
    };
    let batch: BatchResult = match opts.engine {
        Engine::Contact => run_batch(&cfg, &sources, reps, seed)?,
        Engine::Spatial => run_spatial_batch(&cfg, &sources, reps, seed)?,
    };
    let h = cfg.num_types();
    let n = cfg.total_nodes();
    let replications = csv_bytes(|b| {
        write_replications_csv(h, n, cfg.simulation.spread_threshold, &batch.outcomes, b)
    })?;
    let summary = csv_bytes(|b| write_summary_csv(&cfg.name, h, &batch.summary, b))?;

    let mut report = String::new();
    writeln!(report, "scenario {}  engine {}  replications {reps}  seed {seed}", cfg.name, opts.engine)?;
    writeln!(report, "{:>6} {:>6} {:>10} {:>10}  fraction per type", "packet", "source", "spread", "s.e.")?;
    for s in &batch.summary {
        let fr: Vec<String> = s.mean_fraction_per_type.iter().map(|f| format!("{f:.4}")).collect();
        writeln!(
            report,
            "{:>6} {:>6} {:>10.4} {:>10.4}  {}",
            s.packet_id,
            s.source_type + 1,
            s.spread_out_freq,
            s.spread_out_se,
            fr.join(" ")
        )?;
    }
    if let Some(s) = batch.summary.first() {
        writeln!(report, "complement load: mean {:.2}  std {:.2}", s.complement_mean, s.complement_std)?;
    }
    let mut files = vec![
        ("simulate_replications.csv".to_string(), replications),
        ("simulate_summary.csv".to_string(), summary),
    ];
    files.extend(rates_file(est)?);
    Ok(Artifacts {
        files,
        primary: "simulate_summary.csv".into(),
        report,
        config: cfg,
        seed,
    })
}

pub fn optimize(mut cfg: ScenarioConfig, opts: &OptimizeOpts) -> anyhow::Result<Artifacts> {
    validate_scenario(&cfg).into_result()?;
    let seed = cfg.rng_seed;
    let est = ensure_rates(&mut cfg, seed)?;
    let a = AnalyticResult::from_config(&cfg)?;
    let n = cfg.total_nodes();
    let max_beta = opts.max_beta.unwrap_or(n);
    if max_beta < 1 {
        return Err(UsageError("--max-beta must be at least 1".into()).into());
    }
    let coding = match opts.coding {
        OnOff::On => Coding::ErasureCoded,
        OnOff::Off => Coding::Uncoded,
    };
    let curve = optimize_beta(&a, cfg.message_count, coding, max_beta)?;
    let best = curve.optimum;
    let mut report = String::new();
    writeln!(report, "scenario {}  coding {}  M = {}", cfg.name, coding, cfg.message_count)?;
    writeln!(report, "beta* = {}", best.beta)?;
    writeln!(report, "total* = {:.4}  (push {} + complement {:.4})", best.total, best.beta, best.expected_complement)?;
    writeln!(report, "no-cooperation baseline = {}", curve.baseline)?;
    let mut files = vec![("load_curve.csv".to_string(), csv_bytes(|b| curve.write_csv(b))?)];
    files.extend(rates_file(est)?);
    Ok(Artifacts {
        files,
        primary: "load_curve.csv".into(),
        report,
        config: cfg,
        seed,
    })
}
