//! Scenario description, validation and the pairwise meeting probability.
//!
//! A scenario is a torus of side `L` populated by `H` node types. Each type
//! has a population, a speed (only used by the spatial simulator) and an
//! active period: the time a node of that type keeps forwarding a packet it
//! has received. Inter-meeting times between a type-`h` and a type-`k` node
//! are exponential with *rate* `rates[h][k]` (1/s).

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// One class of nodes sharing mobility and forwarding behaviour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeTypeSpec {
    #[serde(default)]
    pub name: String,
    pub count: usize,
    #[serde(default)]
    pub speed_mps: f64,
    pub active_period_s: f64,
}

impl NodeTypeSpec {
    pub fn new(count: usize, speed_mps: f64, active_period_s: f64) -> Self {
        Self {
            name: String::new(),
            count,
            speed_mps,
            active_period_s,
        }
    }
}

/// Symmetric matrix of pairwise meeting rates, row-major.
///
/// `f64::INFINITY` marks a permanently connected (wired) pair of types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactMatrix {
    pub rates_per_s: Vec<Vec<f64>>,
}

impl ContactMatrix {
    pub fn new(rates_per_s: Vec<Vec<f64>>) -> Self {
        Self { rates_per_s }
    }

    pub fn dim(&self) -> usize {
        self.rates_per_s.len()
    }

    pub fn rate(&self, h: usize, k: usize) -> f64 {
        self.rates_per_s[h][k]
    }
}

/// Random-direction mobility parameters for the spatial simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MobilityParams {
    /// Mean of the exponential holding time between heading changes.
    pub direction_change_mean_s: f64,
    /// Tick length; `None` selects `min(0.1 s, r0 / (4 v_max))`.
    pub dt_s: Option<f64>,
    /// Mobility-only warmup before rate estimation starts recording.
    pub estimate_warmup_s: f64,
    /// Observation window of rate estimation.
    pub estimate_duration_s: f64,
}

impl Default for MobilityParams {
    fn default() -> Self {
        Self {
            direction_change_mean_s: 60.0,
            dt_s: None,
            estimate_warmup_s: 1_000.0,
            estimate_duration_s: 20_000.0,
        }
    }
}

/// How packets share meeting randomness in the contact simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SharingMode {
    /// Every packet spreads on its own meeting randomness.
    #[default]
    Independent,
    /// All packets ride on a single pairwise meeting process.
    Shared,
}

/// Monte Carlo settings shared by both simulators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationParams {
    pub replications: usize,
    /// A packet counts as spread out once it reaches this fraction of all nodes.
    pub spread_threshold: f64,
    /// Sharing-phase deadline; `None` runs to the steady state.
    pub horizon_s: Option<f64>,
    pub mode: SharingMode,
}

impl Default for SimulationParams {
    fn default() -> Self {
        Self {
            replications: 500,
            spread_threshold: 0.1,
            horizon_s: None,
            mode: SharingMode::Independent,
        }
    }
}

fn default_name() -> String {
    "scenario".to_string()
}

fn default_one() -> usize {
    1
}

/// Full description of a heterogeneous network instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub side_length_m: f64,
    pub radio_range_m: f64,
    #[serde(default = "default_one")]
    pub message_count: usize,
    /// Number of packets pushed over the cellular network in the initial phase.
    #[serde(default = "default_one")]
    pub beta: usize,
    /// Explicit per-type source counts, one distinct packet per source.
    /// Overrides the automatic allocation of `beta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sources: Option<Vec<usize>>,
    #[serde(default)]
    pub rng_seed: u64,
    pub types: Vec<NodeTypeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contact_rates: Option<ContactMatrix>,
    #[serde(default)]
    pub mobility: MobilityParams,
    #[serde(default)]
    pub simulation: SimulationParams,
}

impl ScenarioConfig {
    /// Minimal scenario with default mobility and simulation settings.
    pub fn new(types: Vec<NodeTypeSpec>, side_length_m: f64, radio_range_m: f64) -> Self {
        Self {
            name: default_name(),
            side_length_m,
            radio_range_m,
            message_count: 1,
            beta: 1,
            sources: None,
            rng_seed: 0,
            types,
            contact_rates: None,
            mobility: MobilityParams::default(),
            simulation: SimulationParams::default(),
        }
    }

    pub fn with_rates(mut self, rates: Vec<Vec<f64>>) -> Self {
        self.contact_rates = Some(ContactMatrix::new(rates));
        self
    }

    pub fn num_types(&self) -> usize {
        self.types.len()
    }

    pub fn total_nodes(&self) -> usize {
        self.types.iter().map(|t| t.count).sum()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.types.iter().map(|t| t.count).collect()
    }

    pub fn active_periods(&self) -> Vec<f64> {
        self.types.iter().map(|t| t.active_period_s).collect()
    }

    pub fn max_speed(&self) -> f64 {
        self.types.iter().map(|t| t.speed_mps).fold(0.0, f64::max)
    }

    /// Node id → type index, nodes numbered type by type.
    pub fn node_types(&self) -> Vec<usize> {
        self.types
            .iter()
            .enumerate()
            .flat_map(|(h, t)| std::iter::repeat(h).take(t.count))
            .collect()
    }

    /// First node id of every type.
    pub fn type_offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.types
            .iter()
            .map(|t| {
                let start = acc;
                acc += t.count;
                start
            })
            .collect()
    }

    pub fn rates(&self) -> Result<&ContactMatrix> {
        self.contact_rates.as_ref().ok_or(Error::MissingContactRates)
    }

    /// Parses a TOML scenario. Parse errors carry line and column.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
    }

    /// Loads a TOML scenario file; errors are prefixed with the file path.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config always serializes")
    }
}

/// One violated invariant, addressed by its field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_pass(&self) -> bool {
        self.violations.is_empty()
    }

    fn fail(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }

    /// Converts a failing report into a configuration error.
    pub fn into_result(self) -> Result<()> {
        if self.is_pass() {
            return Ok(());
        }
        let lines: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        Err(Error::Config(lines.join("; ")))
    }
}

/// Checks every scenario invariant and reports all violations at once.
pub fn validate_scenario(cfg: &ScenarioConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    if cfg.types.is_empty() {
        report.fail("types", "at least one node type is required");
    }
    for (h, t) in cfg.types.iter().enumerate() {
        if t.count < 1 {
            report.fail(format!("types[{h}].count"), "count ≥ 1");
        }
        if !(t.active_period_s >= 0.0) || !t.active_period_s.is_finite() {
            report.fail(format!("types[{h}].active_period_s"), "active_period ≥ 0 and finite");
        }
        if !(t.speed_mps >= 0.0) || !t.speed_mps.is_finite() {
            report.fail(format!("types[{h}].speed_mps"), "speed ≥ 0 and finite");
        }
    }
    let l = cfg.side_length_m;
    if !(l > 0.0) || !l.is_finite() {
        report.fail("side_length_m", "side_length > 0");
    }
    let r0 = cfg.radio_range_m;
    if !(r0 > 0.0) || !r0.is_finite() {
        report.fail("radio_range_m", "radio_range > 0");
    } else if l > 0.0 && r0 >= l / 2.0 {
        report.fail("radio_range_m", "radio_range ≥ L/2");
    }
    if cfg.message_count < 1 {
        report.fail("message_count", "message_count ≥ 1");
    }
    let n = cfg.total_nodes();
    if cfg.beta < 1 || cfg.beta > n.max(1) {
        report.fail("beta", format!("1 ≤ beta ≤ N = {n}"));
    }
    if let Some(sources) = &cfg.sources {
        if sources.len() != cfg.types.len() {
            report.fail("sources", "one source count per node type");
        } else {
            for (h, (&s, t)) in sources.iter().zip(&cfg.types).enumerate() {
                if s > t.count {
                    report.fail(format!("sources[{h}]"), "sources ≤ count");
                }
            }
            if sources.iter().sum::<usize>() == 0 {
                report.fail("sources", "at least one source");
            }
        }
    }
    if let Some(m) = &cfg.contact_rates {
        validate_contact_matrix(m, cfg.types.len(), &mut report);
    }
    let mob = &cfg.mobility;
    if !(mob.direction_change_mean_s > 0.0) {
        report.fail("mobility.direction_change_mean_s", "must be > 0");
    }
    if let Some(dt) = mob.dt_s {
        if !(dt > 0.0) || !dt.is_finite() {
            report.fail("mobility.dt_s", "dt > 0");
        }
    }
    if !(mob.estimate_warmup_s >= 0.0) {
        report.fail("mobility.estimate_warmup_s", "must be ≥ 0");
    }
    if !(mob.estimate_duration_s > 0.0) {
        report.fail("mobility.estimate_duration_s", "must be > 0");
    }
    let sim = &cfg.simulation;
    if sim.replications < 1 {
        report.fail("simulation.replications", "replications ≥ 1");
    }
    if !(sim.spread_threshold > 0.0 && sim.spread_threshold < 1.0) {
        report.fail("simulation.spread_threshold", "threshold in (0, 1)");
    }
    if let Some(hz) = sim.horizon_s {
        if !(hz > 0.0) {
            report.fail("simulation.horizon_s", "horizon > 0");
        }
    }
    report
}

fn validate_contact_matrix(m: &ContactMatrix, h: usize, report: &mut ValidationReport) {
    if m.rates_per_s.len() != h || m.rates_per_s.iter().any(|row| row.len() != h) {
        report.fail("contact_rates.rates_per_s", format!("must be {h}×{h}"));
        return;
    }
    for i in 0..h {
        for j in 0..h {
            let r = m.rates_per_s[i][j];
            if !(r >= 0.0) {
                report.fail(format!("contact_rates.rates_per_s[{i}][{j}]"), "rate ≥ 0");
            }
            if j > i && r != m.rates_per_s[j][i] {
                report.fail(
                    format!("contact_rates.rates_per_s[{i}][{j}]"),
                    "rates must be symmetric",
                );
            }
        }
    }
}

/// Probability that a forwarding node meets a given peer during its active
/// period: `1 - exp(-rate * active_period)`.
///
/// An infinite rate models a wired link and yields exactly 1 for any
/// positive active period.
pub fn meeting_probability(rate: f64, active_period: f64) -> Result<f64> {
    if !(rate >= 0.0) || !(active_period >= 0.0) {
        return domain(format!(
            "meeting probability needs rate ≥ 0 and active period ≥ 0 (got {rate}, {active_period})"
        ));
    }
    if active_period == 0.0 || rate == 0.0 {
        return Ok(0.0);
    }
    if rate.is_infinite() || active_period.is_infinite() {
        return Ok(1.0);
    }
    Ok(-(-rate * active_period).exp_m1())
}

/// Entrywise meeting probabilities; row `h` uses the transmitter's active period.
pub fn gamma_matrix(cfg: &ScenarioConfig) -> Result<DMatrix<f64>> {
    let rates = cfg.rates()?;
    let h = cfg.num_types();
    if rates.dim() != h {
        return Err(Error::Config(format!(
            "contact matrix is {}×{} but scenario has {h} types",
            rates.dim(),
            rates.dim()
        )));
    }
    let mut gamma = DMatrix::zeros(h, h);
    for i in 0..h {
        let tau = cfg.types[i].active_period_s;
        for j in 0..h {
            gamma[(i, j)] = meeting_probability(rates.rate(i, j), tau)?;
        }
    }
    Ok(gamma)
}
