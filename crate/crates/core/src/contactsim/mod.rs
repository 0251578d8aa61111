//! Event-driven Monte Carlo of the sharing phase on exponential meetings.
//!
//! Pairs of nodes meet as independent Poisson processes with the scenario's
//! type-pair rates. No positions are involved. Two ways of drawing meetings
//! are offered:
//!
//! * [`SharingMode::Independent`]: every packet spreads on its own meeting
//!   randomness. Node `u`'s delay to its first meeting with `v` after it
//!   received the packet is exponential and drawn from a stream keyed by
//!   `(replication, packet, u)`, so the draw does not depend on when or in
//!   which order nodes got infected.
//! * [`SharingMode::Shared`]: one meeting process per pair in absolute time
//!   carries every packet at once.

mod engine;

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::Write;

use ordered_float::OrderedFloat;
use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

pub use engine::{EpidemicState, PacketState};

use crate::analytic::AnalyticResult;
use crate::error::{domain, Error, Result};
use crate::loadopt::{allocate_sources, SourceAllocation};
use crate::model::{validate_scenario, ScenarioConfig, SharingMode};
use crate::seed::{derive_seed, rng_from_seed};

/// An instantaneous transmission opportunity between two nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeetingEvent {
    pub time: f64,
    pub u: usize,
    pub v: usize,
    pub types: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PacketOutcome {
    pub source_node: usize,
    pub source_type: usize,
    /// Nodes holding the packet at the end, per type, source included.
    pub recipients_per_type: Vec<usize>,
}

impl PacketOutcome {
    pub fn total_recipients(&self) -> usize {
        self.recipients_per_type.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub replication: usize,
    pub seed: u64,
    pub packets: Vec<PacketOutcome>,
    /// Distinct packets held by each node (`B`).
    pub received_per_node: Vec<usize>,
    /// `sum over nodes of (M - B)^+`.
    pub complement: usize,
}

/// Whether a packet reached at least `threshold_fraction * n` nodes.
pub fn spread_out(recipients: usize, n: usize, threshold_fraction: f64) -> bool {
    recipients as f64 >= threshold_fraction * n as f64
}

/// Source allocation of a scenario: explicit `sources` when given (packets
/// numbered in type order), otherwise `beta` packets placed on the best types
/// first.
pub fn resolve_sources(cfg: &ScenarioConfig, analytic: &AnalyticResult) -> Result<SourceAllocation> {
    match explicit_sources(cfg)? {
        Some(alloc) => Ok(alloc),
        None => allocate_sources(&analytic.extinction, &cfg.counts(), cfg.beta),
    }
}

/// The scenario's explicit source counts, if any.
pub fn explicit_sources(cfg: &ScenarioConfig) -> Result<Option<SourceAllocation>> {
    let Some(counts) = &cfg.sources else {
        return Ok(None);
    };
    if counts.len() != cfg.num_types() {
        return domain("one source count per node type");
    }
    if counts.iter().all(|&c| c == 0) {
        return domain("at least one source is required");
    }
    Ok(Some(SourceAllocation {
        per_type_counts: counts.clone(),
        ordering: (0..counts.len()).collect(),
    }))
}

/// Source node of every packet: the first nodes of each type, best type first.
pub fn source_nodes(cfg: &ScenarioConfig, sources: &SourceAllocation) -> Result<Vec<usize>> {
    let counts = cfg.counts();
    if sources.per_type_counts.len() != counts.len() {
        return domain("source allocation does not match the node types");
    }
    if let Some(h) = (0..counts.len()).find(|&h| sources.per_type_counts[h] > counts[h]) {
        return Err(Error::Capacity {
            requested: sources.per_type_counts[h],
            available: counts[h],
        });
    }
    let offsets = cfg.type_offsets();
    let mut taken = vec![0; counts.len()];
    Ok(sources
        .slot_types()
        .into_iter()
        .map(|h| {
            taken[h] += 1;
            offsets[h] + taken[h] - 1
        })
        .collect())
}

struct Rates {
    per_type: Vec<Vec<f64>>,
}

impl Rates {
    fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        let m = cfg.rates()?;
        if m.dim() != cfg.num_types() {
            return Err(Error::Config(format!(
                "contact matrix is {0}×{0} but scenario has {1} types",
                m.dim(),
                cfg.num_types()
            )));
        }
        Ok(Self {
            per_type: m.rates_per_s.clone(),
        })
    }
}

fn new_state(cfg: &ScenarioConfig, packets: usize) -> EpidemicState {
    EpidemicState::new(cfg.node_types(), cfg.active_periods(), packets)
}

fn outcome(
    cfg: &ScenarioConfig,
    state: &EpidemicState,
    sources: &[usize],
    replication: usize,
    seed: u64,
) -> SimOutcome {
    let m = cfg.message_count;
    let received = state.received_counts().to_vec();
    let complement = received.iter().map(|&b| m.saturating_sub(b)).sum();
    SimOutcome {
        replication,
        seed,
        packets: sources
            .iter()
            .enumerate()
            .map(|(p, &s)| PacketOutcome {
                source_node: s,
                source_type: state.node_type(s),
                recipients_per_type: state.recipients(p).to_vec(),
            })
            .collect(),
        received_per_node: received,
        complement,
    }
}

/// Simulates one replication of the sharing phase with seed `seed`.
///
/// `horizon` is the sharing deadline; `None` runs until no node is
/// infectious for any packet.
pub fn run_replication(
    cfg: &ScenarioConfig,
    sources: &SourceAllocation,
    horizon: Option<f64>,
    seed: u64,
) -> Result<SimOutcome> {
    replicate(cfg, sources, horizon, 0, seed)
}

fn replicate(
    cfg: &ScenarioConfig,
    sources: &SourceAllocation,
    horizon: Option<f64>,
    replication: usize,
    seed: u64,
) -> Result<SimOutcome> {
    let rates = Rates::from_config(cfg)?;
    let src = source_nodes(cfg, sources)?;
    let horizon = horizon.unwrap_or(f64::INFINITY);
    let mut state = new_state(cfg, src.len());
    for (p, &s) in src.iter().enumerate() {
        state.infect(p, s, 0.0);
    }
    match cfg.simulation.mode {
        SharingMode::Independent => {
            for (p, &s) in src.iter().enumerate() {
                spread_independent(&mut state, &rates, p, s, horizon, derive_seed(seed, p as u64));
            }
        }
        SharingMode::Shared => spread_shared(&mut state, &rates, &src, horizon, seed),
    }
    Ok(outcome(cfg, &state, &src, replication, seed))
}

type Event = Reverse<(OrderedFloat<f64>, usize, usize)>;

/// First-passage spread of one packet: `u` reaches `v` after the delay to
/// their first meeting if that delay is shorter than `u`'s active period.
fn spread_independent(
    state: &mut EpidemicState,
    rates: &Rates,
    packet: usize,
    source: usize,
    horizon: f64,
    packet_seed: u64,
) {
    let n = state.num_nodes();
    let mut heap: BinaryHeap<Event> = BinaryHeap::new();
    let expand = |state: &EpidemicState, heap: &mut BinaryHeap<Event>, u: usize, t_u: f64| {
        let tau = state.active_period_of(u);
        if tau <= 0.0 {
            return;
        }
        let row = &rates.per_type[state.node_type(u)];
        // delay < tau  ⇔  U > exp(-rate * tau), with U uniform on (0, 1]
        let cutoff: Vec<f64> = row.iter().map(|&r| (-r * tau).exp()).collect();
        let mut rng = rng_from_seed(derive_seed(packet_seed, u as u64));
        for v in 0..n {
            if v == u {
                continue;
            }
            let uniform = 1.0 - rng.gen::<f64>();
            let k = state.node_type(v);
            if uniform <= cutoff[k] || state.has_received(packet, v) {
                continue;
            }
            let rate = row[k];
            let delay = if rate.is_infinite() { 0.0 } else { -uniform.ln() / rate };
            let t = t_u + delay;
            if delay < tau && t <= horizon {
                heap.push(Reverse((OrderedFloat(t), v, u)));
            }
        }
    };
    expand(state, &mut heap, source, 0.0);
    while let Some(Reverse((OrderedFloat(t), to, from))) = heap.pop() {
        if state.deliver(packet, from, to, t) {
            expand(state, &mut heap, to, t);
        }
    }
}

/// All packets on one set of pairwise Poisson meeting processes.
///
/// Each pair keeps at most one pending meeting. A pair is scheduled when one
/// of its nodes becomes active; a pending meeting found with both nodes
/// inactive is dropped, which memorylessness makes harmless.
fn spread_shared(state: &mut EpidemicState, rates: &Rates, sources: &[usize], horizon: f64, seed: u64) {
    let n = state.num_nodes();
    let mut rng = rng_from_seed(seed);
    let mut pending = vec![f64::INFINITY; n * n];
    let mut heap: BinaryHeap<Event> = BinaryHeap::new();
    let rate = |state: &EpidemicState, u: usize, v: usize| {
        rates.per_type[state.node_type(u)][state.node_type(v)]
    };
    let wired: Vec<bool> = rates
        .per_type
        .iter()
        .map(|row| row.iter().any(|r| r.is_infinite()))
        .collect();

    let schedule = |state: &EpidemicState,
                        heap: &mut BinaryHeap<Event>,
                        pending: &mut [f64],
                        rng: &mut rand_chacha::ChaCha8Rng,
                        x: usize,
                        t: f64,
                        was_active: bool| {
        if was_active && !wired[state.node_type(x)] {
            return;
        }
        for y in 0..n {
            if y == x {
                continue;
            }
            let (a, b) = (x.min(y), x.max(y));
            let idx = a * n + b;
            if pending[idx].is_finite() {
                continue;
            }
            let r = rate(state, a, b);
            if r == 0.0 || (was_active && r.is_finite()) {
                continue;
            }
            let next = if r.is_infinite() {
                t
            } else {
                t + rng.sample::<f64, _>(Exp1) / r
            };
            pending[idx] = next;
            if next <= horizon {
                heap.push(Reverse((OrderedFloat(next), a, b)));
            }
        }
    };

    for &s in sources {
        schedule(state, &mut heap, &mut pending, &mut rng, s, 0.0, false);
    }
    let mut newly = Vec::new();
    while let Some(Reverse((OrderedFloat(t), u, v))) = heap.pop() {
        let idx = u * n + v;
        pending[idx] = f64::INFINITY;
        newly.clear();
        let (u_was, v_was) = (state.is_active(u, t), state.is_active(v, t));
        state.meet(u, v, t, &mut newly);
        for &(_, x) in &newly {
            let was = if x == u { u_was } else { v_was };
            schedule(state, &mut heap, &mut pending, &mut rng, x, t, was);
        }
        let r = rate(state, u, v);
        if r.is_finite() && pending[idx].is_infinite() && (state.is_active(u, t) || state.is_active(v, t)) {
            let next = t + rng.sample::<f64, _>(Exp1) / r;
            pending[idx] = next;
            if next <= horizon {
                heap.push(Reverse((OrderedFloat(next), u, v)));
            }
        }
    }
}

/// Replays a given meeting schedule with the same transmission rules.
///
/// Meetings sharing a timestamp are repeated until nothing changes, so a
/// node infected at `t` passes the packet on through its other meetings
/// at `t` regardless of listing order.
pub fn run_schedule(
    cfg: &ScenarioConfig,
    sources: &SourceAllocation,
    meetings: &[MeetingEvent],
    horizon: Option<f64>,
) -> Result<SimOutcome> {
    let src = source_nodes(cfg, sources)?;
    let horizon = horizon.unwrap_or(f64::INFINITY);
    let mut state = new_state(cfg, src.len());
    for (p, &s) in src.iter().enumerate() {
        state.infect(p, s, 0.0);
    }
    let mut sorted = meetings.to_vec();
    sorted.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.u.cmp(&b.u)).then(a.v.cmp(&b.v)));
    let mut newly = Vec::new();
    for group in sorted.chunk_by(|a, b| a.time == b.time) {
        if group[0].time > horizon {
            break;
        }
        loop {
            newly.clear();
            for e in group {
                state.meet(e.u, e.v, e.time, &mut newly);
            }
            if newly.is_empty() {
                break;
            }
        }
    }
    Ok(outcome(cfg, &state, &src, 0, cfg.rng_seed))
}

/// Per-packet aggregate over a batch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PacketSummary {
    pub packet_id: usize,
    pub source_type: usize,
    pub spread_out_freq: f64,
    /// Binomial standard error of `spread_out_freq`.
    pub spread_out_se: f64,
    /// Mean fraction of each type reached, over spread-out replications only.
    pub mean_fraction_per_type: Vec<f64>,
    /// Mean fraction of all nodes reached, over spread-out replications only.
    pub mean_fraction_total: f64,
    pub spread_out_count: usize,
    pub complement_mean: f64,
    pub complement_std: f64,
    pub replications: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub outcomes: Vec<SimOutcome>,
    pub summary: Vec<PacketSummary>,
}

/// `replications` independent runs; run `i` uses `derive_seed(seed, i)`.
pub fn run_batch(
    cfg: &ScenarioConfig,
    sources: &SourceAllocation,
    replications: usize,
    seed: u64,
) -> Result<BatchResult> {
    validate_scenario(cfg).into_result()?;
    if replications < 1 {
        return domain("replications ≥ 1");
    }
    let horizon = cfg.simulation.horizon_s;
    let outcomes = (0..replications)
        .into_par_iter()
        .map(|i| replicate(cfg, sources, horizon, i, derive_seed(seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(cfg, &outcomes, seed);
    Ok(BatchResult { outcomes, summary })
}

/// Aggregates replications per packet.
pub fn summarize(cfg: &ScenarioConfig, outcomes: &[SimOutcome], seed: u64) -> Vec<PacketSummary> {
    let n = cfg.total_nodes();
    let counts = cfg.counts();
    let threshold = cfg.simulation.spread_threshold;
    let reps = outcomes.len();
    let complements: Vec<f64> = outcomes.iter().map(|o| o.complement as f64).collect();
    let (c_mean, c_std) = mean_std(&complements);
    let packets = outcomes.first().map_or(0, |o| o.packets.len());
    (0..packets)
        .map(|p| {
            let mut spread = 0;
            let mut frac = vec![0.0; counts.len()];
            let mut total = 0.0;
            for o in outcomes {
                let pk = &o.packets[p];
                if spread_out(pk.total_recipients(), n, threshold) {
                    spread += 1;
                    for (h, &r) in pk.recipients_per_type.iter().enumerate() {
                        frac[h] += r as f64 / counts[h] as f64;
                    }
                    total += pk.total_recipients() as f64 / n as f64;
                }
            }
            if spread > 0 {
                frac.iter_mut().for_each(|f| *f /= spread as f64);
                total /= spread as f64;
            }
            let freq = spread as f64 / reps as f64;
            PacketSummary {
                packet_id: p,
                source_type: outcomes[0].packets[p].source_type,
                spread_out_freq: freq,
                spread_out_se: (freq * (1.0 - freq) / reps as f64).sqrt(),
                mean_fraction_per_type: frac,
                mean_fraction_total: total,
                spread_out_count: spread,
                complement_mean: c_mean,
                complement_std: c_std,
                replications: reps,
                seed,
            }
        })
        .collect()
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Summary CSV; types are numbered from 1.
pub fn write_summary_csv<W: Write>(scenario: &str, num_types: usize, rows: &[PacketSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["scenario".to_string(), "packet_id".into(), "source_type".into(), "spread_out_freq".into()];
    header.extend((1..=num_types).map(|h| format!("mean_fraction_type_{h}")));
    header.extend(["complement_mean", "complement_std", "replications", "seed"].map(String::from));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            scenario.to_string(),
            r.packet_id.to_string(),
            (r.source_type + 1).to_string(),
            r.spread_out_freq.to_string(),
        ];
        rec.extend(r.mean_fraction_per_type.iter().map(|f| f.to_string()));
        rec.extend([
            r.complement_mean.to_string(),
            r.complement_std.to_string(),
            r.replications.to_string(),
            r.seed.to_string(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per replication and packet.
pub fn write_replications_csv<W: Write>(
    num_types: usize,
    n: usize,
    threshold: f64,
    outcomes: &[SimOutcome],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "replication".to_string(),
        "seed".into(),
        "packet_id".into(),
        "source_type".into(),
        "spread_out".into(),
    ];
    header.extend((1..=num_types).map(|h| format!("recipients_type_{h}")));
    header.push("complement".into());
    w.write_record(&header)?;
    for o in outcomes {
        for (p, pk) in o.packets.iter().enumerate() {
            let mut rec = vec![
                o.replication.to_string(),
                o.seed.to_string(),
                p.to_string(),
                (pk.source_type + 1).to_string(),
                u8::from(spread_out(pk.total_recipients(), n, threshold)).to_string(),
            ];
            rec.extend(pk.recipients_per_type.iter().map(|r| r.to_string()));
            rec.push(o.complement.to_string());
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}
