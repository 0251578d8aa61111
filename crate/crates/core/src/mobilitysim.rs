//! Random-direction mobility on a torus with unit-disk meetings.
//!
//! Nodes move in straight lines at their type's speed and pick a fresh
//! uniform heading at exponentially distributed epochs. Positions live in
//! `(0, L]^2` and wrap on both axes. Two nodes meet when their toroidal
//! distance drops to `r0` or below after having been larger; the entry
//! instant is found inside a tick by intersecting the relative chord with
//! the disk, which also catches grazing passes that start and end outside.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::f64::consts::TAU;
use std::io::Write;

use ordered_float::OrderedFloat;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::contactsim::{self, source_nodes, BatchResult, EpidemicState, MeetingEvent, SimOutcome};
use crate::error::{domain, Error, Result};
use crate::loadopt::SourceAllocation;
use crate::model::{validate_scenario, ContactMatrix, ScenarioConfig};
use crate::seed::{derive_seed, rng_from_seed};
use crate::stats::poisson_rate_ci;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeKinematics {
    pub x: f64,
    pub y: f64,
    /// Radians, counter-clockwise from the x axis.
    pub heading: f64,
    pub speed: f64,
    /// Absolute time of the next heading change.
    pub next_turn_s: f64,
}

/// Wraps a coordinate into `(0, side]`.
pub fn wrap(x: f64, side: f64) -> f64 {
    let r = x.rem_euclid(side);
    if r == 0.0 {
        side
    } else {
        r
    }
}

/// Shortest signed offset `b - a` on a circle of length `side`.
pub fn min_image(a: f64, b: f64, side: f64) -> f64 {
    let d = b - a;
    d - side * (d / side).round()
}

pub fn toroidal_distance(a: (f64, f64), b: (f64, f64), side: f64) -> f64 {
    min_image(a.0, b.0, side).hypot(min_image(a.1, b.1, side))
}

/// Tick length of a scenario: the configured value or
/// `min(0.1 s, r0 / (4 v_max))`. Ticks must stay below `r0 / (2 v_max)` so
/// a pair cannot cross a whole disk within one tick.
pub fn resolve_dt(cfg: &ScenarioConfig) -> Result<f64> {
    let vmax = cfg.max_speed();
    let r0 = cfg.radio_range_m;
    let dt = match cfg.mobility.dt_s {
        Some(dt) => dt,
        None if vmax > 0.0 => (0.1f64).min(r0 / (4.0 * vmax)),
        None => 0.1,
    };
    check_dt(dt, r0, vmax)?;
    Ok(dt)
}

fn check_dt(dt: f64, r0: f64, vmax: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Config(format!("mobility.dt_s: tick must be positive, got {dt}")));
    }
    if vmax > 0.0 && dt >= r0 / (2.0 * vmax) {
        return Err(Error::Config(format!(
            "mobility.dt_s: tick {dt} s must be below r0 / (2 v_max) = {} s",
            r0 / (2.0 * vmax)
        )));
    }
    Ok(())
}

/// Positions, headings and the motion of the most recent tick.
#[derive(Debug, Clone)]
pub struct MobilityState {
    pub nodes: Vec<NodeKinematics>,
    pub time: f64,
    side: f64,
    radio_range: f64,
    turn_mean: f64,
    rng: ChaCha8Rng,
    node_types: Vec<usize>,
    tick_start: Vec<(f64, f64)>,
    tick_disp: Vec<(f64, f64)>,
    tick_dt: f64,
    max_speed: f64,
}

impl MobilityState {
    /// Uniform positions and headings, first heading change after an
    /// exponential holding time.
    pub fn new_uniform(cfg: &ScenarioConfig, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let side = cfg.side_length_m;
        let turn_mean = cfg.mobility.direction_change_mean_s;
        let nodes = cfg
            .node_types()
            .into_iter()
            .map(|h| {
                let x = side * (1.0 - rng.gen::<f64>());
                let y = side * (1.0 - rng.gen::<f64>());
                let heading = rng.gen::<f64>() * TAU;
                let next_turn_s = holding_time(&mut rng, turn_mean);
                NodeKinematics {
                    x,
                    y,
                    heading,
                    speed: cfg.types[h].speed_mps,
                    next_turn_s,
                }
            })
            .collect();
        Self::assemble(cfg, nodes, rng)
    }

    /// Explicit initial kinematics; node `i` has type `cfg.node_types()[i]`.
    pub fn from_nodes(cfg: &ScenarioConfig, nodes: Vec<NodeKinematics>, seed: u64) -> Result<Self> {
        if nodes.len() != cfg.total_nodes() {
            return domain(format!("expected {} nodes, got {}", cfg.total_nodes(), nodes.len()));
        }
        let side = cfg.side_length_m;
        let nodes = nodes
            .into_iter()
            .map(|n| NodeKinematics {
                x: wrap(n.x, side),
                y: wrap(n.y, side),
                ..n
            })
            .collect();
        Ok(Self::assemble(cfg, nodes, rng_from_seed(seed)))
    }

    fn assemble(cfg: &ScenarioConfig, nodes: Vec<NodeKinematics>, rng: ChaCha8Rng) -> Self {
        let n = nodes.len();
        let max_speed = nodes.iter().map(|k: &NodeKinematics| k.speed).fold(0.0, f64::max);
        let mut s = Self {
            nodes,
            time: 0.0,
            side: cfg.side_length_m,
            radio_range: cfg.radio_range_m,
            turn_mean: cfg.mobility.direction_change_mean_s,
            rng,
            node_types: cfg.node_types(),
            tick_start: Vec::with_capacity(n),
            tick_disp: vec![(0.0, 0.0); n],
            tick_dt: 0.0,
            max_speed,
        };
        s.tick_start = s.positions();
        s
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn positions(&self) -> Vec<(f64, f64)> {
        self.nodes.iter().map(|k| (k.x, k.y)).collect()
    }

    /// Advances every node by `dt`, turning at each heading-change epoch
    /// that falls inside the tick.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) || !dt.is_finite() {
            return domain(format!("step needs dt > 0, got {dt}"));
        }
        let t_end = self.time + dt;
        for (i, k) in self.nodes.iter_mut().enumerate() {
            self.tick_start[i] = (k.x, k.y);
            if k.speed == 0.0 {
                self.tick_disp[i] = (0.0, 0.0);
                continue;
            }
            let (mut dx, mut dy) = (0.0, 0.0);
            let mut t = self.time;
            while k.next_turn_s < t_end {
                let seg = (k.next_turn_s - t).max(0.0);
                dx += k.speed * seg * k.heading.cos();
                dy += k.speed * seg * k.heading.sin();
                t = t.max(k.next_turn_s);
                k.heading = self.rng.gen::<f64>() * TAU;
                k.next_turn_s += holding_time(&mut self.rng, self.turn_mean);
            }
            let seg = t_end - t;
            dx += k.speed * seg * k.heading.cos();
            dy += k.speed * seg * k.heading.sin();
            k.x = wrap(k.x + dx, self.side);
            k.y = wrap(k.y + dy, self.side);
            self.tick_disp[i] = (dx, dy);
        }
        self.time = t_end;
        self.tick_dt = dt;
        Ok(())
    }

    /// Entry events of the last tick over all pairs, ordered by time then pair.
    pub fn detect_meetings(&self) -> Result<Vec<MeetingEvent>> {
        check_dt(self.tick_dt, self.radio_range, self.max_speed)?;
        let grid = self.tick_grid();
        let mut out = Vec::new();
        for u in 0..self.nodes.len() {
            self.entries_of(&grid, u, true, &mut out);
        }
        sort_events(&mut out);
        Ok(out)
    }

    /// Pairs within range at the current instant, reported as meetings now.
    pub fn initial_contacts(&self) -> Vec<MeetingEvent> {
        let grid = CellGrid::new(&self.positions(), self.side, self.radio_range);
        let mut out = Vec::new();
        for u in 0..self.nodes.len() {
            self.contacts_of(&grid, u, true, &mut out);
        }
        sort_events(&mut out);
        out
    }

    fn tick_grid(&self) -> CellGrid {
        let reach = self.radio_range + 2.0 * self.max_speed * self.tick_dt;
        CellGrid::new(&self.tick_start, self.side, reach)
    }

    fn event(&self, time: f64, u: usize, v: usize) -> MeetingEvent {
        let (a, b) = (u.min(v), u.max(v));
        MeetingEvent {
            time,
            u: a,
            v: b,
            types: (self.node_types[a], self.node_types[b]),
        }
    }

    /// Entry events of the last tick involving `u`; with `upper_only` only
    /// partners with a larger index.
    fn entries_of(&self, grid: &CellGrid, u: usize, upper_only: bool, out: &mut Vec<MeetingEvent>) {
        let t0 = self.time - self.tick_dt;
        let r2 = self.radio_range * self.radio_range;
        let pu = self.tick_start[u];
        let du = self.tick_disp[u];
        grid.for_neighbors(pu, |v| {
            if v == u || (upper_only && v < u) {
                return;
            }
            let pv = self.tick_start[v];
            let dv = self.tick_disp[v];
            let (ox, oy) = (min_image(pu.0, pv.0, self.side), min_image(pu.1, pv.1, self.side));
            let c = ox * ox + oy * oy - r2;
            if c <= 0.0 {
                return;
            }
            let (mx, my) = (dv.0 - du.0, dv.1 - du.1);
            let a = mx * mx + my * my;
            let b = 2.0 * (ox * mx + oy * my);
            if a == 0.0 || b >= 0.0 {
                return;
            }
            let disc = b * b - 4.0 * a * c;
            if disc < 0.0 {
                return;
            }
            // smaller root, in the cancellation-free form
            let s = 2.0 * c / (-b + disc.sqrt());
            if s <= 1.0 {
                out.push(self.event(t0 + s * self.tick_dt, u, v));
            }
        });
    }

    fn contacts_of(&self, grid: &CellGrid, u: usize, upper_only: bool, out: &mut Vec<MeetingEvent>) {
        let pu = (self.nodes[u].x, self.nodes[u].y);
        grid.for_neighbors(pu, |v| {
            if v == u || (upper_only && v < u) {
                return;
            }
            let pv = (self.nodes[v].x, self.nodes[v].y);
            if toroidal_distance(pu, pv, self.side) <= self.radio_range {
                out.push(self.event(self.time, u, v));
            }
        });
    }
}

fn holding_time(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    if mean.is_infinite() {
        f64::INFINITY
    } else {
        mean * rng.sample::<f64, _>(Exp1)
    }
}

fn sort_events(events: &mut [MeetingEvent]) {
    events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.u.cmp(&b.u)).then(a.v.cmp(&b.v)));
}

/// Square cells of side at least `reach`, stored as one index array sorted
/// by cell; falls back to a single cell when fewer than three fit per axis.
struct CellGrid {
    cells_per_side: usize,
    cell: f64,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl CellGrid {
    fn new(points: &[(f64, f64)], side: f64, reach: f64) -> Self {
        let g = ((side / reach).floor() as usize).max(1);
        let g = if g < 3 { 1 } else { g };
        let mut grid = Self {
            cells_per_side: g,
            cell: side / g as f64,
            starts: vec![0; g * g + 1],
            items: vec![0; points.len()],
        };
        let cells: Vec<usize> = points.iter().map(|&p| grid.cell_index(p)).collect();
        for &c in &cells {
            grid.starts[c + 1] += 1;
        }
        for c in 0..g * g {
            grid.starts[c + 1] += grid.starts[c];
        }
        let mut fill = grid.starts.clone();
        for (i, &c) in cells.iter().enumerate() {
            grid.items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        grid
    }

    fn cell_of(&self, p: (f64, f64)) -> (usize, usize) {
        let g = self.cells_per_side;
        let cx = ((p.0 / self.cell) as usize).min(g - 1);
        let cy = ((p.1 / self.cell) as usize).min(g - 1);
        (cx, cy)
    }

    fn cell_index(&self, p: (f64, f64)) -> usize {
        let (cx, cy) = self.cell_of(p);
        cy * self.cells_per_side + cx
    }

    fn bucket(&self, c: usize) -> &[u32] {
        &self.items[self.starts[c] as usize..self.starts[c + 1] as usize]
    }

    fn for_neighbors(&self, p: (f64, f64), mut f: impl FnMut(usize)) {
        let g = self.cells_per_side;
        if g == 1 {
            self.items.iter().for_each(|&v| f(v as usize));
            return;
        }
        let (cx, cy) = self.cell_of(p);
        for dy in [g - 1, 0, 1] {
            for dx in [g - 1, 0, 1] {
                let c = ((cy + dy) % g) * g + (cx + dx) % g;
                self.bucket(c).iter().for_each(|&v| f(v as usize));
            }
        }
    }
}

/// Estimated meeting rate of one type pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEntry {
    pub type_h: usize,
    pub type_k: usize,
    pub rate_hz: f64,
    /// Meetings observed for this type pair.
    pub samples: u64,
    /// Distinct node pairs of this type pair.
    pub pairs: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// No meeting was observed, so the rate is only bounded.
    pub unestimated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    pub rates: ContactMatrix,
    /// Row-major over all `(h, k)`.
    pub entries: Vec<RateEntry>,
    /// Every complete inter-meeting interval per type pair.
    pub inter_meeting: Vec<Vec<Vec<f64>>>,
    /// One interval per node pair: the gap after the pair's first meeting in
    /// the first half of the window, kept when it is at most half the window.
    /// These are draws from the inter-meeting law truncated at half the
    /// window, free of the length bias of the full interval list.
    pub first_intervals: Vec<Vec<Vec<f64>>>,
    pub duration_s: f64,
}

impl RateEstimate {
    pub fn entry(&self, h: usize, k: usize) -> &RateEntry {
        &self.entries[h * self.rates.dim() + k]
    }

    /// Writes `type_h,type_k,rate_hz,samples,ci_low,ci_high`, types from 1.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["type_h", "type_k", "rate_hz", "samples", "ci_low", "ci_high"])?;
        for e in &self.entries {
            w.write_record([
                (e.type_h + 1).to_string(),
                (e.type_k + 1).to_string(),
                e.rate_hz.to_string(),
                e.samples.to_string(),
                e.ci_low.to_string(),
                e.ci_high.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs mobility alone and counts pair entries per type pair.
///
/// The rate is the Poisson maximum-likelihood estimate
/// `meetings / (pairs * duration)`, which uses censored gaps at both ends
/// of the window as well; intervals are also returned for shape checks.
pub fn estimate_rates(cfg: &ScenarioConfig, warmup_s: f64, duration_s: f64, seed: u64) -> Result<RateEstimate> {
    if !(warmup_s >= 0.0) || !(duration_s > 0.0) {
        return domain("rate estimation needs warmup ≥ 0 and duration > 0");
    }
    let dt = resolve_dt(cfg)?;
    let h = cfg.num_types();
    let counts = cfg.counts();
    let n = cfg.total_nodes();
    let mut mob = MobilityState::new_uniform(cfg, seed);
    advance(&mut mob, warmup_s, dt)?;

    let start = mob.time;
    let half = duration_s / 2.0;
    let mut meetings = vec![vec![0u64; h]; h];
    let mut last = vec![f64::NAN; n * n];
    let mut first_open = vec![f64::NAN; n * n];
    let mut first_done = vec![false; n * n];
    let mut intervals = vec![vec![Vec::new(); h]; h];
    let mut first_intervals = vec![vec![Vec::new(); h]; h];
    let mut elapsed = 0.0;
    while elapsed < duration_s {
        let step = dt.min(duration_s - elapsed);
        mob.step(step)?;
        elapsed += step;
        for e in mob.detect_meetings()? {
            let t = e.time - start;
            let (a, b) = (e.types.0.min(e.types.1), e.types.0.max(e.types.1));
            meetings[a][b] += 1;
            let idx = e.u * n + e.v;
            if last[idx].is_finite() {
                intervals[a][b].push(t - last[idx]);
            }
            last[idx] = t;
            if !first_done[idx] {
                if first_open[idx].is_nan() {
                    if t < half {
                        first_open[idx] = t;
                    } else {
                        first_done[idx] = true;
                    }
                } else {
                    let gap = t - first_open[idx];
                    if gap <= half {
                        first_intervals[a][b].push(gap);
                    }
                    first_done[idx] = true;
                }
            }
        }
    }

    let mut rates = vec![vec![0.0; h]; h];
    let mut entries = Vec::with_capacity(h * h);
    for i in 0..h {
        for k in 0..h {
            let (a, b) = (i.min(k), i.max(k));
            let pairs = if a == b {
                (counts[a] * counts[a].saturating_sub(1) / 2) as u64
            } else {
                (counts[a] * counts[b]) as u64
            };
            let samples = meetings[a][b];
            let exposure = pairs as f64 * duration_s;
            let (rate, lo, hi) = if pairs == 0 {
                (0.0, 0.0, 0.0)
            } else {
                let (lo, hi) = poisson_rate_ci(samples, exposure, 0.95)?;
                (samples as f64 / exposure, lo, hi)
            };
            rates[i][k] = rate;
            entries.push(RateEntry {
                type_h: i,
                type_k: k,
                rate_hz: rate,
                samples,
                pairs,
                ci_low: lo,
                ci_high: hi,
                unestimated: samples == 0,
            });
        }
    }
    // mirror so both triangles carry the same samples
    let mirror = |v: &mut Vec<Vec<Vec<f64>>>| {
        for i in 0..h {
            for k in 0..i {
                v[i][k] = v[k][i].clone();
            }
        }
    };
    mirror(&mut intervals);
    mirror(&mut first_intervals);
    Ok(RateEstimate {
        rates: ContactMatrix::new(rates),
        entries,
        inter_meeting: intervals,
        first_intervals,
        duration_s,
    })
}

fn advance(mob: &mut MobilityState, duration: f64, dt: f64) -> Result<()> {
    let mut elapsed = 0.0;
    while elapsed < duration {
        let step = dt.min(duration - elapsed);
        mob.step(step)?;
        elapsed += step;
    }
    Ok(())
}

/// Mobility stream of replication seed `seed`; the epidemic itself is
/// deterministic given the trajectories.
const MOBILITY_STREAM: u64 = 0;

/// One spatial replication: uniform placement, mobility, meeting detection
/// and the same transmission rules as the contact simulator, with one
/// meeting carrying every packet either node is infectious for.
pub fn run_spatial_epidemic(
    cfg: &ScenarioConfig,
    sources: &SourceAllocation,
    horizon: Option<f64>,
    seed: u64,
) -> Result<SimOutcome> {
    let mob = MobilityState::new_uniform(cfg, derive_seed(seed, MOBILITY_STREAM));
    spatial_epidemic_from(cfg, mob, sources, horizon, 0, seed)
}

/// Nodes permanently connected to each node's type: pairs whose configured
/// contact rate is infinite (wired access points).
fn wired_peers(cfg: &ScenarioConfig) -> Vec<Vec<usize>> {
    let h = cfg.num_types();
    let offsets = cfg.type_offsets();
    let Some(rates) = &cfg.contact_rates else {
        return vec![Vec::new(); h];
    };
    (0..h)
        .map(|a| {
            (0..h)
                .filter(|&b| rates.rate(a, b).is_infinite())
                .flat_map(|b| offsets[b]..offsets[b] + cfg.types[b].count)
                .collect()
        })
        .collect()
}

/// Spatial replication from given initial kinematics.
///
/// Pairs with an infinite configured rate are wired: they meet whenever
/// either node becomes infected.
pub fn spatial_epidemic_from(
    cfg: &ScenarioConfig,
    mut mob: MobilityState,
    sources: &SourceAllocation,
    horizon: Option<f64>,
    replication: usize,
    seed: u64,
) -> Result<SimOutcome> {
    let dt = resolve_dt(cfg)?;
    let horizon = horizon.unwrap_or(f64::INFINITY);
    let src = source_nodes(cfg, sources)?;
    let n = cfg.total_nodes();
    let mut state = EpidemicState::new(cfg.node_types(), cfg.active_periods(), src.len());
    for (p, &s) in src.iter().enumerate() {
        state.infect(p, s, 0.0);
    }

    type Event = Reverse<(OrderedFloat<f64>, usize, usize)>;
    let mut heap: BinaryHeap<Event> = BinaryHeap::new();
    let mut found = Vec::new();
    let mut newly = Vec::new();
    let wired = wired_peers(cfg);
    let node_types = cfg.node_types();
    let push_all = |heap: &mut BinaryHeap<Event>, found: &mut Vec<MeetingEvent>, from: f64| {
        for e in found.drain(..) {
            if e.time >= from && e.time <= horizon {
                heap.push(Reverse((OrderedFloat(e.time), e.u, e.v)));
            }
        }
    };
    let push_wired = |heap: &mut BinaryHeap<Event>, x: usize, t: f64| {
        if t <= horizon {
            for &y in wired[node_types[x]].iter().filter(|&&y| y != x) {
                heap.push(Reverse((OrderedFloat(t), x.min(y), x.max(y))));
            }
        }
    };
    let drain = |state: &mut EpidemicState,
                     heap: &mut BinaryHeap<Event>,
                     found: &mut Vec<MeetingEvent>,
                     newly: &mut Vec<(usize, usize)>,
                     mob: &MobilityState,
                     grid: &CellGrid,
                     initial: bool| {
        while let Some(Reverse((OrderedFloat(t), u, v))) = heap.pop() {
            newly.clear();
            state.meet(u, v, t, newly);
            for &(_, x) in newly.iter() {
                push_wired(heap, x, t);
                if initial {
                    mob.contacts_of(grid, x, false, found);
                } else {
                    mob.entries_of(grid, x, false, found);
                }
                push_all(heap, found, t);
            }
        }
    };

    // contacts present at the start count as meetings at t = 0
    let grid = CellGrid::new(&mob.positions(), mob.side(), cfg.radio_range_m);
    for &s in &src {
        mob.contacts_of(&grid, s, false, &mut found);
        push_all(&mut heap, &mut found, 0.0);
        push_wired(&mut heap, s, 0.0);
    }
    drain(&mut state, &mut heap, &mut found, &mut newly, &mob, &grid, true);

    let mut latest_end = (0..n).map(|i| state.active_until(i)).fold(f64::NEG_INFINITY, f64::max);
    while mob.time < horizon && mob.time < latest_end {
        let t0 = mob.time;
        mob.step(dt)?;
        let grid = mob.tick_grid();
        for x in 0..n {
            if state.is_active(x, t0) {
                mob.entries_of(&grid, x, false, &mut found);
                push_all(&mut heap, &mut found, t0);
            }
        }
        drain(&mut state, &mut heap, &mut found, &mut newly, &mob, &grid, false);
        latest_end = (0..n).map(|i| state.active_until(i)).fold(latest_end, f64::max);
    }

    let m = cfg.message_count;
    let received = state.received_counts().to_vec();
    Ok(SimOutcome {
        replication,
        seed,
        packets: src
            .iter()
            .enumerate()
            .map(|(p, &s)| contactsim::PacketOutcome {
                source_node: s,
                source_type: state.node_type(s),
                recipients_per_type: state.recipients(p).to_vec(),
            })
            .collect(),
        complement: received.iter().map(|&b| m.saturating_sub(b)).sum(),
        received_per_node: received,
    })
}

/// Spatial counterpart of [`contactsim::run_batch`].
pub fn run_spatial_batch(
    cfg: &ScenarioConfig,
    sources: &SourceAllocation,
    replications: usize,
    seed: u64,
) -> Result<BatchResult> {
    validate_scenario(cfg).into_result()?;
    if replications < 1 {
        return domain("replications ≥ 1");
    }
    resolve_dt(cfg)?;
    let horizon = cfg.simulation.horizon_s;
    let outcomes = (0..replications)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(seed, i as u64);
            let mob = MobilityState::new_uniform(cfg, derive_seed(s, MOBILITY_STREAM));
            spatial_epidemic_from(cfg, mob, sources, horizon, i, s)
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = contactsim::summarize(cfg, &outcomes, seed);
    Ok(BatchResult { outcomes, summary })
}
