//! Per-packet SIR bookkeeping shared by both simulators.

/// State of one node with respect to one packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketState {
    Susceptible,
    Infectious,
    Recovered,
}

/// Reception times of every packet at every node.
///
/// A node that received packet `j` at `t` is infectious for `j` on
/// `[t, t + tau)` and recovered afterwards, so the state at any instant
/// follows from the reception time alone and can only move S → I → R.
#[derive(Debug, Clone)]
pub struct EpidemicState {
    node_types: Vec<usize>,
    active_periods: Vec<f64>,
    /// `received_at[packet][node]`, infinite when never received.
    received_at: Vec<Vec<f64>>,
    recipients: Vec<Vec<usize>>,
    /// Latest end of any active window per node.
    active_until: Vec<f64>,
    received_count: Vec<usize>,
}

impl EpidemicState {
    pub fn new(node_types: Vec<usize>, active_periods: Vec<f64>, packets: usize) -> Self {
        let n = node_types.len();
        let h = active_periods.len();
        Self {
            received_at: vec![vec![f64::INFINITY; n]; packets],
            recipients: vec![vec![0; h]; packets],
            active_until: vec![f64::NEG_INFINITY; n],
            received_count: vec![0; n],
            node_types,
            active_periods,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.node_types.len()
    }

    pub fn num_packets(&self) -> usize {
        self.received_at.len()
    }

    pub fn node_type(&self, node: usize) -> usize {
        self.node_types[node]
    }

    pub fn active_period_of(&self, node: usize) -> f64 {
        self.active_periods[self.node_types[node]]
    }

    pub fn state(&self, packet: usize, node: usize, t: f64) -> PacketState {
        let r = self.received_at[packet][node];
        if r > t {
            PacketState::Susceptible
        } else if t < r + self.active_period_of(node) {
            PacketState::Infectious
        } else {
            PacketState::Recovered
        }
    }

    pub fn is_infectious(&self, packet: usize, node: usize, t: f64) -> bool {
        self.state(packet, node, t) == PacketState::Infectious
    }

    pub fn has_received(&self, packet: usize, node: usize) -> bool {
        self.received_at[packet][node].is_finite()
    }

    pub fn received_at(&self, packet: usize, node: usize) -> Option<f64> {
        let r = self.received_at[packet][node];
        r.is_finite().then_some(r)
    }

    /// Whether the node is infectious for at least one packet at `t`.
    pub fn is_active(&self, node: usize, t: f64) -> bool {
        t < self.active_until[node]
    }

    pub fn active_until(&self, node: usize) -> f64 {
        self.active_until[node]
    }

    /// Hands packet `packet` to `node` at `t` if it never had it.
    pub fn infect(&mut self, packet: usize, node: usize, t: f64) -> bool {
        if self.has_received(packet, node) {
            return false;
        }
        self.received_at[packet][node] = t;
        self.recipients[packet][self.node_types[node]] += 1;
        self.received_count[node] += 1;
        let end = t + self.active_period_of(node);
        if end > self.active_until[node] {
            self.active_until[node] = end;
        }
        true
    }

    /// Transmission attempt `from → to` at `t`; succeeds only if the sender
    /// is infectious and the receiver susceptible for the packet.
    pub fn deliver(&mut self, packet: usize, from: usize, to: usize, t: f64) -> bool {
        if !self.is_infectious(packet, from, t) || self.state(packet, to, t) != PacketState::Susceptible {
            return false;
        }
        self.infect(packet, to, t)
    }

    /// A meeting of `u` and `v` at `t`: every packet either side is
    /// infectious for crosses to the other side if it is susceptible.
    /// Newly infected `(packet, node)` pairs are appended to `newly`.
    pub fn meet(&mut self, u: usize, v: usize, t: f64, newly: &mut Vec<(usize, usize)>) {
        let (u_active, v_active) = (self.is_active(u, t), self.is_active(v, t));
        if !u_active && !v_active {
            return;
        }
        for p in 0..self.num_packets() {
            if u_active && self.deliver(p, u, v, t) {
                newly.push((p, v));
            } else if v_active && self.deliver(p, v, u, t) {
                newly.push((p, u));
            }
        }
    }

    /// Recipients of `packet` per node type, sources included.
    pub fn recipients(&self, packet: usize) -> &[usize] {
        &self.recipients[packet]
    }

    /// Number of distinct packets each node holds.
    pub fn received_counts(&self) -> &[usize] {
        &self.received_count
    }

    /// `(#S, #I, #R)` of a packet at `t`.
    pub fn census(&self, packet: usize, t: f64) -> (usize, usize, usize) {
        let mut c = (0, 0, 0);
        for node in 0..self.num_nodes() {
            match self.state(packet, node, t) {
                PacketState::Susceptible => c.0 += 1,
                PacketState::Infectious => c.1 += 1,
                PacketState::Recovered => c.2 += 1,
            }
        }
        c
    }
}
