//! Cellular traffic load and the choice of the initial push count.
//!
//! The load of a push count `beta` is `beta + Y`, where `Y` is the expected
//! number of packets base stations must send in the complement phase. With
//! erasure coding each node needs any `M` distinct coded packets; without
//! coding it needs at least one copy of each of the `M` messages.

use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::analytic::AnalyticResult;
use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Coding {
    ErasureCoded,
    Uncoded,
}

impl fmt::Display for Coding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Coding::ErasureCoded => "erasure_coded",
            Coding::Uncoded => "uncoded",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadPoint {
    pub beta: usize,
    pub expected_complement: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadCurve {
    pub entries: Vec<LoadPoint>,
    /// Minimizing entry; the smallest `beta` wins ties.
    pub optimum: LoadPoint,
    pub coding: Coding,
    /// Load without cooperation: every node fetches all `M` messages.
    pub baseline: f64,
}

impl LoadCurve {
    fn from_entries(entries: Vec<LoadPoint>, coding: Coding, baseline: f64) -> Self {
        let optimum = *entries
            .iter()
            .reduce(|best, e| if e.total < best.total { e } else { best })
            .expect("load curve has at least one entry");
        Self {
            entries,
            optimum,
            coding,
            baseline,
        }
    }

    pub fn total_at(&self, beta: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.beta == beta).map(|e| e.total)
    }

    /// Writes `beta,Y,total,coding` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["beta", "Y", "total", "coding"])?;
        for e in &self.entries {
            w.write_record([
                e.beta.to_string(),
                e.expected_complement.to_string(),
                e.total.to_string(),
                self.coding.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Which node types receive the `beta` initially pushed packets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceAllocation {
    pub per_type_counts: Vec<usize>,
    /// Type indices sorted by increasing extinction probability.
    pub ordering: Vec<usize>,
}

impl SourceAllocation {
    pub fn total(&self) -> usize {
        self.per_type_counts.iter().sum()
    }

    /// Source type of each packet, best types first.
    pub fn slot_types(&self) -> Vec<usize> {
        self.ordering
            .iter()
            .flat_map(|&h| std::iter::repeat(h).take(self.per_type_counts[h]))
            .collect()
    }
}

/// Types ordered by increasing extinction probability; ties keep index order.
pub fn source_ordering(extinction: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..extinction.len()).collect();
    order.sort_by(|&a, &b| extinction[a].total_cmp(&extinction[b]).then(a.cmp(&b)));
    order
}

/// Spreads `beta` distinct packets over distinct nodes, filling the type with
/// the smallest extinction probability first and overflowing in order.
///
/// This minimizes `prod_h w_h^beta_h`, so each packet gets the best
/// still-available source type.
pub fn allocate_sources(extinction: &[f64], counts: &[usize], beta: usize) -> Result<SourceAllocation> {
    if extinction.len() != counts.len() {
        return domain("one extinction probability per node type");
    }
    let available: usize = counts.iter().sum();
    if beta > available {
        return Err(Error::Capacity {
            requested: beta,
            available,
        });
    }
    let ordering = source_ordering(extinction);
    let mut per_type_counts = vec![0; counts.len()];
    let mut left = beta;
    for &h in &ordering {
        let take = left.min(counts[h]);
        per_type_counts[h] = take;
        left -= take;
    }
    Ok(SourceAllocation {
        per_type_counts,
        ordering,
    })
}

/// Even split of `beta` uncoded copies over `m` messages, remainder to the
/// lowest message indices.
pub fn uncoded_even_allocation(m: usize, beta: usize) -> Vec<usize> {
    if m == 0 {
        return Vec::new();
    }
    let (q, r) = (beta / m, beta % m);
    (0..m).map(|i| q + usize::from(i < r)).collect()
}

/// Deals the allocation's source slots to messages round-robin, returning
/// per-message per-type source counts.
pub fn uncoded_message_sources(allocation: &SourceAllocation, per_message: &[usize]) -> Vec<Vec<usize>> {
    let h = allocation.per_type_counts.len();
    let slots = allocation.slot_types();
    let mut remaining = per_message.to_vec();
    let mut out = vec![vec![0; h]; per_message.len()];
    let mut msg = 0;
    for ty in slots {
        if remaining.iter().all(|&r| r == 0) {
            break;
        }
        while remaining[msg] == 0 {
            msg = (msg + 1) % per_message.len();
        }
        out[msg][ty] += 1;
        remaining[msg] -= 1;
        msg = (msg + 1) % per_message.len();
    }
    out
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return domain(format!("probability {p} outside [0, 1]"));
    }
    Ok(())
}

/// `N * E[(M - B)^+]` with `B ~ Binomial(beta, z1)`.
pub fn complement_load_coded(n: usize, m: usize, beta: usize, z1: f64) -> Result<f64> {
    check_probability(z1)?;
    let top = m.min(beta);
    let expected: f64 = if z1 == 0.0 {
        m as f64
    } else if z1 == 1.0 {
        m.saturating_sub(beta) as f64
    } else {
        let (lz, lq) = (z1.ln(), (-z1).ln_1p());
        let mut ln_choose = 0.0;
        let mut acc = 0.0;
        for b in 0..=top {
            if b > 0 {
                ln_choose += ((beta - b + 1) as f64 / b as f64).ln();
            }
            let ln_p = ln_choose + b as f64 * lz + (beta - b) as f64 * lq;
            acc += (m - b) as f64 * ln_p.exp();
        }
        acc
    };
    Ok(n as f64 * expected)
}

/// `N * E[(M - B)^+]` where `B` counts successes of independent packets with
/// the given individual reception probabilities.
pub fn complement_load_heterogeneous(n: usize, m: usize, probabilities: &[f64]) -> Result<f64> {
    let mut dp = DeficitDistribution::new(m);
    for &p in probabilities {
        check_probability(p)?;
        dp.push(p);
    }
    Ok(n as f64 * dp.expected_deficit())
}

/// Distribution of the number of received packets, truncated at `M`.
struct DeficitDistribution {
    probs: Vec<f64>,
}

impl DeficitDistribution {
    fn new(m: usize) -> Self {
        let mut probs = vec![0.0; m + 1];
        probs[0] = 1.0;
        Self { probs }
    }

    fn push(&mut self, p: f64) {
        let m = self.probs.len() - 1;
        let saturated = self.probs[m];
        for b in (1..=m).rev() {
            self.probs[b] = self.probs[b] * (1.0 - p) + self.probs[b - 1] * p;
        }
        self.probs[0] *= 1.0 - p;
        self.probs[m] += saturated * p;
    }

    fn expected_deficit(&self) -> f64 {
        let m = self.probs.len() - 1;
        self.probs
            .iter()
            .enumerate()
            .map(|(b, p)| (m - b) as f64 * p)
            .sum()
    }
}

/// `N * sum_m (1 - z(beta_m))`, where message `m` is one packet seeded at the
/// per-type counts `per_message[m]`. Messages nobody received count fully.
pub fn complement_load_uncoded(analytic: &AnalyticResult, per_message: &[Vec<usize>]) -> Result<f64> {
    let n = analytic.total_nodes() as f64;
    let mut missing = 0.0;
    for sources in per_message {
        let reached = if sources.iter().all(|&b| b == 0) {
            0.0
        } else {
            analytic.fraction_multi_source(sources)?
        };
        missing += 1.0 - reached;
    }
    Ok(n * missing)
}

/// Evaluates `beta + Y` for every `beta` in `1..=max_beta` and picks the minimum.
///
/// Sources follow [`allocate_sources`]. In the coded case each packet spreads
/// from its own single source; packets are treated as independent.
pub fn optimize_beta(
    analytic: &AnalyticResult,
    message_count: usize,
    coding: Coding,
    max_beta: usize,
) -> Result<LoadCurve> {
    let counts = &analytic.counts;
    let n = analytic.total_nodes();
    let m = message_count;
    if m < 1 {
        return domain("message count must be at least 1");
    }
    let max_beta = max_beta.min(n);
    if max_beta < 1 {
        return domain("need at least one candidate beta");
    }
    let baseline = (n * m) as f64;
    let full = allocate_sources(&analytic.extinction, counts, max_beta)?;
    let slots = full.slot_types();
    let mut entries = Vec::with_capacity(max_beta);

    match coding {
        Coding::ErasureCoded if counts.len() == 1 => {
            let z1 = analytic.fraction_multi_source(&[1])?;
            for beta in 1..=max_beta {
                let y = complement_load_coded(n, m, beta, z1)?;
                entries.push(point(beta, y));
            }
        }
        Coding::ErasureCoded => {
            let per_type: Vec<f64> = (0..counts.len())
                .map(|h| analytic.single_source_fraction(h))
                .collect();
            let mut dp = DeficitDistribution::new(m);
            for (i, &ty) in slots.iter().enumerate() {
                dp.push(per_type[ty]);
                entries.push(point(i + 1, n as f64 * dp.expected_deficit()));
            }
        }
        Coding::Uncoded => {
            for beta in 1..=max_beta {
                let alloc = allocate_sources(&analytic.extinction, counts, beta)?;
                let per_message = uncoded_message_sources(&alloc, &uncoded_even_allocation(m, beta));
                let y = complement_load_uncoded(analytic, &per_message)?;
                entries.push(point(beta, y));
            }
        }
    }
    Ok(LoadCurve::from_entries(entries, coding, baseline))
}

fn point(beta: usize, y: f64) -> LoadPoint {
    LoadPoint {
        beta,
        expected_complement: y,
        total: beta as f64 + y,
    }
}
