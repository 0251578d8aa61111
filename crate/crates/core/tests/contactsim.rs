use offload_core::analytic::AnalyticResult;
use offload_core::contactsim::{run_batch, run_replication, spread_out, EpidemicState, PacketState};
use offload_core::loadopt::SourceAllocation;
use offload_core::model::{NodeTypeSpec, ScenarioConfig, SharingMode};
use proptest::prelude::*;

/// Single-type scenario with mean offspring `a`.
fn h1(n: usize, a: f64, tau: f64) -> ScenarioConfig {
    let gamma = a / n as f64;
    let rate = -(-gamma).ln_1p() / tau;
    ScenarioConfig::new(vec![NodeTypeSpec::new(n, 0.0, tau)], 8000.0, 250.0).with_rates(vec![vec![rate]])
}

fn alloc(counts: Vec<usize>) -> SourceAllocation {
    let ordering = (0..counts.len()).collect();
    SourceAllocation {
        per_type_counts: counts,
        ordering,
    }
}

#[test]
fn single_type_matches_branching_prediction() {
    let cfg = h1(960, 2.0, 100.0);
    let analytic = AnalyticResult::from_config(&cfg).unwrap();
    let w = analytic.extinction[0];
    let z = analytic.fractions[0];
    let batch = run_batch(&cfg, &alloc(vec![1]), 500, 2024).unwrap();
    let s = &batch.summary[0];
    let se = (w * (1.0 - w) / 500.0).sqrt();
    assert!((s.spread_out_freq - (1.0 - w)).abs() <= 3.0 * se, "freq {} vs {}", s.spread_out_freq, 1.0 - w);
    // finite-size bias of the final size is O(1/sqrt(N))
    assert!((s.mean_fraction_per_type[0] - z).abs() < 0.03, "fraction {} vs {z}", s.mean_fraction_per_type[0]);
}

#[test]
fn all_packets_die_with_product_probability() {
    // two types, three packets from type 0 and one from type 1
    let tau = 50.0;
    let mut cfg = ScenarioConfig::new(
        vec![NodeTypeSpec::new(300, 0.0, tau), NodeTypeSpec::new(300, 0.0, tau)],
        8000.0,
        250.0,
    );
    cfg.contact_rates = Some(offload_core::model::ContactMatrix::new(vec![
        vec![8e-5, 6e-5],
        vec![6e-5, 2e-5],
    ]));
    let analytic = AnalyticResult::from_config(&cfg).unwrap();
    assert!(analytic.supercritical);
    let sources = vec![3, 1];
    let want = offload_core::analytic::extinction_multi_source(&analytic.extinction, &sources).unwrap();
    let reps = 800;
    let batch = run_batch(&cfg, &alloc(sources), reps, 11).unwrap();
    let all_died = batch
        .outcomes
        .iter()
        .filter(|o| o.packets.iter().all(|p| !spread_out(p.total_recipients(), 600, 0.1)))
        .count() as f64
        / reps as f64;
    let se = (want * (1.0 - want) / reps as f64).sqrt();
    assert!((all_died - want).abs() <= 3.0 * se, "{all_died} vs {want}");
}

#[test]
fn shared_stream_keeps_single_packet_marginals() {
    let mut cfg = h1(400, 2.5, 60.0);
    let w = AnalyticResult::from_config(&cfg).unwrap().extinction[0];
    cfg.simulation.mode = SharingMode::Shared;
    let batch = run_batch(&cfg, &alloc(vec![1]), 400, 8).unwrap();
    let se = (w * (1.0 - w) / 400.0).sqrt();
    assert!((batch.summary[0].spread_out_freq - (1.0 - w)).abs() <= 3.0 * se);
}

#[test]
fn deterministic_given_seed() {
    for mode in [SharingMode::Independent, SharingMode::Shared] {
        let mut cfg = h1(200, 2.0, 30.0);
        cfg.simulation.mode = mode;
        let a = run_batch(&cfg, &alloc(vec![4]), 20, 5).unwrap();
        let b = run_batch(&cfg, &alloc(vec![4]), 20, 5).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn classifier_is_insensitive_in_supercritical_regime() {
    let cfg = h1(960, 2.0, 100.0);
    let batch = run_batch(&cfg, &alloc(vec![1]), 500, 77).unwrap();
    let differ = batch
        .outcomes
        .iter()
        .filter(|o| {
            let r = o.packets[0].total_recipients();
            spread_out(r, 960, 0.05) != spread_out(r, 960, 0.2)
        })
        .count();
    assert!((differ as f64) < 0.02 * 500.0, "{differ} replications change class");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn longer_active_period_never_shrinks_recipient_set(
        seed in any::<u64>(),
        tau1 in 1.0f64..80.0,
        extra in 0.0f64..80.0,
        rate in 1e-4f64..2e-2,
        n in 20usize..120,
    ) {
        let short = h1(n, 1.0, 1.0).with_rates(vec![vec![rate]]);
        let mut short = short;
        short.types[0].active_period_s = tau1;
        let mut long = short.clone();
        long.types[0].active_period_s = tau1 + extra;
        let a = run_replication(&short, &alloc(vec![1]), None, seed).unwrap();
        let b = run_replication(&long, &alloc(vec![1]), None, seed).unwrap();
        for (x, y) in a.received_per_node.iter().zip(&b.received_per_node) {
            prop_assert!(x <= y);
        }
    }

    #[test]
    fn outcome_invariants(
        seed in any::<u64>(),
        counts in proptest::collection::vec(1usize..30, 1..4),
        rate in 0.0f64..0.05,
        tau in 0.0f64..60.0,
        shared in any::<bool>(),
        m in 1usize..4,
    ) {
        let h = counts.len();
        let types = counts.iter().map(|&c| NodeTypeSpec::new(c, 0.0, tau)).collect();
        let mut cfg = ScenarioConfig::new(types, 1000.0, 10.0).with_rates(vec![vec![rate; h]; h]);
        cfg.message_count = m;
        cfg.simulation.mode = if shared { SharingMode::Shared } else { SharingMode::Independent };
        let mut sources = vec![0; h];
        sources[0] = counts[0].min(3);
        let beta: usize = sources.iter().sum();
        let o = run_replication(&cfg, &alloc(sources), None, seed).unwrap();
        for p in &o.packets {
            prop_assert!(p.recipients_per_type.iter().zip(&counts).all(|(r, c)| r <= c));
            prop_assert!(p.total_recipients() >= 1);
        }
        prop_assert!(o.received_per_node.iter().all(|&b| b <= beta));
        let complement: usize = o.received_per_node.iter().map(|&b| m.saturating_sub(b)).sum();
        prop_assert_eq!(complement, o.complement);
    }

    #[test]
    fn census_conserves_population(times in proptest::collection::vec(0.0f64..20.0, 1..30)) {
        let mut s = EpidemicState::new(vec![0; 10], vec![5.0], 1);
        s.infect(0, 0, 0.0);
        let mut t = 0.0;
        for (i, dt) in times.iter().enumerate() {
            t += dt;
            s.deliver(0, i % 10, (i * 7 + 3) % 10, t);
            let (a, b, c) = s.census(0, t);
            prop_assert_eq!(a + b + c, 10);
            for node in 0..10 {
                if s.received_at(0, node).is_some_and(|r| r + 5.0 <= t) {
                    prop_assert_eq!(s.state(0, node, t), PacketState::Recovered);
                }
            }
        }
    }
}
