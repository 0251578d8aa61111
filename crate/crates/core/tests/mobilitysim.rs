use offload_core::contactsim::{run_batch, run_schedule, MeetingEvent};
use offload_core::loadopt::SourceAllocation;
use offload_core::mobilitysim::{
    estimate_rates, run_spatial_batch, spatial_epidemic_from, MobilityState, NodeKinematics,
};
use offload_core::model::{NodeTypeSpec, ScenarioConfig};
use offload_core::stats::chi_square_uniform_p;

fn alloc(counts: Vec<usize>) -> SourceAllocation {
    let ordering = (0..counts.len()).collect();
    SourceAllocation {
        per_type_counts: counts,
        ordering,
    }
}

fn kin(x: f64, y: f64, speed: f64) -> NodeKinematics {
    NodeKinematics {
        x,
        y,
        heading: 0.0,
        speed,
        next_turn_s: f64::INFINITY,
    }
}

fn mixed(mobile: usize, fixed: usize, side: f64, r0: f64, tau: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::new(
        vec![NodeTypeSpec::new(mobile, 10.0, tau), NodeTypeSpec::new(fixed, 0.0, tau)],
        side,
        r0,
    );
    cfg.mobility.direction_change_mean_s = 250.0;
    cfg
}

fn schedule_of(mut mob: MobilityState, dt: f64, until: f64) -> Vec<MeetingEvent> {
    let mut events = mob.initial_contacts();
    while mob.time < until {
        mob.step(dt).unwrap();
        events.extend(mob.detect_meetings().unwrap());
    }
    events
}

#[test]
fn hand_built_pass_by_static_row() {
    // one vehicle drives along y = 4000 past static nodes offset by r0/2;
    // entries at (x - 100 - sqrt(100^2 - 50^2)) / 10 s = 81.3, 181.3, 281.3, 381.3
    let mut cfg = ScenarioConfig::new(
        vec![NodeTypeSpec::new(1, 10.0, 300.0), NodeTypeSpec::new(5, 0.0, 300.0)],
        8000.0,
        100.0,
    );
    cfg.mobility.direction_change_mean_s = f64::INFINITY;
    cfg.mobility.dt_s = Some(0.5);
    let nodes = vec![
        kin(100.0, 4000.0, 10.0),
        kin(1000.0, 4050.0, 0.0),
        kin(2000.0, 4050.0, 0.0),
        kin(3000.0, 4050.0, 0.0),
        kin(4000.0, 4050.0, 0.0),
        kin(130.0, 4000.0, 0.0),
    ];
    let mob = MobilityState::from_nodes(&cfg, nodes, 1).unwrap();
    let src = alloc(vec![1, 0]);
    let spatial = spatial_epidemic_from(&cfg, mob.clone(), &src, None, 0, 1).unwrap();
    // node 5 is in range at t = 0; node 4 is reached after the vehicle's 300 s
    assert_eq!(spatial.received_per_node, vec![1, 1, 1, 1, 0, 1]);
    assert_eq!(spatial.packets[0].recipients_per_type, vec![1, 4]);

    let events = schedule_of(mob, 0.5, 500.0);
    let times: Vec<f64> = events.iter().filter(|e| e.u == 0 && e.v < 5).map(|e| e.time).collect();
    let want = [81.339_745, 181.339_745, 281.339_745, 381.339_745];
    assert_eq!(times.len(), 4);
    for (t, w) in times.iter().zip(want) {
        assert!((t - w).abs() < 1e-6, "{t} vs {w}");
    }
    let replay = run_schedule(&cfg, &src, &events, None).unwrap();
    assert_eq!(replay.received_per_node, spatial.received_per_node);
}

#[test]
fn spatial_run_equals_replay_of_its_own_schedule() {
    let mut cfg = mixed(40, 40, 2000.0, 100.0, 30.0);
    cfg.mobility.dt_s = Some(0.5);
    let src = alloc(vec![1, 1]);
    for seed in 0..6u64 {
        let mob = MobilityState::new_uniform(&cfg, seed);
        let spatial = spatial_epidemic_from(&cfg, mob.clone(), &src, None, 0, seed).unwrap();
        let replay = run_schedule(&cfg, &src, &schedule_of(mob, 0.5, 2000.0), None).unwrap();
        for (a, b) in spatial.packets.iter().zip(&replay.packets) {
            assert_eq!(a.recipients_per_type, b.recipients_per_type, "seed {seed}");
        }
        assert_eq!(spatial.received_per_node, replay.received_per_node, "seed {seed}");
    }
}

#[test]
fn positions_stay_uniform() {
    let mut cfg = mixed(2000, 1, 1000.0, 10.0, 1.0);
    cfg.mobility.direction_change_mean_s = 30.0;
    let mut mob = MobilityState::new_uniform(&cfg, 3);
    for _ in 0..500 {
        mob.step(1.0).unwrap();
    }
    let mut counts = vec![0u64; 100];
    for (x, y) in mob.positions().into_iter().take(2000) {
        let cx = ((x / 100.0).ceil() as usize).clamp(1, 10) - 1;
        let cy = ((y / 100.0).ceil() as usize).clamp(1, 10) - 1;
        counts[cy * 10 + cx] += 1;
    }
    let p = chi_square_uniform_p(&counts).unwrap();
    assert!(p > 0.01, "chi-square p = {p}");
}

#[test]
fn static_pairs_never_meet_and_are_flagged() {
    let mut cfg = mixed(30, 30, 2000.0, 50.0, 10.0);
    cfg.mobility.dt_s = Some(0.5);
    let est = estimate_rates(&cfg, 100.0, 2000.0, 9).unwrap();
    let ss = est.entry(1, 1);
    assert_eq!(ss.rate_hz, 0.0);
    assert_eq!(ss.samples, 0);
    assert!(ss.unestimated);
    assert_eq!(ss.ci_low, 0.0);
    assert!(ss.ci_high > 0.0);
    assert!(!est.entry(0, 1).unestimated);
    assert_eq!(est.rates.rate(0, 1), est.rates.rate(1, 0));
}

#[test]
fn rates_follow_kinetic_theory() {
    // 2 r0 E|v_rel| / L^2 with E|v_rel| = 4v/pi (mobile pairs) and v (mobile-static)
    let (side, r0, v) = (2000.0, 50.0, 10.0);
    let mut cfg = mixed(60, 60, side, r0, 10.0);
    cfg.mobility.dt_s = Some(0.5);
    let est = estimate_rates(&cfg, 500.0, 20_000.0, 5).unwrap();
    let mm = 2.0 * r0 * (4.0 * v / std::f64::consts::PI) / (side * side);
    let ms = 2.0 * r0 * v / (side * side);
    let got_mm = est.rates.rate(0, 0);
    let got_ms = est.rates.rate(0, 1);
    assert!((got_mm / mm - 1.0).abs() < 0.15, "{got_mm} vs {mm}");
    assert!((got_ms / ms - 1.0).abs() < 0.15, "{got_ms} vs {ms}");
    let e = est.entry(0, 1);
    assert!(e.ci_low <= e.rate_hz && e.rate_hz <= e.ci_high);
}

#[test]
fn spatial_batch_is_deterministic() {
    let mut cfg = mixed(20, 20, 1500.0, 80.0, 60.0);
    cfg.mobility.dt_s = Some(0.5);
    let a = run_spatial_batch(&cfg, &alloc(vec![1, 1]), 8, 17).unwrap();
    let b = run_spatial_batch(&cfg, &alloc(vec![1, 1]), 8, 17).unwrap();
    assert_eq!(a, b);
    let c = run_spatial_batch(&cfg, &alloc(vec![1, 1]), 8, 18).unwrap();
    assert_ne!(a.outcomes, c.outcomes);
}

/// Quarter-scale WiFi-AP setup: 240 vehicles and 10 wired access points on a
/// 4 km torus, same density as the 8 km case.
fn access_points(tau_mobile: f64, tau_ap: f64) -> ScenarioConfig {
    let mut cfg = mixed(240, 10, 4000.0, 250.0, tau_mobile);
    cfg.types[1].active_period_s = tau_ap;
    cfg.mobility.dt_s = Some(1.0);
    // only the wired entry matters to the spatial engine
    cfg.with_rates(vec![vec![0.0, 0.0], vec![0.0, f64::INFINITY]])
}

fn mobile_fraction(cfg: &ScenarioConfig, reps: usize) -> (f64, f64) {
    let batch = run_spatial_batch(cfg, &alloc(vec![0, 1]), reps, 2026).unwrap();
    let fr: Vec<f64> = batch
        .outcomes
        .iter()
        .map(|o| o.packets[0].recipients_per_type[0] as f64 / 240.0)
        .collect();
    let mean = fr.iter().sum::<f64>() / reps as f64;
    let var = fr.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    (mean, (var / reps as f64).sqrt())
}

#[test]
fn access_points_reach_all_access_points_over_the_wire() {
    let batch = run_spatial_batch(&access_points(0.0, 200.0), &alloc(vec![0, 1]), 4, 1).unwrap();
    for o in &batch.outcomes {
        assert_eq!(o.packets[0].recipients_per_type[1], 10);
    }
}

#[test]
fn access_point_baseline_and_longer_active_periods() {
    let reps = 60;
    // tau_1 = 0: vehicles only hear access points directly; a vehicle is
    // missed with probability exp(-10 (pi r0^2 / L^2 + 2 r0 v tau_2 / L^2))
    let (side, r0, v, tau2) = (4000.0_f64, 250.0, 10.0, 500.0);
    let per_ap = std::f64::consts::PI * r0 * r0 / (side * side) + 2.0 * r0 * v * tau2 / (side * side);
    let baseline = 1.0 - (-10.0 * per_ap).exp();
    let (f0, se0) = mobile_fraction(&access_points(0.0, tau2), reps);
    assert!((f0 - baseline).abs() < 0.03 + 3.0 * se0, "{f0} vs {baseline}");

    let mut last = f0;
    for tau1 in [5.0, 15.0, 40.0] {
        let (f, se) = mobile_fraction(&access_points(tau1, tau2), reps);
        assert!(f >= last - 2.0 * se, "tau1 {tau1}: {f} after {last}");
        last = f;
    }
    assert!(last > f0 + 0.1);

    for tau1 in [0.0, 15.0] {
        let (short, _) = mobile_fraction(&access_points(tau1, 500.0), reps);
        let (long, se) = mobile_fraction(&access_points(tau1, 1500.0), reps);
        assert!(long >= short - 2.0 * se, "tau1 {tau1}: {long} < {short}");
    }
}

#[test]
fn contact_engine_access_point_sweep_is_monotone() {
    let rates = vec![vec![9.947e-5, 7.8125e-5], vec![7.8125e-5, f64::INFINITY]];
    let mut prev: Option<Vec<Vec<usize>>> = None;
    for tau1 in [0.0, 10.0, 20.0, 40.0] {
        let cfg = mixed(950, 10, 8000.0, 250.0, tau1);
        let mut cfg = cfg.with_rates(rates.clone());
        cfg.types[1].active_period_s = 500.0;
        let batch = run_batch(&cfg, &alloc(vec![0, 1]), 50, 4).unwrap();
        let sets: Vec<Vec<usize>> = batch.outcomes.iter().map(|o| o.received_per_node.clone()).collect();
        if let Some(p) = &prev {
            for (a, b) in p.iter().zip(&sets) {
                assert!(a.iter().zip(b).all(|(x, y)| x <= y));
            }
        }
        prev = Some(sets);
    }
}
