use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use qfad_core::nettsim::{
    generate_session, read_log, standard_schedules, write_log, Label, Node, PacketRecord, Phase,
    Scenario, SessionSchedule, Topology, TrafficType, MS_PER_MINUTE,
};

use Node::*;

fn session(phases: Vec<Phase>, seed: u64) -> SessionSchedule {
    SessionSchedule {
        session_id: "t".into(),
        seed,
        phases,
    }
}

fn test_session(s: Scenario, seed: u64) -> Vec<PacketRecord> {
    let sched = session(
        vec![Phase::normal(20.0, Some(s)), Phase::attack(5.0, s), Phase::normal(10.0, Some(s))],
        seed,
    );
    generate_session(&Topology::default(), &sched).unwrap()
}

fn in_attack_phase(p: &PacketRecord) -> bool {
    (20 * MS_PER_MINUTE..25 * MS_PER_MINUTE).contains(&p.emitted_at())
}

type Hops = Vec<(Node, Node)>;
type Redirects = Vec<(Node, Vec<Node>)>;

/// Normal and attack first forwarders per source, copied from the
/// published scenario table. Attack rows may list several options.
fn published(s: Scenario) -> (Hops, Redirects) {
    match s {
        Scenario::I => (
            vec![(E1, R1), (E2, R1), (E3, R3), (E4, R2)],
            vec![(E1, vec![R2, R3, C]), (E2, vec![R2, R3, C]), (E3, vec![R1, R2, C]), (E4, vec![R1, R3, C])],
        ),
        Scenario::II => (
            vec![(R1, C), (R2, C), (R3, R2)],
            vec![(R1, vec![R2, R3]), (R2, vec![R1]), (R3, vec![R1, C])],
        ),
        Scenario::III => (
            vec![(E1, R1), (E2, R1), (E3, R3), (E4, R2), (R1, C), (R2, C), (R3, C)],
            [E1, E2, E3, E4, R1, R2, R3].into_iter().map(|n| (n, vec![A])).collect(),
        ),
    }
}

#[test]
fn normal_phases_follow_published_routes() {
    for s in Scenario::ALL {
        let log = test_session(s, 41);
        let (normal, _) = published(s);
        for (src, fwd) in normal {
            let hops: BTreeSet<Node> = log
                .iter()
                .filter(|p| p.src == src && !in_attack_phase(p))
                .map(|p| p.hops[1].0)
                .collect();
            assert_eq!(hops, BTreeSet::from([fwd]), "scenario {s}, source {src}");
        }
    }
}

#[test]
fn attack_phases_follow_published_routes() {
    for s in Scenario::ALL {
        let log = test_session(s, 42);
        let (_, attack) = published(s);
        for (src, options) in attack {
            let seen: BTreeSet<Node> = log
                .iter()
                .filter(|p| p.src == src && in_attack_phase(p) && p.hops.len() > 1)
                .map(|p| p.hops[1].0)
                .collect();
            assert_eq!(seen, options.iter().copied().collect(), "scenario {s}, source {src}");
        }
    }
}

#[test]
fn scenario_three_attack_traffic_ends_at_attacker() {
    let log = test_session(Scenario::III, 43);
    let attack: Vec<_> = log.iter().filter(|p| in_attack_phase(p)).collect();
    assert!(!attack.is_empty());
    assert!(attack.iter().all(|p| p.final_node() == A && p.label == Label::Attack));
}

#[test]
fn labels_follow_phase_windows() {
    for s in Scenario::ALL {
        let log = test_session(s, 44);
        let mut per_window: BTreeMap<u64, BTreeSet<Label>> = BTreeMap::new();
        for p in &log {
            per_window.entry(p.emitted_at() / MS_PER_MINUTE).or_default().insert(p.label);
        }
        assert_eq!(per_window.len(), 35);
        let sequence: Vec<Label> = per_window
            .values()
            .map(|labels| {
                assert_eq!(labels.len(), 1);
                *labels.iter().next().unwrap()
            })
            .collect();
        let expected: Vec<Label> = std::iter::repeat_n(Label::Normal, 20)
            .chain(std::iter::repeat_n(Label::Attack, 5))
            .chain(std::iter::repeat_n(Label::Normal, 10))
            .collect();
        assert_eq!(sequence, expected);
    }
}

#[test]
fn equal_seeds_give_byte_identical_logs() {
    let render = |seed| {
        let mut buf = Vec::new();
        write_log(&mut buf, &test_session(Scenario::II, seed)).unwrap();
        buf
    };
    assert_eq!(render(7), render(7));
    assert_ne!(render(7), render(8));
}

#[test]
fn log_survives_csv_round_trip() {
    let log = test_session(Scenario::I, 45);
    let mut buf = Vec::new();
    write_log(&mut buf, &log).unwrap();
    assert_eq!(read_log(buf.as_slice()).unwrap(), log);
}

#[test]
fn empty_schedule_gives_empty_log() {
    let log = generate_session(&Topology::default(), &session(vec![], 1)).unwrap();
    assert!(log.is_empty());
}

#[test]
fn per_hop_delays_follow_lognormal_model() {
    let topo = Topology::default();
    let log = generate_session(&topo, &session(vec![Phase::normal(60.0, None)], 46)).unwrap();
    let mut logs: Vec<f64> = log
        .iter()
        .flat_map(|p| p.hops.windows(2).map(|w| ((w[1].1 - w[0].1) as f64).ln()).collect::<Vec<_>>())
        .collect();
    assert!(logs.len() > 20_000);
    logs.sort_by(f64::total_cmp);
    let median = logs[logs.len() / 2].exp();
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    let sd = (logs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / logs.len() as f64).sqrt();
    // integer rounding perturbs the log-scale spread slightly
    assert!((median - topo.delay.median_ms).abs() <= 1.0, "median {median}");
    assert!((sd - topo.delay.sigma).abs() < 0.03, "sigma {sd}");
}

#[test]
fn traffic_types_cycle_eight_one_one() {
    let log = generate_session(&Topology::default(), &session(vec![Phase::normal(10.0, None)], 47)).unwrap();
    for src in [E1, E2, E3, E4, R1, R2, R3] {
        let mut counts = BTreeMap::new();
        for p in log.iter().filter(|p| p.src == src) {
            *counts.entry(p.kind).or_insert(0) += 1;
        }
        assert_eq!(counts[&TrafficType::Data], 480, "{src}");
        assert_eq!(counts[&TrafficType::Ack], 60);
        assert_eq!(counts[&TrafficType::Control], 60);
    }
}

#[test]
fn standard_corpus_durations() {
    let full = standard_schedules(1, 1.0).unwrap();
    assert_eq!(full[0].num_windows(), 300);
    assert_eq!(full[1].num_windows(), 60);
    for t in &full[2..] {
        let minutes: Vec<f64> = t.phases.iter().map(|p| p.minutes).collect();
        assert_eq!(minutes, vec![20.0, 5.0, 10.0]);
        assert_eq!(t.num_windows(), 35);
    }
    let tenth = standard_schedules(1, 0.1).unwrap();
    assert!((tenth[0].total_minutes() - 30.0).abs() < 1e-9);
    assert!((tenth[1].total_minutes() - 6.0).abs() < 1e-9);
    for t in &tenth[2..] {
        let minutes: Vec<f64> = t.phases.iter().map(|p| p.minutes).collect();
        assert_eq!(minutes, vec![2.0, 0.5, 1.0]);
    }
}

fn schedule_strategy() -> impl Strategy<Value = SessionSchedule> {
    let scenario = prop::sample::select(Scenario::ALL.to_vec());
    let phase = (0.1f64..3.0, any::<bool>(), scenario).prop_map(|(m, attack, s)| {
        if attack {
            Phase::attack(m, s)
        } else {
            Phase::normal(m, Some(s))
        }
    });
    (prop::collection::vec(phase, 0..4), any::<u64>()).prop_map(|(phases, seed)| session(phases, seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn records_are_well_formed(sched in schedule_strategy()) {
        let log = generate_session(&Topology::default(), &sched).unwrap();
        let ids: BTreeSet<u64> = log.iter().map(|p| p.packet_id).collect();
        prop_assert_eq!(ids.len(), log.len());
        for p in &log {
            prop_assert_eq!(p.hops[0].0, p.src);
            prop_assert!(p.hops.windows(2).all(|w| w[1].1 > w[0].1));
            prop_assert!(p.emitted_at() < sched.total_ms());
            prop_assert_eq!(p.intended_dst, C);
            // no node is visited twice
            let nodes: BTreeSet<Node> = p.hops.iter().map(|h| h.0).collect();
            prop_assert_eq!(nodes.len(), p.hops.len());
            if p.label == Label::Normal {
                prop_assert_eq!(p.final_node(), C);
            }
        }
        let again = generate_session(&Topology::default(), &sched).unwrap();
        prop_assert_eq!(log, again);
    }

    #[test]
    fn normal_only_sessions_carry_only_normal_labels(minutes in 0.5f64..5.0, seed in any::<u64>()) {
        let sched = session(vec![Phase::normal(minutes, None), Phase::normal(minutes, Some(Scenario::II))], seed);
        let log = generate_session(&Topology::default(), &sched).unwrap();
        prop_assert!(log.iter().all(|p| p.label == Label::Normal && p.delivered()));
    }
}
