use std::collections::BTreeMap;

use nmsim_core::engine::Picos;
use nmsim_core::fabric::analysis::write_token_csv;
use nmsim_core::fabric::{
    route, throughput, DelayMode, DelayModel, FabricError, FabricSim, ProcessKind, ProcessSpec,
    Topology, CALIBRATED_TRANSITION_PS,
};
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = Topology> {
    prop_oneof![
        (1usize..6).prop_map(|n| Topology::pipeline(n, 10)),
        (1u32..4).prop_map(|l| Topology::split_tree(l, 10)),
        (1u32..4).prop_map(|l| Topology::merge_tree(l, 10)),
    ]
}

/// Per-sink delivered values grouped by originating source, in order.
type Streams = BTreeMap<(usize, usize), Vec<u32>>;

fn stream(topo: &Topology, delay: DelayModel, seed: u64, values: &[u32]) -> Result<Streams, FabricError> {
    let mut sim = FabricSim::new(topo, delay, seed)?;
    let sources = topo.sources();
    for (i, &v) in values.iter().enumerate() {
        sim.inject_at(sources[i % sources.len()], v, Picos::ZERO)?;
    }
    sim.run_to_completion()?;
    let mut out = Streams::new();
    for d in sim.fabric().deliveries() {
        let src = sim.fabric().origin(d.token).source;
        out.entry((d.sink, src)).or_default().push(d.value);
    }
    Ok(out)
}

fn oracle(topo: &Topology, values: &[u32]) -> Streams {
    let sources = topo.sources();
    let mut out = Streams::new();
    for (i, &v) in values.iter().enumerate() {
        let src = sources[i % sources.len()];
        out.entry((route(topo, src, v).unwrap(), src)).or_default().push(v);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn output_is_independent_of_delays(
        topo in shape(),
        values in prop::collection::vec(0u32..1024, 1..40),
        seed in any::<u64>(),
        jitter in 0.0f64..0.95,
        nominal in 1.0f64..200.0,
        worst in any::<bool>(),
    ) {
        let mode = if worst { DelayMode::WorstCaseSampled } else { DelayMode::Randomized };
        let delay = DelayModel { nominal_ps: nominal, jitter, mode };
        let got = stream(&topo, delay, seed, &values).unwrap();
        prop_assert_eq!(got, oracle(&topo, &values));
    }

    #[test]
    fn paced_tokens_arrive_in_order(gaps in prop::collection::vec(0u64..5_000, 1..30), stages in 1usize..5) {
        let topo = Topology::pipeline(stages, 10);
        let mut sim = FabricSim::new(&topo, DelayModel::randomized(50.0, 0.5), 3).unwrap();
        let mut t = 0;
        for (i, g) in gaps.iter().enumerate() {
            t += g;
            sim.inject("src", i as u32, Picos(t)).unwrap();
        }
        sim.run_to_completion().unwrap();
        let d = sim.fabric().deliveries();
        prop_assert_eq!(d.len(), gaps.len());
        let mut t = 0;
        for (i, (x, g)) in d.iter().zip(&gaps).enumerate() {
            t += g;
            prop_assert_eq!(x.value, i as u32);
            prop_assert!(x.time > Picos(t));
        }
    }
}

#[test]
fn pipeline_depth_does_not_change_throughput() {
    let d = DelayModel::nominal(CALIBRATED_TRANSITION_PS);
    let one = throughput(&Topology::pipeline(1, 10), d, 1000, 1).unwrap().events_per_sec;
    for n in [2, 4, 8] {
        let r = throughput(&Topology::pipeline(n, 10), d, 1000, 1).unwrap().events_per_sec;
        assert!((r / one - 1.0).abs() < 0.01, "{n} stages: {r} vs {one}");
    }
}

#[test]
fn doubling_delays_halves_throughput() {
    let t = Topology::pipeline(1, 10);
    let a = throughput(&t, DelayModel::nominal(CALIBRATED_TRANSITION_PS), 1000, 1).unwrap();
    let b = throughput(&t, DelayModel::nominal(2.0 * CALIBRATED_TRANSITION_PS), 1000, 1).unwrap();
    assert!((a.events_per_sec / b.events_per_sec / 2.0 - 1.0).abs() < 0.01);
}

#[test]
fn merge_tree_throughput_is_bounded_by_its_sources() {
    // Alternating inputs overlap one input's reset with the other's data
    // phase, so a merge can beat a single buffer but never its sources' sum.
    let d = DelayModel::nominal(CALIBRATED_TRANSITION_PS);
    let single = throughput(&Topology::pipeline(1, 10), d, 500, 1).unwrap().events_per_sec;
    let merged = throughput(&Topology::merge_tree(2, 10), d, 500, 1).unwrap().events_per_sec;
    assert!(merged >= 0.99 * single, "{merged} vs {single}");
    assert!(merged <= 4.0 * single, "{merged} vs {single}");
}

#[test]
fn invalid_delays_rejected() {
    assert!(DelayModel::nominal(0.5).validate().is_err());
    assert!(DelayModel::randomized(10.0, 1.0).validate().is_err());
    assert!(FabricSim::new(&Topology::pipeline(1, 10), DelayModel::nominal(f64::NAN), 0).is_err());
}

#[test]
fn malformed_topologies_rejected() {
    let p = |id: &str, kind, ins: &[&str], outs: &[&str]| ProcessSpec {
        id: id.into(),
        kind,
        select_bit: None,
        inputs: ins.iter().map(|s| s.to_string()).collect(),
        outputs: outs.iter().map(|s| s.to_string()).collect(),
    };
    let dangling = Topology {
        width: 4,
        processes: vec![p("src", ProcessKind::Source, &[], &["a"])],
    };
    assert!(matches!(dangling.resolve(), Err(FabricError::Topology(_))));
    let duplicate = Topology {
        width: 4,
        processes: vec![
            p("x", ProcessKind::Source, &[], &["a"]),
            p("x", ProcessKind::Sink, &["a"], &[]),
        ],
    };
    assert!(duplicate.resolve().is_err());
}

#[test]
fn topology_round_trips_through_toml() {
    let t = Topology::split_tree(2, 10);
    let text = toml::to_string(&t).unwrap();
    let back: Topology = toml::from_str(&text).unwrap();
    assert_eq!(back, t);
}

#[test]
fn token_log_csv() {
    let topo = Topology::pipeline(2, 10);
    let mut sim = FabricSim::new(&topo, DelayModel::nominal(10.0), 1).unwrap();
    sim.fabric_mut().enable_token_log();
    sim.inject("src", 0x155, Picos::ZERO).unwrap();
    sim.run_to_completion().unwrap();
    let mut buf = Vec::new();
    write_token_csv(sim.fabric().token_log().unwrap(), &topo, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "time_ps,process_id,port,value");
    assert_eq!(lines.len(), 5);
    assert!(lines[1..].iter().all(|l| l.ends_with(",341")));
    assert!(lines[4].contains(",snk,"));
}
