use nmsim_core::engine::{Engine, EngineError, NodeId, Picos};
use proptest::prelude::*;

#[test]
fn scheduling_in_the_past_fails() {
    let mut e: Engine<u8> = Engine::new(0);
    e.schedule(Picos(10), NodeId(0), 1).unwrap();
    e.pop_until(Picos(10)).unwrap();
    assert!(matches!(
        e.schedule(Picos(9), NodeId(0), 2),
        Err(EngineError::ScheduleInPast { .. })
    ));
    assert!(e.run_until(Picos(5), |_, _| {}).is_err());
}

#[test]
fn cancelled_events_never_fire() {
    let mut e: Engine<u32> = Engine::new(0);
    let h = e.schedule(Picos(5), NodeId(0), 1).unwrap();
    e.schedule(Picos(6), NodeId(0), 2).unwrap();
    assert!(e.cancel(h));
    let mut seen = Vec::new();
    e.run_until(Picos(100), |_, ev| seen.push(ev.payload)).unwrap();
    assert_eq!(seen, [2]);
}

#[test]
fn handlers_can_chain_events() {
    let mut e: Engine<u32> = Engine::new(0);
    e.schedule(Picos(0), NodeId(0), 0).unwrap();
    let n = e
        .run_until(Picos(1_000), |eng, ev| {
            if ev.payload < 9 {
                eng.schedule_after(Picos(100), NodeId(0), ev.payload + 1);
            }
        })
        .unwrap();
    assert_eq!(n, 10);
    assert_eq!(e.now(), Picos(900));
}

fn replay(events: &[(u64, u32)]) -> (Vec<(u64, u32, usize)>, u64) {
    let mut e: Engine<usize> = Engine::new(3);
    for (i, &(t, n)) in events.iter().enumerate() {
        e.schedule(Picos(t), NodeId(n), i).unwrap();
    }
    let mut out = Vec::new();
    while let Some(ev) = e.pop_until(Picos(u64::MAX)) {
        out.push((ev.time.0, ev.target.0, ev.payload));
    }
    (out, e.trace_hash())
}

proptest! {
    #[test]
    fn pops_in_time_then_insertion_order(events in prop::collection::vec((0u64..50, 0u32..4), 0..200)) {
        let (out, _) = replay(&events);
        let mut oracle: Vec<(u64, u32, usize)> =
            events.iter().enumerate().map(|(i, &(t, n))| (t, n, i)).collect();
        oracle.sort_by_key(|&(t, _, i)| (t, i));
        prop_assert_eq!(out, oracle);
    }

    #[test]
    fn identical_inputs_give_identical_traces(events in prop::collection::vec((0u64..1000, 0u32..8), 1..100)) {
        prop_assert_eq!(replay(&events), replay(&events));
    }

    #[test]
    fn clock_never_runs_backwards(events in prop::collection::vec(0u64..1_000_000, 1..100), horizon in 0u64..1_000_000) {
        let mut e: Engine<()> = Engine::new(0);
        for &t in &events {
            e.schedule(Picos(t), NodeId(0), ()).unwrap();
        }
        let mut last = Picos(0);
        let mut ok = true;
        e.run_until(Picos(horizon), |eng, ev| {
            ok &= ev.time >= last && ev.time <= Picos(horizon) && eng.now() == ev.time;
            last = ev.time;
        }).unwrap();
        prop_assert!(ok);
        prop_assert!(e.now() <= Picos(horizon) || events.iter().all(|&t| t <= horizon));
    }
}
