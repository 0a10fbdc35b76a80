//! Throughput measurement and randomized delay-insensitivity checking.

use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::sim::{FabricSim, TokenRecord};
use super::topology::{ProcessKind, Topology};
use super::{DelayModel, FabricError, Fault};
use crate::engine::Picos;

/// Fraction of deliveries discarded as warm-up before measuring.
pub const WARMUP_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputReport {
    /// Steady-state delivery rate (events/s).
    pub events_per_sec: f64,
    pub tokens: usize,
    pub t_first: Picos,
    pub t_last: Picos,
}

/// Floods every source with `tokens` tokens at t = 0 and measures the
/// aggregate sink delivery rate after warm-up as `(n − 1)/(t_last − t_first)`.
pub fn throughput(
    topology: &Topology,
    delay: DelayModel,
    tokens: usize,
    seed: u64,
) -> Result<ThroughputReport, FabricError> {
    if tokens < 2 {
        return Err(FabricError::Usage("throughput needs at least 2 tokens".into()));
    }
    let mut sim = FabricSim::new(topology, delay, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = width_mask(topology.width);
    for src in topology.sources() {
        for _ in 0..tokens {
            sim.inject_at(src, rng.random::<u32>() & mask, Picos::ZERO)?;
        }
    }
    sim.run_to_completion()?;
    let mut times: Vec<Picos> = sim.fabric().deliveries().iter().map(|d| d.time).collect();
    times.sort_unstable();
    let skip = (times.len() as f64 * WARMUP_FRACTION) as usize;
    let steady = &times[skip..];
    let (t_first, t_last) = (steady[0], steady[steady.len() - 1]);
    let span = (t_last - t_first).as_secs();
    Ok(ThroughputReport {
        events_per_sec: (steady.len() - 1) as f64 / span,
        tokens: steady.len(),
        t_first,
        t_last,
    })
}

pub(crate) fn width_mask(width: u32) -> u32 {
    if width >= 32 {
        u32::MAX
    } else {
        (1 << width) - 1
    }
}

/// Sink reached by `value` injected at `source`, following split select bits.
pub fn route(topology: &Topology, source: usize, value: u32) -> Result<usize, FabricError> {
    let net = topology.resolve()?;
    let mut p = source;
    let mut port = 0;
    for _ in 0..=net.processes.len() {
        let ch = net.outputs[p][port];
        p = net.channels[ch].receiver.0;
        let spec = &net.processes[p];
        port = match spec.kind {
            ProcessKind::Sink => return Ok(p),
            ProcessKind::Split => (value >> spec.select_bit.unwrap_or(0) & 1) as usize,
            _ => 0,
        };
    }
    Err(FabricError::Topology("routing loop".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub trial: usize,
    pub seed: u64,
    pub reason: String,
    /// Every applied transition up to the failure, one line each.
    pub trace: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QdiReport {
    pub trials: usize,
    pub passes: usize,
    pub failures: usize,
    pub first_failure: Option<Counterexample>,
}

impl QdiReport {
    pub fn all_passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone)]
pub struct QdiOptions {
    pub trials: usize,
    pub tokens_per_source: usize,
    pub seed: u64,
    pub fault: Option<(String, Fault)>,
}

impl Default for QdiOptions {
    fn default() -> Self {
        Self {
            trials: 1000,
            tokens_per_source: 16,
            seed: 1,
            fault: None,
        }
    }
}

fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed ^ (trial as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs `opts.trials` independent trials with delays drawn from `delay`,
/// checking each for protocol violations, deadlock, loss, duplication,
/// misrouting and per-source reordering.
pub fn qdi_conformance(
    topology: &Topology,
    delay: DelayModel,
    opts: &QdiOptions,
) -> Result<QdiReport, FabricError> {
    if opts.trials == 0 {
        return Err(FabricError::Usage("at least one trial is required".into()));
    }
    topology.resolve()?;
    delay.validate()?;
    let results: Vec<Option<String>> = (0..opts.trials)
        .into_par_iter()
        .map(|t| run_trial(topology, delay, opts, trial_seed(opts.seed, t), false).err())
        .collect();
    let failures = results.iter().filter(|r| r.is_some()).count();
    let first_failure = results.iter().position(|r| r.is_some()).map(|trial| {
        let seed = trial_seed(opts.seed, trial);
        let (reason, trace) = match run_trial(topology, delay, opts, seed, true) {
            Err(e) => e.split_once('\n').map_or((e.clone(), vec![]), |(r, t)| {
                (r.to_string(), t.lines().map(str::to_string).collect())
            }),
            Ok(()) => (results[trial].clone().unwrap_or_default(), vec![]),
        };
        Counterexample {
            trial,
            seed,
            reason,
            trace,
        }
    });
    Ok(QdiReport {
        trials: opts.trials,
        passes: opts.trials - failures,
        failures,
        first_failure,
    })
}

fn run_trial(
    topology: &Topology,
    delay: DelayModel,
    opts: &QdiOptions,
    seed: u64,
    traced: bool,
) -> Result<(), String> {
    let mut sim = FabricSim::new(topology, delay, seed).map_err(|e| e.to_string())?;
    if traced {
        sim.fabric_mut().enable_trace();
    }
    if let Some((proc, fault)) = &opts.fault {
        sim.fabric_mut()
            .inject_fault(proc, *fault)
            .map_err(|e| e.to_string())?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = width_mask(topology.width);
    let mut expected = HashMap::new();
    for src in topology.sources() {
        for _ in 0..opts.tokens_per_source {
            let v = rng.random::<u32>() & mask;
            let id = sim.inject_at(src, v, Picos::ZERO).map_err(|e| e.to_string())?;
            expected.insert(id, (src, v, route(topology, src, v).map_err(|e| e.to_string())?));
        }
    }
    let outcome = sim.run_to_completion();
    let fail = |sim: &FabricSim, reason: String| -> Result<(), String> {
        let mut msg = reason;
        if let Some(trace) = sim.fabric().trace() {
            let names = &sim.fabric().resolved();
            for (t, ev) in trace {
                msg.push('\n');
                msg.push_str(&format!("{} {}", t.0, describe(names, ev)));
            }
        }
        Err(msg)
    };
    if let Err(e) = outcome {
        return fail(&sim, e.to_string());
    }
    let mut seen = HashMap::new();
    let mut last_per_source_sink: HashMap<(usize, usize), u64> = HashMap::new();
    for d in sim.fabric().deliveries() {
        let Some(&(src, v, sink)) = expected.get(&d.token) else {
            return fail(&sim, format!("unknown token {} delivered", d.token));
        };
        if seen.insert(d.token, ()).is_some() {
            return fail(&sim, format!("token {} duplicated", d.token));
        }
        if d.value != v {
            return fail(&sim, format!("token {} corrupted: {:#x} != {v:#x}", d.token, d.value));
        }
        if d.sink != sink {
            return fail(&sim, format!("token {} misrouted", d.token));
        }
        if let Some(prev) = last_per_source_sink.insert((src, sink), d.token) {
            if prev > d.token {
                return fail(&sim, format!("token {} overtook token {prev}", d.token));
            }
        }
    }
    if seen.len() != expected.len() {
        return fail(
            &sim,
            format!("{} of {} tokens lost", expected.len() - seen.len(), expected.len()),
        );
    }
    Ok(())
}

fn describe(net: &super::topology::Resolved, ev: &super::FabricEvent) -> String {
    use super::FabricEvent::*;
    let ch = |c: &u32| &net.channel_names[*c as usize];
    let p = |i: &u32| &net.processes[*i as usize].id;
    match ev {
        RailSet { ch: c, bit, value } => format!("{}.d[{bit}].{} +", ch(c), u8::from(*value)),
        RailReset { ch: c, bit } => format!("{}.d[{bit}] -", ch(c)),
        Detect { ch: c, side, valid } => {
            format!("{}.{side:?}.v {}", ch(c), if *valid { '+' } else { '-' })
        }
        Enable { proc, value } => format!("{}.en {}", p(proc), if *value { '+' } else { '-' }),
        Arbitrate { proc } => format!("{}.arb", p(proc)),
        Wake { proc } => format!("{}.wake", p(proc)),
    }
}

/// Writes `time_ps,process_id,port,value` rows.
pub fn write_token_csv<W: Write>(
    records: &[TokenRecord],
    topology: &Topology,
    out: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time_ps", "process_id", "port", "value"])?;
    for r in records {
        w.write_record([
            r.time.0.to_string(),
            topology.processes[r.process].id.clone(),
            r.port.to_string(),
            r.value.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn route_follows_select_bits() {
        let t = Topology::split_tree(2, 10);
        let src = t.index_of("src").unwrap();
        for (v, sink) in [(0u32, "snk0"), (0b10 << 8, "snk2"), (0b11 << 8, "snk3")] {
            assert_eq!(route(&t, src, v).unwrap(), t.index_of(sink).unwrap());
        }
    }

    #[test]
    fn small_conformance_run_passes() {
        let opts = QdiOptions {
            trials: 20,
            tokens_per_source: 8,
            ..QdiOptions::default()
        };
        for t in [
            Topology::pipeline(3, 10),
            Topology::split_tree(2, 10),
            Topology::merge_tree(2, 10),
        ] {
            let r = qdi_conformance(&t, DelayModel::randomized(50.0, 0.9), &opts).unwrap();
            assert!(r.all_passed(), "{:?}", r.first_failure);
        }
    }

    #[test]
    fn fault_produces_counterexample() {
        let opts = QdiOptions {
            trials: 5,
            tokens_per_source: 4,
            fault: Some(("b1".into(), Fault::EarlyAck)),
            ..QdiOptions::default()
        };
        let r = qdi_conformance(&Topology::pipeline(3, 10), DelayModel::randomized(50.0, 0.5), &opts)
            .unwrap();
        assert_eq!(r.failures, 5);
        let cx = r.first_failure.unwrap();
        assert!(cx.reason.contains("ack raised before data valid"), "{}", cx.reason);
        assert!(!cx.trace.is_empty());
    }

    #[test]
    fn token_csv_has_header_and_rows() {
        let t = Topology::pipeline(1, 4);
        let mut s = FabricSim::new(&t, DelayModel::nominal(10.0), 0).unwrap();
        s.fabric_mut().enable_token_log();
        s.inject("src", 5, Picos::ZERO).unwrap();
        s.run_to_completion().unwrap();
        let mut buf = Vec::new();
        write_token_csv(s.fabric().token_log().unwrap(), &t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "time_ps,process_id,port,value");
        assert_eq!(lines.len(), 4);
        assert!(lines[2].contains(",b0,0,5"));
    }
}
