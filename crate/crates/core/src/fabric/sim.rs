//! Event-driven runtime for a resolved process network.
//!
//! [`Fabric`] owns all channel and process state and turns each applied
//! event into follow-up events with sampled delays; it does not own a queue,
//! so it can share an engine with other subsystems. [`FabricSim`] pairs it
//! with a private [`Engine`] for standalone runs.

use std::collections::VecDeque;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::channel::{Completion, DualRailChannel, TokenMeta, ViolationKind};
use super::topology::{ProcessKind, Resolved, Topology};
use super::{DelayModel, FabricError, Fault};
use crate::engine::{Engine, NodeId, Picos};

/// A sink acknowledges like a PCHB stage facing an ideal consumer: the
/// output latch and its completion detection precede the enable falling.
/// With this the environment never limits a pipeline's cycle time.
const SINK_EXTRA: u32 = 2;

/// Which end of a channel a completion detector sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Sender,
    Receiver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FabricEvent {
    RailSet { ch: u32, bit: u32, value: bool },
    RailReset { ch: u32, bit: u32 },
    /// A completion detector settles on all-valid or all-neutral.
    Detect { ch: u32, side: Side, valid: bool },
    /// Enable of a process (or sink) changes; the input ack is its inverse.
    Enable { proc: u32, value: bool },
    /// Merge arbiter decides among currently valid inputs.
    Arbitrate { proc: u32 },
    /// Paced source becomes eligible to emit.
    Wake { proc: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub time: Picos,
    pub channel: String,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} on channel `{}` at {}", self.kind, self.channel, self.time)
    }
}

/// A token accepted by a sink.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivery {
    pub sink: usize,
    pub time: Picos,
    pub value: u32,
    pub token: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenOrigin {
    pub source: usize,
    pub value: u32,
}

/// One output-port emission, or one sink acceptance (port 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenRecord {
    pub time: Picos,
    pub process: usize,
    pub port: usize,
    pub value: u32,
    pub token: u64,
}

#[derive(Debug, Clone, Copy)]
struct Queued {
    value: u32,
    token: u64,
    not_before: Picos,
}

#[derive(Debug, Clone, Default)]
struct ProcState {
    en: bool,
    en_pending: bool,
    in_valid: [bool; 2],
    in_since: [Picos; 2],
    out_valid: [bool; 2],
    sel: Option<(usize, usize)>,
    raised: bool,
    reset_issued: bool,
    arbitrating: bool,
    fault: Option<Fault>,
    queue: VecDeque<Queued>,
    wake_at: Option<Picos>,
}

pub struct Fabric {
    net: Resolved,
    delay: DelayModel,
    rng: ChaCha8Rng,
    channels: Vec<DualRailChannel>,
    procs: Vec<ProcState>,
    origins: Vec<TokenOrigin>,
    deliveries: Vec<Delivery>,
    delivered: u64,
    through: Vec<u64>,
    violation: Option<Violation>,
    trace: Option<Vec<(Picos, FabricEvent)>>,
    token_log: Option<Vec<TokenRecord>>,
    transitions: u64,
    carry: f64,
}

impl Fabric {
    pub fn new(topology: &Topology, delay: DelayModel, seed: u64) -> Result<Self, FabricError> {
        delay.validate()?;
        let net = topology.resolve()?;
        let procs = (0..net.processes.len())
            .map(|_| ProcState {
                en: true,
                ..ProcState::default()
            })
            .collect();
        Ok(Self {
            channels: (0..net.channels.len())
                .map(|_| DualRailChannel::new(net.width))
                .collect(),
            through: vec![0; net.processes.len()],
            procs,
            net,
            delay,
            rng: ChaCha8Rng::seed_from_u64(seed),
            origins: Vec::new(),
            deliveries: Vec::new(),
            delivered: 0,
            violation: None,
            trace: None,
            token_log: None,
            transitions: 0,
            carry: 0.0,
        })
    }

    pub fn resolved(&self) -> &Resolved {
        &self.net
    }

    pub fn delay(&self) -> DelayModel {
        self.delay
    }

    pub fn process_index(&self, id: &str) -> Result<usize, FabricError> {
        self.net
            .processes
            .iter()
            .position(|p| p.id == id)
            .ok_or_else(|| FabricError::UnknownProcess(id.to_string()))
    }

    pub fn inject_fault(&mut self, process: &str, fault: Fault) -> Result<(), FabricError> {
        let i = self.process_index(process)?;
        if self.net.processes[i].kind.is_environment() {
            return Err(FabricError::Usage(format!(
                "faults can only be injected into buffer, split or merge processes, not `{process}`"
            )));
        }
        self.procs[i].fault = Some(fault);
        Ok(())
    }

    /// Records every applied event for counterexample reporting.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn enable_token_log(&mut self) {
        self.token_log.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> Option<&[(Picos, FabricEvent)]> {
        self.trace.as_deref()
    }

    pub fn token_log(&self) -> Option<&[TokenRecord]> {
        self.token_log.as_deref()
    }

    pub fn violation(&self) -> Option<&Violation> {
        self.violation.as_ref()
    }

    pub fn deliveries(&self) -> &[Delivery] {
        &self.deliveries
    }

    pub fn take_deliveries(&mut self) -> Vec<Delivery> {
        std::mem::take(&mut self.deliveries)
    }

    pub fn origin(&self, token: u64) -> TokenOrigin {
        self.origins[token as usize]
    }

    pub fn injected(&self) -> u64 {
        self.origins.len() as u64
    }

    pub fn in_flight(&self) -> u64 {
        self.injected() - self.delivered
    }

    /// Tokens that have passed through each process.
    pub fn tokens_through(&self) -> &[u64] {
        &self.through
    }

    /// Applied events so far.
    pub fn transitions(&self) -> u64 {
        self.transitions
    }

    /// True when no source has a token waiting on a future pacing time.
    pub fn sources_idle(&self) -> bool {
        self.procs.iter().all(|p| p.wake_at.is_none())
    }

    /// Processes holding partial state while no transition is pending.
    pub fn stuck_processes(&self) -> Vec<String> {
        self.procs
            .iter()
            .zip(&self.net.processes)
            .filter(|(s, spec)| {
                s.raised
                    || !s.en
                    || s.in_valid.iter().any(|&v| v)
                    || (spec.kind == ProcessKind::Source && !s.queue.is_empty())
            })
            .map(|(_, spec)| spec.id.clone())
            .collect()
    }

    /// Queues a token at `source`; it is emitted no earlier than
    /// `not_before` and only after the previous token's handshake closes.
    pub fn inject(
        &mut self,
        now: Picos,
        source: usize,
        value: u32,
        not_before: Picos,
        out: &mut Vec<(Picos, FabricEvent)>,
    ) -> Result<u64, FabricError> {
        if self.net.processes.get(source).map(|p| p.kind) != Some(ProcessKind::Source) {
            return Err(FabricError::Usage(format!("process #{source} is not a source")));
        }
        let mask = if self.net.width == 32 {
            u32::MAX
        } else {
            (1 << self.net.width) - 1
        };
        if value & !mask != 0 {
            return Err(FabricError::Usage(format!(
                "value {value:#x} does not fit in {} bits",
                self.net.width
            )));
        }
        let token = self.origins.len() as u64;
        self.origins.push(TokenOrigin { source, value });
        self.procs[source].queue.push_back(Queued {
            value,
            token,
            not_before,
        });
        self.evaluate(now, source, out);
        Ok(token)
    }

    pub fn handle(&mut self, now: Picos, ev: FabricEvent, out: &mut Vec<(Picos, FabricEvent)>) {
        if self.violation.is_some() {
            return;
        }
        self.transitions += 1;
        if let Some(t) = &mut self.trace {
            t.push((now, ev));
        }
        match ev {
            FabricEvent::RailSet { ch, bit, value } => {
                let c = ch as usize;
                match self.channels[c].set_rail(bit, value) {
                    Err(kind) => self.fail(now, c, kind),
                    Ok(done) => {
                        let (rp, _) = self.net.channels[c].receiver;
                        if self.procs[rp].fault == Some(Fault::EarlyAck)
                            && self.procs[rp].en
                            && !self.procs[rp].en_pending
                            && self.channels[c].rails().iter().filter(|r| r.is_valid()).count() == 1
                        {
                            let port = self.net.inputs[rp].iter().position(|&x| x == c).unwrap();
                            self.procs[rp].sel.get_or_insert((port, 0));
                            self.apply_enable(now, rp, false, out);
                            return;
                        }
                        if done == Completion::AllValid {
                            self.detect(now, c, true, out);
                        }
                    }
                }
            }
            FabricEvent::RailReset { ch, bit } => {
                let c = ch as usize;
                match self.channels[c].reset_rail(bit) {
                    Err(kind) => self.fail(now, c, kind),
                    Ok(Completion::AllNeutral) => self.detect(now, c, false, out),
                    Ok(_) => {}
                }
            }
            FabricEvent::Detect { ch, side, valid } => {
                let ends = self.net.channels[ch as usize];
                let (p, port) = match side {
                    Side::Sender => ends.sender,
                    Side::Receiver => ends.receiver,
                };
                let s = &mut self.procs[p];
                match side {
                    Side::Sender => s.out_valid[port] = valid,
                    Side::Receiver => {
                        s.in_valid[port] = valid;
                        s.in_since[port] = now;
                    }
                }
                self.evaluate(now, p, out);
            }
            FabricEvent::Enable { proc, value } => self.apply_enable(now, proc as usize, value, out),
            FabricEvent::Arbitrate { proc } => {
                let p = proc as usize;
                let s = &mut self.procs[p];
                s.arbitrating = false;
                if s.sel.is_none() && s.en {
                    // Earliest arrival wins; simultaneous arrivals go to input 0.
                    let pick = (0..2)
                        .filter(|&i| s.in_valid[i])
                        .min_by_key(|&i| (s.in_since[i], i));
                    s.sel = pick.map(|i| (i, 0));
                }
                self.evaluate(now, p, out);
            }
            FabricEvent::Wake { proc } => {
                self.procs[proc as usize].wake_at = None;
                self.evaluate(now, proc as usize, out);
            }
        }
    }

    fn fail(&mut self, now: Picos, ch: usize, kind: ViolationKind) {
        self.violation = Some(Violation {
            time: now,
            channel: self.net.channel_names[ch].clone(),
            kind,
        });
    }

    fn detect(&mut self, now: Picos, ch: usize, valid: bool, out: &mut Vec<(Picos, FabricEvent)>) {
        let d = self.sample();
        out.push((
            now + d,
            FabricEvent::Detect {
                ch: ch as u32,
                side: Side::Receiver,
                valid,
            },
        ));
        let d = self.sample();
        out.push((
            now + d,
            FabricEvent::Detect {
                ch: ch as u32,
                side: Side::Sender,
                valid,
            },
        ));
    }

    fn apply_enable(&mut self, now: Picos, p: usize, value: bool, out: &mut Vec<(Picos, FabricEvent)>) {
        let s = &mut self.procs[p];
        s.en_pending = false;
        s.en = value;
        let port = if self.net.processes[p].kind == ProcessKind::Sink {
            0
        } else {
            s.sel.map_or(0, |(i, _)| i)
        };
        let ch = self.net.inputs[p][port];
        let res = if value {
            s.sel = None;
            s.raised = false;
            s.reset_issued = false;
            self.channels[ch].lower_ack()
        } else {
            self.channels[ch].raise_ack()
        };
        if let Err(kind) = res {
            self.fail(now, ch, kind);
            return;
        }
        let (sender, _) = self.net.channels[ch].sender;
        self.evaluate(now, sender, out);
        self.evaluate(now, p, out);
    }

    /// Sum of `n` independently sampled transition delays.
    fn chain(&mut self, n: u32) -> Picos {
        (0..n).fold(Picos::ZERO, |acc, _| acc + self.sample())
    }

    fn sample(&mut self) -> Picos {
        // Error diffusion keeps the mean delay exact despite integer picoseconds.
        let want = self.delay.sample_ps(&mut self.rng) + self.carry;
        let d = want.round().max(1.0);
        self.carry = want - d;
        Picos(d as u64)
    }

    fn raise_rails(&mut self, now: Picos, ch: usize, value: u32, out: &mut Vec<(Picos, FabricEvent)>) {
        for bit in 0..self.net.width {
            let d = self.sample();
            out.push((
                now + d,
                FabricEvent::RailSet {
                    ch: ch as u32,
                    bit,
                    value: value >> bit & 1 == 1,
                },
            ));
        }
    }

    fn reset_rails(&mut self, now: Picos, ch: usize, out: &mut Vec<(Picos, FabricEvent)>) {
        for bit in 0..self.net.width {
            let d = self.sample();
            out.push((now + d, FabricEvent::RailReset { ch: ch as u32, bit }));
        }
    }

    fn schedule_enable(&mut self, now: Picos, p: usize, value: bool, out: &mut Vec<(Picos, FabricEvent)>) {
        self.procs[p].en_pending = true;
        let extra = if self.net.processes[p].kind == ProcessKind::Sink && !value {
            SINK_EXTRA
        } else {
            0
        };
        let d = self.chain(1 + extra);
        out.push((
            now + d,
            FabricEvent::Enable {
                proc: p as u32,
                value,
            },
        ));
    }

    fn log(&mut self, rec: TokenRecord) {
        if let Some(l) = &mut self.token_log {
            l.push(rec);
        }
    }

    fn evaluate(&mut self, now: Picos, p: usize, out: &mut Vec<(Picos, FabricEvent)>) {
        if self.violation.is_some() {
            return;
        }
        match self.net.processes[p].kind {
            ProcessKind::Source => self.eval_source(now, p, out),
            ProcessKind::Sink => self.eval_sink(now, p, out),
            _ => self.eval_pchb(now, p, out),
        }
    }

    fn eval_source(&mut self, now: Picos, p: usize, out: &mut Vec<(Picos, FabricEvent)>) {
        let ch = self.net.outputs[p][0];
        let ack = self.channels[ch].ack();
        let s = &mut self.procs[p];
        if s.reset_issued && !ack {
            s.raised = false;
            s.reset_issued = false;
        }
        if s.raised && !s.reset_issued && ack && s.out_valid[0] {
            s.reset_issued = true;
            self.reset_rails(now, ch, out);
            return;
        }
        if s.raised || ack || s.out_valid[0] {
            return;
        }
        let Some(front) = s.queue.front().copied() else {
            return;
        };
        if front.not_before > now {
            if s.wake_at.is_none() {
                s.wake_at = Some(front.not_before);
                out.push((front.not_before, FabricEvent::Wake { proc: p as u32 }));
            }
            return;
        }
        s.queue.pop_front();
        s.raised = true;
        self.channels[ch].set_meta(TokenMeta { id: front.token });
        self.log(TokenRecord {
            time: now,
            process: p,
            port: 0,
            value: front.value,
            token: front.token,
        });
        self.raise_rails(now, ch, front.value, out);
    }

    fn eval_sink(&mut self, now: Picos, p: usize, out: &mut Vec<(Picos, FabricEvent)>) {
        let s = &self.procs[p];
        if s.en_pending {
            return;
        }
        if s.en && s.in_valid[0] {
            let ch = self.net.inputs[p][0];
            let value = self.channels[ch].value().unwrap_or(0);
            let token = self.channels[ch].meta().map_or(u64::MAX, |m| m.id);
            self.deliveries.push(Delivery {
                sink: p,
                time: now,
                value,
                token,
            });
            self.delivered += 1;
            self.log(TokenRecord {
                time: now,
                process: p,
                port: 0,
                value,
                token,
            });
            self.schedule_enable(now, p, false, out);
        } else if !s.en && !s.in_valid[0] {
            self.schedule_enable(now, p, true, out);
        }
    }

    fn eval_pchb(&mut self, now: Picos, p: usize, out: &mut Vec<(Picos, FabricEvent)>) {
        let kind = self.net.processes[p].kind;
        let s = &mut self.procs[p];
        if s.sel.is_none() && s.en && !s.en_pending {
            match kind {
                ProcessKind::Buffer if s.in_valid[0] => s.sel = Some((0, 0)),
                ProcessKind::Split if s.in_valid[0] => {
                    let bit = self.net.processes[p].select_bit.unwrap_or(0);
                    let v = self.channels[self.net.inputs[p][0]].value().unwrap_or(0);
                    s.sel = Some((0, (v >> bit & 1) as usize));
                }
                ProcessKind::Merge if (s.in_valid[0] || s.in_valid[1]) && !s.arbitrating => {
                    s.arbitrating = true;
                    out.push((now, FabricEvent::Arbitrate { proc: p as u32 }));
                }
                _ => {}
            }
        }
        let Some((i, o)) = s.sel else {
            return;
        };
        let in_ch = self.net.inputs[p][i];
        let out_ch = self.net.outputs[p][o];
        if s.en && !s.raised && s.in_valid[i] && !s.out_valid[o] && !self.channels[out_ch].ack() {
            s.raised = true;
            let value = self.channels[in_ch].value().unwrap_or(0);
            if let Some(m) = self.channels[in_ch].meta() {
                self.channels[out_ch].set_meta(m);
            }
            self.through[p] += 1;
            let token = self.channels[out_ch].meta().map_or(u64::MAX, |m| m.id);
            self.log(TokenRecord {
                time: now,
                process: p,
                port: o,
                value,
                token,
            });
            self.raise_rails(now, out_ch, value, out);
        }
        let s = &mut self.procs[p];
        if s.en_pending {
            return;
        }
        if s.en && s.raised && s.in_valid[i] && s.out_valid[o] {
            self.schedule_enable(now, p, false, out);
            return;
        }
        let ack = self.channels[out_ch].ack();
        let s = &mut self.procs[p];
        if !s.en && s.raised && !s.reset_issued && ack && s.out_valid[o] {
            s.reset_issued = true;
            self.reset_rails(now, out_ch, out);
            return;
        }
        if !s.en && s.reset_issued && !s.in_valid[i] && !s.out_valid[o] {
            self.schedule_enable(now, p, true, out);
        }
    }
}

/// A [`Fabric`] driven by its own event engine.
pub struct FabricSim {
    engine: Engine<FabricEvent>,
    fabric: Fabric,
    pending: Vec<(Picos, FabricEvent)>,
    n_procs: u32,
}

impl FabricSim {
    pub fn new(topology: &Topology, delay: DelayModel, seed: u64) -> Result<Self, FabricError> {
        let fabric = Fabric::new(topology, delay, seed)?;
        Ok(Self {
            engine: Engine::new(seed),
            n_procs: fabric.net.processes.len() as u32,
            fabric,
            pending: Vec::new(),
        })
    }

    pub fn fabric(&self) -> &Fabric {
        &self.fabric
    }

    pub fn fabric_mut(&mut self) -> &mut Fabric {
        &mut self.fabric
    }

    pub fn engine(&self) -> &Engine<FabricEvent> {
        &self.engine
    }

    /// Queues `value` at the named source, eligible from `not_before`.
    pub fn inject(&mut self, source: &str, value: u32, not_before: Picos) -> Result<u64, FabricError> {
        let i = self.fabric.process_index(source)?;
        self.inject_at(i, value, not_before)
    }

    pub fn inject_at(&mut self, source: usize, value: u32, not_before: Picos) -> Result<u64, FabricError> {
        let now = self.engine.now();
        let id = self
            .fabric
            .inject(now, source, value, not_before, &mut self.pending)?;
        self.flush();
        Ok(id)
    }

    fn flush(&mut self) {
        for (t, ev) in self.pending.drain(..) {
            let target = match ev {
                FabricEvent::Enable { proc, .. }
                | FabricEvent::Arbitrate { proc }
                | FabricEvent::Wake { proc } => proc,
                FabricEvent::RailSet { ch, .. }
                | FabricEvent::RailReset { ch, .. }
                | FabricEvent::Detect { ch, .. } => self.n_procs + ch,
            };
            self.engine
                .schedule(t, NodeId(target), ev)
                .expect("fabric events are never scheduled in the past");
        }
    }

    /// Runs until no events remain. Stops early on a protocol violation,
    /// or reports a deadlock if tokens are still in flight, or if the gap to
    /// the next non-pacing transition exceeds `stall_limit`.
    pub fn run(&mut self, stall_limit: Picos) -> Result<Picos, FabricError> {
        let mut last = self.engine.now();
        loop {
            if let Some(v) = self.fabric.violation() {
                return Err(FabricError::Protocol(v.clone()));
            }
            let Some(next) = self.engine.next_time() else {
                break;
            };
            let ev = self.engine.pop_until(next).expect("peeked event");
            if !matches!(ev.payload, FabricEvent::Wake { .. }) {
                if ev.time.saturating_sub(last) > stall_limit && self.fabric.sources_idle() {
                    return Err(FabricError::Deadlock {
                        time: last,
                        stuck: self.fabric.stuck_processes(),
                    });
                }
            }
            last = ev.time;
            self.fabric.handle(ev.time, ev.payload, &mut self.pending);
            self.flush();
        }
        if let Some(v) = self.fabric.violation() {
            return Err(FabricError::Protocol(v.clone()));
        }
        if self.fabric.in_flight() > 0 {
            return Err(FabricError::Deadlock {
                time: self.engine.now(),
                stuck: self.fabric.stuck_processes(),
            });
        }
        Ok(self.engine.now())
    }

    /// [`run`](Self::run) with the stall limit at 100 nominal handshake cycles.
    pub fn run_to_completion(&mut self) -> Result<Picos, FabricError> {
        let cycle = self.fabric.delay.nominal_cycle_ps();
        self.run(Picos((100.0 * cycle).ceil() as u64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim(t: &Topology) -> FabricSim {
        FabricSim::new(t, DelayModel::nominal(10.0), 1).unwrap()
    }

    #[test]
    fn single_token_passes_one_buffer() {
        let t = Topology::pipeline(1, 10);
        let mut s = sim(&t);
        s.inject("src", 0b1100011010, Picos::ZERO).unwrap();
        s.run_to_completion().unwrap();
        let d = s.fabric().deliveries();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].value, 0b1100011010);
        assert_eq!(s.fabric().channels.iter().map(|c| c.cycles()).collect::<Vec<_>>(), [1, 1]);
        assert_eq!(s.fabric().tokens_through(), &[0, 1, 0]);
    }

    #[test]
    fn split_steers_by_bit() {
        let t = Topology::split_tree(1, 4);
        let mut s = sim(&t);
        for v in [0b0001, 0b1000, 0b0111, 0b1111] {
            s.inject("src", v, Picos::ZERO).unwrap();
        }
        s.run_to_completion().unwrap();
        let sinks: Vec<_> = s
            .fabric()
            .deliveries()
            .iter()
            .map(|d| (s.fabric().resolved().processes[d.sink].id.clone(), d.value))
            .collect();
        assert_eq!(
            sinks,
            [("snk0".into(), 1), ("snk1".into(), 8), ("snk0".into(), 7), ("snk1".into(), 15)]
        );
    }

    #[test]
    fn merge_single_active_input_keeps_order() {
        let t = Topology::merge_tree(1, 4);
        let mut s = sim(&t);
        for v in [1, 2, 3] {
            s.inject("src0", v, Picos::ZERO).unwrap();
        }
        s.run_to_completion().unwrap();
        let vals: Vec<_> = s.fabric().deliveries().iter().map(|d| d.value).collect();
        assert_eq!(vals, [1, 2, 3]);
    }

    #[test]
    fn merge_tie_goes_to_input_zero() {
        let t = Topology::merge_tree(1, 4);
        let mut s = sim(&t);
        s.inject("src1", 9, Picos::ZERO).unwrap();
        s.inject("src0", 5, Picos::ZERO).unwrap();
        s.run_to_completion().unwrap();
        let vals: Vec<_> = s.fabric().deliveries().iter().map(|d| d.value).collect();
        assert_eq!(vals, [5, 9]);
    }

    #[test]
    fn early_ack_fault_is_a_violation() {
        let t = Topology::pipeline(2, 10);
        let mut s = sim(&t);
        s.fabric_mut().inject_fault("b1", Fault::EarlyAck).unwrap();
        s.inject("src", 3, Picos::ZERO).unwrap();
        let err = s.run_to_completion().unwrap_err();
        assert!(
            matches!(&err, FabricError::Protocol(v) if v.kind == ViolationKind::AckBeforeValid),
            "{err}"
        );
    }

    #[test]
    fn oversized_value_rejected() {
        let mut s = sim(&Topology::pipeline(1, 4));
        assert!(s.inject("src", 16, Picos::ZERO).is_err());
        assert!(s.inject("b0", 1, Picos::ZERO).is_err());
    }

    #[test]
    fn paced_source_waits() {
        let mut s = sim(&Topology::pipeline(1, 4));
        s.inject("src", 1, Picos(1_000_000)).unwrap();
        s.run_to_completion().unwrap();
        assert!(s.fabric().deliveries()[0].time > Picos(1_000_000));
    }
}
