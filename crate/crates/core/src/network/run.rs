//! Full-system simulation: neuron integration ticks, spike emission into
//! the router, and CAM-matched delivery.

use std::collections::HashMap;
use std::io::Write;

use crate::cam::CamConfig;
use crate::engine::{Engine, NodeId, Picos};
use crate::fabric::sim::{Fabric, FabricEvent};
use crate::fabric::{FabricConfig, FabricError};
use crate::neuron::{Kernel, Neuron, NeuronParams, Stimulus, SynapseParams};
use crate::power::{EnergyLedger, PowerConfig};

use super::{NetworkConfig, NetworkError, Wiring, KERNEL_BITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NetEvent {
    Fabric(FabricEvent),
    /// Integrates every neuron over `[now, now + dt]`.
    Tick,
    Emit { neuron: u32, spike: u32 },
    Input { neuron: u32, kernel: Kernel },
}

/// One packet: a spike headed for one destination core.
#[derive(Debug, Clone, PartialEq)]
pub struct AddressEvent {
    /// Index of the originating spike in the raster.
    pub spike: usize,
    pub tag: u32,
    pub dest_core: usize,
    pub emitted_at: Picos,
    pub delivered_at: Option<Picos>,
    /// Router processes traversed, when route tracing is on.
    pub route: Vec<String>,
}

/// A spike that left no packet, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct Drop {
    pub spike: usize,
    pub neuron: u32,
    pub time: Picos,
    pub reason: &'static str,
}

/// One synaptic input caused by a CAM match.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynapticEvent {
    pub time: Picos,
    pub source: u32,
    pub target: u32,
    pub word: usize,
    pub kernel: Kernel,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOptions {
    pub route_trace: bool,
    /// `(time_s, neuron)` address events emitted on behalf of neurons,
    /// independent of their dynamics. They appear in the raster but are
    /// not charged as neuron spikes.
    pub injected: Vec<(f64, u32)>,
}

#[derive(Debug, Clone)]
pub struct NetworkRun {
    /// `(time_s, neuron)`; injected events first, then neuron spikes in
    /// emission order.
    pub raster: Vec<(f64, u32)>,
    /// Spikes produced by neuron dynamics.
    pub neuron_spikes: u64,
    pub events: Vec<AddressEvent>,
    pub drops: Vec<Drop>,
    pub synaptic: Vec<SynapticEvent>,
    pub cam_searches: u64,
    pub ledger: EnergyLedger,
    pub trace_hash: u64,
}

impl NetworkRun {
    /// Rows sorted by time.
    pub fn write_raster_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut rows = self.raster.clone();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time_s", "neuron_id"])?;
        for (t, n) in &rows {
            w.write_record([t.to_string(), n.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One line per packet: `tag dest emitted_ps delivered_ps proc,proc,…`.
    pub fn write_route_trace<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for e in &self.events {
            let delivered = e.delivered_at.map_or("-".to_string(), |t| t.0.to_string());
            writeln!(
                out,
                "{} {} {} {} {}",
                e.tag,
                e.dest_core,
                e.emitted_at.0,
                delivered,
                e.route.join(",")
            )?;
        }
        for d in &self.drops {
            writeln!(out, "{} - {} dropped {}", d.neuron, d.time.0, d.reason)?;
        }
        Ok(())
    }

    /// Every spike produced packets or an explicit drop, and every packet
    /// arrived strictly after it left.
    pub fn audit(&self) -> Result<(), String> {
        let mut accounted = vec![false; self.raster.len()];
        for e in &self.events {
            match e.delivered_at {
                None => return Err(format!("packet from {} to core {} lost", e.tag, e.dest_core)),
                Some(t) if t <= e.emitted_at => {
                    return Err(format!("packet from {} delivered before emission", e.tag))
                }
                _ => {}
            }
            accounted[e.spike] = true;
        }
        for d in &self.drops {
            accounted[d.spike] = true;
        }
        if let Some(i) = accounted.iter().position(|&a| !a) {
            let (t, n) = self.raster[i];
            return Err(format!("spike of {n} at {t} s neither routed nor dropped"));
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
pub fn run_network(
    cfg: &NetworkConfig,
    neuron: &NeuronParams,
    synapses: &SynapseParams,
    cam: &CamConfig,
    fabric_cfg: &FabricConfig,
    power: &PowerConfig,
    seed: u64,
    opts: RunOptions,
) -> Result<NetworkRun, NetworkError> {
    let mut wiring = Wiring::build(cfg, neuron, synapses, cam)?;
    let topo = cfg.router_topology();
    let mut fabric = Fabric::new(&topo, fabric_cfg.delay, seed)?;
    if opts.route_trace {
        fabric.enable_token_log();
    }
    let sources: Vec<usize> = (0..cfg.n_cores)
        .map(|c| fabric.process_index(&format!("src{c}")))
        .collect::<Result<_, _>>()?;
    let sink_core: HashMap<usize, usize> = (0..cfg.n_cores)
        .map(|c| fabric.process_index(&format!("snk{c}")).map(|p| (p, c)))
        .collect::<Result<_, _>>()?;
    let mut neurons = wiring
        .params
        .iter()
        .map(|(p, s)| Neuron::new(*p, *s))
        .collect::<Result<Vec<_>, _>>()?;

    let n_fabric_nodes = topo.processes.len() as u32;
    let node = |ev: &NetEvent| match ev {
        NetEvent::Tick => NodeId(u32::MAX),
        NetEvent::Emit { neuron, .. } | NetEvent::Input { neuron, .. } => NodeId(n_fabric_nodes + neuron),
        NetEvent::Fabric(_) => NodeId(0),
    };
    let mut engine: Engine<NetEvent> = Engine::new(seed);
    let push = |engine: &mut Engine<NetEvent>, t: Picos, ev: NetEvent| {
        engine
            .schedule(t, node(&ev), ev)
            .expect("network events are never scheduled in the past");
    };

    let t_end = Picos::from_secs(cfg.duration_s);
    let tick = Picos::from_secs(cfg.dt_s);
    push(&mut engine, Picos::ZERO, NetEvent::Tick);
    for (si, s) in cfg.stimuli.iter().enumerate() {
        for &n in &s.neurons {
            let stim = match &s.stimulus {
                Stimulus::Poisson {
                    kernel,
                    rate_hz,
                    seed: sseed,
                } => Stimulus::Poisson {
                    kernel: *kernel,
                    rate_hz: *rate_hz,
                    seed: sseed ^ seed.rotate_left(17) ^ ((si as u64) << 40 | n as u64),
                },
                other => other.clone(),
            };
            if let Some((kernel, times)) = stim.spike_times(cfg.duration_s) {
                for t in times {
                    push(&mut engine, Picos::from_secs(t), NetEvent::Input { neuron: n, kernel });
                }
            }
        }
    }

    let mut raster = Vec::new();
    let n_neurons = cfg.n_neurons() as u32;
    for &(t, n) in &opts.injected {
        if n >= n_neurons || !(t >= 0.0 && t.is_finite()) {
            return Err(NetworkError::Config(format!("injected event ({t} s, neuron {n}) is invalid")));
        }
        let spike = raster.len() as u32;
        raster.push((t, n));
        push(&mut engine, Picos::from_secs(t), NetEvent::Emit { neuron: n, spike });
    }

    let tag_mask = cfg.tag_mask();
    let mut out = Vec::new();
    let mut neuron_spikes = 0u64;
    let mut events: Vec<AddressEvent> = Vec::new();
    let mut packet_of_token: HashMap<u64, usize> = HashMap::new();
    let mut drops = Vec::new();
    let mut synaptic = Vec::new();
    let mut routed = 0u64;

    while let Some(ev) = engine.pop_until(Picos(u64::MAX)) {
        let now = ev.time;
        match ev.payload {
            NetEvent::Tick => {
                for (i, n) in neurons.iter_mut().enumerate() {
                    if let Some(ts) = n.step(cfg.dt_s)? {
                        let spike = raster.len() as u32;
                        raster.push((ts, i as u32));
                        neuron_spikes += 1;
                        let at = Picos::from_secs(ts).max(now);
                        push(&mut engine, at, NetEvent::Emit { neuron: i as u32, spike });
                    }
                }
                let next = now + tick;
                if next < t_end {
                    push(&mut engine, next, NetEvent::Tick);
                }
            }
            NetEvent::Input { neuron, kernel } => {
                neurons[neuron as usize].synaptic_input(kernel, now.as_secs());
            }
            NetEvent::Emit { neuron, spike } => {
                let spike = spike as usize;
                let src = sources[cfg.core_of(neuron)];
                let cores = &wiring.routes[neuron as usize];
                if cores.is_empty() {
                    drops.push(Drop {
                        spike,
                        neuron,
                        time: now,
                        reason: if wiring.overridden[neuron as usize] {
                            "route-filter"
                        } else {
                            "no-route"
                        },
                    });
                }
                for &d in cores {
                    let value = (d as u32) << cfg.tag_bits | neuron;
                    let token = fabric.inject(now, src, value, now, &mut out)?;
                    packet_of_token.insert(token, events.len());
                    events.push(AddressEvent {
                        spike,
                        tag: neuron,
                        dest_core: d,
                        emitted_at: now,
                        delivered_at: None,
                        route: Vec::new(),
                    });
                }
            }
            NetEvent::Fabric(fe) => {
                fabric.handle(now, fe, &mut out);
                if let Some(v) = fabric.violation() {
                    return Err(FabricError::Protocol(v.clone()).into());
                }
                for d in fabric.take_deliveries() {
                    let core = sink_core[&d.sink];
                    let tag = d.value & tag_mask;
                    if let Some(&i) = packet_of_token.get(&d.token) {
                        events[i].delivered_at = Some(now);
                    }
                    routed += 1;
                    let first = core * cfg.neurons_per_core;
                    for target in first..first + cfg.neurons_per_core {
                        let hits = wiring.cams[target].search_masked(tag, tag_mask)?;
                        for word in hits {
                            let stored = wiring.cams[target].words()[word].unwrap_or(0);
                            let k = (stored >> cfg.tag_bits) & ((1 << KERNEL_BITS) - 1);
                            let kernel = Kernel::from_index(k as usize).expect("two kernel bits");
                            neurons[target].synaptic_input(kernel, now.as_secs());
                            synaptic.push(SynapticEvent {
                                time: now,
                                source: tag,
                                target: target as u32,
                                word,
                                kernel,
                            });
                        }
                    }
                }
            }
        }
        for (t, fe) in out.drain(..) {
            push(&mut engine, t, NetEvent::Fabric(fe));
        }
    }

    if fabric.in_flight() > 0 {
        return Err(FabricError::Deadlock {
            time: engine.now(),
            stuck: fabric.stuck_processes(),
        }
        .into());
    }
    if let Some(log) = fabric.token_log() {
        let names = &topo.processes;
        for r in log {
            if let Some(&i) = packet_of_token.get(&r.token) {
                events[i].route.push(names[r.process].id.clone());
            }
        }
    }

    let mut ledger = EnergyLedger::new(cfg.duration_s);
    ledger.add_fabric(&fabric, &fabric_cfg.energy);
    let (searches, cam_j) = wiring
        .cams
        .iter()
        .fold((0, 0.0), |(s, e), c| (s + c.counters().searches, e + c.counters().energy_j));
    if searches > 0 {
        ledger.charge_total("cam", searches, cam_j);
    }
    if neuron_spikes > 0 {
        ledger.charge("neuron", neuron_spikes, power.e_spike_j);
    }
    ledger.spikes = neuron_spikes;
    ledger.routed_events = routed;

    Ok(NetworkRun {
        raster,
        neuron_spikes,
        events,
        drops,
        synaptic,
        cam_searches: searches,
        ledger,
        trace_hash: engine.trace_hash(),
    })
}
