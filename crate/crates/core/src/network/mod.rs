//! Multi-core assembly: neurons, per-neuron CAM tag memories and the AER
//! router, all driven from one event engine.
//!
//! Every neuron's tag is its global index. A spike becomes one packet per
//! destination core carrying `(core << tag_bits) | tag`; the source core's
//! split tree steers it by the core bits and the destination's merge tree
//! collects it. On arrival the tag is searched in every CAM of the core and
//! each matching word injects a spike into its owner's synaptic kernel,
//! selected by the word's bits above the tag field.

mod program;
mod run;

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cam::{CamArray, CamConfig, CamError};
use crate::fabric::topology::{add_merge_tree, add_split_tree, proc};
use crate::fabric::{FabricError, ProcessKind, Topology};
use crate::neuron::{Kernel, NeuronError, NeuronParams, Stimulus, SynapseParams};

pub use program::{program_direct, program_via_aer, CamWrite};
pub use run::{run_network, AddressEvent, Drop, NetworkRun, RunOptions, SynapticEvent};

/// Bits above the tag field of a CAM word that select the kernel.
pub const KERNEL_BITS: u32 = 2;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("invalid network: {0}")]
    Config(String),
    #[error(transparent)]
    Cam(#[from] CamError),
    #[error(transparent)]
    Fabric(#[from] FabricError),
    #[error(transparent)]
    Neuron(#[from] NeuronError),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, NetworkError> {
    Err(NetworkError::Config(msg.into()))
}

/// Parameter overrides applied to a set of neurons.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuronGroup {
    #[serde(default)]
    pub neurons: Vec<u32>,
    /// Half-open `[start, end)` range of neuron ids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[u32; 2]>,
    #[serde(default)]
    pub params: toml::Table,
    #[serde(default)]
    pub synapses: toml::Table,
}

impl NeuronGroup {
    pub fn members(&self) -> impl Iterator<Item = u32> + '_ {
        let r = self.range.map_or(0..0, |[a, b]| a..b);
        self.neurons.iter().copied().chain(r)
    }
}

/// Programs one CAM word of `target` to listen to `source`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Connection {
    pub source: u32,
    pub target: u32,
    pub kernel: Kernel,
    /// Word index; the first free word when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word: Option<usize>,
}

/// Raw CAM words for one neuron, written from index `start` upward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CamWords {
    pub neuron: u32,
    #[serde(default)]
    pub start: usize,
    pub words: Vec<u32>,
}

/// Replaces the CAM-derived destination cores of `source`; an empty list
/// filters all of its events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteOverride {
    pub source: u32,
    pub cores: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuronStimulus {
    pub neurons: Vec<u32>,
    pub stimulus: Stimulus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    /// A power of two.
    pub n_cores: usize,
    pub neurons_per_core: usize,
    pub tag_bits: u32,
    /// Buffers on each core's outgoing and incoming path.
    pub buffer_stages: usize,
    pub duration_s: f64,
    pub dt_s: f64,
    #[serde(rename = "group")]
    pub groups: Vec<NeuronGroup>,
    #[serde(rename = "connection")]
    pub connections: Vec<Connection>,
    #[serde(rename = "cam")]
    pub cam_words: Vec<CamWords>,
    #[serde(rename = "route")]
    pub routes: Vec<RouteOverride>,
    #[serde(rename = "stimulus")]
    pub stimuli: Vec<NeuronStimulus>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            n_cores: 4,
            neurons_per_core: 256,
            tag_bits: 10,
            buffer_stages: 1,
            duration_s: 0.2,
            dt_s: 10e-6,
            groups: Vec::new(),
            connections: Vec::new(),
            cam_words: Vec::new(),
            routes: Vec::new(),
            stimuli: Vec::new(),
        }
    }
}

impl NetworkConfig {
    pub fn n_neurons(&self) -> usize {
        self.n_cores * self.neurons_per_core
    }

    pub fn header_bits(&self) -> u32 {
        self.n_cores.trailing_zeros()
    }

    /// Data width of router channels: core address plus tag.
    pub fn channel_width(&self) -> u32 {
        self.tag_bits + self.header_bits()
    }

    pub fn tag_mask(&self) -> u32 {
        (1 << self.tag_bits) - 1
    }

    pub fn core_of(&self, neuron: u32) -> usize {
        neuron as usize / self.neurons_per_core
    }

    pub fn cam_word(&self, source: u32, kernel: Kernel) -> u32 {
        (kernel.index() as u32) << self.tag_bits | source
    }

    pub fn validate(&self, cam: &CamConfig) -> Result<(), NetworkError> {
        if self.n_cores == 0 || !self.n_cores.is_power_of_two() {
            return invalid(format!("n_cores must be a power of two, got {}", self.n_cores));
        }
        if self.neurons_per_core == 0 {
            return invalid("neurons_per_core must be positive");
        }
        if self.tag_bits == 0 || self.channel_width() > 32 {
            return invalid(format!("tag_bits {} does not fit a 32-bit channel", self.tag_bits));
        }
        if self.n_neurons() > 1 << self.tag_bits {
            return invalid(format!(
                "{} neurons need more than {} tag bits",
                self.n_neurons(),
                self.tag_bits
            ));
        }
        if cam.word_bits != self.tag_bits + KERNEL_BITS {
            return invalid(format!(
                "CAM words of {} bits cannot hold a {}-bit tag plus {KERNEL_BITS} kernel bits",
                cam.word_bits, self.tag_bits
            ));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return invalid("duration_s must be positive");
        }
        if !(self.dt_s > 0.0 && self.dt_s <= self.duration_s) {
            return invalid("dt_s must be positive and no longer than duration_s");
        }
        let n = self.n_neurons() as u32;
        let check = |id: u32, what: &str| {
            if id >= n {
                invalid(format!("{what} refers to neuron {id}, but the chip has {n}"))
            } else {
                Ok(())
            }
        };
        for g in &self.groups {
            if let Some([a, b]) = g.range {
                if a > b || b > n {
                    return invalid(format!("group range [{a}, {b}) outside 0..{n}"));
                }
            }
            for id in &g.neurons {
                check(*id, "group")?;
            }
        }
        for c in &self.connections {
            check(c.source, "connection source")?;
            check(c.target, "connection target")?;
        }
        for w in &self.cam_words {
            check(w.neuron, "cam entry")?;
        }
        for r in &self.routes {
            check(r.source, "route")?;
            if let Some(c) = r.cores.iter().find(|&&c| c >= self.n_cores) {
                return invalid(format!("route for {} names core {c} of {}", r.source, self.n_cores));
            }
        }
        for s in &self.stimuli {
            for id in &s.neurons {
                check(*id, "stimulus")?;
            }
        }
        Ok(())
    }

    /// Router process network: per core an output path (source, buffers,
    /// split tree on the core bits) and an input path (merge tree over all
    /// cores, buffers, sink).
    pub fn router_topology(&self) -> Topology {
        let n = self.n_cores;
        let levels = self.header_bits();
        let width = self.channel_width();
        let mut procs = Vec::new();
        let mut leaves = vec![Vec::new(); n];
        for c in 0..n {
            procs.push(proc(format!("src{c}"), ProcessKind::Source, &[], &[&format!("o{c}_0")]));
            let mut ch = format!("o{c}_0");
            for i in 0..self.buffer_stages {
                let next = format!("o{c}_{}", i + 1);
                procs.push(proc(format!("ob{c}_{i}"), ProcessKind::Buffer, &[&ch], &[&next]));
                ch = next;
            }
            leaves[c] = if levels == 0 {
                vec![ch]
            } else {
                add_split_tree(&mut procs, &format!("sp{c}_"), &ch, levels, width - 1)
            };
        }
        for d in 0..n {
            let inputs: Vec<String> = (0..n).map(|c| leaves[c][d].clone()).collect();
            let mut ch = add_merge_tree(&mut procs, &format!("mg{d}_"), inputs);
            for i in 0..self.buffer_stages {
                let next = format!("i{d}_{i}");
                procs.push(proc(format!("ib{d}_{i}"), ProcessKind::Buffer, &[&ch], &[&next]));
                ch = next;
            }
            procs.push(proc(format!("snk{d}"), ProcessKind::Sink, &[&ch], &[]));
        }
        Topology {
            width,
            processes: procs,
        }
    }
}

fn merge_tables(base: &mut toml::Table, over: &toml::Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge_tables(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

fn apply_overrides<T>(base: &T, over: &toml::Table, what: &str) -> Result<T, NetworkError>
where
    T: Clone + Serialize + for<'de> Deserialize<'de>,
{
    if over.is_empty() {
        return Ok(base.clone());
    }
    let mut t = toml::Table::try_from(base).map_err(|e| NetworkError::Config(e.to_string()))?;
    merge_tables(&mut t, over);
    t.try_into()
        .map_err(|e: toml::de::Error| NetworkError::Config(format!("{what}: {}", e.message())))
}

/// Static wiring derived from a [`NetworkConfig`].
#[derive(Debug, Clone)]
pub struct Wiring {
    pub params: Vec<(NeuronParams, SynapseParams)>,
    pub cams: Vec<CamArray>,
    /// Destination cores per source neuron.
    pub routes: Vec<Vec<usize>>,
    /// Whether the route came from an explicit override.
    pub overridden: Vec<bool>,
}

impl Wiring {
    pub fn build(
        cfg: &NetworkConfig,
        neuron: &NeuronParams,
        synapses: &SynapseParams,
        cam: &CamConfig,
    ) -> Result<Self, NetworkError> {
        cfg.validate(cam)?;
        let n = cfg.n_neurons();
        let mut params = vec![(*neuron, *synapses); n];
        for (gi, g) in cfg.groups.iter().enumerate() {
            let p = apply_overrides(neuron, &g.params, &format!("group {gi} params"))?;
            let s = apply_overrides(synapses, &g.synapses, &format!("group {gi} synapses"))?;
            p.validate()?;
            s.validate()?;
            for id in g.members() {
                params[id as usize] = (p, s);
            }
        }
        let mut cams = (0..n)
            .map(|_| CamArray::new(*cam))
            .collect::<Result<Vec<_>, _>>()?;
        for w in &cfg.cam_words {
            for (i, &word) in w.words.iter().enumerate() {
                cams[w.neuron as usize].program(w.start + i, word)?;
            }
        }
        for c in &cfg.connections {
            let a = &mut cams[c.target as usize];
            let index = match c.word {
                Some(i) => i,
                None => a.words().iter().position(|w| w.is_none()).ok_or_else(|| {
                    NetworkError::Config(format!("CAM of neuron {} is full", c.target))
                })?,
            };
            a.program(index, cfg.cam_word(c.source, c.kernel))?;
        }
        let routes = derive_routes(cfg, &cams);
        let mut wiring = Self {
            params,
            overridden: vec![false; n],
            cams,
            routes,
        };
        for r in &cfg.routes {
            let cores: BTreeSet<usize> = r.cores.iter().copied().collect();
            wiring.routes[r.source as usize] = cores.into_iter().collect();
            wiring.overridden[r.source as usize] = true;
        }
        Ok(wiring)
    }

    /// Rows `core,neuron,word_index,tag_hex` for every programmed word.
    pub fn write_cam_csv<W: Write>(&self, cfg: &NetworkConfig, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["core", "neuron", "word_index", "tag_hex"])?;
        let digits = self.cams.first().map_or(3, |c| c.config().word_bits.div_ceil(4) as usize);
        for (n, cam) in self.cams.iter().enumerate() {
            for (i, word) in cam.words().iter().enumerate() {
                if let Some(v) = word {
                    w.write_record([
                        cfg.core_of(n as u32).to_string(),
                        n.to_string(),
                        i.to_string(),
                        format!("{v:0digits$x}"),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Cores holding at least one CAM word whose tag field names each source.
fn derive_routes(cfg: &NetworkConfig, cams: &[CamArray]) -> Vec<Vec<usize>> {
    let mut sets = vec![BTreeSet::new(); cfg.n_neurons()];
    let mask = cfg.tag_mask();
    for (n, cam) in cams.iter().enumerate() {
        for word in cam.words().iter().flatten() {
            if let Some(s) = sets.get_mut((word & mask) as usize) {
                s.insert(cfg.core_of(n as u32));
            }
        }
    }
    sets.into_iter().map(|s| s.into_iter().collect()).collect()
}
