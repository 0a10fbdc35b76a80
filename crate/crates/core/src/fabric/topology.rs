//! Static description of a process network: named processes wired by
//! named point-to-point channels.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::FabricError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessKind {
    Source,
    Sink,
    Buffer,
    Split,
    Merge,
}

impl ProcessKind {
    fn ports(self) -> (usize, usize) {
        match self {
            ProcessKind::Source => (0, 1),
            ProcessKind::Sink => (1, 0),
            ProcessKind::Buffer => (1, 1),
            ProcessKind::Split => (1, 2),
            ProcessKind::Merge => (2, 1),
        }
    }

    /// Environment processes carry no energy or static power.
    pub fn is_environment(self) -> bool {
        matches!(self, ProcessKind::Source | ProcessKind::Sink)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    pub id: String,
    pub kind: ProcessKind,
    /// Data bit steering a split: 0 → output 0, 1 → output 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub select_bit: Option<u32>,
    #[serde(default)]
    pub inputs: Vec<String>,
    #[serde(default)]
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub width: u32,
    #[serde(rename = "process")]
    pub processes: Vec<ProcessSpec>,
}

/// Channel endpoints after name resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelEnds {
    pub sender: (usize, usize),
    pub receiver: (usize, usize),
}

/// Topology with channel names resolved to indices.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub width: u32,
    pub processes: Vec<ProcessSpec>,
    pub inputs: Vec<Vec<usize>>,
    pub outputs: Vec<Vec<usize>>,
    pub channels: Vec<ChannelEnds>,
    pub channel_names: Vec<String>,
}

pub(crate) fn proc(
    id: impl Into<String>,
    kind: ProcessKind,
    inputs: &[&str],
    outputs: &[&str],
) -> ProcessSpec {
    ProcessSpec {
        id: id.into(),
        kind,
        select_bit: None,
        inputs: inputs.iter().map(|s| s.to_string()).collect(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
    }
}

/// Appends a binary split tree fed by `input`; level `l` steers on bit
/// `top_bit − l`. Returns the `2^levels` leaf channels, ordered by the
/// steering bits read most significant first.
pub(crate) fn add_split_tree(
    procs: &mut Vec<ProcessSpec>,
    prefix: &str,
    input: &str,
    levels: u32,
    top_bit: u32,
) -> Vec<String> {
    let mut frontier = vec![input.to_string()];
    for l in 0..levels {
        let mut next = Vec::new();
        for (j, ch) in frontier.iter().enumerate() {
            let (a, b) = (format!("{ch}0"), format!("{ch}1"));
            let mut p = proc(format!("{prefix}{l}_{j}"), ProcessKind::Split, &[ch], &[&a, &b]);
            p.select_bit = Some(top_bit - l);
            procs.push(p);
            next.push(a);
            next.push(b);
        }
        frontier = next;
    }
    frontier
}

/// Appends a pairwise merge tree over `inputs` (a power of two) and
/// returns its output channel.
pub(crate) fn add_merge_tree(procs: &mut Vec<ProcessSpec>, prefix: &str, inputs: Vec<String>) -> String {
    let mut frontier = inputs;
    let mut l = 0;
    while frontier.len() > 1 {
        let mut next = Vec::new();
        for (j, pair) in frontier.chunks(2).enumerate() {
            let out = format!("{prefix}{l}_{j}");
            procs.push(proc(out.clone(), ProcessKind::Merge, &[&pair[0], &pair[1]], &[&out]));
            next.push(out);
        }
        frontier = next;
        l += 1;
    }
    frontier.remove(0)
}

impl Topology {
    /// `src → b0 → … → b(n−1) → snk`.
    pub fn pipeline(stages: usize, width: u32) -> Self {
        let mut processes = vec![proc("src", ProcessKind::Source, &[], &["c0"])];
        for i in 0..stages {
            processes.push(proc(
                format!("b{i}"),
                ProcessKind::Buffer,
                &[&format!("c{i}")],
                &[&format!("c{}", i + 1)],
            ));
        }
        processes.push(proc("snk", ProcessKind::Sink, &[&format!("c{stages}")], &[]));
        Self { width, processes }
    }

    /// One source fanned out to `2^levels` sinks. Level `l` steers on data
    /// bit `width − 1 − l`, so the top `levels` bits address the sink.
    pub fn split_tree(levels: u32, width: u32) -> Self {
        assert!(levels >= 1 && levels < width);
        let mut processes = vec![proc("src", ProcessKind::Source, &[], &["t"])];
        let leaves = add_split_tree(&mut processes, "s", "t", levels, width - 1);
        for (j, ch) in leaves.iter().enumerate() {
            processes.push(proc(format!("snk{j}"), ProcessKind::Sink, &[ch], &[]));
        }
        Self { width, processes }
    }

    /// `2^levels` sources merged pairwise into a single sink.
    pub fn merge_tree(levels: u32, width: u32) -> Self {
        assert!(levels >= 1);
        let n = 1usize << levels;
        let inputs: Vec<String> = (0..n).map(|i| format!("i{i}")).collect();
        let mut processes: Vec<ProcessSpec> = inputs
            .iter()
            .enumerate()
            .map(|(i, ch)| proc(format!("src{i}"), ProcessKind::Source, &[], &[ch]))
            .collect();
        let out = add_merge_tree(&mut processes, "m", inputs);
        processes.push(proc("snk", ProcessKind::Sink, &[&out], &[]));
        Self { width, processes }
    }

    pub fn resolve(&self) -> Result<Resolved, FabricError> {
        let bad = |m: String| Err(FabricError::Topology(m));
        if self.width == 0 || self.width > 32 {
            return bad(format!("width {} outside 1..=32", self.width));
        }
        let mut seen = HashMap::new();
        let mut names: BTreeMap<String, (Option<(usize, usize)>, Option<(usize, usize)>)> =
            BTreeMap::new();
        for (pi, p) in self.processes.iter().enumerate() {
            if seen.insert(p.id.clone(), pi).is_some() {
                return bad(format!("duplicate process id `{}`", p.id));
            }
            let (ni, no) = p.kind.ports();
            if p.inputs.len() != ni || p.outputs.len() != no {
                return bad(format!(
                    "process `{}` ({:?}) needs {ni} inputs and {no} outputs",
                    p.id, p.kind
                ));
            }
            match (p.kind, p.select_bit) {
                (ProcessKind::Split, Some(b)) if b < self.width => {}
                (ProcessKind::Split, _) => {
                    return bad(format!("split `{}` needs select_bit < width", p.id));
                }
                (_, Some(_)) => return bad(format!("`{}` is not a split", p.id)),
                _ => {}
            }
            for (port, ch) in p.outputs.iter().enumerate() {
                let e = names.entry(ch.clone()).or_default();
                if e.0.replace((pi, port)).is_some() {
                    return bad(format!("channel `{ch}` has two senders"));
                }
            }
            for (port, ch) in p.inputs.iter().enumerate() {
                let e = names.entry(ch.clone()).or_default();
                if e.1.replace((pi, port)).is_some() {
                    return bad(format!("channel `{ch}` has two receivers"));
                }
            }
        }
        let mut channels = Vec::new();
        let mut channel_names = Vec::new();
        let mut index = HashMap::new();
        for (name, ends) in names {
            match ends {
                (Some(sender), Some(receiver)) => {
                    index.insert(name.clone(), channels.len());
                    channels.push(ChannelEnds { sender, receiver });
                    channel_names.push(name);
                }
                (None, _) => return bad(format!("channel `{name}` has no sender")),
                (_, None) => return bad(format!("channel `{name}` has no receiver")),
            }
        }
        let lookup = |v: &Vec<String>| v.iter().map(|n| index[n]).collect::<Vec<_>>();
        Ok(Resolved {
            width: self.width,
            inputs: self.processes.iter().map(|p| lookup(&p.inputs)).collect(),
            outputs: self.processes.iter().map(|p| lookup(&p.outputs)).collect(),
            processes: self.processes.clone(),
            channels,
            channel_names,
        })
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.processes.iter().position(|p| p.id == id)
    }

    pub fn sources(&self) -> Vec<usize> {
        self.indices_of(ProcessKind::Source)
    }

    pub fn sinks(&self) -> Vec<usize> {
        self.indices_of(ProcessKind::Sink)
    }

    fn indices_of(&self, kind: ProcessKind) -> Vec<usize> {
        (0..self.processes.len())
            .filter(|&i| self.processes[i].kind == kind)
            .collect()
    }

    /// Count of non-environment processes.
    pub fn active_processes(&self) -> usize {
        self.processes.iter().filter(|p| !p.kind.is_environment()).count()
    }
}
