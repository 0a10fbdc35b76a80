//! Loading CAM contents, either directly or as write packets sent through
//! the router from a host attached to core 0's output port.
//!
//! A write packet is four consecutive tokens to the destination core:
//! local neuron index, word index, then the upper and lower halves of the
//! CAM word. Each core's sink reassembles them in arrival order.

use crate::cam::{CamArray, CamConfig};
use crate::fabric::{FabricConfig, FabricSim};

use super::{NetworkConfig, NetworkError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CamWrite {
    /// Global neuron id.
    pub neuron: u32,
    pub word: usize,
    pub tag: u32,
}

fn arrays(cfg: &NetworkConfig, cam: &CamConfig) -> Result<Vec<CamArray>, NetworkError> {
    cfg.validate(cam)?;
    Ok((0..cfg.n_neurons())
        .map(|_| CamArray::new(*cam))
        .collect::<Result<_, _>>()?)
}

pub fn program_direct(
    cfg: &NetworkConfig,
    cam: &CamConfig,
    writes: &[CamWrite],
) -> Result<Vec<CamArray>, NetworkError> {
    let mut cams = arrays(cfg, cam)?;
    for w in writes {
        let a = cams.get_mut(w.neuron as usize).ok_or_else(|| {
            NetworkError::Config(format!("write targets neuron {} outside the chip", w.neuron))
        })?;
        a.program(w.word, w.tag)?;
    }
    Ok(cams)
}

pub fn program_via_aer(
    cfg: &NetworkConfig,
    cam: &CamConfig,
    fabric_cfg: &FabricConfig,
    writes: &[CamWrite],
    seed: u64,
) -> Result<Vec<CamArray>, NetworkError> {
    let mut cams = arrays(cfg, cam)?;
    let field = cfg.tag_mask();
    let half = cam.word_bits.div_ceil(2);
    let lo_mask = (1u32 << half) - 1;
    if half > cfg.tag_bits || cam.n_words > field as usize + 1 {
        return Err(NetworkError::Config(format!(
            "a {}-bit packet field cannot address {} words of {} bits",
            cfg.tag_bits, cam.n_words, cam.word_bits
        )));
    }

    let topo = cfg.router_topology();
    let mut sim = FabricSim::new(&topo, fabric_cfg.delay, seed)?;
    let src = sim.fabric().process_index("src0")?;
    for w in writes {
        if w.neuron as usize >= cfg.n_neurons() {
            return Err(NetworkError::Config(format!(
                "write targets neuron {} outside the chip",
                w.neuron
            )));
        }
        if w.word >= cam.n_words || (cam.word_bits < 32 && w.tag >> cam.word_bits != 0) {
            return Err(NetworkError::Config(format!(
                "write of {:#x} to word {} does not fit the CAM",
                w.tag, w.word
            )));
        }
        let core = cfg.core_of(w.neuron);
        let local = w.neuron as usize % cfg.neurons_per_core;
        let header = (core as u32) << cfg.tag_bits;
        for v in [local as u32, w.word as u32, w.tag >> half, w.tag & lo_mask] {
            sim.inject_at(src, header | v, crate::engine::Picos::ZERO)?;
        }
    }
    sim.run_to_completion()?;

    let mut pending: Vec<Vec<u32>> = vec![Vec::new(); cfg.n_cores];
    let sink_core: Vec<(usize, usize)> = (0..cfg.n_cores)
        .map(|c| sim.fabric().process_index(&format!("snk{c}")).map(|p| (p, c)))
        .collect::<Result<_, _>>()?;
    for d in sim.fabric().deliveries() {
        let core = sink_core
            .iter()
            .find(|(p, _)| *p == d.sink)
            .map(|&(_, c)| c)
            .expect("deliveries come from sinks");
        let buf = &mut pending[core];
        buf.push(d.value & field);
        if let [local, word, hi, lo] = buf[..] {
            let neuron = core * cfg.neurons_per_core + local as usize;
            cams[neuron].program(word as usize, hi << half | lo)?;
            buf.clear();
        }
    }
    if let Some(c) = pending.iter().position(|b| !b.is_empty()) {
        return Err(NetworkError::Config(format!("core {c} received a truncated write")));
    }
    Ok(cams)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aer_programming_matches_direct() {
        let cfg = NetworkConfig {
            n_cores: 4,
            neurons_per_core: 8,
            ..NetworkConfig::default()
        };
        let cam = CamConfig::default();
        let writes: Vec<CamWrite> = (0..40)
            .map(|i| CamWrite {
                neuron: (i * 7) % 32,
                word: (i * 13) as usize % 64,
                tag: (i * 977) % 4096,
            })
            .collect();
        let direct = program_direct(&cfg, &cam, &writes).unwrap();
        let aer = program_via_aer(&cfg, &cam, &FabricConfig::default(), &writes, 3).unwrap();
        for (a, b) in direct.iter().zip(&aer) {
            assert_eq!(a.words(), b.words());
        }
    }

    #[test]
    fn oversized_tag_rejected() {
        let cfg = NetworkConfig::default();
        let w = [CamWrite {
            neuron: 0,
            word: 0,
            tag: 1 << 12,
        }];
        assert!(program_via_aer(&cfg, &CamConfig::default(), &FabricConfig::default(), &w, 0).is_err());
        assert!(program_direct(&cfg, &CamConfig::default(), &w).is_err());
    }
}
