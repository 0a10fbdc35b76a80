//! Parameter sets for the four characteristic neuron behaviours: leak time
//! constant, firing threshold, refractory period and spike-frequency
//! adaptation. Each panel holds one setting per curve plus the stimulus
//! shared by the curves.

use super::{bias, Kernel, NeuronError, NeuronParams, Stimulus, SynapseParams};
use crate::device::UT_300K;

const KAPPA: f64 = 0.7;

#[derive(Debug, Clone)]
pub struct Setting {
    pub label: String,
    pub params: NeuronParams,
    pub synapses: SynapseParams,
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub name: &'static str,
    pub settings: Vec<Setting>,
    pub stimulus: Stimulus,
}

fn base() -> NeuronParams {
    NeuronParams {
        i_dc: 0.0,
        ..NeuronParams::default()
    }
}

fn spike_train_synapses() -> SynapseParams {
    let mut s = SynapseParams::default();
    s.fepsc.weight = 1.5e-12;
    s
}

fn spike_train() -> Stimulus {
    Stimulus::Regular {
        kernel: Kernel::Fepsc,
        rate_hz: 200.0,
    }
}

/// Leak biases in ascending order; a larger bias is a faster leak.
pub const LEAK_BIASES: [f64; 3] = [0.8e-12, 1.0e-12, 1.2e-12];

pub fn leak_panel() -> Result<Panel, NeuronError> {
    let settings = LEAK_BIASES
        .iter()
        .enumerate()
        .map(|(i, &i_tau)| {
            let mut p = base();
            p.g_l = bias::leak_conductance(p.c_m, i_tau, KAPPA, UT_300K)?;
            Ok(Setting {
                label: format!("i_tau{}", i + 1),
                params: p,
                synapses: spike_train_synapses(),
            })
        })
        .collect::<Result<_, NeuronError>>()?;
    Ok(Panel {
        name: "leak",
        settings,
        stimulus: spike_train(),
    })
}

/// Threshold sweep in descending order of `V_T`.
pub fn threshold_values(points: usize) -> Vec<f64> {
    let (hi, lo) = (-0.046, -0.054);
    (0..points)
        .map(|i| hi - (hi - lo) * i as f64 / (points.max(2) - 1) as f64)
        .collect()
}

pub fn threshold_panel(points: usize) -> Panel {
    let settings = threshold_values(points)
        .into_iter()
        .enumerate()
        .map(|(i, v_t)| Setting {
            label: format!("i_thr{}", i + 1),
            params: NeuronParams { v_t, ..base() },
            synapses: spike_train_synapses(),
        })
        .collect();
    Panel {
        name: "threshold",
        settings,
        stimulus: spike_train(),
    }
}

/// Refractory biases in ascending order; a larger bias is a shorter period.
pub const REFRACTORY_BIASES: [f64; 3] = [5e-12, 10e-12, 20e-12];

/// Constant drive strong enough that the refractory period dominates the
/// interspike interval.
pub const SATURATING_DRIVE: f64 = 500e-12;

pub fn refractory_panel() -> Result<Panel, NeuronError> {
    let settings = REFRACTORY_BIASES
        .iter()
        .enumerate()
        .map(|(i, &i_rfr)| {
            let mut p = base();
            p.t_rfr = bias::refractory_period(p.c_r, i_rfr)?;
            p.i_dc = SATURATING_DRIVE;
            Ok(Setting {
                label: format!("i_rfr{}", i + 1),
                params: p,
                synapses: SynapseParams::default(),
            })
        })
        .collect::<Result<_, NeuronError>>()?;
    Ok(Panel {
        name: "refractory",
        settings,
        stimulus: Stimulus::Dc,
    })
}

/// AHP leak bias giving a 100 ms adaptation time constant on `C_A`.
pub const AHP_TAU_BIAS: f64 = 73.86e-15;

pub fn adaptation_panel() -> Result<Panel, NeuronError> {
    let mut adapting = base();
    adapting.i_dc = 3e-12;
    adapting.tau_w = bias::adaptation_tau(adapting.c_a, AHP_TAU_BIAS, KAPPA, UT_300K)?;
    adapting.b = 0.3e-12;
    let plain = NeuronParams { b: 0.0, ..adapting };
    Ok(Panel {
        name: "adaptation",
        settings: vec![
            Setting {
                label: "no_ahp".into(),
                params: plain,
                synapses: SynapseParams::default(),
            },
            Setting {
                label: "ahp".into(),
                params: adapting,
                synapses: SynapseParams::default(),
            },
        ],
        stimulus: Stimulus::Dc,
    })
}

pub fn all_panels() -> Result<Vec<Panel>, NeuronError> {
    Ok(vec![
        leak_panel()?,
        threshold_panel(3),
        refractory_panel()?,
        adaptation_panel()?,
    ])
}
