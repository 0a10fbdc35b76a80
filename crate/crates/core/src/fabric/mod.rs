//! Token- and transition-level model of PCHB asynchronous processes.
//!
//! Channels are dual-rail with a four-phase handshake; every rail, validity
//! detector and enable transition is an individual event with its own
//! sampled delay, so the simulation exercises the protocol under arbitrary
//! finite delays rather than a fixed clock.

pub mod analysis;
pub mod channel;
pub mod sim;
pub mod topology;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::Picos;

pub use analysis::{qdi_conformance, route, throughput, QdiOptions, QdiReport, ThroughputReport};
pub use channel::{DualRailChannel, Phase, Rail, TokenMeta, ViolationKind};
pub use sim::{Delivery, Fabric, FabricEvent, FabricSim, Violation};
pub use topology::{ProcessKind, ProcessSpec, Topology};

/// Peak-rate power of a single 10-bit buffer (W).
pub const PEAK_POWER_W: f64 = 250e-6;
/// Bandwidth of a single 10-bit buffer (events/s).
pub const PEAK_RATE: f64 = 1.8e9;
/// Static power of a single 10-bit buffer (W).
pub const STATIC_POWER_W: f64 = 9.84e-9;

/// Per-token dynamic energy implied by the peak and static power anchors.
pub fn calibrated_token_energy() -> f64 {
    (PEAK_POWER_W - STATIC_POWER_W) / PEAK_RATE
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FabricError {
    #[error("invalid topology: {0}")]
    Topology(String),
    #[error("invalid delay model: {0}")]
    Delay(String),
    #[error("deadlock at {time}: no transition can fire; stuck processes: {stuck:?}")]
    Deadlock { time: Picos, stuck: Vec<String> },
    #[error("protocol violation: {0}")]
    Protocol(Violation),
    #[error("unknown process `{0}`")]
    UnknownProcess(String),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayMode {
    /// Every transition takes the nominal delay.
    Nominal,
    /// Uniform in `nominal·[1 − jitter, 1 + jitter]`.
    Randomized,
    /// Either extreme of the randomized range, chosen by a fair coin.
    WorstCaseSampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DelayModel {
    /// Nominal delay per transition (ps).
    pub nominal_ps: f64,
    /// Relative half-width of the delay spread, in `[0, 1)`.
    pub jitter: f64,
    pub mode: DelayMode,
}

/// Sequenced transitions in one steady-state handshake cycle of a buffer
/// stage, whether alone between a source and sink or inside a pipeline.
pub const TRANSITIONS_PER_CYCLE: u32 = 10;

/// Per-transition delay that puts that cycle at 1/1.8 GHz.
pub const CALIBRATED_TRANSITION_PS: f64 = 1e12 / PEAK_RATE / TRANSITIONS_PER_CYCLE as f64;

impl Default for DelayModel {
    fn default() -> Self {
        Self {
            nominal_ps: CALIBRATED_TRANSITION_PS,
            jitter: 0.5,
            mode: DelayMode::Nominal,
        }
    }
}

impl DelayModel {
    pub fn nominal(nominal_ps: f64) -> Self {
        Self {
            nominal_ps,
            jitter: 0.0,
            mode: DelayMode::Nominal,
        }
    }

    pub fn randomized(nominal_ps: f64, jitter: f64) -> Self {
        Self {
            nominal_ps,
            jitter,
            mode: DelayMode::Randomized,
        }
    }

    pub fn with_mode(self, mode: DelayMode) -> Self {
        Self { mode, ..self }
    }

    pub fn validate(&self) -> Result<(), FabricError> {
        if !(self.nominal_ps.is_finite() && self.nominal_ps >= 1.0) {
            return Err(FabricError::Delay(format!(
                "nominal delay must be a finite value >= 1 ps, got {}",
                self.nominal_ps
            )));
        }
        if !(0.0..1.0).contains(&self.jitter) {
            return Err(FabricError::Delay(format!(
                "jitter must lie in [0, 1), got {}",
                self.jitter
            )));
        }
        Ok(())
    }

    /// Draws one transition delay in picoseconds.
    pub fn sample_ps(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self.mode {
            DelayMode::Nominal => self.nominal_ps,
            DelayMode::Randomized => {
                let u: f64 = rng.random();
                self.nominal_ps * (1.0 - self.jitter + 2.0 * self.jitter * u)
            }
            DelayMode::WorstCaseSampled => {
                if rng.random::<bool>() {
                    self.nominal_ps * (1.0 + self.jitter)
                } else {
                    self.nominal_ps * (1.0 - self.jitter)
                }
            }
        }
    }

    /// [`sample_ps`](Self::sample_ps) rounded to whole picoseconds, at least 1.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Picos {
        Picos((self.sample_ps(rng).round() as u64).max(1))
    }

    /// Nominal duration of one handshake cycle.
    pub fn nominal_cycle_ps(&self) -> f64 {
        self.nominal_ps * TRANSITIONS_PER_CYCLE as f64
    }
}

/// Energy model of one process class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProcessEnergy {
    /// Dynamic energy per token traversal (J).
    pub e_dyn_j: f64,
    /// Static power (W).
    pub p_static_w: f64,
}

impl Default for ProcessEnergy {
    fn default() -> Self {
        Self {
            e_dyn_j: calibrated_token_energy(),
            p_static_w: STATIC_POWER_W,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FabricEnergy {
    pub buffer: ProcessEnergy,
    pub split: ProcessEnergy,
    pub merge: ProcessEnergy,
}

impl FabricEnergy {
    pub fn of(&self, kind: ProcessKind) -> ProcessEnergy {
        match kind {
            ProcessKind::Buffer => self.buffer,
            ProcessKind::Split => self.split,
            ProcessKind::Merge => self.merge,
            ProcessKind::Source | ProcessKind::Sink => ProcessEnergy {
                e_dyn_j: 0.0,
                p_static_w: 0.0,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FabricConfig {
    /// Data bits per channel.
    pub width: u32,
    pub delay: DelayModel,
    pub energy: FabricEnergy,
    /// Tokens per throughput measurement.
    pub throughput_tokens: usize,
}

impl Default for FabricConfig {
    fn default() -> Self {
        Self {
            width: 10,
            delay: DelayModel::default(),
            energy: FabricEnergy::default(),
            throughput_tokens: 2000,
        }
    }
}

/// Injected defects used as negative controls for the conformance checker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Raises the input acknowledge on the first arriving bit instead of
    /// waiting for completion detection.
    EarlyAck,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn delays_are_positive_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = DelayModel::randomized(10.0, 0.9);
        for _ in 0..10_000 {
            let d = m.sample(&mut rng).0;
            assert!((1..=19).contains(&d));
        }
        let w = m.with_mode(DelayMode::WorstCaseSampled);
        for _ in 0..100 {
            assert!([1, 19].contains(&w.sample(&mut rng).0));
        }
    }

    #[test]
    fn zero_jitter_is_nominal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = DelayModel::randomized(69.44, 0.0);
        assert!((0..100).all(|_| m.sample(&mut rng) == Picos(69)));
    }

    #[test]
    fn delay_validation() {
        assert!(DelayModel::randomized(10.0, 1.0).validate().is_err());
        assert!(DelayModel::nominal(0.5).validate().is_err());
        assert!(DelayModel::default().validate().is_ok());
    }

    #[test]
    fn token_energy_anchor() {
        let e = calibrated_token_energy();
        assert!((e - 138.883e-15).abs() < 0.01e-15, "{e}");
    }
}
