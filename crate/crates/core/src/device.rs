//! Subthreshold MOS drain current and the bias-current to time-constant map.
//!
//! The channel current follows the EKV weak-inversion form
//! `I0·(W/L)·exp(κ·V_GS/U_T)·(1 − exp(−V_DS/U_T))`, and a length-dependent
//! leakage floor `I_leak0·exp(−(L − L_min)/L_leak)` is added on top.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Thermal voltage at 300 K.
pub const UT_300K: f64 = 0.025_85;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeviceError {
    #[error("{name} = {value} V exceeds the {rail} V supply rail")]
    OutOfRail {
        name: &'static str,
        value: f64,
        rail: f64,
    },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("kappa must lie in (0, 1), got {0}")]
    Kappa(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Nmos,
    Pmos,
}

/// Leakage floor parameters; the floor is nonincreasing in channel length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LeakageFloor {
    /// Floor current of a minimum-length device (A).
    pub i_leak0: f64,
    /// Minimum drawn length (m).
    pub l_min: f64,
    /// e-folding length of the floor (m).
    pub l_leak: f64,
}

impl Default for LeakageFloor {
    fn default() -> Self {
        Self {
            i_leak0: 10e-12,
            l_min: 28e-9,
            l_leak: 30e-9,
        }
    }
}

impl LeakageFloor {
    pub fn at(&self, length: f64) -> f64 {
        let excess = (length - self.l_min).max(0.0);
        self.i_leak0 * (-excess / self.l_leak).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MosParams {
    pub polarity: Polarity,
    /// Pre-exponential current at W/L = 1 (A).
    pub i0: f64,
    pub kappa: f64,
    /// Thermal voltage (V).
    pub ut: f64,
    /// Channel width (m).
    pub width: f64,
    /// Channel length (m).
    pub length: f64,
    pub leakage: LeakageFloor,
    /// Supply rail bounding |V_GS| and |V_DS| (V).
    pub vdd: f64,
}

impl Default for MosParams {
    fn default() -> Self {
        Self::nmos()
    }
}

impl MosParams {
    pub fn nmos() -> Self {
        Self {
            polarity: Polarity::Nmos,
            i0: 1e-15,
            kappa: 0.7,
            ut: UT_300K,
            width: 200e-9,
            length: 200e-9,
            leakage: LeakageFloor::default(),
            vdd: 1.0,
        }
    }

    pub fn pmos() -> Self {
        Self {
            polarity: Polarity::Pmos,
            i0: 0.4e-15,
            kappa: 0.68,
            ..Self::nmos()
        }
    }

    pub fn with_length(mut self, length: f64) -> Self {
        self.length = length;
        self
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(DeviceError::Kappa(self.kappa));
        }
        for (name, value) in [
            ("ut", self.ut),
            ("i0", self.i0),
            ("width", self.width),
            ("length", self.length),
            ("vdd", self.vdd),
            ("l_leak", self.leakage.l_leak),
        ] {
            if !(value > 0.0) {
                return Err(DeviceError::NonPositive { name, value });
            }
        }
        if self.leakage.i_leak0 < 0.0 {
            return Err(DeviceError::NonPositive {
                name: "i_leak0",
                value: self.leakage.i_leak0,
            });
        }
        Ok(())
    }

    pub fn off_floor(&self) -> f64 {
        self.leakage.at(self.length)
    }

    /// Channel (non-leakage) part of the drain current, in source-referred
    /// magnitudes: pass `V_SG`, `V_SD` for PMOS via [`drain_current`].
    pub fn channel_current(&self, vgs: f64, vds: f64) -> f64 {
        self.i0
            * (self.width / self.length)
            * (self.kappa * vgs / self.ut).exp()
            * (1.0 - (-vds / self.ut).exp())
    }
}

fn check_rail(name: &'static str, value: f64, rail: f64) -> Result<(), DeviceError> {
    if value.abs() > rail {
        Err(DeviceError::OutOfRail { name, value, rail })
    } else {
        Ok(())
    }
}

/// Drain current magnitude (A).
///
/// For PMOS devices `vgs` and `vds` are the usual gate-source and
/// drain-source voltages (negative when conducting); they are flipped to
/// source-referred values internally.
pub fn drain_current(p: &MosParams, vgs: f64, vds: f64) -> Result<f64, DeviceError> {
    check_rail("V_GS", vgs, p.vdd)?;
    check_rail("V_DS", vds, p.vdd)?;
    let (vg, vd) = match p.polarity {
        Polarity::Nmos => (vgs, vds),
        Polarity::Pmos => (-vgs, -vds),
    };
    Ok(p.channel_current(vg, vd) + p.off_floor())
}

/// DPI low-pass time constant `C·U_T/(κ·I_tau)`.
pub fn tau_from_bias(c: f64, i_tau: f64, kappa: f64, ut: f64) -> Result<f64, DeviceError> {
    for (name, value) in [("C", c), ("I_tau", i_tau), ("kappa", kappa), ("U_T", ut)] {
        if !(value > 0.0) {
            return Err(DeviceError::NonPositive { name, value });
        }
    }
    Ok(c * ut / (kappa * i_tau))
}

/// One row of a device sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub polarity: Polarity,
    pub length_nm: f64,
    pub vgs_v: f64,
    pub id_a: f64,
}

/// `|V_GS|` sweep at fixed `|V_DS|` for each length, mirroring a
/// subthreshold I_D–V_GS characterisation.
pub fn sweep(
    base: &MosParams,
    lengths: &[f64],
    vgs_max: f64,
    steps: usize,
    vds: f64,
) -> Result<Vec<SweepPoint>, DeviceError> {
    let sign = match base.polarity {
        Polarity::Nmos => 1.0,
        Polarity::Pmos => -1.0,
    };
    let mut out = Vec::with_capacity(lengths.len() * (steps + 1));
    for &l in lengths {
        let p = base.with_length(l);
        p.validate()?;
        for k in 0..=steps {
            let v = vgs_max * k as f64 / steps.max(1) as f64;
            out.push(SweepPoint {
                polarity: p.polarity,
                length_nm: (l * 1e15).round() / 1e6,
                vgs_v: v,
                id_a: drain_current(&p, sign * v, sign * vds)?,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_drain_bias_leaves_only_floor() {
        let p = MosParams::nmos();
        let i = drain_current(&p, 0.3, 0.0).unwrap();
        assert_eq!(i, p.off_floor());
        assert_eq!(p.channel_current(0.3, 0.0), 0.0);
    }

    #[test]
    fn decade_per_swing() {
        let p = MosParams::nmos();
        let dv = std::f64::consts::LN_10 * p.ut / p.kappa;
        let a = p.channel_current(0.1, 0.5);
        let b = p.channel_current(0.1 + dv, 0.5);
        assert!((b / a - 10.0).abs() / 10.0 < 1e-9);
    }

    #[test]
    fn longer_channel_leaks_less() {
        for base in [MosParams::nmos(), MosParams::pmos()] {
            let short = base.with_length(30e-9);
            let long = base.with_length(200e-9);
            let vds = if base.polarity == Polarity::Nmos { 0.5 } else { -0.5 };
            assert!(
                drain_current(&short, 0.0, vds).unwrap() > drain_current(&long, 0.0, vds).unwrap()
            );
        }
    }

    #[test]
    fn default_floor_targets() {
        let f = LeakageFloor::default();
        assert!((f.at(28e-9) - 10e-12).abs() < 1e-18);
        assert!(f.at(200e-9) < 0.1e-12);
    }

    #[test]
    fn rails_are_enforced() {
        let p = MosParams::nmos();
        let err = drain_current(&p, 1.2, 0.5).unwrap_err();
        assert!(err.to_string().contains("V_GS"));
        assert!(matches!(
            drain_current(&p, 0.2, -1.01),
            Err(DeviceError::OutOfRail { name: "V_DS", .. })
        ));
    }

    #[test]
    fn pmos_uses_flipped_voltages() {
        let p = MosParams::pmos();
        let on = drain_current(&p, -0.3, -0.5).unwrap();
        let off = drain_current(&p, 0.0, -0.5).unwrap();
        assert!(on > off && off > 0.0);
    }

    #[test]
    fn tau_examples() {
        let tau = tau_from_bias(1e-12, 3.7e-12, 0.7, UT_300K).unwrap();
        assert!((tau - 10e-3).abs() < 0.05e-3, "tau = {tau}");
        let t1 = tau_from_bias(1e-12, 2e-12, 0.7, UT_300K).unwrap();
        let t2 = tau_from_bias(1e-12, 4e-12, 0.7, UT_300K).unwrap();
        assert_eq!(t1 / 2.0, t2);
        let half = tau_from_bias(0.5e-12, 2e-12, 0.7, UT_300K).unwrap();
        assert!((half - t1 / 2.0).abs() < 1e-18);
        assert!(tau_from_bias(0.0, 1e-12, 0.7, UT_300K).is_err());
        assert!(tau_from_bias(1e-12, -1e-12, 0.7, UT_300K).is_err());
    }

    #[test]
    fn saturation_beyond_four_ut() {
        let p = MosParams::nmos();
        let sat = p.channel_current(0.2, 1.0) + p.off_floor();
        let i = drain_current(&p, 0.2, 4.0 * p.ut + 1e-6).unwrap();
        assert!((sat - i) / sat < 0.02);
    }

    #[test]
    fn sweep_shape() {
        let pts = sweep(&MosParams::pmos(), &[60e-9, 200e-9], 0.4, 8, 0.5).unwrap();
        assert_eq!(pts.len(), 18);
        assert!(pts.windows(2).take(8).all(|w| w[1].id_a > w[0].id_a));
    }
}
