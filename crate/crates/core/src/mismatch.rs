//! Device-mismatch Monte Carlo over neuron parameters.
//!
//! Each mismatched parameter is drawn as `p·exp(σ·z)` with `z` standard
//! normal. Draws come from a keyed ChaCha stream: the key is the seed, the
//! stream id is the run index and the word position is derived from the
//! parameter id, so any `(seed, run, parameter)` triple is reproducible on
//! its own and runs can execute in any order or on any thread.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::neuron::{self, NeuronError, NeuronParams, RateOptions, Stimulus, SynapseParams};

/// Neuron parameters subject to mismatch. The discriminant is the
/// parameter id used to key the random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MismatchParam {
    /// Injection current through the DC bias transistor.
    IDc = 0,
    /// Leak conductance (leak bias current).
    GLeak = 1,
    /// Distance `V_T − E_L` (threshold bias current).
    ThresholdGap = 2,
    /// Refractory period (refractory bias current).
    TRfr = 3,
    /// Spike sharpness.
    DeltaT = 4,
    /// Adaptation increment (AHP gain).
    AdaptationB = 5,
}

impl MismatchParam {
    fn apply(self, p: &mut NeuronParams, factor: f64) {
        match self {
            MismatchParam::IDc => p.i_dc *= factor,
            MismatchParam::GLeak => p.g_l *= factor,
            MismatchParam::ThresholdGap => p.v_t = p.e_l + (p.v_t - p.e_l) * factor,
            MismatchParam::TRfr => p.t_rfr *= factor,
            MismatchParam::DeltaT => p.delta_t *= factor,
            MismatchParam::AdaptationB => p.b *= factor,
        }
    }
}

/// Global sigma multiplier fitted so the default operating point shows a
/// 5.86 % relative spread in firing rate over 500 runs.
pub const DEFAULT_SIGMA_SCALE: f64 = 0.0536;

pub fn default_sigmas() -> BTreeMap<MismatchParam, f64> {
    BTreeMap::from([
        (MismatchParam::IDc, 1.0),
        (MismatchParam::GLeak, 1.0),
        (MismatchParam::ThresholdGap, 0.5),
        (MismatchParam::TRfr, 1.0),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MismatchSpec {
    /// Relative lognormal sigma per parameter, before scaling.
    pub sigmas: BTreeMap<MismatchParam, f64>,
    /// Global multiplier applied to every sigma.
    pub sigma_scale: f64,
    pub n_runs: usize,
    pub seed: u64,
}

impl Default for MismatchSpec {
    fn default() -> Self {
        Self {
            sigmas: default_sigmas(),
            sigma_scale: DEFAULT_SIGMA_SCALE,
            n_runs: 500,
            seed: 1,
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum MismatchError {
    #[error("sigma for {0:?} must be >= 0")]
    NegativeSigma(MismatchParam),
    #[error("sigma_scale must be >= 0")]
    NegativeScale,
    #[error("need at least {need} runs, got {got}")]
    TooFewRuns { need: usize, got: usize },
    #[error("mismatched parameters are invalid in run {run}: {source}")]
    InvalidSample { run: usize, source: NeuronError },
    #[error(transparent)]
    Neuron(#[from] NeuronError),
    #[error("calibration did not converge: {0}")]
    Calibration(String),
}

impl MismatchSpec {
    pub fn validate(&self) -> Result<(), MismatchError> {
        if let Some((&p, _)) = self.sigmas.iter().find(|(_, &s)| !(s >= 0.0)) {
            return Err(MismatchError::NegativeSigma(p));
        }
        if !(self.sigma_scale >= 0.0) {
            return Err(MismatchError::NegativeScale);
        }
        if self.n_runs < 1 {
            return Err(MismatchError::TooFewRuns {
                need: 1,
                got: self.n_runs,
            });
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            sigma_scale: self.sigma_scale * factor,
            ..self.clone()
        }
    }
}

/// Standard normal draw for one `(seed, run, parameter)` key.
pub fn keyed_normal(seed: u64, run: u64, param_id: u32) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng.set_word_pos((param_id as u128) << 32);
    rng.sample(StandardNormal)
}

/// Mismatched copy of `nominal` for run `run`.
pub fn sample_params(nominal: &NeuronParams, spec: &MismatchSpec, run: usize) -> NeuronParams {
    let mut p = *nominal;
    for (&param, &sigma) in &spec.sigmas {
        let s = sigma * spec.sigma_scale;
        if s == 0.0 {
            continue;
        }
        let z = keyed_normal(spec.seed, run as u64, param as u32);
        param.apply(&mut p, (s * z).exp());
    }
    p
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateStats {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std_dev: f64,
    /// `std_dev / mean`; zero when the mean is zero.
    pub relative_error: f64,
    pub samples: Vec<f64>,
}

impl RateStats {
    pub fn from_samples(samples: Vec<f64>) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let std_dev = var.sqrt();
        let relative_error = if mean != 0.0 { std_dev / mean } else { 0.0 };
        Self {
            mean,
            std_dev,
            relative_error,
            samples,
        }
    }

    /// Equal-width histogram rows `(bin_low, bin_high, count)`.
    pub fn histogram(&self, bins: usize) -> Vec<(f64, f64, usize)> {
        let bins = bins.max(1);
        let lo = self.samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            return Vec::new();
        }
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let mut counts = vec![0usize; bins];
        for &x in &self.samples {
            let i = (((x - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .map(|(i, c)| (lo + width * i as f64, lo + width * (i + 1) as f64, c))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McOutcome {
    pub stats: RateStats,
    /// Runs that produced no spikes; included in the statistics as 0 Hz.
    pub silent_runs: Vec<usize>,
}

/// Operating conditions of a Monte Carlo sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct McSetup {
    pub nominal: NeuronParams,
    pub synapses: SynapseParams,
    pub stimulus: Stimulus,
    /// Measurement window per run (s).
    pub window: f64,
    pub rate: RateOptions,
}

impl Default for McSetup {
    fn default() -> Self {
        Self {
            nominal: NeuronParams::default(),
            synapses: SynapseParams::default(),
            stimulus: Stimulus::Dc,
            window: 2.0,
            rate: RateOptions::default(),
        }
    }
}

pub fn monte_carlo_rates(setup: &McSetup, spec: &MismatchSpec) -> Result<McOutcome, MismatchError> {
    spec.validate()?;
    if spec.n_runs < 2 {
        return Err(MismatchError::TooFewRuns {
            need: 2,
            got: spec.n_runs,
        });
    }
    let results: Vec<Result<neuron::RateMeasurement, MismatchError>> = (0..spec.n_runs)
        .into_par_iter()
        .map(|run| {
            let p = sample_params(&setup.nominal, spec, run);
            p.validate()
                .map_err(|source| MismatchError::InvalidSample { run, source })?;
            Ok(neuron::firing_rate(
                &p,
                &setup.synapses,
                &setup.stimulus,
                setup.window,
                &setup.rate,
            )?)
        })
        .collect();
    let mut samples = Vec::with_capacity(spec.n_runs);
    let mut silent_runs = Vec::new();
    for (run, r) in results.into_iter().enumerate() {
        let m = r?;
        if m.silent {
            silent_runs.push(run);
        }
        samples.push(m.rate_hz);
    }
    Ok(McOutcome {
        stats: RateStats::from_samples(samples),
        silent_runs,
    })
}

/// Precise rate of the nominal neuron from its mean interspike interval.
pub fn nominal_rate(setup: &McSetup) -> Result<f64, MismatchError> {
    let spikes = neuron::simulate(
        &setup.nominal,
        &setup.synapses,
        &setup.stimulus,
        setup.rate.warmup + setup.window,
        setup.rate.dt,
        None,
    )?;
    let kept: Vec<f64> = spikes.into_iter().filter(|&t| t > setup.rate.warmup).collect();
    if kept.len() < 2 {
        return Ok(0.0);
    }
    Ok((kept.len() - 1) as f64 / (kept[kept.len() - 1] - kept[0]))
}

/// Bisects the DC drive so the nominal neuron fires at `target_hz`.
pub fn calibrate_drive(setup: &McSetup, target_hz: f64) -> Result<f64, MismatchError> {
    let rate_at = |i: f64| {
        let mut s = setup.clone();
        s.nominal.i_dc = i;
        nominal_rate(&s)
    };
    let mut lo = setup.nominal.g_l * (setup.nominal.v_t - setup.nominal.e_l) * 0.5;
    let mut hi = lo * 2.0;
    let mut guard = 0;
    while rate_at(hi)? < target_hz {
        hi *= 2.0;
        guard += 1;
        if guard > 40 {
            return Err(MismatchError::Calibration("drive search diverged".into()));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if rate_at(mid)? < target_hz {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) / hi < 1e-6 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Fits `sigma_scale` so the Monte Carlo relative error equals `target`.
/// The seed is held fixed so successive evaluations share random numbers.
pub fn calibrate_sigma_scale(
    setup: &McSetup,
    spec: &MismatchSpec,
    target: f64,
) -> Result<f64, MismatchError> {
    let mut scale = if spec.sigma_scale > 0.0 { spec.sigma_scale } else { 0.05 };
    for _ in 0..12 {
        let trial = MismatchSpec {
            sigma_scale: scale,
            ..spec.clone()
        };
        let rel = monte_carlo_rates(setup, &trial)?.stats.relative_error;
        if rel <= 0.0 {
            return Err(MismatchError::Calibration("no spread at nonzero sigma".into()));
        }
        if ((rel - target) / target).abs() < 1e-3 {
            return Ok(scale);
        }
        scale *= target / rel;
    }
    Err(MismatchError::Calibration("sigma scale did not settle".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_returns_nominal() {
        let spec = MismatchSpec {
            sigma_scale: 0.0,
            ..MismatchSpec::default()
        };
        let nominal = NeuronParams::default();
        assert_eq!(sample_params(&nominal, &spec, 17), nominal);
    }

    #[test]
    fn same_key_same_draw() {
        let spec = MismatchSpec::default();
        let n = NeuronParams::default();
        assert_eq!(sample_params(&n, &spec, 3), sample_params(&n, &spec, 3));
        assert_ne!(sample_params(&n, &spec, 3), sample_params(&n, &spec, 4));
    }

    #[test]
    fn lognormal_spread_matches_sigma() {
        let spec = MismatchSpec {
            sigmas: BTreeMap::from([(MismatchParam::IDc, 0.05)]),
            sigma_scale: 1.0,
            n_runs: 100_000,
            seed: 11,
        };
        let n = NeuronParams::default();
        let logs: Vec<f64> = (0..spec.n_runs)
            .map(|r| (sample_params(&n, &spec, r).i_dc / n.i_dc).ln())
            .collect();
        let s = RateStats::from_samples(logs);
        assert!((s.std_dev - 0.05).abs() / 0.05 < 0.02, "std {}", s.std_dev);
        assert!(s.mean.abs() < 0.001);
    }

    #[test]
    fn draws_are_independent_across_parameters() {
        let a: Vec<f64> = (0..2000).map(|r| keyed_normal(5, r, 0)).collect();
        let b: Vec<f64> = (0..2000).map(|r| keyed_normal(5, r, 1)).collect();
        let corr = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / 2000.0;
        assert!(corr.abs() < 0.1);
    }

    #[test]
    fn sample_statistics_use_n_minus_one() {
        let s = RateStats::from_samples(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std_dev - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(s.relative_error, s.std_dev / s.mean);
    }

    #[test]
    fn histogram_counts_every_sample() {
        let s = RateStats::from_samples((0..100).map(|i| i as f64).collect());
        let h = s.histogram(7);
        assert_eq!(h.len(), 7);
        assert_eq!(h.iter().map(|r| r.2).sum::<usize>(), 100);
        assert_eq!(h[0].0, 0.0);
        assert!((h[6].1 - 99.0).abs() < 1e-9);
    }

    #[test]
    fn zero_sigma_has_zero_spread() {
        let setup = McSetup {
            window: 0.5,
            ..McSetup::default()
        };
        let spec = MismatchSpec {
            sigma_scale: 0.0,
            n_runs: 8,
            ..MismatchSpec::default()
        };
        let out = monte_carlo_rates(&setup, &spec).unwrap();
        assert_eq!(out.stats.std_dev, 0.0);
        assert!(out.silent_runs.is_empty());
    }

    #[test]
    fn permutation_invariance() {
        let s1 = RateStats::from_samples(vec![90.0, 95.5, 88.25, 101.0]);
        let s2 = RateStats::from_samples(vec![101.0, 88.25, 90.0, 95.5]);
        assert!((s1.mean - s2.mean).abs() < 1e-12);
        assert!((s1.std_dev - s2.std_dev).abs() < 1e-12);
    }

    #[test]
    fn negative_sigma_rejected() {
        let mut spec = MismatchSpec::default();
        spec.sigmas.insert(MismatchParam::GLeak, -0.1);
        assert!(spec.validate().is_err());
        let spec = MismatchSpec {
            n_runs: 1,
            ..MismatchSpec::default()
        };
        assert!(monte_carlo_rates(&McSetup::default(), &spec).is_err());
    }
}
