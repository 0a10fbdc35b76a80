//! Binary CAM holding one neuron's synapse tags, with a pre-charge-high
//! match-line energy model: every word line is pre-charged on each search
//! and each mismatching word discharges its line.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CamError {
    #[error("tag {tag:#x} does not fit in {bits} bits")]
    TagOutOfRange { tag: u32, bits: u32 },
    #[error("word index {index} out of range (array has {words} words)")]
    IndexOutOfRange { index: usize, words: usize },
    #[error("invalid CAM geometry: {0}")]
    Geometry(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CamConfig {
    pub n_words: usize,
    pub word_bits: u32,
    /// Area of one bit cell (µm²).
    pub cell_area_um2: f64,
    /// Pre-charge energy per word per search (J).
    pub e_precharge_j: f64,
    /// Discharge energy per mismatching word per search (J).
    pub e_discharge_j: f64,
}

impl Default for CamConfig {
    fn default() -> Self {
        Self {
            n_words: 64,
            word_bits: 12,
            cell_area_um2: 0.25,
            e_precharge_j: 1e-15,
            e_discharge_j: 2e-15,
        }
    }
}

impl CamConfig {
    pub fn validate(&self) -> Result<(), CamError> {
        if self.n_words == 0 || self.word_bits == 0 || self.word_bits > 32 {
            return Err(CamError::Geometry(format!(
                "need n_words > 0 and word_bits in 1..=32, got {} x {}",
                self.n_words, self.word_bits
            )));
        }
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if !(self.cell_area_um2 > 0.0 && self.cell_area_um2.is_finite())
            || !finite_nonneg(self.e_precharge_j)
            || !finite_nonneg(self.e_discharge_j)
        {
            return Err(CamError::Geometry(
                "cell area must be positive and energies non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Energy of one search that finds `matches` matching words.
    pub fn search_energy(&self, matches: usize) -> f64 {
        self.n_words as f64 * self.e_precharge_j
            + (self.n_words - matches) as f64 * self.e_discharge_j
    }

    pub fn area_um2(&self) -> f64 {
        cam_area(self.n_words, self.word_bits, self.cell_area_um2)
    }
}

/// Array area in µm².
pub fn cam_area(n_words: usize, word_bits: u32, cell_area_um2: f64) -> f64 {
    n_words as f64 * word_bits as f64 * cell_area_um2
}

/// Cell area in µm² for a cell of `f_squared` feature-size squares at
/// feature size `feature_um`.
pub fn cell_area_from_f2(f_squared: f64, feature_um: f64) -> f64 {
    f_squared * feature_um * feature_um
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CamCounters {
    pub searches: u64,
    pub matches: u64,
    pub energy_j: f64,
}

/// Unprogrammed words hold no tag and never match.
#[derive(Debug, Clone, PartialEq)]
pub struct CamArray {
    config: CamConfig,
    words: Vec<Option<u32>>,
    counters: CamCounters,
}

impl CamArray {
    pub fn new(config: CamConfig) -> Result<Self, CamError> {
        config.validate()?;
        Ok(Self {
            words: vec![None; config.n_words],
            config,
            counters: CamCounters::default(),
        })
    }

    pub fn config(&self) -> &CamConfig {
        &self.config
    }

    pub fn words(&self) -> &[Option<u32>] {
        &self.words
    }

    pub fn counters(&self) -> CamCounters {
        self.counters
    }

    fn check_tag(&self, tag: u32) -> Result<(), CamError> {
        if self.config.word_bits < 32 && tag >> self.config.word_bits != 0 {
            return Err(CamError::TagOutOfRange {
                tag,
                bits: self.config.word_bits,
            });
        }
        Ok(())
    }

    fn check_index(&self, index: usize) -> Result<(), CamError> {
        if index >= self.words.len() {
            return Err(CamError::IndexOutOfRange {
                index,
                words: self.words.len(),
            });
        }
        Ok(())
    }

    pub fn program(&mut self, index: usize, tag: u32) -> Result<(), CamError> {
        self.check_index(index)?;
        self.check_tag(tag)?;
        self.words[index] = Some(tag);
        Ok(())
    }

    pub fn erase(&mut self, index: usize) -> Result<(), CamError> {
        self.check_index(index)?;
        self.words[index] = None;
        Ok(())
    }

    /// Indices whose stored word equals `tag`.
    pub fn search(&mut self, tag: u32) -> Result<Vec<usize>, CamError> {
        self.search_masked(tag, u32::MAX)
    }

    /// Like [`search`](Self::search) but compares only the bit columns set
    /// in `compare_mask`; the remaining columns are read out, not matched.
    pub fn search_masked(&mut self, key: u32, compare_mask: u32) -> Result<Vec<usize>, CamError> {
        self.check_tag(key)?;
        let hits: Vec<usize> = self
            .words
            .iter()
            .enumerate()
            .filter(|(_, w)| matches!(w, Some(v) if (v ^ key) & compare_mask == 0))
            .map(|(i, _)| i)
            .collect();
        self.counters.searches += 1;
        self.counters.matches += hits.len() as u64;
        self.counters.energy_j += self.config.search_energy(hits.len());
        Ok(hits)
    }
}
