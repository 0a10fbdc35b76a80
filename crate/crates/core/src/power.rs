//! Energy ledgers, simulated power curves, area roll-up and the chip
//! feature report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cam::CamConfig;
use crate::engine::Picos;
use crate::fabric::sim::Fabric;
use crate::fabric::{self, FabricConfig, FabricEnergy, FabricError, FabricSim, ProcessKind, Topology};
use crate::neuron::NeuronParams;

#[derive(Debug, Error)]
pub enum PowerError {
    #[error(transparent)]
    Fabric(#[from] FabricError),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("malformed ledger CSV: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for PowerError {
    fn from(e: csv::Error) -> Self {
        PowerError::Csv(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DynamicEntry {
    pub joules: f64,
    pub events: u64,
}

/// Static power terms plus dynamic energy accumulated per component class
/// over an observation window.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyLedger {
    pub window_s: f64,
    pub static_terms: Vec<(String, f64)>,
    pub dynamic: BTreeMap<String, DynamicEntry>,
    pub spikes: u64,
    pub routed_events: u64,
}

impl EnergyLedger {
    pub fn new(window_s: f64) -> Self {
        Self {
            window_s,
            ..Self::default()
        }
    }

    pub fn add_static(&mut self, component: impl Into<String>, watts: f64) {
        self.static_terms.push((component.into(), watts));
    }

    /// Adds `events` charges of `joules_each` to `class`; a class is
    /// assumed to use a single per-event energy.
    pub fn charge(&mut self, class: &str, events: u64, joules_each: f64) {
        let e = self.dynamic.entry(class.to_string()).or_default();
        e.events += events;
        e.joules = e.events as f64 * joules_each;
    }

    /// Adds an already-summed energy to `class`.
    pub fn charge_total(&mut self, class: &str, events: u64, joules: f64) {
        let e = self.dynamic.entry(class.to_string()).or_default();
        e.events += events;
        e.joules += joules;
    }

    pub fn static_power(&self) -> f64 {
        self.static_terms.iter().map(|(_, w)| w).sum()
    }

    pub fn dynamic_joules(&self) -> f64 {
        self.dynamic.values().map(|e| e.joules).sum()
    }

    pub fn class(&self, class: &str) -> DynamicEntry {
        self.dynamic.get(class).copied().unwrap_or_default()
    }

    pub fn mean_power(&self) -> f64 {
        if self.window_s > 0.0 {
            self.static_power() + self.dynamic_joules() / self.window_s
        } else {
            self.static_power()
        }
    }

    /// Static terms for each active fabric process and one dynamic charge
    /// per token per process, grouped by process class.
    pub fn add_fabric(&mut self, fabric: &Fabric, energy: &FabricEnergy) {
        for (kind, class) in FABRIC_CLASSES {
            let e = energy.of(kind);
            let mut tokens = 0;
            for (p, spec) in fabric.resolved().processes.iter().enumerate() {
                if spec.kind == kind {
                    self.add_static(spec.id.clone(), e.p_static_w);
                    tokens += fabric.tokens_through()[p];
                }
            }
            if tokens > 0 {
                self.charge(class, tokens, e.e_dyn_j);
            }
        }
    }

    pub fn validate(&self) -> Result<(), PowerError> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(self.window_s)
            || !self.static_terms.iter().all(|(_, w)| ok(*w))
            || !self.dynamic.values().all(|e| ok(e.joules))
        {
            return Err(PowerError::Invalid("ledger terms must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Rows `kind,component,value,count`; floats use shortest round-trip
    /// formatting so reading the file back reproduces the ledger exactly.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), PowerError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kind", "component", "value", "count"])?;
        w.write_record(["window", "", &self.window_s.to_string(), ""])?;
        w.write_record(["spikes", "", "", &self.spikes.to_string()])?;
        w.write_record(["routed", "", "", &self.routed_events.to_string()])?;
        for (id, watts) in &self.static_terms {
            w.write_record(["static", id, &watts.to_string(), ""])?;
        }
        for (class, e) in &self.dynamic {
            w.write_record(["dynamic", class, &e.joules.to_string(), &e.events.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, PowerError> {
        let mut ledger = Self::default();
        let mut r = csv::Reader::from_reader(input);
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = |what: &str| PowerError::Csv(format!("row {}: {what}", line + 2));
            let field = |i: usize| rec.get(i).ok_or_else(|| bad("missing column"));
            let float = |i: usize| -> Result<f64, PowerError> {
                field(i)?.parse().map_err(|_| bad("bad number"))
            };
            let int = |i: usize| -> Result<u64, PowerError> {
                field(i)?.parse().map_err(|_| bad("bad count"))
            };
            match field(0)? {
                "window" => ledger.window_s = float(2)?,
                "spikes" => ledger.spikes = int(3)?,
                "routed" => ledger.routed_events = int(3)?,
                "static" => ledger.static_terms.push((field(1)?.to_string(), float(2)?)),
                "dynamic" => {
                    ledger.dynamic.insert(
                        field(1)?.to_string(),
                        DynamicEntry {
                            joules: float(2)?,
                            events: int(3)?,
                        },
                    );
                }
                other => return Err(bad(&format!("unknown row kind `{other}`"))),
            }
        }
        ledger.validate()?;
        Ok(ledger)
    }
}

pub const FABRIC_CLASSES: [(ProcessKind, &str); 3] = [
    (ProcessKind::Buffer, "buffer"),
    (ProcessKind::Split, "split"),
    (ProcessKind::Merge, "merge"),
];

/// Checks that each fabric class carries exactly one charge per token per
/// process traversed.
pub fn audit_fabric(ledger: &EnergyLedger, fabric: &Fabric, energy: &FabricEnergy) -> bool {
    FABRIC_CLASSES.iter().all(|&(kind, class)| {
        let tokens: u64 = fabric
            .resolved()
            .processes
            .iter()
            .zip(fabric.tokens_through())
            .filter(|(s, _)| s.kind == kind)
            .map(|(_, &n)| n)
            .sum();
        let e = ledger.class(class);
        e.events == tokens && e.joules == tokens as f64 * energy.of(kind).e_dyn_j
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerConfig {
    /// Tokens streamed per power-curve point.
    pub curve_tokens: usize,
    /// A point is saturated when the buffer delivers less than this
    /// fraction of the offered rate.
    pub saturation_fraction: f64,
    pub n_buffer_equivalents: usize,
    pub routing_rate_hz: f64,
    pub supply_v: f64,
    /// Calibrated neuron energy per spike (J).
    pub e_spike_j: f64,
    /// Firing rate at which the spike energy is quoted (Hz).
    pub e_spike_rate_hz: f64,
    pub neuron_logic_area_um2: f64,
    /// MIM capacitance density (F/µm²).
    pub cap_density_f_per_um2: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            curve_tokens: 200,
            saturation_fraction: 0.98,
            n_buffer_equivalents: 600,
            routing_rate_hz: 1e5,
            supply_v: 1.0,
            e_spike_j: 50e-12,
            e_spike_rate_hz: 30.0,
            neuron_logic_area_um2: 20.0,
            cap_density_f_per_um2: 18e-15,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerPoint {
    pub rate_hz: f64,
    pub power_w: f64,
    pub achieved_hz: f64,
    pub saturated: bool,
    pub ledger: EnergyLedger,
}

/// Streams `tokens` tokens at `rate` through a single buffer and reads the
/// mean power off the resulting ledger.
pub fn buffer_power_point(
    rate: f64,
    fabric_cfg: &FabricConfig,
    power: &PowerConfig,
    seed: u64,
) -> Result<PowerPoint, PowerError> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(PowerError::Invalid(format!("rate must be positive, got {rate}")));
    }
    let n = power.curve_tokens;
    if n < 2 {
        return Err(PowerError::Invalid("curve_tokens must be at least 2".into()));
    }
    let topo = Topology::pipeline(1, fabric_cfg.width);
    let mut sim = FabricSim::new(&topo, fabric_cfg.delay, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = fabric::analysis::width_mask(fabric_cfg.width);
    let period = 1.0 / rate;
    for k in 0..n {
        sim.inject("src", rng.random::<u32>() & mask, Picos::from_secs(k as f64 * period))?;
    }
    sim.run_to_completion()?;
    let d = sim.fabric().deliveries();
    let span = (d[n - 1].time - d[0].time).as_secs();
    let achieved = if span > 0.0 { (n - 1) as f64 / span } else { f64::INFINITY };
    let saturated = achieved < power.saturation_fraction * rate;
    let window = n as f64 / rate.min(achieved);
    let mut ledger = EnergyLedger::new(window);
    ledger.add_fabric(sim.fabric(), &fabric_cfg.energy);
    ledger.routed_events = n as u64;
    Ok(PowerPoint {
        rate_hz: rate,
        power_w: ledger.mean_power(),
        achieved_hz: achieved.min(rate),
        saturated,
        ledger,
    })
}

pub fn buffer_power_curve(
    rates: &[f64],
    fabric_cfg: &FabricConfig,
    power: &PowerConfig,
    seed: u64,
) -> Result<Vec<PowerPoint>, PowerError> {
    rates
        .par_iter()
        .map(|&r| buffer_power_point(r, fabric_cfg, power, seed))
        .collect()
}

/// Closed-form linear model `P_static + E_dyn·r` of one buffer.
pub fn buffer_power_model(rate: f64, energy: &FabricEnergy) -> f64 {
    energy.buffer.p_static_w + energy.buffer.e_dyn_j * rate
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemEstimate {
    pub n_buffers: usize,
    pub rate_hz: f64,
    pub power_w: f64,
    pub energy_per_event_j: f64,
    pub ledger: EnergyLedger,
}

/// `n` copies of a simulated single-buffer ledger at `rate`, every routed
/// event crossing all `n` buffer equivalents.
pub fn system_routing_estimate(
    n: usize,
    rate: f64,
    fabric_cfg: &FabricConfig,
    power: &PowerConfig,
    seed: u64,
) -> Result<SystemEstimate, PowerError> {
    if n == 0 {
        return Err(PowerError::Invalid("need at least one buffer equivalent".into()));
    }
    let point = buffer_power_point(rate, fabric_cfg, power, seed)?;
    Ok(compose(n, rate, &point.ledger))
}

fn compose(n: usize, rate: f64, one: &EnergyLedger) -> SystemEstimate {
    let mut ledger = EnergyLedger::new(one.window_s);
    for i in 0..n {
        for (id, w) in &one.static_terms {
            ledger.add_static(format!("{id}#{i}"), *w);
        }
    }
    for (class, e) in &one.dynamic {
        ledger.charge_total(class, e.events * n as u64, e.joules * n as f64);
    }
    ledger.routed_events = one.routed_events;
    let power_w = ledger.mean_power();
    SystemEstimate {
        n_buffers: n,
        rate_hz: rate,
        power_w,
        energy_per_event_j: power_w / rate,
        ledger,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AreaReport {
    pub neuron_logic_um2: f64,
    pub capacitor_um2: f64,
    pub cam_um2: f64,
    pub synapse_um2: f64,
    /// The fabric area has no published basis and is left unspecified.
    pub fabric_um2: Option<f64>,
    pub per_neuron_um2: f64,
    pub per_core_um2: f64,
    pub chip_um2: f64,
}

pub fn area_report(
    neuron: &NeuronParams,
    cam: &CamConfig,
    power: &PowerConfig,
    neurons_per_core: usize,
    n_cores: usize,
) -> AreaReport {
    // Rounded to 1e-6 µm² so float noise in the capacitance sum does not show.
    let capacitor = (neuron.total_capacitance() / power.cap_density_f_per_um2 * 1e6).round() / 1e6;
    let cam_area = cam.area_um2();
    let per_neuron = power.neuron_logic_area_um2 + capacitor + cam_area;
    AreaReport {
        neuron_logic_um2: power.neuron_logic_area_um2,
        capacitor_um2: capacitor,
        cam_um2: cam_area,
        synapse_um2: cam_area / cam.n_words as f64,
        fabric_um2: None,
        per_neuron_um2: per_neuron,
        per_core_um2: per_neuron * neurons_per_core as f64,
        chip_um2: per_neuron * (neurons_per_core * n_cores) as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    /// Base SI units in scientific notation.
    #[default]
    Si,
    /// Engineering prefixes (µW, pJ, …).
    Eng,
}

pub fn format_quantity(value: f64, unit: &str, units: Units) -> String {
    if unit.is_empty() || !value.is_finite() {
        return format!("{value}");
    }
    match units {
        Units::Si => format!("{value:.4e} {unit}"),
        Units::Eng => {
            const PREFIXES: [(f64, &str); 9] = [
                (1e9, "G"),
                (1e6, "M"),
                (1e3, "k"),
                (1.0, ""),
                (1e-3, "m"),
                (1e-6, "µ"),
                (1e-9, "n"),
                (1e-12, "p"),
                (1e-15, "f"),
            ];
            let mag = value.abs();
            let (scale, p) = PREFIXES
                .iter()
                .copied()
                .find(|(s, _)| mag >= *s * 0.9995)
                .unwrap_or((1e-15, "f"));
            let (scale, p) = if value == 0.0 { (1.0, "") } else { (scale, p) };
            format!("{} {p}{unit}", trim(value / scale))
        }
    }
}

fn trim(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// One row of the feature report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub field: &'static str,
    /// `None` renders as N/A.
    pub value: Option<f64>,
    pub unit: &'static str,
    /// Free-text value for non-numeric fields.
    pub text: Option<String>,
    pub note: String,
    /// Published figures for the 180 nm CMOS and 28 nm CMOS chips.
    pub reference: [&'static str; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChipReport {
    pub rows: Vec<ReportRow>,
}

/// Everything the feature report depends on besides the run ledger.
#[derive(Debug, Clone)]
pub struct ReportInputs<'a> {
    pub neuron: &'a NeuronParams,
    pub cam: &'a CamConfig,
    pub fabric: &'a FabricConfig,
    pub power: &'a PowerConfig,
    pub neurons_per_core: usize,
    pub n_cores: usize,
    pub seed: u64,
}

/// Names of the rows that make up the published feature table.
pub const TABLE_FIELDS: [&str; 7] = [
    "Technology",
    "Supply voltage",
    "Energy per spike",
    "Energy per routing",
    "Bandwidth of routers",
    "Area of neuron",
    "Area of synapse",
];

/// Builds the feature table from a completed run's ledger. The result is a
/// pure function of its arguments.
pub fn chip_report(inputs: &ReportInputs<'_>, ledger: &EnergyLedger) -> Result<ChipReport, PowerError> {
    let ReportInputs {
        neuron,
        cam,
        fabric: fcfg,
        power,
        ..
    } = *inputs;
    let area = area_report(neuron, cam, power, inputs.neurons_per_core, inputs.n_cores);

    // Per-token buffer energy measured in the run, when there was buffer
    // traffic, else the configured value.
    let buf = ledger.class("buffer");
    let mut per_buffer = *fcfg;
    if buf.events > 0 {
        per_buffer.energy.buffer.e_dyn_j = buf.joules / buf.events as f64;
    }
    let rate = power.routing_rate_hz;
    let p_one = buffer_power_model(rate, &per_buffer.energy);
    let routing = p_one * power.n_buffer_equivalents as f64 / rate;

    let bw = fabric::throughput(
        &Topology::pipeline(1, fcfg.width),
        fcfg.delay,
        fcfg.throughput_tokens,
        inputs.seed,
    )?;

    let measured_routing = if ledger.routed_events > 0 {
        let fabric_static: f64 = ledger
            .static_terms
            .iter()
            .filter(|(id, _)| !id.starts_with("cam"))
            .map(|(_, w)| w)
            .sum();
        let fabric_dyn: f64 = FABRIC_CLASSES
            .iter()
            .map(|(_, c)| ledger.class(c).joules)
            .chain([ledger.class("cam").joules])
            .sum();
        Some((fabric_dyn + fabric_static * ledger.window_s) / ledger.routed_events as f64)
    } else {
        None
    };

    let row = |field, value, unit, note: String, reference| ReportRow {
        field,
        value,
        unit,
        text: None,
        note,
        reference,
    };
    let rows = vec![
        ReportRow {
            text: Some("28 nm FD-SOI".into()),
            ..row("Technology", None, "", String::new(), ["180 nm CMOS", "28 nm CMOS"])
        },
        row(
            "Supply voltage",
            Some(power.supply_v),
            "V",
            String::new(),
            ["1.8V", "0.7V-1.0V"],
        ),
        row(
            "Energy per spike",
            (ledger.spikes > 0).then_some(power.e_spike_j),
            "J",
            format!(
                "at {} Hz; {} spikes in run",
                power.e_spike_rate_hz, ledger.spikes
            ),
            ["883pJ @ 30Hz", "2.3nJ-30nJ"],
        ),
        row(
            "Energy per routing",
            Some(routing),
            "J",
            format!(
                "{} buffer equivalents at {} events/s",
                power.n_buffer_equivalents, rate
            ),
            ["360pJ", "230pJ"],
        ),
        row(
            "Bandwidth of routers",
            Some(bw.events_per_sec),
            "events/s",
            format!("{}-bit buffer", fcfg.width),
            ["400M Events/s", "20M Events/s"],
        ),
        row(
            "Area of neuron",
            Some(area.neuron_logic_um2),
            "µm²",
            "excluding capacitor".into(),
            ["1188um2", "64.6um2"],
        ),
        row(
            "Area of synapse",
            Some(area.synapse_um2),
            "µm²",
            format!("{} µm² CAM / {} words", area.cam_um2, cam.n_words),
            ["128.4um2", "13um2"],
        ),
        row("Capacitor area", Some(area.capacitor_um2), "µm²", "MIM overlay".into(), ["", ""]),
        row("CAM area per neuron", Some(area.cam_um2), "µm²", String::new(), ["", ""]),
        ReportRow {
            text: Some("not specified".into()),
            ..row("Fabric area", None, "µm²", "no published basis".into(), ["", ""])
        },
        row(
            "Measured routing energy",
            measured_routing,
            "J",
            format!("this run, {} routed events", ledger.routed_events),
            ["", ""],
        ),
        row("Run mean power", Some(ledger.mean_power()), "W", format!("window {} s", ledger.window_s), ["", ""]),
    ];
    Ok(ChipReport { rows })
}

impl ChipReport {
    pub fn row(&self, field: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.field == field)
    }

    fn cell(r: &ReportRow, units: Units) -> String {
        match (&r.text, r.value) {
            (Some(t), _) => t.clone(),
            (None, Some(v)) => format_quantity(v, r.unit, units),
            (None, None) => "N/A".into(),
        }
    }

    pub fn to_text(&self, units: Units) -> String {
        let cells: Vec<[String; 5]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.field.to_string(),
                    Self::cell(r, units),
                    r.reference[0].to_string(),
                    r.reference[1].to_string(),
                    r.note.clone(),
                ]
            })
            .collect();
        let header = ["field", "this work", "180nm CMOS", "28nm CMOS", "note"].map(String::from);
        let mut widths = header.clone().map(|h| h.chars().count());
        for c in &cells {
            for (w, s) in widths.iter_mut().zip(c) {
                *w = (*w).max(s.chars().count());
            }
        }
        let mut out = String::new();
        for line in std::iter::once(&header).chain(&cells) {
            let mut s = String::new();
            for (i, (cell, w)) in line.iter().zip(widths).enumerate() {
                let pad = w - cell.chars().count();
                s.push_str(cell);
                if i + 1 < line.len() {
                    s.push_str(&" ".repeat(pad + 2));
                }
            }
            let _ = writeln!(out, "{}", s.trim_end());
        }
        out
    }

    pub fn write_csv<W: Write>(&self, out: W, units: Units) -> Result<(), PowerError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["field", "value", "unit", "display", "note"])?;
        for r in &self.rows {
            let value = match (&r.text, r.value) {
                (Some(t), _) => t.clone(),
                (None, Some(v)) => v.to_string(),
                (None, None) => "N/A".into(),
            };
            w.write_record([r.field, &value, r.unit, &Self::cell(r, units), &r.note])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_power_sums_terms() {
        let mut l = EnergyLedger::new(2.0);
        l.add_static("a", 1.0);
        l.add_static("b", 0.5);
        l.charge("buffer", 4, 0.25);
        assert_eq!(l.mean_power(), 1.5 + 0.5);
    }

    #[test]
    fn ledger_csv_round_trip_is_exact() {
        let mut l = EnergyLedger::new(1.0 / 3.0);
        l.add_static("b0", 9.84e-9);
        l.charge("buffer", 7, fabric::calibrated_token_energy());
        l.charge_total("cam", 3, 0.1 + 0.2);
        l.spikes = 5;
        l.routed_events = 7;
        let mut buf = Vec::new();
        l.write_csv(&mut buf).unwrap();
        let back = EnergyLedger::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, l);
    }

    #[test]
    fn malformed_ledger_rejected() {
        let csv = "kind,component,value,count\nwindow,,abc,\n";
        assert!(EnergyLedger::read_csv(csv.as_bytes()).is_err());
        let csv = "kind,component,value,count\nbogus,,1,\n";
        assert!(EnergyLedger::read_csv(csv.as_bytes()).is_err());
    }

    #[test]
    fn engineering_format() {
        assert_eq!(format_quantity(250e-6, "W", Units::Eng), "250 µW");
        assert_eq!(format_quantity(1.8e9, "events/s", Units::Eng), "1.8 Gevents/s");
        assert_eq!(format_quantity(147e-12, "J", Units::Eng), "147 pJ");
        assert_eq!(format_quantity(0.0, "J", Units::Eng), "0 J");
        assert_eq!(format_quantity(50.0, "µm²", Units::Si), "5.0000e1 µm²");
    }

    #[test]
    fn default_area_roll_up() {
        let a = area_report(
            &NeuronParams::default(),
            &CamConfig::default(),
            &PowerConfig::default(),
            256,
            4,
        );
        assert_eq!(a.cam_um2, 192.0);
        assert_eq!(a.synapse_um2, 3.0);
        assert_eq!(a.capacitor_um2, 50.0);
        assert_eq!(a.per_neuron_um2, 262.0);
        assert_eq!(a.chip_um2, 262.0 * 1024.0);
    }
}
