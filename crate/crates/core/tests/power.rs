use nmsim_core::config::Config;
use nmsim_core::network::{run_network, RunOptions};
use nmsim_core::power::{
    buffer_power_curve, buffer_power_model, chip_report, EnergyLedger, ReportInputs, Units,
    TABLE_FIELDS,
};
use proptest::prelude::*;

fn inputs(cfg: &Config) -> ReportInputs<'_> {
    ReportInputs {
        neuron: &cfg.neuron,
        cam: &cfg.cam,
        fabric: &cfg.fabric,
        power: &cfg.power,
        neurons_per_core: cfg.network.neurons_per_core,
        n_cores: cfg.network.n_cores,
        seed: cfg.engine.seed,
    }
}

fn bundled(name: &str) -> Config {
    let path = format!("{}/../../configs/{name}.toml", env!("CARGO_MANIFEST_DIR"));
    Config::load(path.as_ref(), &[]).unwrap()
}

#[test]
fn every_bundled_config_loads() {
    let dir = format!("{}/../../configs", env!("CARGO_MANIFEST_DIR"));
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = Config::load(&path, &[]).unwrap_or_else(|e| panic!("{e}"));
            assert_eq!(Config::from_toml(&cfg.to_toml(), "rt", &[]).unwrap(), cfg);
            n += 1;
        }
    }
    assert!(n >= 4);
}

#[test]
fn report_regenerates_from_stored_ledger() {
    let cfg = bundled("two_neuron");
    let run = run_network(
        &cfg.network,
        &cfg.neuron,
        &cfg.synapse,
        &cfg.cam,
        &cfg.fabric,
        &cfg.power,
        cfg.engine.seed,
        RunOptions::default(),
    )
    .unwrap();
    let mut stored = Vec::new();
    run.ledger.write_csv(&mut stored).unwrap();
    let loaded = EnergyLedger::read_csv(stored.as_slice()).unwrap();
    assert_eq!(loaded, run.ledger);

    let direct = chip_report(&inputs(&cfg), &run.ledger).unwrap();
    let again = chip_report(&inputs(&cfg), &loaded).unwrap();
    for units in [Units::Si, Units::Eng] {
        assert_eq!(direct.to_text(units), again.to_text(units));
        let (mut a, mut b) = (Vec::new(), Vec::new());
        direct.write_csv(&mut a, units).unwrap();
        again.write_csv(&mut b, units).unwrap();
        assert_eq!(a, b);
    }
    for f in TABLE_FIELDS {
        assert!(direct.row(f).is_some(), "missing {f}");
    }
}

#[test]
fn idle_ledger_reports_not_applicable() {
    let cfg = Config::default();
    let report = chip_report(&inputs(&cfg), &EnergyLedger::new(1.0)).unwrap();
    assert_eq!(report.row("Energy per spike").unwrap().value, None);
    assert_eq!(report.row("Measured routing energy").unwrap().value, None);
    let text = report.to_text(Units::Si);
    assert!(text.lines().any(|l| l.starts_with("Energy per spike") && l.contains("N/A")));
    assert!(report.row("Energy per routing").unwrap().value.unwrap() > 0.0);
}

#[test]
fn simulated_curve_tracks_closed_form_below_saturation() {
    let cfg = Config::default();
    let rates = [1e2, 1e4, 1e6, 1e8];
    let pts = buffer_power_curve(&rates, &cfg.fabric, &cfg.power, 5).unwrap();
    for p in &pts {
        assert!(!p.saturated);
        let model = buffer_power_model(p.rate_hz, &cfg.fabric.energy);
        assert!((p.power_w / model - 1.0).abs() < 0.02, "{} {} {}", p.rate_hz, p.power_w, model);
    }
    assert!(pts.windows(2).all(|w| w[1].power_w > w[0].power_w));
}

proptest! {
    #[test]
    fn ledger_csv_round_trips(
        window in 1e-6f64..10.0,
        statics in prop::collection::vec(("[a-z][a-z0-9_]{0,8}", 0.0f64..1e-3), 0..6),
        dynamic in prop::collection::btree_map("[a-z]{1,6}", (0.0f64..1e-6, 0u64..1_000_000), 0..5),
        spikes in any::<u32>(),
        routed in any::<u32>(),
    ) {
        let mut l = EnergyLedger::new(window);
        for (id, w) in statics {
            l.add_static(id, w);
        }
        for (class, (j, n)) in dynamic {
            l.charge_total(&class, n, j);
        }
        l.spikes = spikes.into();
        l.routed_events = routed.into();
        let mut buf = Vec::new();
        l.write_csv(&mut buf).unwrap();
        prop_assert_eq!(EnergyLedger::read_csv(buf.as_slice()).unwrap(), l);
    }
}
