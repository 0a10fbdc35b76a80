use std::fmt::Display;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nmsim_core::config::{Config, ConfigError};
use nmsim_core::device;
use nmsim_core::fabric::{self, qdi_conformance, Fault, QdiOptions, Topology};
use nmsim_core::mismatch::{self, McSetup};
use nmsim_core::network::{self, RunOptions, Wiring};
use nmsim_core::neuron::{self, behaviors, Probe, Stimulus};
use nmsim_core::power::{self, EnergyLedger, ReportInputs, Units};

#[derive(Parser)]
#[command(name = "nmsim", version, about = "Mixed-signal neuromorphic processor simulator")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML configuration file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Replaces every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "NMSIM_OUT", default_value = "out")]
    out: PathBuf,
    /// Dotted-key override, e.g. `--set neuron.i_dc=2e-12`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Drain current versus |V_GS| for each configured channel length.
    DeviceSweep,
    /// Membrane traces for the leak, threshold, refractory and adaptation
    /// behaviours, one CSV each.
    NeuronDemo {
        #[arg(long, default_value_t = 0.5)]
        duration: f64,
        /// Record every n-th integration step.
        #[arg(long, default_value_t = 10)]
        every: usize,
    },
    /// Firing-rate spread across mismatched neuron instances.
    MonteCarlo {
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        /// Rescale sigmas so the relative error hits this value first.
        #[arg(long)]
        calibrate: Option<f64>,
    },
    /// Single-buffer power versus event rate.
    BufferPower {
        #[arg(long, value_delimiter = ',', default_value = "1e2,1e3,1e4,1e5,1e6,1e7,1e8,1e9,1.8e9")]
        rates: Vec<f64>,
    },
    /// Randomized-delay conformance trials on a fabric topology.
    QdiCheck {
        #[arg(long, value_enum, default_value_t = Shape::Pipeline)]
        topology: Shape,
        /// Stages for a pipeline, levels for a tree.
        #[arg(long, default_value_t = 4)]
        size: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 16)]
        tokens: usize,
        /// Inject an early-acknowledge fault into this process.
        #[arg(long, value_name = "PROCESS")]
        early_ack: Option<String>,
    },
    /// Full multi-core simulation of the configured network.
    RunNetwork {
        /// Also write the per-packet route trace.
        #[arg(long)]
        route_trace: bool,
    },
    /// Chip summary table from a stored energy ledger.
    Report {
        /// Ledger CSV; `<out>/ledger.csv` when omitted.
        #[arg(long)]
        ledger: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = UnitArg::Si)]
        units: UnitArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Pipeline,
    Split,
    Merge,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnitArg {
    Si,
    Eng,
}

struct Failure {
    category: &'static str,
    message: String,
}

fn fail(category: &'static str) -> impl Fn(&dyn Display) -> Failure {
    move |e| Failure {
        category,
        message: e.to_string(),
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        fail("config")(&e)
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| fail("io")(&format!("{}: {e}", path.display())))
}

fn load_config(g: &Global) -> Result<Config, Failure> {
    let mut sets = g.sets.clone();
    if let Some(s) = g.seed {
        sets.push(format!("engine.seed={s}"));
        sets.push(format!("mismatch.seed={s}"));
    }
    Ok(match &g.config {
        Some(p) => Config::load(p, &sets)?,
        None => Config::from_toml("", "<defaults>", &sets)?,
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(&cli.global)?;
    let out = &cli.global.out;
    fs::create_dir_all(out).map_err(|e| fail("io")(&format!("{}: {e}", out.display())))?;
    let seed = cfg.engine.seed;
    match cli.command {
        Command::DeviceSweep => {
            let d = &cfg.device;
            let lengths: Vec<f64> = d.lengths_nm.iter().map(|l| l * 1e-9).collect();
            let mut w = csv_writer(create(out, "device_sweep.csv")?);
            for base in [&d.nmos, &d.pmos] {
                for p in device::sweep(base, &lengths, d.vgs_max, d.steps, d.vds)
                    .map_err(|e| fail("device")(&e))?
                {
                    w.serialize(p).map_err(|e| fail("io")(&e))?;
                }
            }
            w.flush().map_err(|e| fail("io")(&e))?;
            println!("wrote {}", out.join("device_sweep.csv").display());
        }
        Command::NeuronDemo { duration, every } => {
            let panels = behaviors::all_panels().map_err(|e| fail("neuron")(&e))?;
            for panel in panels {
                let name = format!("neuron_demo_{}.csv", panel.name);
                let mut w = csv_writer(create(out, &name)?);
                w.write_record(["setting", "time_s", "v_mem_v"])
                    .map_err(|e| fail("io")(&e))?;
                for s in &panel.settings {
                    let mut rows = Vec::new();
                    let mut sink = |t: f64, v: f64| rows.push((t, v));
                    let spikes = neuron::simulate(
                        &s.params,
                        &s.synapses,
                        &panel.stimulus,
                        duration,
                        cfg.rate.dt,
                        Some(Probe {
                            every,
                            sink: &mut sink,
                        }),
                    )
                    .map_err(|e| fail("neuron")(&e))?;
                    for (t, v) in rows {
                        w.write_record([s.label.clone(), t.to_string(), v.to_string()])
                            .map_err(|e| fail("io")(&e))?;
                    }
                    println!(
                        "{} {}: {} spikes, {:.2} Hz",
                        panel.name,
                        s.label,
                        spikes.len(),
                        spikes.len() as f64 / duration
                    );
                }
                w.flush().map_err(|e| fail("io")(&e))?;
            }
        }
        Command::MonteCarlo {
            runs,
            bins,
            calibrate,
        } => {
            let setup = McSetup {
                nominal: cfg.neuron,
                synapses: cfg.synapse,
                stimulus: Stimulus::Dc,
                window: cfg.rate.window,
                rate: cfg.rate.options(),
            };
            let mut spec = cfg.mismatch.clone();
            if let Some(r) = runs {
                spec.n_runs = r;
            }
            if let Some(target) = calibrate {
                spec.sigma_scale = mismatch::calibrate_sigma_scale(&setup, &spec, target)
                    .map_err(|e| fail("mismatch")(&e))?;
                println!("calibrated sigma_scale = {}", spec.sigma_scale);
            }
            let outcome = mismatch::monte_carlo_rates(&setup, &spec).map_err(|e| fail("mismatch")(&e))?;
            let s = &outcome.stats;
            let mut w = csv_writer(create(out, "monte_carlo.csv")?);
            w.write_record(["bin_low_hz", "bin_high_hz", "count"])
                .map_err(|e| fail("io")(&e))?;
            for (lo, hi, c) in s.histogram(bins) {
                w.write_record([lo.to_string(), hi.to_string(), c.to_string()])
                    .map_err(|e| fail("io")(&e))?;
            }
            w.flush().map_err(|e| fail("io")(&e))?;
            println!(
                "runs {} mean {:.3} Hz std {:.3} Hz relative error {:.3}% silent {}",
                s.samples.len(),
                s.mean,
                s.std_dev,
                100.0 * s.relative_error,
                outcome.silent_runs.len()
            );
        }
        Command::BufferPower { rates } => {
            let points = power::buffer_power_curve(&rates, &cfg.fabric, &cfg.power, seed)
                .map_err(|e| fail("power")(&e))?;
            let mut w = csv_writer(create(out, "buffer_power.csv")?);
            w.write_record(["rate_hz", "power_w", "achieved_hz", "saturated", "model_w"])
                .map_err(|e| fail("io")(&e))?;
            for p in &points {
                let model = power::buffer_power_model(p.rate_hz, &cfg.fabric.energy);
                w.write_record([
                    p.rate_hz.to_string(),
                    p.power_w.to_string(),
                    p.achieved_hz.to_string(),
                    p.saturated.to_string(),
                    model.to_string(),
                ])
                .map_err(|e| fail("io")(&e))?;
                println!(
                    "{:>10.3e} Hz  {:>10.4e} W{}",
                    p.rate_hz,
                    p.power_w,
                    if p.saturated { "  (saturated)" } else { "" }
                );
            }
            w.flush().map_err(|e| fail("io")(&e))?;
        }
        Command::QdiCheck {
            topology,
            size,
            trials,
            tokens,
            early_ack,
        } => {
            let width = cfg.fabric.width;
            let levels = u32::try_from(size).map_err(|e| fail("usage")(&e))?;
            let topo = match topology {
                Shape::Pipeline => Topology::pipeline(size, width),
                Shape::Split => Topology::split_tree(levels, width),
                Shape::Merge => Topology::merge_tree(levels, width),
            };
            let opts = QdiOptions {
                trials,
                tokens_per_source: tokens,
                seed,
                fault: early_ack.map(|p| (p, Fault::EarlyAck)),
            };
            let delay = cfg.fabric.delay.with_mode(fabric::DelayMode::Randomized);
            let report = qdi_conformance(&topo, delay, &opts).map_err(|e| fail("fabric")(&e))?;
            let summary = format!(
                "trials {} passed {} failed {}",
                report.trials, report.passes, report.failures
            );
            println!("{summary}");
            let mut text = summary + "\n";
            if let Some(c) = &report.first_failure {
                text.push_str(&format!("first failure: trial {} seed {}: {}\n", c.trial, c.seed, c.reason));
                for line in &c.trace {
                    text.push_str(line);
                    text.push('\n');
                }
            }
            let path = out.join("qdi_report.txt");
            fs::write(&path, text).map_err(|e| fail("io")(&format!("{}: {e}", path.display())))?;
            if let Some(c) = &report.first_failure {
                return Err(fail("qdi")(&format!(
                    "{} of {} trials failed; first: {} (trace in {})",
                    report.failures,
                    report.trials,
                    c.reason,
                    path.display()
                )));
            }
        }
        Command::RunNetwork { route_trace } => {
            let net = network::run_network(
                &cfg.network,
                &cfg.neuron,
                &cfg.synapse,
                &cfg.cam,
                &cfg.fabric,
                &cfg.power,
                seed,
                RunOptions {
                    route_trace,
                    ..RunOptions::default()
                },
            )
            .map_err(|e| fail("network")(&e))?;
            net.write_raster_csv(create(out, "raster.csv")?)
                .map_err(|e| fail("io")(&e))?;
            net.ledger
                .write_csv(create(out, "ledger.csv")?)
                .map_err(|e| fail("io")(&e))?;
            Wiring::build(&cfg.network, &cfg.neuron, &cfg.synapse, &cfg.cam)
                .map_err(|e| fail("network")(&e))?
                .write_cam_csv(&cfg.network, create(out, "cam.csv")?)
                .map_err(|e| fail("io")(&e))?;
            if route_trace {
                net.write_route_trace(create(out, "route_trace.txt")?)
                    .map_err(|e| fail("io")(&e))?;
            }
            println!(
                "spikes {} packets {} dropped {} synaptic events {} mean power {:.4e} W trace {:016x}",
                net.raster.len(),
                net.events.len(),
                net.drops.len(),
                net.synaptic.len(),
                net.ledger.mean_power(),
                net.trace_hash
            );
        }
        Command::Report { ledger, units } => {
            let path = ledger.unwrap_or_else(|| out.join("ledger.csv"));
            let file = File::open(&path).map_err(|e| fail("io")(&format!("{}: {e}", path.display())))?;
            let ledger = EnergyLedger::read_csv(file).map_err(|e| fail("power")(&e))?;
            let inputs = ReportInputs {
                neuron: &cfg.neuron,
                cam: &cfg.cam,
                fabric: &cfg.fabric,
                power: &cfg.power,
                neurons_per_core: cfg.network.neurons_per_core,
                n_cores: cfg.network.n_cores,
                seed,
            };
            let report = power::chip_report(&inputs, &ledger).map_err(|e| fail("power")(&e))?;
            let units = match units {
                UnitArg::Si => Units::Si,
                UnitArg::Eng => Units::Eng,
            };
            let text = report.to_text(units);
            print!("{text}");
            let txt = out.join("report.txt");
            fs::write(&txt, &text).map_err(|e| fail("io")(&format!("{}: {e}", txt.display())))?;
            report
                .write_csv(create(out, "report.csv")?, units)
                .map_err(|e| fail("io")(&e))?;
        }
    }
    Ok(())
}

fn csv_writer(w: BufWriter<File>) -> csv::Writer<BufWriter<File>> {
    csv::Writer::from_writer(w)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = f.message.replace('\n', " ");
            eprintln!("error[{}]: {}", f.category, msg.trim());
            ExitCode::FAILURE
        }
    }
}
