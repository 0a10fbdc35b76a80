use nmsim_core::neuron::{
    behaviors, firing_rate, lif_rate, nmda_gate, simulate, Kernel, Neuron, NeuronParams,
    RateOptions, Stimulus, SynapseParams,
};
use proptest::prelude::*;

fn rate(p: &NeuronParams) -> f64 {
    let opts = RateOptions {
        warmup: 0.05,
        ..RateOptions::default()
    };
    firing_rate(p, &SynapseParams::default(), &Stimulus::Dc, 0.5, &opts)
        .unwrap()
        .rate_hz
}

#[test]
fn rate_monotone_on_grid() {
    let v_ts = [-0.054, -0.052, -0.050, -0.048, -0.046];
    let t_rfrs = [1e-3, 2e-3, 4e-3, 6e-3, 8e-3];
    let i_dcs = [1.2e-12, 1.6e-12, 2.4e-12, 4e-12, 8e-12];
    let mut grid = [[[0.0; 5]; 5]; 5];
    for (a, &v_t) in v_ts.iter().enumerate() {
        for (b, &t_rfr) in t_rfrs.iter().enumerate() {
            for (c, &i_dc) in i_dcs.iter().enumerate() {
                grid[a][b][c] = rate(&NeuronParams {
                    v_t,
                    t_rfr,
                    i_dc,
                    ..NeuronParams::default()
                });
            }
        }
    }
    for a in 0..5 {
        for b in 0..5 {
            for c in 0..5 {
                let r = grid[a][b][c];
                if a + 1 < 5 {
                    assert!(grid[a + 1][b][c] <= r, "V_T at {a},{b},{c}");
                }
                if b + 1 < 5 {
                    assert!(grid[a][b + 1][c] <= r, "t_rfr at {a},{b},{c}");
                }
                if c + 1 < 5 {
                    assert!(grid[a][b][c + 1] >= r, "I_dc at {a},{b},{c}");
                }
            }
        }
    }
    assert!(grid[0][0][4] > grid[4][4][0]);
}

#[test]
fn euler_step_refinement_keeps_spike_counts() {
    let mut panels = behaviors::all_panels().unwrap();
    panels.push(behaviors::threshold_panel(5));
    for panel in &panels {
        for s in &panel.settings {
            let dt = 10e-6;
            let coarse = simulate(&s.params, &s.synapses, &panel.stimulus, 1.0, dt, None).unwrap();
            let fine = simulate(&s.params, &s.synapses, &panel.stimulus, 1.0, dt / 10.0, None).unwrap();
            let diff = coarse.len() as i64 - fine.len() as i64;
            assert!(diff.abs() <= 1, "{} {}: {} vs {}", panel.name, s.label, coarse.len(), fine.len());
        }
    }
}

#[test]
fn silent_neuron_reports_zero_with_flag() {
    let p = NeuronParams {
        i_dc: 0.0,
        ..NeuronParams::default()
    };
    let r = firing_rate(&p, &SynapseParams::default(), &Stimulus::Dc, 0.5, &RateOptions::default()).unwrap();
    assert!(r.silent);
    assert_eq!(r.rate_hz, 0.0);
}

#[test]
fn inhibition_lowers_rate() {
    let p = NeuronParams {
        i_dc: 3e-12,
        ..NeuronParams::default()
    };
    let base = rate(&p);
    let inh = Stimulus::Regular {
        kernel: Kernel::Fipsc,
        rate_hz: 100.0,
    };
    let opts = RateOptions {
        warmup: 0.05,
        ..RateOptions::default()
    };
    let with = firing_rate(&p, &SynapseParams::default(), &inh, 0.5, &opts).unwrap().rate_hz;
    assert!(with < base, "{with} vs {base}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lif_limit_matches_closed_form(scale in 1.2f64..6.0, t_rfr in 0.5e-3f64..5e-3) {
        let mut p = NeuronParams {
            delta_t: 0.0,
            a: 0.0,
            b: 0.0,
            t_rfr,
            ..NeuronParams::default()
        };
        p.v_reset = p.e_l;
        p.i_dc = scale * p.g_l * (p.v_t - p.e_l);
        let opts = RateOptions { dt: p.tau_m() / 1000.0, warmup: 0.0 };
        let closed = lif_rate(&p);
        let window = (40.0 / closed).max(0.2);
        let spikes = simulate(&p, &SynapseParams::default(), &Stimulus::Dc, window, opts.dt, None).unwrap();
        let isi = (spikes[spikes.len() - 1] - spikes[0]) / (spikes.len() - 1) as f64;
        prop_assert!((1.0 / isi / closed - 1.0).abs() < 0.01, "{} vs {}", 1.0 / isi, closed);
    }

    #[test]
    fn refractory_clamp_holds(rate_hz in 50.0f64..2000.0, w in 0.0f64..200e-12, i_dc in 0.0f64..50e-12, seed in 0u64..1000) {
        let p = NeuronParams { i_dc, ..NeuronParams::default() };
        let mut s = SynapseParams::default();
        s.fepsc.weight = w;
        let stim = Stimulus::Poisson { kernel: Kernel::Fepsc, rate_hz, seed };
        let spikes = simulate(&p, &s, &stim, 0.2, 10e-6, None).unwrap();
        for pair in spikes.windows(2) {
            prop_assert!(pair[1] - pair[0] >= p.t_rfr - 1e-12);
        }
    }

    #[test]
    fn kernels_stay_nonnegative(inputs in prop::collection::vec((0usize..4, 0.0f64..0.1), 1..40), probe in 0.0f64..0.2) {
        let mut n = Neuron::new(NeuronParams::default(), SynapseParams::default()).unwrap();
        let mut times: Vec<(usize, f64)> = inputs;
        times.sort_by(|a, b| a.1.total_cmp(&b.1));
        for (k, t) in times {
            n.synaptic_input(Kernel::ALL[k], t);
        }
        for k in Kernel::ALL {
            let i = n.kernel_current_at(k, 0.1 + probe);
            prop_assert!(i >= 0.0);
        }
    }

    #[test]
    fn gate_is_bounded(v in -10.0f64..10.0, width in 1e-4f64..0.1) {
        let p = NeuronParams { v_gate_width: width, ..NeuronParams::default() };
        let g = nmda_gate(v, &p);
        prop_assert!((0.0..=1.0).contains(&g));
    }
}
