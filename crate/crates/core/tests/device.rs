use nmsim_core::device::{drain_current, sweep, tau_from_bias, DeviceError, MosParams, Polarity, UT_300K};
use proptest::prelude::*;

fn at(l: f64) -> MosParams {
    MosParams::nmos().with_length(l)
}

#[test]
fn zero_drain_bias_leaves_only_the_floor() {
    for l in [28e-9, 100e-9, 500e-9] {
        let p = at(l);
        for vgs in [0.0, 0.3, 0.8] {
            assert_eq!(drain_current(&p, vgs, 0.0).unwrap(), p.off_floor());
        }
    }
}

#[test]
fn decade_per_slope_step() {
    let p = MosParams::nmos();
    let step = 10f64.ln() * p.ut / p.kappa;
    let a = p.channel_current(0.2, 0.5);
    let b = p.channel_current(0.2 + step, 0.5);
    assert!((b / a / 10.0 - 1.0).abs() < 1e-9);
}

#[test]
fn shorter_channel_leaks_more() {
    let i = |l| drain_current(&at(l), 0.0, 0.5).unwrap();
    assert!(i(28e-9) > i(60e-9));
    assert!(i(60e-9) > i(200e-9));
    assert!(at(28e-9).off_floor() > 5e-12);
    assert!(at(200e-9).off_floor() < 0.1e-12);
}

#[test]
fn pmos_mirrors_nmos() {
    let n = MosParams::nmos();
    let p = MosParams {
        polarity: Polarity::Pmos,
        ..n
    };
    let a = drain_current(&n, 0.3, 0.4).unwrap();
    let b = drain_current(&p, -0.3, -0.4).unwrap();
    assert_eq!(a, b);
}

#[test]
fn out_of_rail_is_named() {
    let err = drain_current(&MosParams::nmos(), 1.2, 0.1).unwrap_err();
    assert!(matches!(err, DeviceError::OutOfRail { name: "V_GS", .. }));
    assert!(err.to_string().contains("V_GS"));
    let err = drain_current(&MosParams::nmos(), 0.2, -1.5).unwrap_err();
    assert!(matches!(err, DeviceError::OutOfRail { name: "V_DS", .. }));
}

#[test]
fn tau_mapping() {
    let tau = tau_from_bias(1e-12, 3.7e-12, 0.7, UT_300K).unwrap();
    let oracle = 1e-12 * 0.02585 / (0.7 * 3.7e-12);
    assert!((tau - oracle).abs() < 1e-15);
    assert!((tau - 10e-3).abs() < 0.1e-3);
    assert_eq!(tau_from_bias(1e-12, 7.4e-12, 0.7, UT_300K).unwrap(), tau / 2.0);
    assert_eq!(tau_from_bias(0.5e-12, 3.7e-12, 0.7, UT_300K).unwrap(), tau / 2.0);
    assert!(tau_from_bias(0.0, 1e-12, 0.7, UT_300K).is_err());
    assert!(tau_from_bias(1e-12, -1e-12, 0.7, UT_300K).is_err());
}

#[test]
fn sweep_rows_cover_every_length() {
    let rows = sweep(&MosParams::nmos(), &[100e-9, 200e-9], 1.0, 10, 0.5).unwrap();
    assert_eq!(rows.len(), 22);
    assert_eq!(rows[0].vgs_v, 0.0);
    assert_eq!(rows[10].vgs_v, 1.0);
    assert_eq!(rows[11].length_nm, 200.0);
}

proptest! {
    #[test]
    fn strictly_increasing_in_vgs(v in 0.0f64..0.95, dv in 1e-3f64..0.05, vds in 1e-3f64..1.0, l in 28e-9f64..1e-6) {
        let p = at(l);
        prop_assert!(drain_current(&p, v + dv, vds).unwrap() > drain_current(&p, v, vds).unwrap());
    }

    #[test]
    fn subthreshold_swing(v in 0.0f64..0.9, vds in 0.01f64..1.0) {
        let p = MosParams::nmos();
        let h = 1e-6;
        let slope = (p.channel_current(v + h, vds).log10() - p.channel_current(v - h.min(v), vds).log10())
            / (h + h.min(v));
        let oracle = p.kappa / (p.ut * 10f64.ln());
        prop_assert!((slope / oracle - 1.0).abs() < 1e-6);
    }

    #[test]
    fn saturates_beyond_four_ut(v in 0.0f64..0.9, k in 4.0f64..30.0) {
        let p = MosParams::nmos();
        let sat = p.channel_current(v, 1.0);
        let vds = (k * p.ut).min(1.0);
        prop_assert!(p.channel_current(v, vds) >= 0.98 * sat);
    }

    #[test]
    fn floor_nonincreasing_in_length(l in 1e-9f64..2e-6, dl in 0.0f64..1e-6) {
        let f = MosParams::nmos().leakage;
        prop_assert!(f.at(l + dl) <= f.at(l));
    }
}
