use resetloop_core::closed_loop::{design_addon, LoopConfig, Plant};
use resetloop_core::fixtures::reference;
use resetloop_core::hosidf::open_loop_harmonic;
use resetloop_core::io::{parse_curves_csv, parse_trace_csv};
use resetloop_core::lti::{RationalTf, TfChain};
use resetloop_core::reset::ResetElement;
use resetloop_core::sim::{run_scenario, simulate_open_chain, SteadyOptions};

#[test]
fn add_on_settles_faster_with_lower_error() {
    let r = reference();
    let d = design_addon(&r.addon_request()).unwrap();
    let base = LoopConfig::linear(r.c_l.clone(), Plant::Model(r.plant.clone()));
    let sc = r.scenario();
    let a = run_scenario(&base, &sc).unwrap();
    let b = run_scenario(&d.loop_config, &sc).unwrap();
    for (ma, mb) in a.metrics.iter().zip(&b.metrics) {
        assert!(ma.settled && mb.settled);
        assert!(mb.t_star < ma.t_star, "{} vs {}", mb.t_star, ma.t_star);
        assert!(mb.rms < ma.rms, "{} vs {}", mb.rms, ma.rms);
    }
    let wn = r.params.mode_omega();
    let (_, pa) = a.psd.peak_in(0.7 * wn, 1.3 * wn).unwrap();
    let (_, pb) = b.psd.peak_in(0.7 * wn, 1.3 * wn).unwrap();
    assert!(pb <= 0.5 * pa, "{pb} vs {pa}");
    // The baseline error energy concentrates at the base mode.
    let (w_peak, _) = a.psd.peak_in(2.0, 1e4).unwrap();
    assert!((w_peak - wn).abs() <= a.psd.omega[1], "{w_peak}");
}

#[test]
fn identical_inputs_give_bit_identical_traces() {
    let r = reference();
    let d = design_addon(&r.addon_request()).unwrap();
    let mut sc = r.scenario();
    sc.profile.hold_time = 0.5;
    sc.noise_std = 1e-6;
    let a = run_scenario(&d.loop_config, &sc).unwrap();
    let b = run_scenario(&d.loop_config, &sc).unwrap();
    assert_eq!(a.trace, b.trace);
    sc.seed += 1;
    let c = run_scenario(&d.loop_config, &sc).unwrap();
    assert_ne!(a.trace.e, c.trace.e);
}

#[test]
fn open_chain_simulation_matches_open_loop_harmonics() {
    // Stable plant, so the open chain reaches a periodic steady state.
    let plant = TfChain::from(RationalTf::new(vec![100.0], vec![1.0, 2.0, 100.0]).unwrap());
    let c1 = TfChain::from(RationalTf::new(vec![0.2, 1.0], vec![0.02, 1.0]).unwrap());
    let lp = LoopConfig::new(
        c1,
        ResetElement::gfore(3.0, 0.0).unwrap(),
        TfChain::unity(),
        Plant::Model(plant),
    );
    for &w in &[1.0, 5.0, 20.0] {
        let sim = simulate_open_chain(&lp, w, &SteadyOptions::default()).unwrap();
        let l1 = open_loop_harmonic(&lp, w, 1).unwrap().value;
        for n in [1, 3, 5] {
            let l = open_loop_harmonic(&lp, w, n).unwrap().value;
            let err = (l - sim.harmonic(n)).norm() / l1.norm();
            assert!(err < 0.02, "w={w} n={n} err={err}");
        }
    }
}

#[test]
fn trace_and_curve_exports_round_trip() {
    let r = reference();
    let d = design_addon(&r.addon_request()).unwrap();
    let text = d.curves.to_csv_string();
    let back = parse_curves_csv(&text).unwrap();
    assert_eq!(back.to_csv_string(), text);
    assert_eq!(back.s_inf, d.curves.s_inf);

    let mut sc = r.scenario();
    sc.profile.hold_time = 0.2;
    let run = run_scenario(&d.loop_config, &sc).unwrap();
    let cols = parse_trace_csv(&run.trace.to_csv_string(), &["t", "r", "e", "u", "y", "reset_flag"]).unwrap();
    assert_eq!(cols[2], run.trace.e);
    assert_eq!(cols[4], run.trace.y);
    let flags: Vec<bool> = cols[5].iter().map(|&v| v != 0.0).collect();
    assert_eq!(flags, run.trace.reset_flag);
    let cols = parse_trace_csv(&run.trace.reset_csv_string(), &["t", "e_r", "u_r", "reset_flag"]).unwrap();
    assert_eq!(cols[1], run.trace.e_r);
    assert_eq!(cols[2], run.trace.u_r);
}
