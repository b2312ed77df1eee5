use proptest::prelude::*;
use resetloop_core::closed_loop::{
    bode_integral, design_addon, harmonics_at, improvement_indicator, pseudo_sensitivity, sensitivity_curves,
    two_resets_check, AnalysisError, LoopConfig, NotchPlacement, Plant,
};
use resetloop_core::fixtures::{reference, Reference};
use resetloop_core::hosidf::open_loop_harmonic;
use resetloop_core::lti::{log_grid, NotchSpec, RationalTf, TfChain};
use resetloop_core::reset::{bls_tf, ResetElement};
use resetloop_core::sim::{simulate_sinusoid_closed_loop, SteadyOptions};

fn linearized(r: &Reference, wr: f64, dr: f64) -> (LoopConfig, TfChain) {
    let reset = ResetElement::proportional_gfore(wr, dr, 1.0).unwrap();
    let controller = TfChain::from(bls_tf(&reset)).chain(&r.c_l);
    let lp = LoopConfig::new(TfChain::unity(), reset, r.c_l.clone(), Plant::Model(r.plant.clone()));
    (lp, controller)
}

#[test]
fn identity_reset_reproduces_lti_sensitivity() {
    let r = reference();
    let (lp, controller) = linearized(&r, 3.0 * r.omega_c, 0.2);
    let c = sensitivity_curves(&lp, Some(&controller), &r.grid()).unwrap();
    for i in 0..c.len() {
        let l = controller.eval(c.omega[i]).unwrap() * r.plant.eval(c.omega[i]).unwrap();
        let s = (1.0 + l).inv().norm();
        assert!((c.s_inf[i] - s).abs() <= 1e-9 * s, "w={}", c.omega[i]);
        assert!((c.s_lin_mag[i] - s).abs() <= 1e-12 * s);
        assert!(c.delta_s_pct[i].unwrap().abs() < 1e-7);
        assert!(c.harmonics[i][1..].iter().all(|h| h.norm() == 0.0));
    }
    let flat = vec![1.0; c.len()];
    assert_eq!(bode_integral(&c.omega, &flat, None).unwrap(), 0.0);
}

#[test]
fn pseudo_sensitivity_obeys_triangle_bounds() {
    let d = design_addon(&reference().addon_request()).unwrap();
    let c = &d.curves;
    for i in 0..c.len() {
        let h = &c.harmonics[i];
        let s1 = h[0].norm();
        let rest: f64 = h[1..].iter().map(|v| v.norm()).sum();
        assert!(c.s_inf[i] >= s1 - rest - 1e-12, "w={}", c.omega[i]);
        assert!(c.s_inf[i] <= s1 + rest + 1e-12, "w={}", c.omega[i]);
        // Odd-harmonic sums are half-wave antisymmetric: signed and absolute maxima agree.
        assert!((c.s_inf[i] - c.s_inf_abs[i]).abs() <= 1e-9 * c.s_inf[i]);
    }
}

#[test]
fn harmonic_budget_changes_s_inf_by_at_most_the_dropped_terms() {
    let d = design_addon(&reference().addon_request()).unwrap();
    let lp = &d.loop_config;
    let small = lp.clone().with_n_max(5);
    for &w in &[3.0, 6.3, 20.0, 125.0, 400.0] {
        let full = harmonics_at(lp, w).unwrap();
        let cut = harmonics_at(&small, w).unwrap();
        let dropped: f64 = full.s[5..].iter().map(|v| v.norm()).sum();
        let a = pseudo_sensitivity(&full.s).signed_max;
        let b = pseudo_sensitivity(&cut.s).signed_max;
        assert!((a - b).abs() <= dropped + 1e-12, "w={w}");
    }
}

#[test]
fn reference_design_passes_and_cuts_sensitivity_at_the_mode() {
    let r = reference();
    let d = design_addon(&r.addon_request()).unwrap();
    assert!(d.verdict.pass, "{:?}", d.verdict.reasons);
    let delta = d.verdict.notch_deltas[0].delta_s_pct;
    assert!(delta <= -25.0, "delta_s = {delta}");
    assert!(d.report.m_s_db <= 6.0 && d.report.m_r_db <= 2.5);
    let design = d.design.expect("notch requires phase compensation");
    assert!(design.omega_f > design.omega_l);
    // The CgLp cancels the notch phase at crossover.
    let phase = resetloop_core::cglp::theta_cglp(&design, d.omega_c);
    assert!((phase - d.theta_target).abs() < 1e-9);
}

#[test]
fn reset_design_lowers_the_bode_integral() {
    let d = design_addon(&reference().addon_request()).unwrap();
    let c = &d.curves;
    let lin = bode_integral(&c.omega, &c.s_lin_mag, None).unwrap();
    let reset = bode_integral(&c.omega, &c.s_inf, None).unwrap();
    assert!(reset < lin, "{reset} vs {lin}");
}

#[test]
fn no_notch_keeps_the_loop_linear() {
    let r = reference();
    let mut req = r.addon_request();
    req.notches.clear();
    let d = design_addon(&req).unwrap();
    assert!(d.design.is_none());
    assert_eq!(d.theta_target, 0.0);
    assert!(d.curves.delta_s_pct.iter().all(|v| v.unwrap().abs() < 1e-9));
}

#[test]
fn overly_deep_notch_is_infeasible() {
    let r = reference();
    let mut req = r.addon_request();
    req.notches = vec![NotchSpec::new(r.omega_l, 0.05, 20.0).unwrap().into()];
    assert!(matches!(
        design_addon(&req),
        Err(AnalysisError::Design(
            resetloop_core::cglp::DesignError::Infeasible { .. }
        ))
    ));
}

#[test]
fn omega_l_outside_notch_to_crossover_is_rejected() {
    let r = reference();
    let mut req = r.addon_request();
    req.omega_l = r.params.mode_omega() / 2.0;
    assert!(matches!(design_addon(&req), Err(AnalysisError::Invalid(_))));
}

#[test]
fn notch_placement_changes_higher_harmonics() {
    let r = reference();
    let wn = r.params.mode_omega();
    let mut req = r.addon_request();
    req.omega_l = 3.5 * wn;
    req.notches = vec![
        NotchSpec::new(wn, 1.12, 1.59).unwrap().into(),
        NotchPlacement {
            spec: NotchSpec::new(3.0 * wn, 1.43, 1.59).unwrap(),
            in_c1: false,
        },
    ];
    let in_c2 = design_addon(&req).unwrap();
    req.notches[1].in_c1 = true;
    let in_c1 = design_addon(&req).unwrap();
    assert_eq!(in_c1.design, in_c2.design);
    let mut max_diff: f64 = 0.0;
    for w in log_grid(wn, r.omega_c, 10) {
        let a = open_loop_harmonic(&in_c2.loop_config, w, 1).unwrap().value;
        let b = open_loop_harmonic(&in_c1.loop_config, w, 1).unwrap().value;
        assert!(
            (a - b).norm() < 1e-9 * a.norm().max(1.0),
            "first harmonic is placement-free"
        );
        let a3 = open_loop_harmonic(&in_c2.loop_config, w, 3).unwrap().value;
        let b3 = open_loop_harmonic(&in_c1.loop_config, w, 3).unwrap().value;
        max_diff = max_diff.max((a3 - b3).norm() / a3.norm());
    }
    assert!(max_diff > 1e-3, "{max_diff}");
}

#[test]
fn closed_loop_harmonics_match_simulation() {
    let r = reference();
    let d = design_addon(&r.addon_request()).unwrap();
    let lp = &d.loop_config;
    let opts = SteadyOptions::default();
    for w in log_grid(r.omega_c / 5.0, 5.0 * r.omega_c, 2) {
        let sim = simulate_sinusoid_closed_loop(lp, w, &opts).unwrap();
        assert_eq!(sim.reset_indices.len(), 2, "w={w}");
        let h = harmonics_at(lp, w).unwrap();
        for n in [1, 3] {
            let (p, m) = (h.get(n).norm(), sim.harmonic(n).norm());
            assert!((p - m).abs() / p < 0.05, "w={w} n={n} predicted={p} simulated={m}");
        }
    }
}

#[test]
fn aggressive_notch_breaks_two_resets_at_low_frequency() {
    let r = reference();
    let d = design_addon(&r.addon_request()).unwrap();
    let checks = two_resets_check(&d.loop_config, &[2.0, 100.0], &SteadyOptions::default()).unwrap();
    assert_eq!(checks[0].passed(), Some(false), "{:?}", checks[0]);
    assert_eq!(checks[1].passed(), Some(true));
}

#[test]
fn linear_loop_resets_twice_per_period() {
    let r = reference();
    let (lp, _) = linearized(&r, 50.0 * r.omega_c, 0.0);
    let checks = two_resets_check(&lp, &[10.0, 100.0, 1000.0], &SteadyOptions::default()).unwrap();
    assert!(checks.iter().all(|c| c.passed() == Some(true)), "{checks:?}");
}

#[test]
fn frf_plant_matches_parametric_model() {
    let r = reference();
    let grid = log_grid(0.5, 2e4, 2000);
    let frf = resetloop_core::lti::FrfTable::from_fn(grid, |w| r.plant.eval(w)).unwrap();
    let mut req = r.addon_request();
    let model = design_addon(&req).unwrap();
    req.plant = Plant::Frf(frf);
    let measured = design_addon(&req).unwrap();
    // A dense table keeps log-log interpolation error small even across the
    // lightly damped mode.
    for (a, b) in model.curves.s_inf.iter().zip(&measured.curves.s_inf) {
        assert!((a - b).abs() / a < 1e-3, "{a} {b}");
    }
    // Harmonics above the table are dropped, never extrapolated.
    assert!(measured.curves.truncated.iter().any(|&t| t));
}

proptest! {
    #[test]
    fn swapping_curves_inverts_the_indicator(a in 0.01f64..10.0, b in 0.01f64..10.0) {
        let d = improvement_indicator(&[a], &[b]).unwrap()[0].unwrap();
        let swapped = improvement_indicator(&[b], &[a]).unwrap()[0].unwrap();
        let expected = 100.0 * (1.0 / (1.0 + d / 100.0) - 1.0);
        prop_assert!((swapped - expected).abs() < 1e-9 * expected.abs().max(1.0));
    }

    #[test]
    fn linear_collapse_on_random_loops(wr in 1.0f64..1e4, dr in 0.0f64..2.0, k in 0.2f64..5.0) {
        let r = reference();
        let reset = ResetElement::proportional_gfore(wr, dr, 1.0).unwrap();
        let c2 = TfChain::from(RationalTf::gain(k)).chain(&r.c_l);
        let lp = LoopConfig::new(TfChain::unity(), reset, c2, Plant::Model(r.plant.clone()));
        for &w in &[1.0, 30.0, 125.0, 900.0] {
            let h = harmonics_at(&lp, w).unwrap();
            let s = (1.0 + lp.base_linear_open_loop(w).unwrap()).inv();
            prop_assert!((h.get(1) - s).norm() <= 1e-12 * s.norm());
            prop_assert!((pseudo_sensitivity(&h.s).signed_max - s.norm()).abs() <= 1e-9 * s.norm());
        }
    }
}
