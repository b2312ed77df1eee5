use proptest::prelude::*;
use resetloop_core::cglp::{make_cglp, solve_omega_f, theta_cglp, theta_max, CglpDesign, DesignError, PhaseTarget};
use resetloop_core::hosidf::cglp_hosidf;

fn cglp_hosidf_gain(d: &CglpDesign, w: f64) -> Result<f64, resetloop_core::hosidf::HosidfError> {
    cglp_hosidf(d, w, 1).map(|c| c.norm())
}

/// Bisection on `θ_CgLp(ω_c; ω_f) − θ` over `ω_f ∈ [ω_l, 1e8·ω_l]` in log space.
fn bisect_omega_f(wl: f64, rho: f64, wc: f64, theta: f64) -> f64 {
    let f = |wf: f64| theta_cglp(&make_cglp(wl, wf, rho, 1.0).unwrap(), wc) - theta;
    let (mut lo, mut hi) = ((wl * (1.0 + 1e-12)).ln(), (1e8 * wl).ln());
    assert!(f(lo.exp()) < 0.0 && f(hi.exp()) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid.exp()) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn backward_solve_round_trips(
        wl in 0.01f64..100.0,
        rho in prop_oneof![Just(-0.3), Just(0.0), Just(0.3)],
        ratio in 1.0f64..20.0,
        frac in 0.05f64..0.95,
    ) {
        let wc = wl * ratio;
        let theta = frac * theta_max(wl, rho, wc);
        let wf = solve_omega_f(wl, rho, PhaseTarget { omega_c: wc, theta }).unwrap();
        prop_assert!(wf >= wl);
        let d = make_cglp(wl, wf, rho, 1.0).unwrap();
        prop_assert!((theta_cglp(&d, wc) - theta).abs() < 1e-6);
        let oracle = bisect_omega_f(wl, rho, wc, theta);
        prop_assert!((wf - oracle).abs() / oracle < 1e-6, "{} vs {}", wf, oracle);
    }

    #[test]
    fn closure_identities(wl in 0.01f64..100.0, ratio in 1.01f64..1e4, rho in -0.9f64..1.0) {
        let d = make_cglp(wl, wl * ratio, rho, 1.0).unwrap();
        prop_assert!((d.k_c * (d.d_r + 1.0) - 1.0).abs() < 1e-12);
        prop_assert!((d.k_c * d.d_r * d.omega_f / d.omega_l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_gain_far_outside_the_band(wl in 0.01f64..100.0, ratio in 1.5f64..1e3, rho in -0.5f64..0.9) {
        let d = make_cglp(wl, wl * ratio, rho, 1.0).unwrap();
        for w in [1e-6 * d.omega_l, 1e6 * d.omega_f] {
            let g = cglp_hosidf_gain(&d, w).unwrap();
            prop_assert!((g - 1.0).abs() < 1e-6, "w={} |c1|={}", w, g);
        }
    }

    #[test]
    fn phase_approaches_but_stays_below_theta_max(
        wl in 0.01f64..100.0,
        ratio in 1.0f64..20.0,
        rho in prop_oneof![Just(-0.3), Just(0.0), Just(0.3)],
    ) {
        let wc = wl * ratio;
        let tm = theta_max(wl, rho, wc);
        let far = make_cglp(wl, 1e6 * wl, rho, 1.0).unwrap();
        prop_assert!((theta_cglp(&far, wc) - tm).abs() < 1e-3);
        let near = make_cglp(wl, 100.0 * wl, rho, 1.0).unwrap();
        prop_assert!(theta_cglp(&near, wc) < tm);
    }

    #[test]
    fn targets_at_or_above_theta_max_are_infeasible(wl in 0.1f64..10.0, ratio in 1.0f64..20.0, over in 1.0f64..2.0) {
        let wc = wl * ratio;
        let theta = over * theta_max(wl, 0.0, wc);
        let res = solve_omega_f(wl, 0.0, PhaseTarget { omega_c: wc, theta });
        let infeasible = matches!(res, Err(DesignError::Infeasible { .. }));
        prop_assert!(infeasible);
    }
}

#[test]
fn mid_band_gain_deviation_is_small_for_full_reset() {
    for &(wl, ratio) in &[(1.0, 2.0), (1.0, 10.0), (0.1175, 25.0), (5.0, 100.0)] {
        let d = make_cglp(wl, wl * ratio, 0.0, 1.0).unwrap();
        let worst = resetloop_core::lti::log_grid(wl * 1e-3, wl * ratio * 1e3, 50)
            .into_iter()
            .map(|w| (20.0 * cglp_hosidf_gain(&d, w).unwrap().log10()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 3.0, "wl={wl} ratio={ratio} worst={worst} dB");
    }
}

#[test]
fn conventional_variant_drops_feedthrough() {
    let d = make_cglp(1.0, 10.0, 0.0, 1.0).unwrap().into_conventional();
    assert_eq!(d.d_r, 0.0);
    assert_eq!(d.reset_element().d_r(), 0.0);
}
