use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resetloop_core::hosidf::{hosidf_reset, hosidf_series, reset_intermediates};
use resetloop_core::lti::log_grid;
use resetloop_core::reset::{bls_tf, simulate_sinusoid_steady, ResetElement};

fn steady(el: &ResetElement, w: f64) -> resetloop_core::reset::SteadyRecord {
    simulate_sinusoid_steady(el, w, 1.0, 2.0 * PI / w / 2000.0, 20).unwrap()
}

#[test]
fn gfore_formula_matches_fft_of_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..4 {
        let wr = 10f64.powf(rng.random_range(-1.0..2.0));
        let rho = [-0.5, 0.0, 0.5][rng.random_range(0..3)];
        let el = ResetElement::gfore(wr, rho).unwrap();
        for w in log_grid(wr / 10.0, wr * 10.0, 2) {
            let rec = steady(&el, w);
            let h1 = hosidf_reset(&el, w, 1).unwrap();
            for n in [1, 3, 5] {
                let err = (hosidf_reset(&el, w, n).unwrap() - rec.harmonic(n)).norm() / h1.norm();
                assert!(err < 0.02, "wr={wr} rho={rho} w={w} n={n} err={err}");
            }
        }
    }
}

#[test]
fn proportional_gfore_first_harmonic_includes_feedthrough() {
    let el = ResetElement::proportional_gfore(2.0, 0.4, 0.0).unwrap();
    for &w in &[0.5, 2.0, 9.0] {
        let rec = steady(&el, w);
        let h1 = hosidf_reset(&el, w, 1).unwrap();
        assert!((h1 - rec.harmonic(1)).norm() / h1.norm() < 0.01);
        let h3 = hosidf_reset(&el, w, 3).unwrap();
        let bare = hosidf_reset(&ResetElement::gfore(2.0, 0.0).unwrap(), w, 3).unwrap();
        assert!((h3 - bare).norm() < 1e-14, "D_r must not enter n >= 3");
    }
}

#[test]
fn harmonic_magnitudes_decay() {
    let el = ResetElement::gfore(1.0, 0.0).unwrap();
    for &w in &[0.2, 1.0, 5.0] {
        let h = hosidf_series(&el, w, 39).unwrap();
        for n in (3..=37).step_by(2) {
            assert!(h[n + 2].norm() < h[n].norm(), "w={w} n={n}");
        }
        // Roughly 1/n for n beyond the corner, so H_39 is a few percent of H_3.
        assert!(h[39].norm() / h[3].norm() < 0.15);
    }
}

proptest! {
    #[test]
    fn even_harmonics_vanish(wr in 0.01f64..100.0, rho in -0.9f64..1.0, w in 0.01f64..100.0, k in 1usize..20) {
        let el = ResetElement::gfore(wr, rho).unwrap();
        prop_assert_eq!(hosidf_reset(&el, w, 2 * k).unwrap().norm(), 0.0);
    }

    #[test]
    fn linear_element_collapses_to_bls(wr in 0.01f64..100.0, dr in 0.0f64..3.0, w in 0.001f64..1000.0) {
        let el = ResetElement::proportional_gfore(wr, dr, 1.0).unwrap();
        let h1 = hosidf_reset(&el, w, 1).unwrap();
        let bls = bls_tf(&el).eval(w).unwrap();
        prop_assert!((h1 - bls).norm() <= 1e-12 * bls.norm().max(1.0));
        for n in [3, 5, 7] {
            prop_assert_eq!(hosidf_reset(&el, w, n).unwrap().norm(), 0.0);
        }
    }

    #[test]
    fn theta_d_reaches_high_frequency_limit(wr in 0.01f64..100.0, rho in -0.9f64..0.95) {
        let im = reset_intermediates(&ResetElement::gfore(wr, rho).unwrap(), 1e6 * wr).unwrap();
        let limit = 4.0 * (1.0 - rho) / (PI * (1.0 + rho));
        prop_assert!((im.theta_d[(0, 0)] - limit).abs() < 1e-4 * limit.max(1.0));
    }

    #[test]
    fn full_reset_adds_phase_lead_over_bls(wr in 0.01f64..100.0, ratio in 0.01f64..100.0) {
        // Θ_D > 0 for A_ρ < 1, so the first harmonic leads the base linear system.
        let el = ResetElement::gfore(wr, 0.0).unwrap();
        let w = wr * ratio;
        let lead = hosidf_reset(&el, w, 1).unwrap().arg() - bls_tf(&el).eval(w).unwrap().arg();
        prop_assert!(lead > 0.0);
    }
}
