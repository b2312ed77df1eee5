//! Acceptance suite. Each criterion runs at its stated tolerance and problem
//! size, must finish inside its runtime budget, and prints one PASS/FAIL line.
//!
//! `cargo test -p resetloop-cli --test acceptance -- --nocapture`

use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use resetloop_cli::commands::{self, AngleUnit};
use resetloop_cli::config::{resolve, ProjectConfig, SinusoidSpec};
use resetloop_core::cglp::{make_cglp, solve_omega_f, theta_cglp, theta_max, PhaseTarget};
use resetloop_core::closed_loop::{
    bode_integral, design_addon, sensitivity_curves, two_resets_check, LoopConfig, Plant,
};
use resetloop_core::fixtures::reference;
use resetloop_core::hosidf::{cglp_hosidf, hosidf_reset};
use resetloop_core::lti::{log_grid, TfChain};
use resetloop_core::reset::{bls_tf, discretize_reset, simulate_sinusoid_steady, ResetElement};
use resetloop_core::sim::SteadyOptions;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn design_a() -> resetloop_cli::config::Resolved {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let cfg = ProjectConfig::load(&dir.join("design_a.json")).unwrap();
    resolve(&cfg, &dir).unwrap()
}

fn clegg_phase() -> Outcome {
    let el = ResetElement::clegg();
    let mut worst: f64 = 0.0;
    let mut phases = Vec::new();
    for w in [0.01, 0.1, 1.0, 10.0, 100.0] {
        let deg = hosidf_reset(&el, w, 1).map_err(|e| e.to_string())?.arg().to_degrees();
        worst = worst.max((deg + 38.15).abs());
        phases.push(format!("{deg:.3}"));
    }
    check(
        worst <= 0.1,
        format!("phases [{}] deg, max |dev| = {worst:.4}", phases.join(", ")),
    )
}

fn hosidf_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let configs: Vec<(f64, f64)> = (0..12)
        .map(|_| {
            (
                10f64.powf(rng.random_range(-1.0..2.0)),
                [-0.5, 0.0, 0.5][rng.random_range(0..3)],
            )
        })
        .collect();
    let worst = configs
        .par_iter()
        .map(|&(wr, rho)| -> Result<f64, String> {
            let el = ResetElement::gfore(wr, rho).map_err(|e| e.to_string())?;
            let grid: Vec<f64> = (0..20).map(|i| wr * 10f64.powf(-1.5 + 3.0 * i as f64 / 19.0)).collect();
            let mut worst: f64 = 0.0;
            for w in grid {
                let rec =
                    simulate_sinusoid_steady(&el, w, 1.0, 2.0 * PI / w / 2000.0, 20).map_err(|e| e.to_string())?;
                let h1 = hosidf_reset(&el, w, 1).map_err(|e| e.to_string())?.norm();
                for n in [1, 3, 5] {
                    let h = hosidf_reset(&el, w, n).map_err(|e| e.to_string())?;
                    worst = worst.max((h - rec.harmonic(n)).norm() / h1);
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    check(
        worst < 0.02,
        format!(
            "12 configs x 20 frequencies, n = 1, 3, 5: max error {:.3}% of |H_1|",
            100.0 * worst
        ),
    )
}

fn cglp_gain_limits() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut gain_err, mut closure_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let wl = 10f64.powf(rng.random_range(-2.0..2.0));
        let wf = wl * 10f64.powf(rng.random_range(0.2..3.0));
        let rho = rng.random_range(-0.5..0.9);
        let d = make_cglp(wl, wf, rho, 1.0).map_err(|e| e.to_string())?;
        for w in [1e-6 * wl, 1e6 * wf] {
            let g = cglp_hosidf(&d, w, 1).map_err(|e| e.to_string())?.norm();
            gain_err = gain_err.max((g - 1.0).abs());
        }
        closure_err = closure_err
            .max((d.k_c * (d.d_r + 1.0) - 1.0).abs())
            .max((d.k_c * d.d_r * d.omega_f / d.omega_l - 1.0).abs());
    }
    check(
        gain_err <= 1e-6 && closure_err <= 1e-12,
        format!("20 designs: max ||c_1| - 1| = {gain_err:.2e}, closure residual {closure_err:.2e}"),
    )
}

fn bisect_omega_f(wl: f64, rho: f64, wc: f64, theta: f64) -> Option<f64> {
    let f = |wf: f64| make_cglp(wl, wf, rho, 1.0).ok().map(|d| theta_cglp(&d, wc) - theta);
    let (mut lo, mut hi) = ((wl * (1.0 + 1e-12)).ln(), (1e9 * wl).ln());
    if !(f(lo.exp())? < 0.0 && f(hi.exp())? > 0.0) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid.exp())? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some((0.5 * (lo + hi)).exp())
}

fn round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (mut phase_err, mut rel_err): (f64, f64) = (0.0, 0.0);
    for i in 0..200 {
        let wl = 10f64.powf(rng.random_range(-2.0..2.0));
        let rho = rng.random_range(-0.5..0.9);
        let wc = wl * rng.random_range(1.0..20.0);
        let theta = rng.random_range(0.05..0.95) * theta_max(wl, rho, wc);
        let wf = solve_omega_f(wl, rho, PhaseTarget { omega_c: wc, theta }).map_err(|e| format!("case {i}: {e}"))?;
        if wf < wl {
            return Err(format!("case {i}: omega_f = {wf} < omega_l = {wl}"));
        }
        let d = make_cglp(wl, wf, rho, 1.0).map_err(|e| e.to_string())?;
        phase_err = phase_err.max((theta_cglp(&d, wc) - theta).abs());
        let oracle = bisect_omega_f(wl, rho, wc, theta).ok_or(format!("case {i}: bisection bracket failed"))?;
        rel_err = rel_err.max((wf - oracle).abs() / oracle);
    }
    check(
        phase_err < 1e-6 && rel_err < 1e-6,
        format!("200 cases: max phase error {phase_err:.2e} rad, max omega_f deviation from bisection {rel_err:.2e}"),
    )
}

fn lemma_limit() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut far_err: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    for _ in 0..50 {
        let wl = 10f64.powf(rng.random_range(-2.0..2.0));
        let rho = rng.random_range(-0.5..0.9);
        let wc = wl * rng.random_range(1.0..20.0);
        let tm = theta_max(wl, rho, wc);
        let far = make_cglp(wl, 1e6 * wl, rho, 1.0).map_err(|e| e.to_string())?;
        far_err = far_err.max((theta_cglp(&far, wc) - tm).abs());
        let near = make_cglp(wl, 100.0 * wl, rho, 1.0).map_err(|e| e.to_string())?;
        min_gap = min_gap.min(tm - theta_cglp(&near, wc));
    }
    check(
        far_err < 1e-3 && min_gap > 0.0,
        format!("50 cases: |theta(1e6 omega_l) - theta_M| <= {far_err:.2e} rad, min margin at 100 omega_l {min_gap:.2e} rad"),
    )
}

fn closed_loop_oracle() -> Outcome {
    let cfg = design_a();
    let r = reference();
    let d = design_addon(&commands::addon_request(&cfg).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let candidates = log_grid(r.omega_c / 5.0, 20.0 * r.omega_c, 5);
    let checks = two_resets_check(&d.loop_config, &candidates, &SteadyOptions::default()).map_err(|e| e.to_string())?;
    let omegas: Vec<f64> = checks
        .iter()
        .filter(|c| c.passed() == Some(true))
        .map(|c| c.omega)
        .take(10)
        .collect();
    if omegas.len() < 10 {
        return Err(format!("only {} frequencies pass the two-resets check", omegas.len()));
    }
    let mut cfg = cfg;
    cfg.simulation.scenario = None;
    cfg.simulation.sinusoid = Some(SinusoidSpec {
        omegas: omegas.clone(),
        samples_per_period: 2000,
        harmonics: vec![1, 3],
    });
    let out = commands::simulate(&cfg, AngleUnit::Rad, None).map_err(|e| e.to_string())?;
    let pts = out.report.sinusoid.unwrap_or_default();
    let worst = pts.iter().map(|p| p.magnitude_error).fold(0.0, f64::max);
    let resets_ok = pts.iter().all(|p| p.resets_per_period == 2);
    check(
        pts.len() == 20 && resets_ok && worst < 0.05,
        format!(
            "{} frequencies in [{:.1}, {:.1}] rad/s, n = 1, 3: max | |S_n| pred - sim | = {:.2}%",
            omegas.len(),
            omegas[0],
            omegas[omegas.len() - 1],
            100.0 * worst
        ),
    )
}

fn linear_collapse() -> Outcome {
    let r = reference();
    let reset = ResetElement::proportional_gfore(3.0 * r.omega_c, 0.2, 1.0).map_err(|e| e.to_string())?;
    let controller = TfChain::from(bls_tf(&reset)).chain(&r.c_l);
    let lp = LoopConfig::new(TfChain::unity(), reset, r.c_l.clone(), Plant::Model(r.plant.clone()));
    let c = sensitivity_curves(&lp, Some(&controller), &r.grid()).map_err(|e| e.to_string())?;
    let (mut s_err, mut delta): (f64, f64) = (0.0, 0.0);
    for i in 0..c.len() {
        let l = controller.eval(c.omega[i]).map_err(|e| e.to_string())?
            * r.plant.eval(c.omega[i]).map_err(|e| e.to_string())?;
        let s = (1.0 + l).inv().norm();
        s_err = s_err.max((c.s_inf[i] - s).abs() / s);
        delta = delta.max(c.delta_s_pct[i].map_or(f64::INFINITY, f64::abs));
    }
    let flat = bode_integral(&c.omega, &vec![1.0; c.len()], None).map_err(|e| e.to_string())?;
    check(
        s_err <= 1e-9 && delta <= 1e-7 && flat == 0.0,
        format!(
            "{} points: max rel |S_inf - |S|| = {s_err:.2e}, max |delta_s| = {delta:.2e}%, flat integral = {flat}",
            c.len()
        ),
    )
}

fn design_workflow() -> Outcome {
    let r = commands::design(&design_a(), AngleUnit::Rad).map_err(|e| e.to_string())?;
    let e = &r.evaluation;
    let delta = e
        .verdict
        .notch_deltas
        .first()
        .map(|d| d.delta_s_pct)
        .unwrap_or(f64::NAN);
    check(
        e.verdict.pass && delta <= -25.0 && e.report.m_s_db <= 6.0 && e.report.m_r_db <= 2.5,
        format!(
            "verdict {}, delta_s(omega_n) = {delta:.1}%, M_s = {:.2} dB, M_r = {:.2} dB",
            if e.verdict.pass { "pass" } else { "fail" },
            e.report.m_s_db,
            e.report.m_r_db
        ),
    )
}

fn time_domain_direction() -> Outcome {
    let cfg = design_a();
    let out = commands::simulate(&cfg, AngleUnit::Rad, None).map_err(|e| e.to_string())?;
    let cmp = out.report.comparison.as_ref().ok_or("no paired run")?;
    let faster = cmp.rows.iter().all(|r| r.t_star_addon < r.t_star_baseline);
    let lower = cmp.rows.iter().all(|r| r.rms_addon < r.rms_baseline);
    let wn = reference().params.mode_omega();
    let (base, addon) = (&out.spectra[0].1, &out.spectra[1].1);
    let (_, pb) = base.peak_in(0.7 * wn, 1.3 * wn).ok_or("no PSD bin near the mode")?;
    let (_, pa) = addon.peak_in(0.7 * wn, 1.3 * wn).ok_or("no PSD bin near the mode")?;
    let ratio = pa / pb;
    let row = &cmp.rows[0];
    check(
        faster && lower && ratio <= 0.5,
        format!(
            "T* {:.3} -> {:.3} s, RMS {:.3e} -> {:.3e}, PSD peak at mode x{ratio:.2}",
            row.t_star_baseline, row.t_star_addon, row.rms_baseline, row.rms_addon
        ),
    )
}

fn discrete_surface() -> Outcome {
    let mut counts = Vec::new();
    for seq in [&[1.0, -1.0][..], &[1.0, 0.0, -1.0], &[1.0, 0.0, 1.0]] {
        let mut st = discretize_reset(&ResetElement::clegg(), 1e-3).map_err(|e| e.to_string())?;
        let mut n = 0;
        for &e in seq {
            if st.step(e).map_err(|e| e.to_string())?.reset {
                n += 1;
            }
        }
        counts.push(n);
    }
    check(counts == [1, 1, 1], format!("reset counts {counts:?}"))
}

fn bode_integral_sign() -> Outcome {
    let r = commands::design(&design_a(), AngleUnit::Rad).map_err(|e| e.to_string())?;
    let b = r.bode_integral;
    check(
        b.reset < b.linear,
        format!("reset {:.3} vs linear {:.3}", b.reset, b.linear),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        ("Clegg DF phase", Duration::from_secs(1), clegg_phase),
        ("HOSIDF oracle", Duration::from_secs(120), hosidf_oracle),
        ("CgLp gain limits", Duration::from_secs(1), cglp_gain_limits),
        ("Backward-solve round trip", Duration::from_secs(10), round_trip),
        ("Maximum-phase limit", Duration::from_secs(1), lemma_limit),
        ("Closed-loop oracle", Duration::from_secs(300), closed_loop_oracle),
        ("Linear collapse", Duration::from_secs(5), linear_collapse),
        ("Design workflow", Duration::from_secs(60), design_workflow),
        ("Time-domain direction", Duration::from_secs(120), time_domain_direction),
        ("Discrete reset surface", Duration::from_secs(1), discrete_surface),
        ("Bode integral", Duration::from_secs(10), bode_integral_sign),
    ];
    let mut failed = Vec::new();
    for (name, budget, f) in criteria {
        let t0 = Instant::now();
        let outcome = f();
        let dt = t0.elapsed();
        let (pass, detail) = match outcome {
            Ok(d) if dt <= budget => (true, d),
            Ok(d) => (false, format!("{d}; over budget {budget:?}")),
            Err(d) => (false, d),
        };
        println!(
            "{} {name}: {detail} [{:.2} s]",
            if pass { "PASS" } else { "FAIL" },
            dt.as_secs_f64()
        );
        if !pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
