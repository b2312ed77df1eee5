//! Writes command results to an output directory: JSON reports, CSV tables
//! and SVG plots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use resetloop_core::closed_loop::SensitivityCurves;
use resetloop_core::io::{write_text, FormatError};
use resetloop_core::plot::{db, Plot, Series};
use resetloop_core::sim::Psd;
use serde::Serialize;

use crate::commands::{AnalyzeReport, AngleUnit, CglpResponse, DesignReport, SimulateOutput};

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

struct Writer<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, text: &str) -> Result<(), FormatError> {
        let p = self.dir.join(name);
        write_text(&p, text)?;
        self.written.push(p);
        Ok(())
    }
}

/// `omega,c1_mag_db,c1_phase_<unit>,c3_mag_db,c3_phase_<unit>,harmonic_ratio_pct`
pub fn cglp_csv(c: &CglpResponse, unit: AngleUnit) -> String {
    let u = unit.suffix();
    let mut s = format!("omega,c1_mag_db,c1_phase_{u},c3_mag_db,c3_phase_{u},harmonic_ratio_pct\n");
    for i in 0..c.omega.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            c.omega[i], c.c1_mag_db[i], c.c1_phase[i], c.c3_mag_db[i], c.c3_phase[i], c.harmonic_ratio_pct[i]
        );
    }
    s
}

/// `omega,density`
pub fn psd_csv(p: &Psd) -> String {
    let mut s = String::from("omega,density\n");
    for (w, d) in p.omega.iter().zip(&p.density) {
        let _ = writeln!(s, "{w},{d}");
    }
    s
}

fn dbs(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| db(x)).collect()
}

fn curve_plots(
    w: &mut Writer,
    c: &SensitivityCurves,
    cglp: Option<&CglpResponse>,
    unit: AngleUnit,
) -> Result<(), FormatError> {
    let sens = Plot::new("Sensitivity", "omega [rad/s]", "magnitude [dB]")
        .with(Series::new("|S| linear", c.omega.clone(), dbs(&c.s_lin_mag)))
        .with(Series::new("|S_inf|", c.omega.clone(), dbs(&c.s_inf)));
    w.put("sensitivity.svg", &sens.to_svg())?;

    let delta: Vec<f64> = c.delta_s_pct.iter().map(|d| d.unwrap_or(f64::NAN)).collect();
    let dplot = Plot::new("Improvement indicator", "omega [rad/s]", "delta_s [%]").with(Series::new(
        "delta_s",
        c.omega.clone(),
        delta,
    ));
    w.put("delta_s.svg", &dplot.to_svg())?;

    if let Some(g) = cglp {
        let df = Plot::new("CgLp describing functions", "omega [rad/s]", "magnitude [dB]")
            .with(Series::new("|c_1|", g.omega.clone(), g.c1_mag_db.clone()))
            .with(Series::new("|c_3|", g.omega.clone(), g.c3_mag_db.clone()));
        w.put("cglp_df.svg", &df.to_svg())?;
        let ph = Plot::new("CgLp phase", "omega [rad/s]", format!("phase [{}]", unit.suffix()))
            .with(Series::new("arg c_1", g.omega.clone(), g.c1_phase.clone()))
            .with(Series::new("arg c_3", g.omega.clone(), g.c3_phase.clone()));
        w.put("cglp_phase.svg", &ph.to_svg())?;
        let hr = Plot::new("Harmonic ratio", "omega [rad/s]", "|c_3|/|c_1| [%]").with(Series::new(
            "ratio",
            g.omega.clone(),
            g.harmonic_ratio_pct.clone(),
        ));
        w.put("harmonic_ratio.svg", &hr.to_svg())?;
        w.put("cglp_df.csv", &cglp_csv(g, unit))?;
    }
    Ok(())
}

pub fn write_analyze(dir: &Path, r: &AnalyzeReport) -> Result<Vec<PathBuf>, FormatError> {
    let mut w = Writer {
        dir,
        written: Vec::new(),
    };
    w.put("report.json", &json(r))?;
    w.put("curves.csv", &r.evaluation.curves.to_csv_string())?;
    curve_plots(&mut w, &r.evaluation.curves, r.cglp.as_ref(), r.angle_unit)?;
    Ok(w.written)
}

pub fn write_design(dir: &Path, r: &DesignReport) -> Result<Vec<PathBuf>, FormatError> {
    let mut w = Writer {
        dir,
        written: Vec::new(),
    };
    w.put("report.json", &json(r))?;
    if let Some(d) = &r.design {
        w.put("design.json", &json(d))?;
    }
    w.put("curves.csv", &r.evaluation.curves.to_csv_string())?;
    curve_plots(&mut w, &r.evaluation.curves, r.cglp.as_ref(), r.angle_unit)?;
    Ok(w.written)
}

pub fn write_simulate(dir: &Path, out: &SimulateOutput) -> Result<Vec<PathBuf>, FormatError> {
    let mut w = Writer {
        dir,
        written: Vec::new(),
    };
    w.put("metrics.json", &json(&out.report))?;
    for (label, t) in &out.traces {
        w.put(&format!("trace_{label}.csv"), &t.to_csv_string())?;
        w.put(&format!("reset_{label}.csv"), &t.reset_csv_string())?;
    }
    if !out.spectra.is_empty() {
        let mut plot = Plot::new("Error PSD", "omega [rad/s]", "density [dB]");
        for (label, p) in &out.spectra {
            w.put(&format!("psd_{label}.csv"), &psd_csv(p))?;
            // Skip DC so the log axis starts at the first bin.
            plot = plot.with(Series::new(label.clone(), p.omega[1..].to_vec(), dbs(&p.density[1..])));
        }
        w.put("psd.svg", &plot.to_svg())?;
        let mut ep = Plot::new("Tracking error", "t [s]", "e").linear_x();
        for (label, t) in &out.traces {
            ep = ep.with(Series::new(label.clone(), t.t.clone(), t.e.clone()));
        }
        w.put("error.svg", &ep.to_svg())?;
    }
    Ok(w.written)
}

/// Fixed-width text table of the paired run, one line per region.
pub fn comparison_table(out: &SimulateOutput) -> Option<String> {
    let c = out.report.comparison.as_ref()?;
    let pct = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:+.1}%"));
    let mut s = format!(
        "{:<7} {:>12} {:>12} {:>9} {:>12} {:>12} {:>9}\n",
        "region", "T* base [s]", "T* addon [s]", "change", "RMS base", "RMS addon", "change"
    );
    for r in &c.rows {
        let _ = writeln!(
            s,
            "{:<7} {:>12.4} {:>12.4} {:>9} {:>12.4e} {:>12.4e} {:>9}",
            r.region,
            r.t_star_baseline,
            r.t_star_addon,
            pct(r.t_star_change_pct),
            r.rms_baseline,
            r.rms_addon,
            pct(r.rms_change_pct)
        );
    }
    let _ = writeln!(s, "PSD at baseline peak: {}", pct(c.psd_peak_change_pct));
    Some(s)
}
