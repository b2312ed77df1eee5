use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::LtiError;

/// Frequency unit declared in the first line of an FRF CSV file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreqUnit {
    Hz,
    RadS,
}

impl FreqUnit {
    fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "hz" => Some(FreqUnit::Hz),
            "rad_s" => Some(FreqUnit::RadS),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FreqUnit::Hz => "hz",
            FreqUnit::RadS => "rad_s",
        }
    }

    fn to_rad_s(self, f: f64) -> f64 {
        match self {
            FreqUnit::Hz => 2.0 * PI * f,
            FreqUnit::RadS => f,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrfMetadata {
    pub source: Option<String>,
    pub unit_as_read: FreqUnit,
}

/// Tabulated complex frequency response on a strictly increasing grid in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct FrfTable {
    omega: Vec<f64>,
    values: Vec<Complex64>,
    metadata: FrfMetadata,
    log_mag: Vec<f64>,
    phase: Vec<f64>,
}

impl FrfTable {
    pub fn new(omega: Vec<f64>, values: Vec<Complex64>) -> Result<Self, LtiError> {
        Self::with_metadata(
            omega,
            values,
            FrfMetadata {
                source: None,
                unit_as_read: FreqUnit::RadS,
            },
        )
    }

    pub fn with_metadata(omega: Vec<f64>, values: Vec<Complex64>, metadata: FrfMetadata) -> Result<Self, LtiError> {
        if omega.len() != values.len() {
            return Err(LtiError::Invalid(
                "frequency and response columns differ in length".into(),
            ));
        }
        if omega.len() < 2 {
            return Err(LtiError::Invalid("FRF table needs at least 2 points".into()));
        }
        if omega.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(LtiError::Invalid("FRF frequencies must be finite and > 0".into()));
        }
        if omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LtiError::Invalid("FRF frequencies must be strictly increasing".into()));
        }
        if values.iter().any(|v| !(v.norm() > 0.0 && v.norm().is_finite())) {
            return Err(LtiError::Invalid("FRF values must be finite and nonzero".into()));
        }
        let log_mag = values.iter().map(|v| v.norm().ln()).collect();
        let phase = unwrap_phase(values.iter().map(|v| v.arg()));
        Ok(Self {
            omega,
            values,
            metadata,
            log_mag,
            phase,
        })
    }

    /// Samples any frequency response on a grid.
    pub fn from_fn<F>(omega: Vec<f64>, f: F) -> Result<Self, LtiError>
    where
        F: Fn(f64) -> Result<Complex64, LtiError>,
    {
        let values = omega.iter().map(|&w| f(w)).collect::<Result<Vec<_>, _>>()?;
        Self::new(omega, values)
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn metadata(&self) -> &FrfMetadata {
        &self.metadata
    }

    pub fn omega_min(&self) -> f64 {
        self.omega[0]
    }

    pub fn omega_max(&self) -> f64 {
        *self.omega.last().unwrap()
    }

    pub fn contains(&self, omega: f64) -> bool {
        omega >= self.omega_min() && omega <= self.omega_max()
    }

    /// Log-frequency interpolation of log-magnitude and unwrapped phase.
    pub fn interp(&self, omega: f64) -> Result<Complex64, LtiError> {
        if !self.contains(omega) {
            return Err(LtiError::OutOfRange {
                omega,
                min: self.omega_min(),
                max: self.omega_max(),
            });
        }
        let hi = self.omega.partition_point(|&w| w < omega);
        if self.omega[hi] == omega {
            return Ok(self.values[hi]);
        }
        let lo = hi - 1;
        let t = (omega.ln() - self.omega[lo].ln()) / (self.omega[hi].ln() - self.omega[lo].ln());
        let lm = self.log_mag[lo] + t * (self.log_mag[hi] - self.log_mag[lo]);
        let ph = self.phase[lo] + t * (self.phase[hi] - self.phase[lo]);
        Ok(Complex64::from_polar(lm.exp(), ph))
    }

    /// Parses the `freq_unit,<hz|rad_s>` + `omega,re,im` CSV format.
    pub fn from_csv_str(text: &str, source: Option<String>) -> Result<Self, LtiError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut records = reader.records();
        let header = records
            .next()
            .ok_or_else(|| LtiError::Parse {
                line: 1,
                msg: "empty FRF file".into(),
            })?
            .map_err(|e| LtiError::Parse {
                line: 1,
                msg: e.to_string(),
            })?;
        if header.len() != 2 || &header[0] != "freq_unit" {
            return Err(LtiError::Parse {
                line: 1,
                msg: "expected header `freq_unit,<hz|rad_s>`".into(),
            });
        }
        let unit = FreqUnit::parse(&header[1]).ok_or_else(|| LtiError::Parse {
            line: 1,
            msg: format!("unknown frequency unit `{}`", &header[1]),
        })?;

        let mut omega = Vec::new();
        let mut values = Vec::new();
        for rec in records {
            let rec = rec.map_err(|e| LtiError::Parse {
                line: e.position().map(|p| p.line() as usize).unwrap_or(0),
                msg: e.to_string(),
            })?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            if rec.len() == 1 && rec[0].is_empty() {
                continue;
            }
            if rec.len() != 3 {
                return Err(LtiError::Parse {
                    line,
                    msg: format!("expected 3 fields `omega,re,im`, found {}", rec.len()),
                });
            }
            let field = |i: usize, name: &str| -> Result<f64, LtiError> {
                rec[i].parse::<f64>().map_err(|_| LtiError::Parse {
                    line,
                    msg: format!("invalid {name} value `{}`", &rec[i]),
                })
            };
            let w = unit.to_rad_s(field(0, "omega")?);
            let v = Complex64::new(field(1, "re")?, field(2, "im")?);
            if let Some(&prev) = omega.last() {
                if w <= prev {
                    return Err(LtiError::Parse {
                        line,
                        msg: "frequency column must be strictly increasing".into(),
                    });
                }
            }
            omega.push(w);
            values.push(v);
        }
        Self::with_metadata(
            omega,
            values,
            FrfMetadata {
                source,
                unit_as_read: unit,
            },
        )
    }

    pub fn from_csv_path(path: &Path) -> Result<Self, LtiError> {
        let text = std::fs::read_to_string(path).map_err(|e| LtiError::Io(format!("{}: {e}", path.display())))?;
        Self::from_csv_str(&text, Some(path.display().to_string()))
    }

    /// Serializes in rad/s with shortest round-trip float formatting.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("freq_unit,rad_s\n");
        for (w, v) in self.omega.iter().zip(&self.values) {
            let _ = writeln!(out, "{w},{},{}", v.re, v.im);
        }
        out
    }
}

/// Standalone form of [`FrfTable::interp`].
pub fn interp_frf(frf: &FrfTable, omega: f64) -> Result<Complex64, LtiError> {
    frf.interp(omega)
}

fn unwrap_phase(raw: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for p in raw {
        match out.last() {
            None => out.push(p),
            Some(&prev) => {
                let mut d = p - prev;
                d -= 2.0 * PI * (d / (2.0 * PI)).round();
                out.push(prev + d);
            }
        }
    }
    out
}
