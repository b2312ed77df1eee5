//! Readers for the CSV files the toolkit writes, so every export can be
//! ingested again.

use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

use crate::closed_loop::SensitivityCurves;
use crate::hosidf::HarmonicResponse;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error("json: {0}")]
    Json(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        FormatError::Json(e.to_string())
    }
}

impl From<std::io::Error> for FormatError {
    fn from(e: std::io::Error) -> Self {
        FormatError::Io(e.to_string())
    }
}

/// Header and numeric rows of a CSV file; empty fields read as `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl NumericTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn read_numeric_csv(text: &str) -> Result<NumericTable, FormatError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| FormatError::Csv {
            line: 1,
            msg: e.to_string(),
        })?
        .iter()
        .map(|s| s.trim().to_string())
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| FormatError::Csv {
            line,
            msg: e.to_string(),
        })?;
        if rec.len() != header.len() {
            return Err(FormatError::Csv {
                line,
                msg: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let row = rec
            .iter()
            .map(|f| {
                let f = f.trim();
                if f.is_empty() {
                    Ok(None)
                } else {
                    f.parse::<f64>().map(Some).map_err(|_| FormatError::Csv {
                        line,
                        msg: format!("not a number: {f:?}"),
                    })
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(NumericTable { header, rows })
}

fn expect_header(t: &NumericTable, want: &[&str]) -> Result<(), FormatError> {
    if t.header.iter().map(String::as_str).ne(want.iter().copied()) {
        return Err(FormatError::Csv {
            line: 1,
            msg: format!("expected header {:?}, found {:?}", want.join(","), t.header.join(",")),
        });
    }
    Ok(())
}

fn required(v: Option<f64>, line: usize, what: &str) -> Result<f64, FormatError> {
    v.ok_or_else(|| FormatError::Csv {
        line,
        msg: format!("missing {what}"),
    })
}

/// Parses `omega,n,re,im,truncated` rows written by [`HarmonicResponse::to_csv_string`].
pub fn parse_harmonic_csv(text: &str) -> Result<HarmonicResponse, FormatError> {
    let t = read_numeric_csv(text)?;
    expect_header(&t, &["omega", "n", "re", "im", "truncated"])?;
    let mut omega: Vec<f64> = Vec::new();
    let mut values: Vec<Vec<Complex64>> = Vec::new();
    let mut truncated: Vec<Vec<bool>> = Vec::new();
    let mut n_max = 0;
    for (i, row) in t.rows.iter().enumerate() {
        let line = i + 2;
        let w = required(row[0], line, "omega")?;
        let n = required(row[1], line, "n")? as usize;
        let v = Complex64::new(required(row[2], line, "re")?, required(row[3], line, "im")?);
        let tr = required(row[4], line, "truncated")? != 0.0;
        if omega.last() != Some(&w) {
            if n != 1 {
                return Err(FormatError::Csv {
                    line,
                    msg: "each frequency block must start at n = 1".into(),
                });
            }
            omega.push(w);
            values.push(Vec::new());
            truncated.push(Vec::new());
        }
        let cur = values.last_mut().expect("pushed above");
        if n != cur.len() + 1 {
            return Err(FormatError::Csv {
                line,
                msg: format!("harmonic index {n} out of sequence"),
            });
        }
        cur.push(v);
        truncated.last_mut().expect("pushed above").push(tr);
        n_max = n_max.max(n);
    }
    if values.iter().any(|v| v.len() != n_max) {
        return Err(FormatError::Csv {
            line: 0,
            msg: "frequency blocks hold different harmonic counts".into(),
        });
    }
    Ok(HarmonicResponse {
        omega,
        n_max,
        values,
        truncated,
    })
}

/// Parses the sensitivity-curve CSV. Even harmonics are restored as zero and
/// the absolute-maximum column, which is not exported, is set to `S_inf`.
pub fn parse_curves_csv(text: &str) -> Result<SensitivityCurves, FormatError> {
    let t = read_numeric_csv(text)?;
    let cols = t.header.len();
    if cols < 7 || t.header[0] != "omega" || t.header[1] != "S_lin_mag" {
        return Err(FormatError::Csv {
            line: 1,
            msg: "not a sensitivity-curve file".into(),
        });
    }
    let n_pairs = (cols - 5) / 2;
    let mut want = vec!["omega".to_string(), "S_lin_mag".to_string()];
    for k in 0..n_pairs {
        let n = 2 * k + 1;
        want.push(format!("S{n}_re"));
        want.push(format!("S{n}_im"));
    }
    want.extend(["S_inf", "delta_s_pct", "truncated"].map(String::from));
    if t.header != want {
        return Err(FormatError::Csv {
            line: 1,
            msg: format!("unexpected header {}", t.header.join(",")),
        });
    }
    let n_max = 2 * n_pairs - 1;
    let mut c = SensitivityCurves {
        omega: Vec::new(),
        n_max,
        s_lin_mag: Vec::new(),
        harmonics: Vec::new(),
        s_inf: Vec::new(),
        s_inf_abs: Vec::new(),
        delta_s_pct: Vec::new(),
        truncated: Vec::new(),
    };
    for (i, row) in t.rows.iter().enumerate() {
        let line = i + 2;
        c.omega.push(required(row[0], line, "omega")?);
        c.s_lin_mag.push(required(row[1], line, "S_lin_mag")?);
        let mut h = vec![Complex64::new(0.0, 0.0); n_max];
        for k in 0..n_pairs {
            h[2 * k] = Complex64::new(
                required(row[2 + 2 * k], line, "harmonic")?,
                required(row[3 + 2 * k], line, "harmonic")?,
            );
        }
        c.harmonics.push(h);
        let s_inf = required(row[cols - 3], line, "S_inf")?;
        c.s_inf.push(s_inf);
        c.s_inf_abs.push(s_inf);
        c.delta_s_pct.push(row[cols - 2]);
        c.truncated.push(required(row[cols - 1], line, "truncated")? != 0.0);
    }
    Ok(c)
}

/// Rows of a trace CSV with the given header, as columns of samples.
pub fn parse_trace_csv(text: &str, header: &[&str]) -> Result<Vec<Vec<f64>>, FormatError> {
    let t = read_numeric_csv(text)?;
    expect_header(&t, header)?;
    let mut cols = vec![Vec::with_capacity(t.rows.len()); header.len()];
    for (i, row) in t.rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            cols[j].push(required(*v, i + 2, header[j])?);
        }
    }
    Ok(cols)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FormatError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}
