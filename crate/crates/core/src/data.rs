//! Tabular and JSON interchange: CSV with a header row, and `emitters.json`.
//!
//! Column names carry a unit suffix (`frequency_ghz`, `time_ns`, `voltage_v`).
//! Frequencies are absolute GHz.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::emitter::{CavityModel, QuenchModel, StarkResponse};
use crate::error::{Error, Result};
use crate::fit::FitData;

/// Numeric table read from CSV.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn csv_error(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => Error::Parse { line: p.line(), column: 1, message: e.to_string() },
        None => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Parse { line: 0, column: 0, message: format!("{other:?}") },
        },
    }
}

impl Table {
    pub fn new(headers: Vec<String>) -> Self {
        Table { headers, rows: Vec::new() }
    }

    /// Parse CSV text. Blank lines and lines starting with `#` are skipped.
    /// Every cell must parse as a number; errors carry 1-based line and column.
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr =
            csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).flexible(true).from_reader(reader);
        let headers: Vec<String> = rdr.headers().map_err(csv_error)?.iter().map(|h| h.to_lowercase()).collect();
        if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
            return Err(Error::Parse { line: 1, column: 1, message: "missing header row".into() });
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_error)?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != headers.len() {
                return Err(Error::Parse {
                    line,
                    column: rec.len().min(headers.len()) as u64 + 1,
                    message: format!("expected {} fields, found {}", headers.len(), rec.len()),
                });
            }
            let row = rec
                .iter()
                .enumerate()
                .map(|(i, cell)| {
                    cell.parse::<f64>().map_err(|_| Error::Parse {
                        line,
                        column: i as u64 + 1,
                        message: format!("'{cell}' in column '{}' is not a number", headers[i]),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(Table { headers, rows })
    }

    pub fn read_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(std::fs::File::open(path)?)
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.headers).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v}"))).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn index(&self, names: &[&str]) -> Option<usize> {
        names.iter().find_map(|n| self.headers.iter().position(|h| h == n))
    }

    /// First column whose header matches one of `names`.
    pub fn column(&self, names: &[&str]) -> Result<Vec<f64>> {
        let i = self.index(names).ok_or_else(|| Error::Parse {
            line: 1,
            column: 0,
            message: format!("missing column {}", names.join(" or ")),
        })?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn optional_column(&self, names: &[&str]) -> Option<Vec<f64>> {
        self.index(names).map(|i| self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn from_columns(headers: &[&str], columns: &[&[f64]]) -> Self {
        let n = columns.first().map_or(0, |c| c.len());
        Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: (0..n).map(|i| columns.iter().map(|c| c[i]).collect()).collect(),
        }
    }
}

fn strictly_increasing(x: &[f64], what: &str) -> Result<()> {
    if let Some(i) = x.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::domain(format!("{what} must be strictly increasing (row {})", i + 2)));
    }
    Ok(())
}

/// Optional acquisition metadata attached to a spectrum.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub device_id: Option<String>,
    pub bias_v: Option<f64>,
    pub integration_s: Option<f64>,
}

/// Intensity against absolute frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub frequency_ghz: Vec<f64>,
    pub counts: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
    #[serde(default)]
    pub meta: SpectrumMeta,
}

pub const FREQUENCY_COLUMNS: &[&str] = &["frequency_ghz", "freq_ghz", "nu_ghz"];
pub const COUNT_COLUMNS: &[&str] = &["counts", "intensity", "reflectance", "signal"];
pub const SIGMA_COLUMNS: &[&str] = &["sigma", "sigma_counts", "error"];

impl Spectrum {
    pub fn new(frequency_ghz: Vec<f64>, counts: Vec<f64>, sigma: Option<Vec<f64>>) -> Result<Self> {
        if frequency_ghz.is_empty() || frequency_ghz.len() != counts.len() {
            return Err(Error::InsufficientData(
                "spectrum needs equal, non-zero numbers of frequencies and counts".into(),
            ));
        }
        strictly_increasing(&frequency_ghz, "frequencies")?;
        if let Some(s) = &sigma {
            if s.len() != counts.len() || s.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::domain("sigma must be positive with one value per point"));
            }
        }
        Ok(Spectrum { frequency_ghz, counts, sigma, meta: SpectrumMeta::default() })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn from_table(t: &Table) -> Result<Self> {
        Self::new(t.column(FREQUENCY_COLUMNS)?, t.column(COUNT_COLUMNS)?, t.optional_column(SIGMA_COLUMNS))
    }

    pub fn read_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_table(&Table::read_path(path)?)
    }

    pub fn to_table(&self) -> Table {
        match &self.sigma {
            Some(s) => {
                Table::from_columns(&["frequency_ghz", "counts", "sigma"], &[&self.frequency_ghz, &self.counts, s])
            }
            None => Table::from_columns(&["frequency_ghz", "counts"], &[&self.frequency_ghz, &self.counts]),
        }
    }

    /// Fit input: explicit sigma if present, else Poisson weights.
    pub fn fit_data(&self) -> Result<FitData> {
        match &self.sigma {
            Some(s) => FitData::new(self.frequency_ghz.clone(), self.counts.clone(), s.clone()),
            None => FitData::poisson(self.frequency_ghz.clone(), self.counts.clone()),
        }
    }
}

/// Binned photon counts against time after excitation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayTransient {
    pub time_ns: Vec<f64>,
    pub counts: Vec<f64>,
    pub bin_width_ns: f64,
}

pub const TIME_COLUMNS: &[&str] = &["time_ns", "t_ns"];

impl DecayTransient {
    pub fn new(time_ns: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        if time_ns.len() < 2 || time_ns.len() != counts.len() {
            return Err(Error::InsufficientData("transient needs at least two bins and one count per bin".into()));
        }
        strictly_increasing(&time_ns, "times")?;
        let bin = time_ns[1] - time_ns[0];
        let tol = 1e-6 * bin.max(time_ns.iter().fold(0.0f64, |m, t| m.max(t.abs())) * 1e-9);
        if time_ns.windows(2).any(|w| ((w[1] - w[0]) - bin).abs() > tol) {
            return Err(Error::domain("transient bins must be uniform"));
        }
        Ok(DecayTransient { time_ns, counts, bin_width_ns: bin })
    }

    pub fn from_table(t: &Table) -> Result<Self> {
        Self::new(t.column(TIME_COLUMNS)?, t.column(COUNT_COLUMNS)?)
    }

    pub fn read_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_table(&Table::read_path(path)?)
    }

    pub fn to_table(&self) -> Table {
        Table::from_columns(&["time_ns", "counts"], &[&self.time_ns, &self.counts])
    }

    pub fn fit_data(&self) -> Result<FitData> {
        FitData::poisson(self.time_ns.clone(), self.counts.clone())
    }
}

/// One entry of `emitters.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterRecord {
    pub id: String,
    pub nu0_ghz: f64,
    pub gamma0_ghz: f64,
    pub v_threshold_v: f64,
    pub alpha1_ghz_per_v: f64,
    #[serde(default)]
    pub alpha2_ghz_per_v2: f64,
    pub gamma1_ghz_per_v: f64,
    #[serde(default)]
    pub gamma2_ghz_per_v2: f64,
    pub v_min_v: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quench: Option<QuenchModel<f64>>,
}

impl EmitterRecord {
    pub fn response(&self) -> Result<StarkResponse<f64>> {
        let r = StarkResponse {
            nu0: self.nu0_ghz,
            gamma0: self.gamma0_ghz,
            v_threshold: self.v_threshold_v,
            alpha1: self.alpha1_ghz_per_v,
            alpha2: self.alpha2_ghz_per_v2,
            gamma1: self.gamma1_ghz_per_v,
            gamma2: self.gamma2_ghz_per_v2,
            v_min: self.v_min_v,
            quench: self.quench,
        };
        r.validate().map_err(|e| Error::invalid(format!("emitter {}: {e}", self.id)))?;
        Ok(r)
    }

    pub fn from_response(id: impl Into<String>, r: &StarkResponse<f64>) -> Self {
        EmitterRecord {
            id: id.into(),
            nu0_ghz: r.nu0,
            gamma0_ghz: r.gamma0,
            v_threshold_v: r.v_threshold,
            alpha1_ghz_per_v: r.alpha1,
            alpha2_ghz_per_v2: r.alpha2,
            gamma1_ghz_per_v: r.gamma1,
            gamma2_ghz_per_v2: r.gamma2,
            v_min_v: r.v_min,
            quench: r.quench,
        }
    }
}

/// Cavity block of `emitters.json`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityRecord {
    pub nu_cav_ghz: f64,
    pub q_factor: f64,
    pub purcell_max: f64,
    pub eta_qe: f64,
    pub eta_dw: f64,
    pub tau0_us: f64,
}

impl CavityRecord {
    pub fn model(&self) -> Result<CavityModel<f64>> {
        CavityModel::new(self.nu_cav_ghz, self.q_factor, self.purcell_max, self.eta_qe, self.eta_dw, self.tau0_us)
    }
}

/// `{"emitters": [...], "cavity": {...}}`; a bare array of emitters is also accepted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterFile {
    pub emitters: Vec<EmitterRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity: Option<CavityRecord>,
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse { line: e.line() as u64, column: e.column() as u64, message: e.to_string() }
}

impl EmitterFile {
    pub fn parse(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Either {
            File(EmitterFile),
            List(Vec<EmitterRecord>),
        }
        // untagged errors lose positions, so fall back to the strict parse for diagnostics
        let parsed = match serde_json::from_str::<Either>(text) {
            Ok(Either::File(f)) => f,
            Ok(Either::List(emitters)) => EmitterFile { emitters, cavity: None },
            Err(_) => {
                let looks_like_list = text.trim_start().starts_with('[');
                if looks_like_list {
                    let emitters: Vec<EmitterRecord> = serde_json::from_str(text).map_err(json_error)?;
                    EmitterFile { emitters, cavity: None }
                } else {
                    serde_json::from_str(text).map_err(json_error)?
                }
            }
        };
        let mut seen = std::collections::HashSet::new();
        for e in &parsed.emitters {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::invalid(format!("duplicate emitter id {}", e.id)));
            }
            e.response()?;
        }
        if let Some(c) = &parsed.cavity {
            c.model()?;
        }
        Ok(parsed)
    }

    pub fn read_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn responses(&self) -> Result<Vec<(String, StarkResponse<f64>)>> {
        self.emitters.iter().map(|e| Ok((e.id.clone(), e.response()?))).collect()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("emitter file serialises")
    }
}
