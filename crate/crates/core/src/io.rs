//! Versioned JSON and CSV artifacts.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::{VerificationReport, REPORT_VERSION};
use crate::montecarlo::{SampleSet, WeightedSampleSet};
use crate::spectral::{CumulantSet, SpectralSolution};

pub const FORMAT_VERSION: u32 = 1;

/// Types stored inside a versioned envelope.
pub trait Versioned: Serialize + DeserializeOwned {
    const KIND: &'static str;
}

impl Versioned for SpectralSolution {
    const KIND: &'static str = "spectral-solution";
}

impl Versioned for Vec<SpectralSolution> {
    const KIND: &'static str = "spectral-solutions";
}

impl Versioned for CumulantSet {
    const KIND: &'static str = "cumulant-set";
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    kind: String,
    version: u32,
    data: T,
}

#[derive(Deserialize)]
struct Header {
    kind: String,
    version: u32,
}

pub fn to_json<T: Versioned>(value: &T) -> Result<String> {
    let env = Envelope { kind: T::KIND.to_string(), version: FORMAT_VERSION, data: value };
    let mut s = serde_json::to_string_pretty(&env)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: Versioned>(text: &str) -> Result<T> {
    let head: Header = serde_json::from_str(text)?;
    if head.version != FORMAT_VERSION {
        return Err(Error::FormatVersion(head.version));
    }
    if head.kind != T::KIND {
        return Err(Error::invalid(format!("expected a {} file, found {}", T::KIND, head.kind)));
    }
    let env: Envelope<T> = serde_json::from_str(text)?;
    Ok(env.data)
}

pub fn write_json<T: Versioned>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

pub fn read_json<T: Versioned>(path: &Path) -> Result<T> {
    from_json(&fs::read_to_string(path)?)
}

/// Any serializable value as pretty JSON with a trailing newline.
pub fn plain_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// Writes a header row and string records.
pub fn write_table<W: Write>(w: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(header)?;
    for row in rows {
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

/// Metadata written next to a sample CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSidecar {
    pub version: u32,
    pub seed: u64,
    pub ensemble_hash: String,
    pub n: usize,
    /// Stored paths.
    pub paths: usize,
    /// Tilt parameter; `None` for untilted runs.
    pub s: Option<f64>,
    pub attempted: usize,
    pub rejected: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub log_norm: f64,
    pub endpoint_angle: f64,
    pub weight: f64,
}

fn sample_rows<W: Write>(w: W, set: &SampleSet, weights: Option<&[f64]>) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["log_norm", "endpoint_angle", "weight"])?;
    for k in 0..set.len() {
        let w = weights.map_or(1.0, |w| w[k]);
        out.write_record([set.log_norms[k].to_string(), set.endpoint_angle(k).to_string(), w.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_samples_csv<W: Write>(w: W, set: &SampleSet) -> Result<()> {
    sample_rows(w, set, None)
}

pub fn write_weighted_samples_csv<W: Write>(w: W, set: &WeightedSampleSet) -> Result<()> {
    sample_rows(w, &set.samples, Some(&set.weights))
}

pub fn read_samples_csv<R: Read>(r: R) -> Result<Vec<SampleRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn sidecar(set: &SampleSet, ensemble_hash: &str) -> SampleSidecar {
    SampleSidecar {
        version: FORMAT_VERSION,
        seed: set.seed,
        ensemble_hash: ensemble_hash.to_string(),
        n: set.n,
        paths: set.len(),
        s: None,
        attempted: set.len(),
        rejected: 0,
    }
}

pub fn weighted_sidecar(set: &WeightedSampleSet, ensemble_hash: &str) -> SampleSidecar {
    SampleSidecar { s: Some(set.s), attempted: set.attempted, rejected: set.rejected, ..sidecar(&set.samples, ensemble_hash) }
}

pub fn read_sidecar(text: &str) -> Result<SampleSidecar> {
    let car: SampleSidecar = serde_json::from_str(text)?;
    if car.version != FORMAT_VERSION {
        return Err(Error::FormatVersion(car.version));
    }
    Ok(car)
}

/// Report rows as CSV: `n, y, statistic, value, stderr`, blanks for absent
/// fields.
pub fn write_report_csv<W: Write>(w: W, report: &VerificationReport) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["n", "y", "statistic", "value", "stderr"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in &report.rows {
        out.write_record([row.n.to_string(), opt(row.y), row.statistic.clone(), row.value.to_string(), opt(row.stderr)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn report_json(report: &VerificationReport) -> Result<String> {
    plain_json(report)
}

pub fn read_report(text: &str) -> Result<VerificationReport> {
    let head: ReportHeader = serde_json::from_str(text)?;
    if head.version != REPORT_VERSION {
        return Err(Error::FormatVersion(head.version));
    }
    Ok(serde_json::from_str(text)?)
}

#[derive(Deserialize)]
struct ReportHeader {
    version: u32,
}
