use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{validate, HourlySeries, SystemData, ViolationKind};
use crate::error::{Error, Result};
use crate::rephours;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocFormat {
    Toml,
    Json,
}

impl DocFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("toml") => Ok(DocFormat::Toml),
            Some("json") => Ok(DocFormat::Json),
            _ => Err(Error::Parse(format!("{}: expected a .toml or .json instance document", path.display()))),
        }
    }
}

/// Parses a document, resolves sidecar paths against `base_dir`, then validates.
pub fn load_system_str(text: &str, format: DocFormat, base_dir: &Path) -> Result<SystemData> {
    let mut sys: SystemData = match format {
        DocFormat::Toml => toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?,
        DocFormat::Json => serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?,
    };
    let ts = &mut sys.timeseries;
    if let Some(p) = ts.hourly_file.take() {
        if ts.hourly.is_some() {
            return Err(Error::Parse("timeseries has both inline hourly data and hourly_file".into()));
        }
        ts.hourly = Some(read_sidecar(&base_dir.join(p))?);
    }
    if let Some(p) = ts.representatives_file.take() {
        if ts.representatives.is_some() {
            return Err(Error::Parse("timeseries has both inline representatives and representatives_file".into()));
        }
        ts.representatives = Some(rephours::read_representatives(&base_dir.join(p))?);
    }
    let violations = validate(&sys);
    if violations.is_empty() {
        return Ok(sys);
    }
    let msg = violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ");
    if violations.iter().any(|v| v.kind == ViolationKind::Reference) {
        Err(Error::Reference(msg))
    } else {
        Err(Error::Domain(msg))
    }
}

pub fn load_system(path: impl AsRef<Path>) -> Result<SystemData> {
    let path = path.as_ref();
    let format = DocFormat::from_path(path)?;
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    load_system_str(&text, format, base)
}

/// Self-contained document text with every series inlined.
pub fn to_document(sys: &SystemData, format: DocFormat) -> Result<String> {
    match format {
        DocFormat::Toml => toml::to_string(sys).map_err(|e| Error::Parse(e.to_string())),
        DocFormat::Json => serde_json::to_string_pretty(sys).map_err(|e| Error::Parse(e.to_string())),
    }
}

pub fn save_system(sys: &SystemData, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = to_document(sys, DocFormat::from_path(path)?)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Hex sha256 of the canonical JSON serialisation.
pub fn instance_digest(sys: &SystemData) -> String {
    let bytes = serde_json::to_vec(sys).expect("SystemData serialises");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Serialize, Deserialize)]
struct HourRow {
    hour: usize,
    load_factor: f64,
    wind_factor: f64,
    pv_factor: f64,
}

/// Reads the hourly sidecar table (`hour,load_factor,wind_factor,pv_factor`).
pub fn read_sidecar(path: &Path) -> Result<HourlySeries> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sidecar(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub(crate) fn parse_sidecar(text: &str) -> Result<HourlySeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(text.as_bytes());
    let mut out = HourlySeries::default();
    for (k, rec) in rdr.deserialize::<HourRow>().enumerate() {
        let r = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if r.hour != k + 1 {
            return Err(Error::Parse(format!("row {} has hour {}, expected {}", k + 1, r.hour, k + 1)));
        }
        out.load_factor.push(r.load_factor);
        out.wind_factor.push(r.wind_factor);
        out.pv_factor.push(r.pv_factor);
    }
    Ok(out)
}

pub fn write_sidecar(series: &HourlySeries, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse(e.to_string()))?;
    for h in 0..series.len() {
        w.serialize(HourRow {
            hour: h + 1,
            load_factor: series.load_factor[h],
            wind_factor: series.wind_factor[h],
            pv_factor: series.pv_factor[h],
        })
        .map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
