//! JSON for full-fidelity results, CSV for analyst-facing tables.
//!
//! JSON floats are written in shortest round-trip form and parsed exactly, so
//! a spectrum read back compares equal bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::analysis::TrackingReport;
use crate::sambe::Spectrum;
use crate::Result;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// One CSV file from serializable rows; the header comes from the field names.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct SpectrumRow {
    pub state: usize,
    pub eps: f64,
    pub ebar: f64,
    pub residual: f64,
    pub centroid: f64,
}

pub fn spectrum_rows(spec: &Spectrum) -> Vec<SpectrumRow> {
    spec.triplets
        .iter()
        .enumerate()
        .map(|(state, t)| SpectrumRow {
            state,
            eps: t.quasi_energy,
            ebar: t.avg_energy,
            residual: t.residual,
            centroid: t.centroid,
        })
        .collect()
}

/// `spectrum.json` and `spectrum.csv` in `dir`.
pub fn write_spectrum(dir: &Path, spec: &Spectrum) -> Result<()> {
    write_json(&dir.join("spectrum.json"), spec)?;
    write_csv(&dir.join("spectrum.csv"), &spectrum_rows(spec))
}

pub fn read_spectrum(path: &Path) -> Result<Spectrum> {
    read_json(path)
}

#[derive(Serialize)]
struct TrackingCsvRow {
    state: usize,
    eps0: f64,
    ebar0: f64,
    eps: f64,
    ebar: f64,
    overlap_qorder: f64,
    overlap_label: f64,
}

/// `tracking.csv` (`state, eps0, ebar0, eps, ebar, overlap_qorder,
/// overlap_label`) and the full report as `tracking.json`.
pub fn write_tracking(dir: &Path, report: &TrackingReport) -> Result<()> {
    let rows: Vec<TrackingCsvRow> = report
        .rows
        .iter()
        .map(|r| TrackingCsvRow {
            state: r.state,
            eps0: r.eps0,
            ebar0: r.ebar0,
            eps: r.eps,
            ebar: r.ebar,
            overlap_qorder: r.overlap_qorder,
            overlap_label: r.overlap_label,
        })
        .collect();
    write_csv(&dir.join("tracking.csv"), &rows)?;
    write_json(&dir.join("tracking.json"), report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_model, ModelSpec};
    use crate::sambe::{solve, SolveOptions};

    #[test]
    fn spectrum_json_round_trips_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let h = builtin_model(&ModelSpec::new("driven_ring")).unwrap();
        let spec = solve(&h, &SolveOptions::default()).unwrap();
        write_spectrum(dir.path(), &spec).unwrap();
        let back = read_spectrum(&dir.path().join("spectrum.json")).unwrap();
        assert_eq!(back, spec);
        for (a, b) in back.triplets.iter().zip(&spec.triplets) {
            assert_eq!(a.avg_energy.to_bits(), b.avg_energy.to_bits());
            assert!(a.mode.coeffs().iter().zip(b.mode.coeffs()).all(|(x, y)| {
                x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()
            }));
        }
    }

    #[test]
    fn spectrum_csv_has_the_documented_header() {
        let dir = tempfile::tempdir().unwrap();
        let h = builtin_model(&ModelSpec::new("static")).unwrap();
        write_spectrum(dir.path(), &solve(&h, &SolveOptions::default()).unwrap()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("state,eps,ebar,residual,centroid"));
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let rows: Vec<SpectrumRow> = rdr.deserialize().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].eps, rows[0].ebar), (0.0, 0.0));
        assert!((rows[1].eps - 0.3).abs() < 1e-12 && (rows[1].ebar - 1.0).abs() < 1e-12);
    }
}
