//! CSV emission with a fixed header per sweep kind.

use std::io::Write;
use std::path::Path;

use super::experiments::{Records, SweepResult};
use crate::error::Result;
use crate::numerics::to_db;

pub const GAIN_HEADER: [&str; 7] = [
    "beta2",
    "alpha",
    "gamma_db_analytic",
    "gamma_db_measured",
    "gamma_pre_db_analytic",
    "gamma_pre_db_measured",
    "optimum",
];

/// Header row of a result's CSV.
pub fn header(result: &SweepResult) -> Vec<&'static str> {
    match result.records {
        Records::Ber(_) => vec!["scheme", result.sweep_name, "bits", "errors", "ber"],
        Records::Gain { .. } => GAIN_HEADER.to_vec(),
    }
}

pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(result))?;
    match &result.records {
        Records::Ber(recs) => {
            for r in recs {
                w.write_record([
                    r.scheme.name().to_string(),
                    r.sweep_value.to_string(),
                    r.bits.to_string(),
                    r.errors.to_string(),
                    r.ber.to_string(),
                ])?;
            }
        }
        Records::Gain { points, .. } => {
            for p in points {
                w.write_record([
                    p.beta2.to_string(),
                    p.alpha.to_string(),
                    to_db(p.gamma_analytic).to_string(),
                    to_db(p.gamma_measured).to_string(),
                    to_db(p.gamma_pre_analytic).to_string(),
                    to_db(p.gamma_pre_measured).to_string(),
                    u8::from(p.optimum).to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(result: &SweepResult, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(result, std::io::BufWriter::new(file))
}
