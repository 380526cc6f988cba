//! Pulse-record CSV and the calibration text block.

use std::collections::HashSet;
use std::io::{Read, Write};

use super::{CalibrationResult, PulseRecord};
use crate::error::{Error, Result};
use crate::kv::{fmt_f64, KvBlock};

const RAW_HEADER: [&str; 3] = ["pulse_id", "s1_nvs", "s2_nvs"];
const CAL_HEADER: [&str; 5] = ["pulse_id", "s1_nvs", "s2_nvs", "n1_cal", "n2_cal"];

/// 17 significant digits, enough to round-trip any f64.
fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes raw records, or calibrated ones when every record is calibrated.
pub fn write_records<W: Write>(out: W, records: &[PulseRecord]) -> Result<()> {
    let calibrated = !records.is_empty() && records.iter().all(PulseRecord::is_calibrated);
    let mut w = csv::Writer::from_writer(out);
    let map = |e: csv::Error| Error::Io(e.to_string());
    if calibrated {
        w.write_record(CAL_HEADER).map_err(map)?;
    } else {
        w.write_record(RAW_HEADER).map_err(map)?;
    }
    for r in records {
        let mut row = vec![r.pulse_id.to_string(), sig17(r.s1), sig17(r.s2)];
        if calibrated {
            row.push(sig17(r.n1_cal.unwrap()));
            row.push(sig17(r.n2_cal.unwrap()));
        }
        w.write_record(&row).map_err(map)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads either CSV layout. Errors name the offending line; an input without
/// data rows is an error.
pub fn read_records<R: Read>(input: R) -> Result<Vec<PulseRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(input);
    let mut rows = rdr.records();
    let header = match rows.next() {
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty pulse-record file".into(),
            })
        }
        Some(h) => h.map_err(|e| csv_error(e, 1))?,
    };
    let fields: Vec<&str> = header.iter().collect();
    let calibrated = if fields == RAW_HEADER {
        false
    } else if fields == CAL_HEADER {
        true
    } else {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header {fields:?}; expected {RAW_HEADER:?} or {CAL_HEADER:?}"),
        });
    };
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for row in rows {
        let row = row.map_err(|e| csv_error(e, 0))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let width = if calibrated { 5 } else { 3 };
        if row.len() != width {
            return Err(Error::Parse {
                line,
                message: format!("expected {width} fields, found {}", row.len()),
            });
        }
        let pulse_id: u64 = row[0].parse().map_err(|_| Error::Parse {
            line,
            message: format!("pulse_id {:?} is not a non-negative integer", &row[0]),
        })?;
        if !seen.insert(pulse_id) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate pulse_id {pulse_id}"),
            });
        }
        let num = |i: usize| -> Result<f64> {
            row[i]
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("field {} = {:?} is not a finite number", i + 1, &row[i]),
                })
        };
        let mut rec = PulseRecord::raw(pulse_id, num(1)?, num(2)?);
        if calibrated {
            rec.n1_cal = Some(num(3)?);
            rec.n2_cal = Some(num(4)?);
        }
        out.push(rec);
    }
    if out.is_empty() {
        return Err(Error::Parse {
            line: 2,
            message: "pulse-record file has a header but no data".into(),
        });
    }
    Ok(out)
}

fn csv_error(e: csv::Error, fallback_line: usize) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

pub fn write_calibration(cal: &CalibrationResult) -> String {
    let mut b = KvBlock::default();
    b.push("balance_factor", fmt_f64(cal.balance_factor));
    b.push("shot_noise_level", fmt_f64(cal.shot_noise_level));
    b.push("electronic_variance_1", fmt_f64(cal.electronic_variance_1));
    b.push("electronic_variance_2", fmt_f64(cal.electronic_variance_2));
    b.push("balance_residual", fmt_f64(cal.balance_residual));
    b.to_text()
}

pub fn read_calibration(text: &str) -> Result<CalibrationResult> {
    let b = KvBlock::parse(text)?;
    let cal = CalibrationResult {
        balance_factor: b.f64("balance_factor")?,
        shot_noise_level: b.f64("shot_noise_level")?,
        electronic_variance_1: b.f64("electronic_variance_1")?,
        electronic_variance_2: b.f64("electronic_variance_2")?,
        balance_residual: b.f64("balance_residual")?,
    };
    if !(cal.balance_factor > 0.0) {
        return Err(Error::Parse {
            line: b.line_of("balance_factor"),
            message: "balance_factor must be positive".into(),
        });
    }
    Ok(cal)
}
