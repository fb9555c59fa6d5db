use std::path::Path;

use fsdp_core::battery::ScheduleResult;

use super::{create_parent, fmt_f64};
use crate::{Error, Result};

const HEADER: [&str; 5] = ["step", "u[kW]", "e[kWh]", "q[kW]", "on_peak"];

/// The per-step columns of a schedule file.
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleTable {
    pub inputs: Vec<f64>,
    /// One more entry than `inputs`.
    pub energy: Vec<f64>,
    pub grid_power: Vec<f64>,
    pub on_peak: Vec<bool>,
}

pub fn write_schedule(path: impl AsRef<Path>, result: &ScheduleResult) -> Result<()> {
    let path = path.as_ref();
    let steps = result.inputs.len();
    if steps == 0 {
        return Err(Error::format(path, None, "refusing to write an empty schedule"));
    }
    if result.energy.len() != steps + 1 || result.grid_power.len() != steps || result.on_peak.len() != steps {
        return Err(Error::format(path, None, "schedule columns have inconsistent lengths"));
    }
    create_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, None, e.to_string()))?;
    let err = |e: csv::Error| Error::format(path, None, e.to_string());
    w.write_record(HEADER).map_err(err)?;
    for k in 0..steps {
        w.write_record([
            k.to_string(),
            fmt_f64(result.inputs[k]),
            fmt_f64(result.energy[k]),
            fmt_f64(result.grid_power[k]),
            u8::from(result.on_peak[k]).to_string(),
        ])
        .map_err(err)?;
    }
    w.write_record([
        steps.to_string(),
        String::new(),
        fmt_f64(result.energy[steps]),
        String::new(),
        String::new(),
    ])
    .map_err(err)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_schedule(path: impl AsRef<Path>) -> Result<ScheduleTable> {
    let path = path.as_ref();
    let mut r = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| Error::format(path, None, e.to_string()))?;
    let header = r.headers().map_err(|e| Error::format(path, Some(1), e.to_string()))?;
    if header.iter().ne(HEADER) {
        return Err(Error::format(
            path,
            Some(1),
            format!("expected header {}", HEADER.join(",")),
        ));
    }
    let rows: Vec<csv::StringRecord> = r
        .records()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::format(path, e.position().map(|p| p.line()), e.to_string()))?;
    if rows.len() < 2 {
        return Err(Error::format(path, None, "a schedule needs at least one step"));
    }
    let mut t = ScheduleTable {
        inputs: Vec::new(),
        energy: Vec::new(),
        grid_power: Vec::new(),
        on_peak: Vec::new(),
    };
    let last = rows.len() - 1;
    for (k, row) in rows.iter().enumerate() {
        let line = row.position().map(|p| p.line());
        let num = |i: usize| -> Result<f64> {
            row[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::format(path, line, format!("`{}` is not a finite number", &row[i])))
        };
        if row[0].parse::<usize>().ok() != Some(k) {
            return Err(Error::format(
                path,
                line,
                format!("step `{}` where {k} was expected", &row[0]),
            ));
        }
        t.energy.push(num(2)?);
        if k == last {
            if !(row[1].is_empty() && row[3].is_empty() && row[4].is_empty()) {
                return Err(Error::format(path, line, "the final row carries only the end energy"));
            }
            break;
        }
        t.inputs.push(num(1)?);
        t.grid_power.push(num(3)?);
        t.on_peak.push(match &row[4] {
            "0" => false,
            "1" => true,
            other => return Err(Error::format(path, line, format!("on_peak `{other}` is not 0 or 1"))),
        });
    }
    Ok(t)
}
