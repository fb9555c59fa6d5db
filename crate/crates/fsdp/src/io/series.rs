use std::collections::HashSet;
use std::path::Path;

use fsdp_core::battery::DayProfile;
use fsdp_core::stochastic::MultiSeries;

use super::{create_parent, fmt_f64};
use crate::{Error, Result};

/// A variable column with its unit after conversion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

/// Parsed time-series file. Each day is a [`MultiSeries`] over the value
/// columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesTable {
    pub columns: Vec<Column>,
    pub days: Vec<MultiSeries>,
}

fn parse_header(h: &str) -> Option<(&str, &str)> {
    let (name, rest) = h.split_once('[')?;
    let unit = rest.strip_suffix(']')?;
    let name = name.trim();
    let unit = unit.trim();
    (!name.is_empty() && !unit.is_empty()).then_some((name, unit))
}

/// Canonical unit and the conversion into it.
fn canonical(unit: &str) -> (&str, fn(f64) -> f64) {
    match unit {
        "W" => ("kW", |v| v / 1000.0),
        "kW" => ("kW", |v| v),
        "MW" => ("kW", |v| v * 1000.0),
        "Wh" => ("kWh", |v| v / 1000.0),
        "kWh" => ("kWh", |v| v),
        "MWh" => ("kWh", |v| v * 1000.0),
        other => (other, |v| v),
    }
}

pub fn load_timeseries(path: impl AsRef<Path>) -> Result<SeriesTable> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let fields: Vec<&str> = headers.iter().collect();
    let has_day = fields.first() == Some(&"day");
    let first = usize::from(has_day);
    if fields.get(first) != Some(&"step") {
        return Err(Error::format(
            path,
            Some(1),
            "expected a `step` column (optionally after `day`)",
        ));
    }
    let mut columns = Vec::new();
    let mut converters = Vec::new();
    let mut seen = HashSet::new();
    for f in &fields[first + 1..] {
        let (name, unit) = parse_header(f)
            .ok_or_else(|| Error::format(path, Some(1), format!("column `{f}` must be written as name[unit]")))?;
        if !seen.insert(name.to_string()) {
            return Err(Error::format(path, Some(1), format!("duplicate column `{name}`")));
        }
        let (unit, convert) = canonical(unit);
        columns.push(Column {
            name: name.into(),
            unit: unit.into(),
        });
        converters.push(convert);
    }
    if columns.is_empty() {
        return Err(Error::format(path, Some(1), "no value columns"));
    }

    let mut days: Vec<Vec<f64>> = Vec::new();
    let mut expected_step = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line());
        let index = |i: usize, what: &str| -> Result<usize> {
            record[i].parse::<usize>().map_err(|_| {
                Error::format(
                    path,
                    line,
                    format!("{what} `{}` is not a non-negative integer", &record[i]),
                )
            })
        };
        if has_day {
            let day = index(0, "day")?;
            if day == days.len() {
                days.push(Vec::new());
                expected_step = 0;
            } else if day + 1 != days.len() {
                return Err(Error::format(
                    path,
                    line,
                    format!(
                        "day {day} out of order; expected {} or {}",
                        days.len().saturating_sub(1),
                        days.len()
                    ),
                ));
            }
        } else if days.is_empty() {
            days.push(Vec::new());
        }
        let step = index(first, "step")?;
        if step != expected_step {
            return Err(Error::format(
                path,
                line,
                format!("step {step} found where step {expected_step} was expected"),
            ));
        }
        expected_step += 1;
        let values = days.last_mut().expect("day started");
        for (k, convert) in converters.iter().enumerate() {
            let cell = &record[first + 1 + k];
            let v: f64 = cell.parse().map_err(|_| {
                Error::format(
                    path,
                    line,
                    format!("`{cell}` in column `{}` is not a number", columns[k].name),
                )
            })?;
            if !v.is_finite() {
                return Err(Error::format(
                    path,
                    line,
                    format!("non-finite value in column `{}`", columns[k].name),
                ));
            }
            values.push(convert(v));
        }
    }
    if days.is_empty() {
        return Err(Error::format(path, None, "no data rows"));
    }
    let days = days
        .into_iter()
        .map(|d| MultiSeries::new(columns.len(), d))
        .collect::<std::result::Result<_, _>>()?;
    Ok(SeriesTable { columns, days })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            Error::format(path, line, format!("{len} fields where {expected_len} were expected"))
        }
        other => Error::format(path, line, format!("{other:?}")),
    }
}

impl SeriesTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// A column of a single-day table, required to be a power in kW.
    pub fn power_column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self
            .column_index(name)
            .ok_or_else(|| Error::Config(format!("missing column `{name}`")))?;
        if self.columns[i].unit != "kW" {
            return Err(Error::Config(format!(
                "column `{name}` has unit {}, a power unit is required",
                self.columns[i].unit
            )));
        }
        if self.days.len() != 1 {
            return Err(Error::Config(format!(
                "expected a single day, found {}",
                self.days.len()
            )));
        }
        Ok(self.days[0].column(i))
    }

    /// `load[kW]` and `solar[kW]` of a single-day table.
    pub fn day_profile(&self) -> Result<DayProfile> {
        Ok(DayProfile {
            load: self.power_column("load")?,
            solar: self.power_column("solar")?,
        })
    }
}

/// Writes a table; the `day` column is included when there is more than
/// one day.
pub fn write_timeseries(path: impl AsRef<Path>, table: &SeriesTable) -> Result<()> {
    let path = path.as_ref();
    if table.days.is_empty() || table.days.iter().all(|d| d.steps() == 0) {
        return Err(Error::format(path, None, "refusing to write an empty series"));
    }
    if table.days.iter().any(|d| d.vars() != table.columns.len()) {
        return Err(Error::format(path, None, "column count does not match the data"));
    }
    create_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let with_day = table.days.len() > 1;
    let mut header: Vec<String> = Vec::new();
    if with_day {
        header.push("day".into());
    }
    header.push("step".into());
    header.extend(table.columns.iter().map(|c| format!("{}[{}]", c.name, c.unit)));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (d, day) in table.days.iter().enumerate() {
        for t in 0..day.steps() {
            let mut row: Vec<String> = Vec::with_capacity(header.len());
            if with_day {
                row.push(d.to_string());
            }
            row.push(t.to_string());
            row.extend(day.row(t).iter().map(|&v| fmt_f64(v)));
            w.write_record(&row).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_profile(path: impl AsRef<Path>, profile: &DayProfile) -> Result<()> {
    let table = SeriesTable {
        columns: vec![
            Column {
                name: "load".into(),
                unit: "kW".into(),
            },
            Column {
                name: "solar".into(),
                unit: "kW".into(),
            },
        ],
        days: vec![MultiSeries::from_columns(&[
            profile.load.clone(),
            profile.solar.clone(),
        ])?],
    };
    write_timeseries(path, &table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn day_csv(steps: usize, skip: Option<usize>) -> String {
        let mut s = String::from("step,load[kW],solar[W]\n");
        for k in (0..steps).filter(|&k| Some(k) != skip) {
            s += &format!("{k},{},{}\n", 1.0 + k as f64 / 10.0, 100.0 * k as f64);
        }
        s
    }

    #[test]
    fn day_profile_with_unit_conversion() {
        let dir = tempfile::tempdir().unwrap();
        let t = load_timeseries(write(&dir, "d.csv", &day_csv(48, None))).unwrap();
        let p = t.day_profile().unwrap();
        assert_eq!(p.load.len(), 48);
        assert_eq!(p.solar[3], 0.3);
        assert_eq!(t.columns[1].unit, "kW");
    }

    #[test]
    fn gap_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let e = load_timeseries(write(&dir, "d.csv", &day_csv(48, Some(17)))).unwrap_err();
        let msg = e.to_string();
        assert!(
            msg.contains("line 19") && msg.contains("step 18") && msg.contains("17"),
            "{msg}"
        );
    }

    #[test]
    fn rejects_bad_cells_and_headers() {
        let dir = tempfile::tempdir().unwrap();
        let cases = [
            ("step,load\n0,1\n", "name[unit]"),
            ("load[kW]\n1\n", "step"),
            ("step,load[kW]\n0,NaN\n", "non-finite"),
            ("step,load[kW]\n0,abc\n", "not a number"),
            ("step,load[kW]\n0,1,2\n", "fields"),
            ("step,load[kW]\n", "no data"),
            ("step,a[kW],a[kW]\n0,1,2\n", "duplicate"),
            ("day,step,a[kW]\n0,0,1\n2,0,1\n", "out of order"),
        ];
        for (i, (text, needle)) in cases.iter().enumerate() {
            let e = load_timeseries(write(&dir, &format!("{i}.csv"), text)).unwrap_err();
            assert!(e.to_string().contains(needle), "{i}: {e}");
        }
    }

    #[test]
    fn multi_day_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let table = SeriesTable {
            columns: vec![
                Column {
                    name: "solar".into(),
                    unit: "kW".into(),
                },
                Column {
                    name: "temp".into(),
                    unit: "degC".into(),
                },
            ],
            days: (0..3)
                .map(|d| {
                    let data: Vec<f64> = (0..10).map(|i| (d * 10 + i) as f64 / 7.0 + 1e-17).collect();
                    MultiSeries::new(2, data).unwrap()
                })
                .collect(),
        };
        let p = dir.path().join("sub/e.csv");
        write_timeseries(&p, &table).unwrap();
        assert_eq!(load_timeseries(&p).unwrap(), table);
        let bytes = fs::read(&p).unwrap();
        write_timeseries(&p, &table).unwrap();
        assert_eq!(bytes, fs::read(&p).unwrap());
    }

    #[test]
    fn profile_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let profile = DayProfile {
            load: vec![0.1, 2.0 / 3.0, 5.5],
            solar: vec![0.0, 1e-300, 3.25],
        };
        let p = dir.path().join("p.csv");
        write_profile(&p, &profile).unwrap();
        assert_eq!(load_timeseries(&p).unwrap().day_profile().unwrap(), profile);
    }
}
