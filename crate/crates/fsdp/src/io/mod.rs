//! File formats.
//!
//! * Time series: CSV with an optional `day` column, a `step` column
//!   (contiguous from 0 within each day), then one `name[unit]` column per
//!   variable. Power in W/kW/MW and energy in Wh/kWh/MWh are converted to
//!   kW and kWh on load; other units are kept as written.
//! * Schedules: CSV `step,u[kW],e[kWh],q[kW],on_peak` with a final row for
//!   the end-of-day energy.
//! * Reports and fitted models: JSON with a fixed key order.
//!
//! CSV floats are written with 17 significant digits (`{:.16e}`), JSON
//! floats in shortest round-trip form; both read back bit-exactly.

mod model;
mod report;
mod schedule;
mod series;

pub use model::{read_model, write_model, ModelFile, ProfileFile};
pub use report::{
    read_json, write_json, Baselines, FitReport, GridSettings, NoiseSettings, RolloutSummary, ScheduleReport,
    StochasticReport,
};
pub use schedule::{read_schedule, write_schedule, ScheduleTable};
pub use series::{load_timeseries, write_profile, write_timeseries, Column, SeriesTable};

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn create_parent(path: &std::path::Path) -> crate::Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e)),
        _ => Ok(()),
    }
}
