use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ForecastError;

/// Samples per day at the 15-minute resolution the forecaster works on.
pub const STEPS_PER_DAY: usize = 96;
pub const STEPS_PER_WEEK: usize = 7 * STEPS_PER_DAY;
/// Length of [`FeatureVector::inputs`].
pub const INPUTS: usize = 28;

/// One row of a demand/weather dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandRecord {
    /// Seconds since midnight of the first day.
    pub timestamp: u64,
    pub ambient_temp: f64,
    pub demand_kw: f64,
    pub workday: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    /// Forecast ambient temperature, °C.
    pub ambient: f64,
    pub hour: usize,
    /// Demand at the same clock time one day earlier, kW.
    pub lag_day: f64,
    /// Demand at the same clock time one week earlier, kW.
    pub lag_week: f64,
    pub workday: bool,
}

impl FeatureVector {
    /// Features for sample `i`; needs one week of history before it.
    pub fn at(records: &[DemandRecord], i: usize) -> Result<Self, ForecastError> {
        if i < STEPS_PER_WEEK || i >= records.len() {
            return Err(ForecastError::MissingHistory(i));
        }
        let r = &records[i];
        Ok(FeatureVector {
            ambient: r.ambient_temp,
            hour: (r.timestamp % 86_400 / 3600) as usize,
            lag_day: records[i - STEPS_PER_DAY].demand_kw,
            lag_week: records[i - STEPS_PER_WEEK].demand_kw,
            workday: r.workday,
        })
    }

    pub fn inputs(&self) -> [f64; INPUTS] {
        let mut x = [0.0; INPUTS];
        x[0] = self.ambient;
        x[1 + self.hour.min(23)] = 1.0;
        x[25] = self.lag_day;
        x[26] = self.lag_week;
        x[27] = if self.workday { 1.0 } else { 0.0 };
        x
    }
}

/// Labeled training pairs for every sample from `start` to `end` (exclusive).
pub fn examples(records: &[DemandRecord], start: usize, end: usize) -> Result<Vec<(FeatureVector, f64)>, ForecastError> {
    (start..end).map(|i| Ok((FeatureVector::at(records, i)?, records[i].demand_kw))).collect()
}

pub fn read_records(path: &Path) -> Result<Vec<DemandRecord>, ForecastError> {
    let mut rd = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in rd.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub fn write_records(path: &Path, records: &[DemandRecord]) -> Result<(), ForecastError> {
    let mut wr = csv::Writer::from_path(path)?;
    for r in records {
        wr.serialize(r)?;
    }
    wr.flush().map_err(csv::Error::from)?;
    Ok(())
}
