//! Station × hour × day temperature records and their per-hour centering.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spectral::SignalEnsemble;

/// Readings indexed by station, hour of day and day.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    n_stations: usize,
    n_hours: usize,
    n_days: usize,
    values: Vec<f64>,
}

impl RawDataset {
    /// `value(station, hour, day)` for every index triple.
    pub fn from_fn(
        n_stations: usize,
        n_hours: usize,
        n_days: usize,
        mut value: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        if n_stations == 0 || n_hours == 0 || n_days == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut values = Vec::with_capacity(n_stations * n_hours * n_days);
        for s in 0..n_stations {
            for h in 0..n_hours {
                for d in 0..n_days {
                    let v = value(s, h, d);
                    if !v.is_finite() {
                        return Err(Error::invalid(format!(
                            "missing or non-finite reading at station {}, hour {h}, day {}",
                            s + 1,
                            d + 1
                        )));
                    }
                    values.push(v);
                }
            }
        }
        Ok(Self {
            n_stations,
            n_hours,
            n_days,
            values,
        })
    }

    pub fn n_stations(&self) -> usize {
        self.n_stations
    }

    pub fn n_hours(&self) -> usize {
        self.n_hours
    }

    pub fn n_days(&self) -> usize {
        self.n_days
    }

    pub fn get(&self, station: usize, hour: usize, day: usize) -> f64 {
        self.values[(station * self.n_hours + hour) * self.n_days + day]
    }
}

/// Subtracts, for each station and hour, the mean over days, and flattens
/// the result into `D·T` vertex signals. Sample `m = d·T + t` holds day `d`,
/// hour `t`.
pub fn center_dataset(raw: &RawDataset) -> Result<SignalEnsemble> {
    let (n, t, d) = (raw.n_stations, raw.n_hours, raw.n_days);
    let mut out = DMatrix::zeros(n, t * d);
    for s in 0..n {
        for h in 0..t {
            let mean = (0..d).map(|day| raw.get(s, h, day)).sum::<f64>() / d as f64;
            for day in 0..d {
                out[(s, day * t + h)] = raw.get(s, h, day) - mean;
            }
        }
    }
    SignalEnsemble::vertex(out)
}
