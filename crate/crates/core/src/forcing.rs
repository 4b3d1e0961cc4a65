//! Time series for tidal elevation and wind, linearly interpolated.

use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ForcingError {
    #[error("time series is empty")]
    Empty,
    #[error("sample times must be strictly increasing (sample {index})")]
    NotIncreasing { index: usize },
    #[error("non-finite sample {index}")]
    NonFinite { index: usize },
    #[error("t = {t} s is outside the forcing range [{start}, {end}] s")]
    OutOfRange { t: f64, start: f64, end: f64 },
}

/// Piecewise-linear series of `N`-component samples; no extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<const N: usize> {
    times: Vec<f64>,
    values: Vec<[f64; N]>,
}

pub type TimeSeries = Series<1>;
pub type VectorSeries = Series<2>;

impl<const N: usize> Series<N> {
    pub fn new(samples: Vec<(f64, [f64; N])>) -> Result<Self, ForcingError> {
        if samples.is_empty() {
            return Err(ForcingError::Empty);
        }
        for (index, (t, v)) in samples.iter().enumerate() {
            if !t.is_finite() || v.iter().any(|x| !x.is_finite()) {
                return Err(ForcingError::NonFinite { index });
            }
            if index > 0 && !(*t > samples[index - 1].0) {
                return Err(ForcingError::NotIncreasing { index });
            }
        }
        let (times, values) = samples.into_iter().unzip();
        Ok(Self { times, values })
    }

    pub fn constant(value: [f64; N]) -> Self {
        Self {
            times: alloc::vec![f64::NEG_INFINITY, f64::INFINITY],
            values: alloc::vec![value, value],
        }
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn at(&self, t: f64) -> Result<[f64; N], ForcingError> {
        let (start, end) = (self.start(), self.end());
        if !(t >= start && t <= end) {
            return Err(ForcingError::OutOfRange { t, start, end });
        }
        // index of the first sample strictly after t
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return Ok(self.values[0]);
        }
        if k == self.times.len() || self.times[k - 1] == t {
            return Ok(self.values[k - 1]);
        }
        let (v0, v1) = (self.values[k - 1], self.values[k]);
        if v0 == v1 {
            return Ok(v0);
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        Ok(core::array::from_fn(|i| v0[i] + w * (v1[i] - v0[i])))
    }
}

impl TimeSeries {
    pub fn scalar(samples: Vec<(f64, f64)>) -> Result<Self, ForcingError> {
        Self::new(samples.into_iter().map(|(t, v)| (t, [v])).collect())
    }

    pub fn value_at(&self, t: f64) -> Result<f64, ForcingError> {
        self.at(t).map(|v| v[0])
    }
}

/// Boundary and surface forcing of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Forcing {
    /// Elevation imposed on open-boundary nodes; without it open nodes keep
    /// their current elevation.
    pub tide: Option<TimeSeries>,
    /// Spatially uniform wind velocity; zero when absent.
    pub wind: Option<VectorSeries>,
}

impl Forcing {
    pub fn tide_at(&self, t: f64) -> Result<Option<f64>, ForcingError> {
        self.tide.as_ref().map(|s| s.value_at(t)).transpose()
    }

    pub fn wind_at(&self, t: f64) -> Result<[f64; 2], ForcingError> {
        match &self.wind {
            Some(s) => s.at(t),
            None => Ok([0.0, 0.0]),
        }
    }
}
