use serde::{Deserialize, Serialize};

use crate::error::{Result, SurvError};

/// Right-continuous piecewise-constant function on a strictly increasing
/// time grid. Value on `[times[i], times[i+1])` is `values[i]`; value on
/// `[0, times[0])` is `initial_value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    times: Vec<f64>,
    values: Vec<f64>,
    initial_value: f64,
}

impl StepFunction {
    pub fn new(times: Vec<f64>, values: Vec<f64>, initial_value: f64) -> Result<Self> {
        if times.len() != values.len() {
            return Err(SurvError::InvalidStepFunction(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(SurvError::InvalidStepFunction(
                "times not strictly increasing".into(),
            ));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(SurvError::InvalidStepFunction("non-finite time".into()));
        }
        Ok(Self {
            times,
            values,
            initial_value,
        })
    }

    /// A survival function (starts at 1, must be nonincreasing in `[0, 1]`).
    pub fn new_sf(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let sf = Self::new(times, values, 1.0)?;
        let mut prev = 1.0;
        for &v in &sf.values {
            if !(0.0..=1.0 + 1e-12).contains(&v) || v > prev + 1e-12 {
                return Err(SurvError::InvalidStepFunction(
                    "survival values must be nonincreasing within [0, 1]".into(),
                ));
            }
            prev = v;
        }
        Ok(sf)
    }

    /// A cumulative hazard (starts at 0, nondecreasing, may reach +inf).
    pub fn new_chf(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let chf = Self::new(times, values, 0.0)?;
        let mut prev = 0.0;
        for &v in &chf.values {
            if v < prev - 1e-12 {
                return Err(SurvError::InvalidStepFunction(
                    "hazard values must be nondecreasing from 0".into(),
                ));
            }
            prev = v;
        }
        Ok(chf)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn initial_value(&self) -> f64 {
        self.initial_value
    }

    /// Value at `t` under the right-continuous step convention.
    pub fn eval(&self, t: f64) -> f64 {
        match self.times.partition_point(|&ti| ti <= t) {
            0 => self.initial_value,
            i => self.values[i - 1],
        }
    }

    /// Pointwise transform of the values (initial value included).
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            times: self.times.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            initial_value: f(self.initial_value),
        }
    }

    /// Restricted mean time: `sum_i (t_i - t_{i-1}) * value(t_{i-1})` plus
    /// nothing past the last grid point. Used as an expected-time score.
    pub fn restricted_mean(&self) -> f64 {
        let mut m = 0.0;
        let mut prev_t = 0.0;
        let mut prev_v = self.initial_value;
        for (&t, &v) in self.times.iter().zip(&self.values) {
            m += (t - prev_t) * prev_v;
            prev_t = t;
            prev_v = v;
        }
        m
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.times == other.times
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_is_right_continuous() {
        let f = StepFunction::new(vec![1.0, 3.0], vec![0.5, 0.2], 1.0).unwrap();
        assert_eq!(f.eval(0.0), 1.0);
        assert_eq!(f.eval(0.999), 1.0);
        assert_eq!(f.eval(1.0), 0.5);
        assert_eq!(f.eval(2.5), 0.5);
        assert_eq!(f.eval(3.0), 0.2);
        assert_eq!(f.eval(100.0), 0.2);
    }

    #[test]
    fn rejects_unsorted_grid_and_bad_sf() {
        assert!(StepFunction::new(vec![2.0, 1.0], vec![0.1, 0.2], 1.0).is_err());
        assert!(StepFunction::new_sf(vec![1.0, 2.0], vec![0.5, 0.8]).is_err());
        assert!(StepFunction::new_chf(vec![1.0, 2.0], vec![0.5, 0.2]).is_err());
    }

    #[test]
    fn restricted_mean_of_simple_sf() {
        // S = 1 on [0,2), 0.5 on [2,4), 0 after: mean = 2*1 + 2*0.5 = 3
        let f = StepFunction::new_sf(vec![2.0, 4.0], vec![0.5, 0.0]).unwrap();
        assert!((f.restricted_mean() - 3.0).abs() < 1e-12);
    }
}
