use serde::{Deserialize, Serialize};

use crate::error::{Result, SurvError};
use crate::survival::StepFunction;

/// A Cox-form model: baseline hazard/survival pair plus regression
/// coefficients. `H(t|x) = H0(t) exp(b'x)` and `S(t|x) = S0(t)^{exp(b'x)}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoxModel {
    baseline_chf: StepFunction,
    baseline_sf: StepFunction,
    coefficients: Vec<f64>,
}

impl CoxModel {
    pub fn new(
        baseline_chf: StepFunction,
        baseline_sf: StepFunction,
        coefficients: Vec<f64>,
    ) -> Result<Self> {
        if !baseline_chf.same_grid(&baseline_sf) {
            return Err(SurvError::GridMismatch);
        }
        for (&h, &s) in baseline_chf.values().iter().zip(baseline_sf.values()) {
            if ((-h).exp() - s).abs() > 1e-9 {
                return Err(SurvError::InvalidConfig(
                    "baseline SF is not exp(-baseline CHF)".into(),
                ));
            }
        }
        Ok(Self {
            baseline_chf,
            baseline_sf,
            coefficients,
        })
    }

    /// Build from a baseline CHF, deriving the baseline SF.
    pub fn from_baseline_chf(baseline_chf: StepFunction, coefficients: Vec<f64>) -> Result<Self> {
        let baseline_sf = StepFunction::new_sf(
            baseline_chf.times().to_vec(),
            baseline_chf.values().iter().map(|&h| (-h).exp()).collect(),
        )?;
        Ok(Self {
            baseline_chf,
            baseline_sf,
            coefficients,
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn baseline_chf(&self) -> &StepFunction {
        &self.baseline_chf
    }

    pub fn baseline_sf(&self) -> &StepFunction {
        &self.baseline_sf
    }

    fn risk(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.coefficients.len() {
            return Err(SurvError::InputDimensionMismatch {
                got: x.len(),
                expected: self.coefficients.len(),
            });
        }
        Ok(self
            .coefficients
            .iter()
            .zip(x)
            .map(|(b, v)| b * v)
            .sum::<f64>()
            .exp())
    }

    pub fn sf(&self, x: &[f64]) -> Result<StepFunction> {
        let r = self.risk(x)?;
        StepFunction::new_sf(
            self.baseline_sf.times().to_vec(),
            self.baseline_sf.values().iter().map(|&s| s.powf(r)).collect(),
        )
    }

    pub fn chf(&self, x: &[f64]) -> Result<StepFunction> {
        let r = self.risk(x)?;
        StepFunction::new_chf(
            self.baseline_chf.times().to_vec(),
            self.baseline_chf.values().iter().map(|&h| h * r).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn baseline() -> StepFunction {
        StepFunction::new_chf(vec![1.0, 2.0, 3.0], vec![0.1, 0.4, 1.0]).unwrap()
    }

    #[test]
    fn zero_coefficients_reproduce_baseline() {
        let m = CoxModel::from_baseline_chf(baseline(), vec![0.0, 0.0]).unwrap();
        let sf = m.sf(&[3.0, -1.0]).unwrap();
        assert_eq!(sf.values(), m.baseline_sf().values());
    }

    #[test]
    fn power_law_on_sf() {
        // exp(b'x) = 2 turns S0 = 0.9 into 0.81.
        let chf = StepFunction::new_chf(vec![1.0], vec![-(0.9f64.ln())]).unwrap();
        let m = CoxModel::from_baseline_chf(chf, vec![2f64.ln()]).unwrap();
        let sf = m.sf(&[1.0]).unwrap();
        assert_relative_eq!(sf.eval(1.0), 0.81, epsilon = 1e-12);
    }

    #[test]
    fn sf_chf_identity_for_random_inputs() {
        let m = CoxModel::from_baseline_chf(baseline(), vec![0.3, -0.7]).unwrap();
        let x = [1.2, 0.4];
        let sf = m.sf(&x).unwrap();
        let chf = m.chf(&x).unwrap();
        for (s, h) in sf.values().iter().zip(chf.values()) {
            assert_relative_eq!(*s, (-h).exp(), epsilon = 1e-9);
        }
    }

    #[test]
    fn mismatched_baseline_rejected() {
        let chf = baseline();
        let sf = StepFunction::new_sf(vec![1.0, 2.0, 3.0], vec![0.9, 0.8, 0.7]).unwrap();
        assert!(CoxModel::new(chf, sf, vec![0.0]).is_err());
    }
}
