use crate::error::Result;
use crate::forest::RSFModel;
use crate::survival::{CoxModel, StepFunction};

/// A survival model accessed only through its functional predictions.
/// Implementations must be safe for concurrent read-only prediction.
pub trait BlackBox: Sync {
    fn predict_sf(&self, x: &[f64]) -> Result<StepFunction>;
    fn predict_chf(&self, x: &[f64]) -> Result<StepFunction>;
}

impl BlackBox for RSFModel {
    fn predict_sf(&self, x: &[f64]) -> Result<StepFunction> {
        RSFModel::predict_sf(self, x)
    }

    fn predict_chf(&self, x: &[f64]) -> Result<StepFunction> {
        RSFModel::predict_chf(self, x)
    }
}

impl BlackBox for CoxModel {
    fn predict_sf(&self, x: &[f64]) -> Result<StepFunction> {
        self.sf(x)
    }

    fn predict_chf(&self, x: &[f64]) -> Result<StepFunction> {
        self.chf(x)
    }
}
