//! Core survival-analysis types and estimators: censored datasets, step
//! functions, the Kaplan-Meier and Beran estimators, Cox-form predictions
//! and the time-based concordance index.

mod beran;
mod cindex;
mod cox;
mod dataset;
mod stepfn;

pub use beran::{beran_chf, beran_sf, gaussian_weights, kaplan_meier, nelson_aalen, WeightVector};
pub(crate) use beran::softmax;
pub use cindex::cindex_times;
pub use cox::CoxModel;
pub use dataset::{SurvivalDataset, SurvivalRecord};
pub use stepfn::StepFunction;
