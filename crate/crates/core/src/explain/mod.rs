//! Local and global explanation methods over a survival black box:
//! SurvBeNIM (neural importance kernels in a Beran estimator), SurvBeX,
//! SurvLIME and SurvNAM, plus the neighborhood sampler they share.

mod benim;
mod blackbox;
mod common;
mod neighborhood;
mod result;
mod survbex;
mod survlime;
mod survnam;

pub use benim::{
    benim_kernel_weights, benim_local_loss, benim_loss_grad, benim_surrogate_sf,
    fit_survbenim_global, fit_survbenim_local, survbex_loss_grad, time_weights, TimeWeighting,
};
pub use blackbox::BlackBox;
pub use common::{grid_values, IntervalGrid};
pub use neighborhood::{sample_neighborhood, NeighborhoodConfig, NeighborhoodSample};
pub use result::{Diagnostics, ExplainConfig, FeatureCurve, ExplanationResult, KernelConfig, Method, TrainConfig};
pub use survbex::fit_survbex;
pub use survlime::fit_survlime;
pub use survnam::{fit_survnam, fit_survnam_global, survnam_loss_grad};
