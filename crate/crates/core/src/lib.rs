//! Explanation methods for survival black-box models built around the
//! Beran estimator with neural importance kernels, together with the
//! SurvLIME, SurvBeX and SurvNAM baselines, a random survival forest
//! black box, synthetic data generators and an evaluation harness.

pub mod error;
pub mod eval;
pub mod explain;
pub mod forest;
pub mod io;
pub mod nn;
pub mod survival;
pub mod synth;

pub use error::{Result, SurvError};
