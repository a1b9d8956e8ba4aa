//! The black-box survival model: a random survival forest with log-rank
//! splitting and Nelson-Aalen leaf estimators on a shared time grid.

mod logrank;
mod rsf;

pub use logrank::logrank_statistic;
pub use rsf::{fit_rsf, ForestConfig, RSFModel, SurvivalTree, TreeNode};
