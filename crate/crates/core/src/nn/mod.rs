//! Minimal differentiable machinery for the surrogate losses: a reverse-mode
//! tape over scalar nodes (with fused n-ary primitives so Beran-style graphs
//! stay small), single-input MLP subnetworks, and first-order optimizers.

mod mlp;
mod optim;
mod tape;

pub use mlp::{
    mlp_forward, Activation, ImportanceNetwork, MlpConfig, OutputTransform,
};
pub use optim::{OptMethod, Optimizer};
pub use tape::{Tape, Var};
