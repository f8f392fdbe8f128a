//! Group-structured latent-subspace multi-task learning.
//!
//! Task weight vectors are factored as `W = L S` with a shared latent basis `L`
//! and per-task codes `S`. Rows of `S` are regularized with the latent group
//! norm over (possibly overlapping) task groups, and the model is fitted by
//! alternating a proximal-gradient step in `S` with a ridge-type step in `L`.

pub mod basis;
pub mod bench;
pub mod datagen;
pub mod error;
pub mod groupnorm;
pub mod groups;
pub mod io;
pub mod model;
pub mod solver;

pub use error::{Error, Result};
pub use groups::GroupStructure;
pub use solver::{fit, SolverConfig};
pub use model::{
    FitReport, HyperParams, LatentModel, MultiTaskDataset, ProblemKind, Task,
};
