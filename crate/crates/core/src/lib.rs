//! Sparse recovery of structured signals from sketches taken with sparse
//! binary (expander) matrices.
//!
//! The crate is organized bottom-up:
//!
//! - [`expander`]: random `d`-left-regular sketching matrices, their action,
//!   neighborhood statistics, exhaustive expansion checks and degree recipes.
//! - [`models`]: plain, rooted-subtree and loopless group sparsity models.
//! - [`projection`]: exact ℓ1 projections onto those models.
//! - [`recovery`]: the median operator and the SMP / EIHT / MEIHT decoders.
//! - [`harness`]: minimum-sketch-length sweeps with seeded, reproducible trials.

pub mod error;
pub mod expander;
pub mod harness;
pub mod io;
pub mod models;
pub mod projection;
pub mod recovery;

pub use error::{Error, Result};
pub use expander::{ExpansionReport, SparseBinaryMatrix};
pub use models::{GroupModel, ModelSpec, TreeModel};
pub use projection::ProjectionResult;
pub use recovery::{Algorithm, RecoveryConfig, RecoveryResult, SketchProblem};
