//! Sparse binary sketching matrices: construction, application, neighborhood
//! statistics, expansion verification and parameter recipes.

mod matrix;
mod params;
mod verify;

pub(crate) use matrix::NeighborScratch;
pub use matrix::{EdgePolicy, NeighborCounts, SparseBinaryMatrix};
pub use params::{group_expander_params, raney_tree_count, tree_expander_params, ExpanderParams};
pub use verify::{
    unique_neighbor_check, verify_model_expansion, ExpansionReport, VerifyMode, VerifyOptions,
};
