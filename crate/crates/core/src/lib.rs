//! Low-degree hypothesis testing between planted-community random graph
//! models: exact r-values and advantage bounds, samplers, and the
//! diagonal-sum and signed-triangle test statistics.

pub mod advantage;
pub mod cli;
pub mod error;
pub mod graphs;
pub mod models;
pub mod moments;
pub mod rvalues;
pub mod scalar;
pub mod stats;

pub use error::{Error, GraphError, Result};
