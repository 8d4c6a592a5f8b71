//! Optimization over trained graph neural networks with symmetry breaking
//! for graph isomorphism, applied to molecular design.
//!
//! The network code is generic over the float type; the aliases below fix
//! the common choices.

pub mod camd;
pub mod cli;
pub mod enumerator;
pub mod error;
pub mod gnn;
pub mod graph;
pub mod indexing;
pub mod lexorder;
pub mod milp;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use gnn::{GnnModel, GnnModel32};
pub type Bounds = gnn::Bounds<f64>;
pub type Bounds32 = gnn::Bounds<f32>;
pub type Interval = gnn::Interval<f64>;
pub type ForwardTrace = gnn::ForwardTrace<f64>;
