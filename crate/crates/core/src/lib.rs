#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Planted community detection in inhomogeneous random graphs.

pub mod audit;
pub mod boundary;
pub mod combinations;
pub mod entropy;
pub mod error;
pub mod graph;
pub mod harness;
pub mod lr;
pub mod scan;
pub mod seed;

pub use error::{Error, Result};
