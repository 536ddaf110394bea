//! Spreading speeds and travelling waves for two-species competition in
//! spatially periodic habitats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod banded;
pub mod eigen;
pub mod error;
pub mod grid;
pub mod habitat;
pub mod model;
pub mod sim;
pub mod speeds;

pub use error::{Error, Result};
