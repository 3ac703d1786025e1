//! Numerical geometry on compact surfaces with boundary.

pub mod distance;
pub mod error;
pub mod expr;
pub mod extension;
pub mod flow;
pub mod jet;
pub mod linalg;
pub mod metric;
pub mod par;
pub mod prescription;
pub mod profile;

pub use error::{Error, Result};
