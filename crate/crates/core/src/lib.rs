pub mod error;
pub mod experiments;
pub mod baselines;
pub mod cli;
pub mod cauchy;
pub mod geometry;
pub mod hss;
pub mod numeric;
pub mod problems;
pub mod transforms;

pub use error::{Error, Result};
