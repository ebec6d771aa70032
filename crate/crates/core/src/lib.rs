pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod mhdis;
pub mod optimizer;
pub mod promethee;
pub mod rng;
pub mod sampling;
pub mod screening;
pub mod stats;

pub use error::{Error, Result};
