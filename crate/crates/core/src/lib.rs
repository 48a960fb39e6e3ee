pub mod crb;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod optimizer;

pub use error::{Error, Result};
