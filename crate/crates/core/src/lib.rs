pub mod augment;
pub mod config;
pub mod error;
pub mod featurize;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod neural;
pub mod pipeline;
pub mod scorer;
pub mod text;
pub mod validate;

pub use error::{Error, Result};
