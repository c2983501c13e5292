//! Gaussian (KG2E) knowledge-graph embeddings over an intent knowledge graph,
//! and a pipeline that completes and verifies service intents with them.

pub mod error;
pub mod eval;
pub mod generator;
pub mod model;
pub mod ns;
pub mod pipeline;
pub mod rdf;
pub mod training;

pub use error::{Error, Result};
