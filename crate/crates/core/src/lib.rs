//! Information extraction as code generation.
//!
//! Schemas become Python-style class definitions, extraction targets become
//! instantiations, and model output is parsed back into typed mentions.

pub mod dataset;
pub mod extraction;
pub mod llm;
pub mod metrics;
pub mod parser;
pub mod render;
pub mod retrieval;
pub mod runner;
pub mod schema;
pub mod text_baseline;

pub use extraction::{Argument, EntityMention, EventMention, ExtractionSet, RelationMention};
pub use schema::{Schema, TaskKind};
