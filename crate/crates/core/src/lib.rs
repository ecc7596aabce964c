//! LLM-assisted vulnerability scanning with retrieval-grounded verification.

pub mod catalog;
pub mod ingest;
