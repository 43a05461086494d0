//! File formats, report rendering and batch driving for `posdiv-core`.

pub mod batch;
pub mod filter;
pub mod ingest;
pub mod report;
