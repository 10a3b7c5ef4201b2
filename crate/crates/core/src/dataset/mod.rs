//! Per-cell table ingestion, thrombus labels and stratified splitting.

mod ingest;
mod labels;
mod split;
mod table;

pub use ingest::{ingest_csv, ingest_reader, IngestConfig, Ingested};
pub use labels::{
    compute_sap, label_threshold, LabelSource, LabelSpec, BEARING_THRESHOLD, DEFAULT_AP0, WORST_CASE_THRESHOLD,
};
pub use split::{
    format_index_list, parse_index_list, stratified_split, stratified_split_with, SplitFractions, SplitIndices,
    SplitManifest, SplitSummary,
};
pub use table::{format_float, FeatureTable};
