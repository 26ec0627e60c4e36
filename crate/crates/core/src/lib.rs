//! Graph filtration learning: a persistent-homology readout for graph
//! classification whose vertex filter is trained end-to-end.
//!
//! The pipeline runs a learnable vertex filter ([`model`]), builds sublevel
//! and superlevel filtrations ([`filtration`]), computes their barcodes
//! ([`persistence`]), embeds the barcodes with rational-hat coordinate
//! functions ([`vectorize`]) and classifies the result. Gradients flow back
//! through the barcode points to the vertices that realize them.

pub mod config;
pub mod error;
pub mod filtration;
pub mod graph;
pub mod nn;
pub mod oracle;
pub mod persistence;
pub mod synth;
pub mod timing;
pub mod train;
pub mod tu;
pub mod vectorize;

pub use error::{GflError, Result};
pub use filtration::{build_sublevel_filtration, negate_filter, Filtration, Simplex};
pub use graph::{
    initial_features, stratified_folds, FeatureMode, Graph, GraphDataset, NodeFeatures,
};
pub use persistence::{
    assemble_processed_barcodes, persistence_matrix_reduction, persistence_union_find,
    BarcodePoint, BarcodeSet, Channel, RawBarcodes,
};
pub use synth::{generate_synthetic, Family, SynthSpec};
pub use train::{run_cv, train_fold, DataSource, RunMetrics, TrainConfig};
