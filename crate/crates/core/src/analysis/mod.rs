//! Band statistics, band-triple selection, operator comparison and
//! supervised classification.

pub mod classify;
pub mod compare;
pub mod oif;
pub mod stats;

pub use classify::{
    accuracy, classify, fit_classes, parse_rois_json, rois_from_labels, rois_to_json, ClassSpec, ClassificationMap,
    ConfusionMatrix, FeatureLayer, FeatureSource, FeatureStack, Roi, TrainingMode,
};
pub use compare::{compare_responses, ComparisonReport, FieldSummary};
pub use oif::{oif_rank, score_triples, OifScore};
pub use stats::{band_stats, correlation, BandStats, CorrelationMatrix};
