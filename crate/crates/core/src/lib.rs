//! Accepted-answer prediction for Q&A data dumps: dump ingestion, the
//! 52-feature scheme, tag-quality metrics, a boosted-tree classifier and
//! the analytics behind the yearly and per-feature acceptance tables.
//!
//! Numeric code is generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below fix the pipeline's default `f64`.

pub mod analytics;
pub mod content;
pub mod dataset;
pub mod history;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod scalar;
pub mod tag_metrics;

pub type TagStats = tag_metrics::TagStats<f64>;
pub type TagStatsMap = tag_metrics::TagStatsMap<f64>;
pub type TimeIndexConfig = tag_metrics::TimeIndexConfig<f64>;
pub type QuestionTagFeatures = tag_metrics::QuestionTagFeatures<f64>;
pub type Dataset = model::Dataset<f64>;
pub type Ensemble = model::GbdtEnsemble<f64>;
pub type Tree = model::TreeNode<f64>;
pub type CartModel = model::CartModel<f64>;
