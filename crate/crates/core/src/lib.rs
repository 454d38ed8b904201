//! Benchmark toolkit for evasion attacks against ML-based phishing website
//! detectors.
//!
//! The pipeline mirrors a production detector: a webpage (URL + HTML) is
//! preprocessed into a 57-slot ternary feature vector, a classifier scores it,
//! and the label is thresholded. Attacks perturb that pipeline at three
//! points: the raw website (WsP), the preprocessing outcome under integrity
//! constraints (PsP), or the final feature vector (MsP). The harness repeats
//! randomized trials and validates degradation with Welch t-tests.

pub mod classifiers;
pub mod corpus;
pub mod evasion;
pub mod features;
pub mod harness;
pub mod report;
pub mod seed;
pub mod stats;

pub use corpus::{Dataset, Label, SplitPartition, Webpage};
pub use features::{FeatureSetId, FeatureVector, ThresholdConfig};
