//! Confidence-net ensembles for tabular regression.
//!
//! A trained model couples three parts: a convolutional neural network that
//! predicts the target, a gradient-boosted forest that predicts the
//! network's own residual from the same inputs, and a memory bank of
//! training inputs whose nearest-neighbor distance flags novel queries.
//! Together they produce a corrected point prediction and a symmetric
//! prediction interval around it.

pub mod config;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod gbt;
pub mod matrix;
pub mod model_file;
pub mod nn;
pub mod synth;

pub use config::RunConfig;
pub use data::{Dataset, DatasetManifest, NormalizationParams, RawDataset};
pub use ensemble::{
    ConfidenceNetModel, EnsembleConfig, MemoryBank, PredictionInterval,
};
pub use error::{Error, ErrorCategory, Result};
pub use eval::{EvalRecord, EvalSummary};
pub use gbt::{ForestHyper, GradientBoostedForest};
pub use matrix::Matrix;
pub use nn::{NetConfig, NeuralNet, TrainReport};
