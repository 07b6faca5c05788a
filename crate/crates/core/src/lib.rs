//! Soft-label categorization experiments on one-dimensional stimulus manifolds.
//!
//! Two labeled figures carry probabilistic species memberships over three
//! classes; participants then classify unlabeled figures along the same
//! manifold. This crate covers stimulus generation, the label catalog,
//! prototype and exemplar models, the statistical analysis, a random-forest
//! response predictor, and simulated participant populations.

pub mod analysis;
pub mod classifiers;
pub mod config;
pub mod error;
pub mod predictor;
pub mod response_data;
pub mod simulation;
pub mod soft_labels;
pub mod stats;
pub mod stimulus;

pub use classifiers::{ConditionModel, ModelKind, PrototypeSet};
pub use config::StimulusConfig;
pub use error::{Error, Result};
pub use response_data::{Dataset, ExportFormat, Session, TrialRecord};
pub use soft_labels::{SlpCatalog, SoftLabel, SoftLabelPair};
pub use stimulus::{FeatureSchema, FeatureVector, Manifold};
