//! Activation pattern analysis for dense ReLU classifiers.
//!
//! The pipeline is: train a [`nn::DenseReluNetwork`] (recording per-epoch
//! predictions with [`monitor::PredictionHistory`]), extract every
//! instance's per-layer activation patterns into a
//! [`patterns::TrajectorySet`], assemble them into an [`apd::Apd`], partition
//! the instances with [`clustering::split`] and summarize the partition with
//! [`report::Report`].

pub mod apd;
pub mod checkpoint;
pub mod clustering;
pub mod dataset;
pub mod error;
pub mod fixtures;
pub mod monitor;
pub mod nn;
pub mod patterns;
pub mod report;

pub use error::{Error, Result};

/// Stable instance identifier: the position in the originating file.
pub type InstanceId = u32;

/// Ordered set of instance ids.
pub type IdSet = std::collections::BTreeSet<InstanceId>;
