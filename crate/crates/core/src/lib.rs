//! Federated quantum-autoencoder anomaly detection for IoT traffic.
//!
//! The pipeline: [`nettsim`] generates packet logs for a hierarchical
//! ZigBee-style testbed, [`features`] turns them into per-minute feature
//! windows and fits MinMax + PCA preprocessing, [`federated`] trains a
//! quantum autoencoder ([`qae`] on top of the [`quantum`] simulator) with
//! FedAvg, hierarchical averaging or a centralized baseline, and
//! [`detector`] thresholds reconstruction fidelity to flag attack windows.

pub mod config;
pub mod detector;
pub mod error;
pub mod features;
pub mod federated;
pub mod linalg;
pub mod nettsim;
pub mod optimizer;
pub mod pipeline;
pub mod qae;
pub mod quantum;
pub mod registry;

pub use error::{Error, Result};
